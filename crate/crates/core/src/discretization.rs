//! Fixed-step discretization of visible windows into candidate observation
//! windows (OTWs), each carrying attitude, data volume, processing time and
//! observation profit.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::orbit_geometry::{self, constellation_orbits, PointingSolution, VisibleTimeWindow};
use crate::resources::Attitude;
use crate::scenario::{SatelliteSpec, Scenario, TargetId};

/// Identity of an OTW: satellite, target, orbit, window index within the
/// (satellite, target, orbit) triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OtwKey {
    pub satellite: usize,
    pub target: TargetId,
    pub orbit: u32,
    pub window: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationTimeWindow {
    pub key: OtwKey,
    pub start_s: f64,
    pub end_s: f64,
    /// Attitude and imaging geometry at `start_s`.
    pub pointing: PointingSolution,
    pub data_bits: f64,
    pub proc_time_s: f64,
    pub profit: f64,
    pub stp_index: usize,
    /// Bounds of the parent visible window.
    pub vtw_start_s: f64,
    pub vtw_end_s: f64,
}

impl ObservationTimeWindow {
    pub fn satellite(&self) -> usize {
        self.key.satellite
    }

    pub fn target(&self) -> TargetId {
        self.key.target
    }

    pub fn obs_duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }

    pub fn attitude(&self) -> Attitude {
        Attitude::new(self.pointing.roll_rad, self.pointing.pitch_rad, self.pointing.yaw_rad)
    }
}

/// Bits captured in one frame.
pub fn data_volume(pointing: &PointingSolution, tau_obs_s: f64, sat: &SatelliteSpec, omega_rad_s: f64) -> f64 {
    let along_track_m = tau_obs_s * orbit_geometry::EARTH_RADIUS_M * omega_rad_s;
    let swath = pointing.swath_m;
    swath * (swath + along_track_m) / (pointing.gsd_m_per_px * pointing.gsd_m_per_px) * sat.pixel_depth_bits
}

pub fn processing_time(data_bits: f64, sat: &SatelliteSpec) -> f64 {
    data_bits * sat.cycles_per_bit / (f64::from(sat.n_cores) * sat.cpu_freq_hz)
}

pub fn compressed_size(data_bits: f64, sigma: f64) -> f64 {
    data_bits / sigma
}

/// Profit in [0, 1]: image quality relative to nadir times staleness
/// relative to the stalest target.
pub fn observation_profit(gsd: f64, gsd_nadir: f64, delta_t: u32, delta_max: u32) -> f64 {
    (gsd_nadir / gsd) * (f64::from(delta_t) / f64::from(delta_max))
}

/// Candidate start offsets `0, prc, 2 prc, ...` that keep the observation
/// inside `[vtw_start, vtw_end]`.
pub fn otw_starts(vtw_start_s: f64, vtw_end_s: f64, tau_obs_s: f64, step_s: f64) -> Vec<f64> {
    let mut starts = Vec::new();
    let mut k = 0u32;
    loop {
        let start = vtw_start_s + f64::from(k) * step_s;
        if start + tau_obs_s > vtw_end_s {
            break;
        }
        starts.push(start);
        k += 1;
    }
    starts
}

/// Discretize `vtws` into OTWs ordered by (satellite, target, orbit, window).
///
/// `delta_by_target` holds the staleness counters frozen at the start of the
/// STP; `delta_max` is clamped to at least 1.
pub fn discretize(
    vtws: &[VisibleTimeWindow],
    scenario: &Scenario,
    delta_by_target: &HashMap<TargetId, u32>,
    delta_max: u32,
) -> Vec<ObservationTimeWindow> {
    let delta_max = delta_max.max(1);
    let orbits = constellation_orbits(&scenario.constellation);
    let omega = orbit_geometry::mean_motion(scenario.constellation.altitude_m);
    let targets: HashMap<TargetId, _> = scenario.targets.iter().map(|t| (t.id, t)).collect();
    let step = scenario.horizon.otw_step_s;

    let mut sorted: Vec<&VisibleTimeWindow> = vtws.iter().collect();
    sorted.sort_by(|a, b| {
        (a.satellite_id, a.target_id, a.orbit_index)
            .cmp(&(b.satellite_id, b.target_id, b.orbit_index))
            .then(a.start_s.total_cmp(&b.start_s))
    });

    let mut next_window: HashMap<(usize, TargetId, u32), u32> = HashMap::new();
    let mut out = Vec::new();
    for vtw in sorted {
        let Some(target) = targets.get(&vtw.target_id) else {
            continue;
        };
        let sat = &scenario.satellites[vtw.satellite_id];
        let orbit = &orbits[vtw.satellite_id];
        let delta = delta_by_target.get(&vtw.target_id).copied().unwrap_or(1).min(delta_max);
        let tau = target.obs_duration_s;
        let counter = next_window
            .entry((vtw.satellite_id, vtw.target_id, vtw.orbit_index))
            .or_insert(0);
        for start in otw_starts(vtw.start_s, vtw.end_s, tau, step) {
            let state = orbit.state_at(start);
            let Some(pointing) = orbit_geometry::pointing(&state, target.lat_rad, target.lon_rad, sat) else {
                continue;
            };
            let data_bits = data_volume(&pointing, tau, sat, omega);
            out.push(ObservationTimeWindow {
                key: OtwKey {
                    satellite: vtw.satellite_id,
                    target: vtw.target_id,
                    orbit: vtw.orbit_index,
                    window: *counter,
                },
                start_s: start,
                end_s: start + tau,
                pointing,
                data_bits,
                proc_time_s: processing_time(data_bits, sat),
                profit: observation_profit(pointing.gsd_m_per_px, sat.gsd_nadir_m_per_px, delta, delta_max),
                stp_index: vtw.stp_index,
                vtw_start_s: vtw.start_s,
                vtw_end_s: vtw.end_s,
            });
            *counter += 1;
        }
    }
    out
}
