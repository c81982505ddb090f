//! Schedule checker that recomputes every constraint from raw entry fields
//! instead of trusting the bookkeeping done during construction.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::Schedule;
use crate::discretization::{ObservationTimeWindow, OtwKey};
use crate::resources::transition_time;
use crate::scenario::{SatelliteSpec, TargetId};

/// Absolute slack (seconds, energy units) granted to float round-off.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    /// Entry lies in the sequence of another satellite.
    WrongSatellite { key: OtwKey, sequence: usize },
    /// Entry is not inside its visible window.
    OutsideWindow { key: OtwKey },
    WrongDuration { key: OtwKey, expected_s: f64, actual_s: f64 },
    /// Attitude beyond the satellite's agility limits.
    AttitudeLimit { key: OtwKey },
    Unordered { satellite: usize },
    /// Maneuver or processing of `earlier` (nadir when `None`) is not done
    /// by the start of `later`.
    Sequencing {
        satellite: usize,
        earlier: Option<OtwKey>,
        later: OtwKey,
        shortfall_s: f64,
    },
    Energy { satellite: usize, used: f64, budget: f64 },
    DuplicateTarget { target: TargetId },
    DuplicateEntry { key: OtwKey },
}

/// All violations of `schedule`; empty when feasible. `obs_durations`, when
/// given, pins each target's required observation length.
pub fn validate_schedule(
    schedule: &Schedule,
    satellites: &[SatelliteSpec],
    obs_durations: Option<&HashMap<TargetId, f64>>,
) -> Vec<Violation> {
    check_sequences(
        schedule.sequences(),
        schedule.stp_start_s,
        satellites,
        obs_durations,
        DEFAULT_TOLERANCE,
    )
}

fn angle_deg(a: Option<&ObservationTimeWindow>, b: &ObservationTimeWindow) -> f64 {
    let (r, p, y) = a.map_or((0.0, 0.0, 0.0), |a| (a.pointing.roll_rad, a.pointing.pitch_rad, a.pointing.yaw_rad));
    ((r - b.pointing.roll_rad).abs() + (p - b.pointing.pitch_rad).abs() + (y - b.pointing.yaw_rad).abs()).to_degrees()
}

pub(crate) fn check_sequences(
    sequences: &[Vec<ObservationTimeWindow>],
    stp_start_s: f64,
    satellites: &[SatelliteSpec],
    obs_durations: Option<&HashMap<TargetId, f64>>,
    tol: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut targets = HashSet::new();
    let mut keys = HashSet::new();

    for (s, seq) in sequences.iter().enumerate() {
        let sat = &satellites[s];
        for o in seq {
            if o.key.satellite != s {
                out.push(Violation::WrongSatellite { key: o.key, sequence: s });
            }
            if !keys.insert(o.key) {
                out.push(Violation::DuplicateEntry { key: o.key });
            }
            if !targets.insert(o.key.target) {
                out.push(Violation::DuplicateTarget { target: o.key.target });
            }
            if o.start_s < o.vtw_start_s - tol || o.end_s > o.vtw_end_s + tol || o.end_s < o.start_s {
                out.push(Violation::OutsideWindow { key: o.key });
            }
            if let Some(&expected) = obs_durations.and_then(|d| d.get(&o.key.target)) {
                let actual = o.end_s - o.start_s;
                if (actual - expected).abs() > tol.max(1e-9 * expected) {
                    out.push(Violation::WrongDuration {
                        key: o.key,
                        expected_s: expected,
                        actual_s: actual,
                    });
                }
            }
            let p = &o.pointing;
            if p.roll_rad.abs() > sat.max_roll_rad + tol
                || p.pitch_rad.abs() > sat.max_pitch_rad + tol
                || p.yaw_rad.abs() > sat.max_yaw_rad + tol
            {
                out.push(Violation::AttitudeLimit { key: o.key });
            }
        }

        if seq.windows(2).any(|w| w[1].start_s < w[0].start_s) {
            out.push(Violation::Unordered { satellite: s });
        }

        let mut energy = 0.0;
        let mut prev: Option<&ObservationTimeWindow> = None;
        for o in seq {
            let dt = transition_time(angle_deg(prev, o));
            let ready = match prev {
                None => stp_start_s + dt,
                Some(e) => e.end_s + dt.max(e.proc_time_s),
            };
            if ready > o.start_s + tol {
                out.push(Violation::Sequencing {
                    satellite: s,
                    earlier: prev.map(|e| e.key),
                    later: o.key,
                    shortfall_s: ready - o.start_s,
                });
            }
            energy += sat.e_tran_per_s * dt
                + sat.e_obs_per_s * (o.end_s - o.start_s)
                + sat.e_proc_per_s * o.proc_time_s;
            prev = Some(o);
        }
        if energy > sat.e_max + tol.max(1e-9 * sat.e_max) {
            out.push(Violation::Energy {
                satellite: s,
                used: energy,
                budget: sat.e_max,
            });
        }
    }
    out
}
