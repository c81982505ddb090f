//! Circular two-body propagation over a spherical rotating Earth, plus the
//! satellite/target and satellite/station geometry built on it.
//!
//! Attitude is expressed in the local orbital frame: +x along the inertial
//! velocity, +z toward nadir, +y completing the right-handed triad (right of
//! track). Roll is the line-of-sight angle in the y/z plane, pitch in the
//! x/z plane, and yaw is held at zero.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::scenario::{ConstellationConfig, GroundStation, SatelliteSpec, Scenario, TargetId, Topology};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;
pub const EARTH_MU_M3_S2: f64 = 3.986_004_418e14;
pub const EARTH_ROTATION_RAD_S: f64 = 7.292_115_9e-5;

/// Coarse scan step for window detection.
pub const SCAN_STEP_S: f64 = 1.0;
/// Window edges are refined until the bracket is at most this wide.
pub const EDGE_TOLERANCE_S: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn unit(self) -> Vec3 {
        self * (1.0 / self.norm())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

pub fn orbital_period(altitude_m: f64) -> f64 {
    TAU / mean_motion(altitude_m)
}

/// Angular velocity of a circular orbit, rad/s.
pub fn mean_motion(altitude_m: f64) -> f64 {
    let r = EARTH_RADIUS_M + altitude_m;
    (EARTH_MU_M3_S2 / (r * r * r)).sqrt()
}

/// Earth-fixed position of a point on the spherical Earth surface.
pub fn surface_point(lat_rad: f64, lon_rad: f64) -> Vec3 {
    let (sl, cl) = lat_rad.sin_cos();
    let (so, co) = lon_rad.sin_cos();
    Vec3::new(EARTH_RADIUS_M * cl * co, EARTH_RADIUS_M * cl * so, EARTH_RADIUS_M * sl)
}

pub fn lat_lon_of(p: Vec3) -> (f64, f64) {
    let u = p.unit();
    (u.z.clamp(-1.0, 1.0).asin(), u.y.atan2(u.x))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitState {
    pub satellite_id: usize,
    pub time_s: f64,
    pub position_ecef_m: Vec3,
    /// Velocity relative to the rotating Earth frame.
    pub velocity_ecef_m_s: Vec3,
}

impl OrbitState {
    pub fn altitude_m(&self) -> f64 {
        self.position_ecef_m.norm() - EARTH_RADIUS_M
    }

    /// Inertial velocity expressed in Earth-fixed axes.
    pub fn inertial_velocity(&self) -> Vec3 {
        let omega = Vec3::new(0.0, 0.0, EARTH_ROTATION_RAD_S);
        self.velocity_ecef_m_s + omega.cross(self.position_ecef_m)
    }
}

/// Fixed orbital elements of one constellation slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteOrbit {
    pub satellite_id: usize,
    pub radius_m: f64,
    pub inclination_rad: f64,
    pub raan_rad: f64,
    /// Argument of latitude at t = 0.
    pub phase_rad: f64,
    pub mean_motion_rad_s: f64,
}

impl SatelliteOrbit {
    /// Inertial position and velocity at `time_s`.
    pub fn eci_at(&self, time_s: f64) -> (Vec3, Vec3) {
        let u = self.phase_rad + self.mean_motion_rad_s * time_s;
        let (su, cu) = u.sin_cos();
        let (so, co) = self.raan_rad.sin_cos();
        let (si, ci) = self.inclination_rad.sin_cos();
        let r = self.radius_m;
        let pos = Vec3::new(r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si);
        let v = r * self.mean_motion_rad_s;
        let vel = Vec3::new(v * (-co * su - so * cu * ci), v * (-so * su + co * cu * ci), v * cu * si);
        (pos, vel)
    }

    pub fn state_at(&self, time_s: f64) -> OrbitState {
        let (pos, vel) = self.eci_at(time_s);
        let (s, c) = (EARTH_ROTATION_RAD_S * time_s).sin_cos();
        let rot = |v: Vec3| Vec3::new(c * v.x + s * v.y, -s * v.x + c * v.y, v.z);
        let position = rot(pos);
        let omega = Vec3::new(0.0, 0.0, EARTH_ROTATION_RAD_S);
        OrbitState {
            satellite_id: self.satellite_id,
            time_s,
            position_ecef_m: position,
            velocity_ecef_m_s: rot(vel) - omega.cross(position),
        }
    }
}

/// Walker slots in satellite-id order (plane-major).
pub fn constellation_orbits(config: &ConstellationConfig) -> Vec<SatelliteOrbit> {
    let planes = config.n_planes as usize;
    let per_plane = config.sats_per_plane as usize;
    let total = (planes * per_plane) as f64;
    let spread = match config.topology {
        Topology::WalkerDelta => TAU,
        Topology::WalkerStar => PI,
    };
    let n = mean_motion(config.altitude_m);
    let mut orbits = Vec::with_capacity(planes * per_plane);
    for p in 0..planes {
        for j in 0..per_plane {
            orbits.push(SatelliteOrbit {
                satellite_id: p * per_plane + j,
                radius_m: EARTH_RADIUS_M + config.altitude_m,
                inclination_rad: config.inclination_rad,
                raan_rad: p as f64 * spread / planes as f64,
                phase_rad: TAU * j as f64 / per_plane as f64
                    + TAU * f64::from(config.phasing_factor) * p as f64 / total,
                mean_motion_rad_s: n,
            });
        }
    }
    orbits
}

pub fn propagate(scenario: &Scenario, time_s: f64) -> Vec<OrbitState> {
    constellation_orbits(&scenario.constellation)
        .iter()
        .map(|o| o.state_at(time_s))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointingSolution {
    pub roll_rad: f64,
    pub pitch_rad: f64,
    pub yaw_rad: f64,
    pub off_nadir_rad: f64,
    pub slant_range_m: f64,
    pub gsd_m_per_px: f64,
    pub swath_m: f64,
}

impl PointingSolution {
    pub fn nadir(sat: &SatelliteSpec, altitude_m: f64) -> Self {
        Self {
            roll_rad: 0.0,
            pitch_rad: 0.0,
            yaw_rad: 0.0,
            off_nadir_rad: 0.0,
            slant_range_m: altitude_m,
            gsd_m_per_px: sat.gsd_nadir_m_per_px,
            swath_m: sat.swath_nadir_m,
        }
    }
}

struct LocalFrame {
    along: Vec3,
    cross: Vec3,
    nadir: Vec3,
}

fn local_frame(state: &OrbitState) -> LocalFrame {
    let r_hat = state.position_ecef_m.unit();
    let v = state.inertial_velocity();
    let along = (v - r_hat * v.dot(r_hat)).unit();
    let nadir = r_hat * -1.0;
    LocalFrame {
        along,
        cross: nadir.cross(along),
        nadir,
    }
}

/// Attitude needed to image the surface point `(lat, lon)` from `state`, or
/// `None` when the point is below the horizon or outside the attitude limits.
///
/// GSD scales with slant range relative to altitude (fixed instantaneous
/// field of view); the swath scales with the same ratio.
pub fn pointing(state: &OrbitState, lat_rad: f64, lon_rad: f64, sat: &SatelliteSpec) -> Option<PointingSolution> {
    pointing_at(state, surface_point(lat_rad, lon_rad), sat)
}

pub(crate) fn pointing_at(state: &OrbitState, ground: Vec3, sat: &SatelliteSpec) -> Option<PointingSolution> {
    let sat_pos = state.position_ecef_m;
    let up = ground.unit();
    if (sat_pos - ground).dot(up) <= 0.0 {
        return None;
    }
    let los = ground - sat_pos;
    let slant = los.norm();
    let l = los * (1.0 / slant);
    let frame = local_frame(state);
    let lz = l.dot(frame.nadir);
    if lz <= 0.0 {
        return None;
    }
    let roll = l.dot(frame.cross).atan2(lz);
    let pitch = l.dot(frame.along).atan2(lz);
    let yaw = 0.0;
    if roll.abs() > sat.max_roll_rad || pitch.abs() > sat.max_pitch_rad || yaw > sat.max_yaw_rad {
        return None;
    }
    let altitude = state.altitude_m();
    let ratio = (slant / altitude).max(1.0);
    Some(PointingSolution {
        roll_rad: roll,
        pitch_rad: pitch,
        yaw_rad: yaw,
        off_nadir_rad: lz.min(1.0).acos(),
        slant_range_m: slant,
        gsd_m_per_px: sat.gsd_nadir_m_per_px * ratio,
        swath_m: sat.swath_nadir_m * ratio,
    })
}

/// Surface point hit by the boresight when the satellite holds `(roll, pitch)`.
pub fn boresight_ground_point(state: &OrbitState, roll_rad: f64, pitch_rad: f64) -> Option<Vec3> {
    let frame = local_frame(state);
    let dir = (frame.nadir + frame.cross * roll_rad.tan() + frame.along * pitch_rad.tan()).unit();
    let p = state.position_ecef_m;
    // |p + s dir| = R  ->  s^2 + 2 (p.dir) s + |p|^2 - R^2 = 0
    let b = p.dot(dir);
    let disc = b * b - (p.dot(p) - EARTH_RADIUS_M * EARTH_RADIUS_M);
    if disc < 0.0 {
        return None;
    }
    let s = -b - disc.sqrt();
    (s > 0.0).then(|| p + dir * s)
}

/// Off-nadir angle of a line of sight from spherical geometry: the Earth
/// central angle between sub-satellite point and boresight intersection.
pub fn ground_angle_for_off_nadir(altitude_m: f64, off_nadir_rad: f64) -> f64 {
    let ratio = (EARTH_RADIUS_M + altitude_m) / EARTH_RADIUS_M;
    let s = ratio * off_nadir_rad.sin();
    if s >= 1.0 {
        // line of sight grazes or misses the Earth: horizon limit
        (EARTH_RADIUS_M / (EARTH_RADIUS_M + altitude_m)).acos()
    } else {
        s.asin() - off_nadir_rad
    }
}

/// Largest Earth central angle reachable inside a roll/pitch box.
pub fn max_ground_angle(altitude_m: f64, max_roll_rad: f64, max_pitch_rad: f64) -> f64 {
    let tr = max_roll_rad.min(PI / 2.0 - 1e-9).tan();
    let tp = max_pitch_rad.min(PI / 2.0 - 1e-9).tan();
    let corner = (tr * tr + tp * tp).sqrt().atan();
    ground_angle_for_off_nadir(altitude_m, corner)
}

/// Largest Earth central angle at which a station still sees the satellite
/// above `min_elevation_rad`.
pub fn max_contact_ground_angle(altitude_m: f64, min_elevation_rad: f64) -> f64 {
    let r = EARTH_RADIUS_M + altitude_m;
    (EARTH_RADIUS_M * min_elevation_rad.cos() / r).acos() - min_elevation_rad
}

pub fn elevation(state: &OrbitState, station: Vec3) -> f64 {
    let d = state.position_ecef_m - station;
    (d.dot(station.unit()) / d.norm()).clamp(-1.0, 1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibleTimeWindow {
    pub satellite_id: usize,
    pub target_id: TargetId,
    pub orbit_index: u32,
    pub start_s: f64,
    pub end_s: f64,
    /// STP the window is clipped to.
    pub stp_index: usize,
}

impl VisibleTimeWindow {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactWindow {
    pub satellite_id: usize,
    pub station_id: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub representative_distance_m: f64,
}

/// One coarse-scan sample: visibility, plus how long the geometry guarantees
/// it stays invisible (0 when no guarantee).
struct Probe {
    visible: bool,
    clear_for_s: f64,
}

/// Maximal visible intervals on `[0, horizon_s]`, found on a fixed grid and
/// refined by bisection. Samples that prove invisibility for a stretch of
/// time let the scan skip grid points without changing the result.
fn scan_intervals(horizon_s: f64, probe: impl Fn(f64) -> Probe) -> Vec<(f64, f64)> {
    let visible = |t: f64| probe(t).visible;
    let n_steps = (horizon_s / SCAN_STEP_S).ceil() as usize;
    let grid = |k: usize| (k as f64 * SCAN_STEP_S).min(horizon_s);

    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev_t = 0.0;
    let mut k = 0usize;
    while k <= n_steps {
        let t = grid(k);
        let p = probe(t);
        match (open, p.visible) {
            (None, true) => {
                let start = if k == 0 { 0.0 } else { refine(prev_t, t, &visible, true) };
                open = Some(start);
            }
            (Some(start), false) => {
                out.push((start, refine(prev_t, t, &visible, false)));
                open = None;
            }
            _ => {}
        }
        prev_t = t;
        let skip = if p.visible {
            1
        } else {
            ((p.clear_for_s / SCAN_STEP_S).floor() as usize).max(1)
        };
        if skip > 1 {
            // every grid point before k + skip is invisible as well
            k = (k + skip).min(n_steps + 1);
            if k <= n_steps {
                prev_t = grid(k - 1);
            }
        } else {
            k += 1;
        }
    }
    if let Some(start) = open {
        out.push((start, horizon_s));
    }
    out.retain(|(s, e)| e > s);
    out
}

/// Bisect a visibility edge in `[lo, hi]`; returns the visible-side bound.
fn refine(mut lo: f64, mut hi: f64, visible: &impl Fn(f64) -> bool, rising: bool) -> f64 {
    while hi - lo > EDGE_TOLERANCE_S {
        let mid = 0.5 * (lo + hi);
        if visible(mid) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if rising {
        hi
    } else {
        lo
    }
}

fn central_angle(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Upper bound on how fast the sub-satellite point moves relative to any
/// Earth-fixed point, rad/s.
fn max_relative_rate(altitude_m: f64) -> f64 {
    mean_motion(altitude_m) + EARTH_ROTATION_RAD_S
}

/// Raw visibility intervals of one satellite over one ground point.
pub fn visibility_intervals(
    orbit: &SatelliteOrbit,
    sat: &SatelliteSpec,
    lat_rad: f64,
    lon_rad: f64,
    horizon_s: f64,
) -> Vec<(f64, f64)> {
    let altitude = orbit.radius_m - EARTH_RADIUS_M;
    let ground = surface_point(lat_rad, lon_rad);
    // small pad so rounding never skips a truly visible sample
    let reach = max_ground_angle(altitude, sat.max_roll_rad, sat.max_pitch_rad) + 1e-6;
    let rate = max_relative_rate(altitude);
    scan_intervals(horizon_s, |t| {
        let state = orbit.state_at(t);
        let gamma = central_angle(state.position_ecef_m, ground);
        if gamma > reach {
            Probe {
                visible: false,
                clear_for_s: (gamma - reach) / rate,
            }
        } else {
            Probe {
                visible: pointing_at(&state, ground, sat).is_some(),
                clear_for_s: 0.0,
            }
        }
    })
}

/// Split `[start, end]` at STP boundaries and label each piece.
#[allow(clippy::too_many_arguments)]
fn clip_to_stps(
    scenario: &Scenario,
    satellite_id: usize,
    target_id: TargetId,
    start: f64,
    end: f64,
    period: f64,
    min_len: f64,
    out: &mut Vec<VisibleTimeWindow>,
) {
    let horizon = &scenario.horizon;
    let first = horizon.stp_of(start);
    let last = horizon.stp_of(end);
    for stp in first..=last {
        let s = start.max(horizon.stp_start_s(stp));
        let e = end.min(horizon.stp_end_s(stp));
        if e - s >= min_len && e > s {
            out.push(VisibleTimeWindow {
                satellite_id,
                target_id,
                orbit_index: (s / period).floor() as u32,
                start_s: s,
                end_s: e,
                stp_index: stp,
            });
        }
    }
}

/// Visible time windows for every (satellite, target) pair, clipped to STP
/// boundaries, dropping pieces shorter than the target's observation time.
/// Sorted by (satellite, target, start).
pub fn compute_vtws(scenario: &Scenario) -> Vec<VisibleTimeWindow> {
    let orbits = constellation_orbits(&scenario.constellation);
    let period = scenario.orbital_period_s();
    let sth = scenario.horizon.sth_duration_s;
    let mut all: Vec<VisibleTimeWindow> = scenario
        .targets
        .par_iter()
        .flat_map_iter(|target| {
            let mut out = Vec::new();
            for (orbit, sat) in orbits.iter().zip(&scenario.satellites) {
                for (s, e) in visibility_intervals(orbit, sat, target.lat_rad, target.lon_rad, sth) {
                    clip_to_stps(
                        scenario,
                        orbit.satellite_id,
                        target.id,
                        s,
                        e,
                        period,
                        target.obs_duration_s,
                        &mut out,
                    );
                }
            }
            out
        })
        .collect();
    all.sort_by(|a, b| {
        (a.satellite_id, a.target_id)
            .cmp(&(b.satellite_id, b.target_id))
            .then(a.start_s.total_cmp(&b.start_s))
    });
    all
}

pub fn contact_intervals(orbit: &SatelliteOrbit, station: &GroundStation, horizon_s: f64) -> Vec<(f64, f64)> {
    let altitude = orbit.radius_m - EARTH_RADIUS_M;
    let ground = surface_point(station.lat_rad, station.lon_rad);
    let reach = max_contact_ground_angle(altitude, station.min_elevation_rad) + 1e-6;
    let rate = max_relative_rate(altitude);
    scan_intervals(horizon_s, |t| {
        let state = orbit.state_at(t);
        let gamma = central_angle(state.position_ecef_m, ground);
        if gamma > reach {
            Probe {
                visible: false,
                clear_for_s: (gamma - reach) / rate,
            }
        } else {
            Probe {
                visible: elevation(&state, ground) >= station.min_elevation_rad,
                clear_for_s: 0.0,
            }
        }
    })
}

/// Satellite/station contact windows over the whole horizon, sorted by
/// (satellite, start, station).
pub fn compute_contact_windows(scenario: &Scenario) -> Vec<ContactWindow> {
    let orbits = constellation_orbits(&scenario.constellation);
    let sth = scenario.horizon.sth_duration_s;
    let mut all: Vec<ContactWindow> = orbits
        .par_iter()
        .flat_map_iter(|orbit| {
            let mut out = Vec::new();
            for station in &scenario.stations {
                let ground = surface_point(station.lat_rad, station.lon_rad);
                for (s, e) in contact_intervals(orbit, station, sth) {
                    let mid = orbit.state_at(0.5 * (s + e));
                    out.push(ContactWindow {
                        satellite_id: orbit.satellite_id,
                        station_id: station.id,
                        start_s: s,
                        end_s: e,
                        representative_distance_m: (mid.position_ecef_m - ground).norm(),
                    });
                }
            }
            out
        })
        .collect();
    all.sort_by(|a, b| {
        a.satellite_id
            .cmp(&b.satellite_id)
            .then(a.start_s.total_cmp(&b.start_s))
            .then(a.station_id.cmp(&b.station_id))
    });
    all
}

/// Tab-separated dump of windows for inspection.
pub fn windows_table(vtws: &[VisibleTimeWindow], contacts: &[ContactWindow]) -> String {
    let mut out = String::from("kind\tsatellite\tpeer\tstart_s\tend_s\n");
    for w in vtws {
        out.push_str(&format!("vtw\t{}\t{}\t{:.3}\t{:.3}\n", w.satellite_id, w.target_id, w.start_s, w.end_s));
    }
    for c in contacts {
        out.push_str(&format!(
            "contact\t{}\t{}\t{:.3}\t{:.3}\n",
            c.satellite_id, c.station_id, c.start_s, c.end_s
        ));
    }
    out
}
