//! Fixtures and brute-force oracles shared by the integration tests. The
//! oracles re-derive every rule from raw fields and never call the library
//! code they are used to check.

#![allow(dead_code)]

use std::collections::HashSet;

use orbsched::discretization::{discretize, ObservationTimeWindow, OtwKey};
use orbsched::orbit_geometry::PointingSolution;
use orbsched::priority::ConflictGraph;
use orbsched::scenario::{generate_instance, ConstellationConfig, Horizon, SatelliteSpec, Topology};
use orbsched::scheduler::{construct, local_search, Schedule, StpProblem};
use orbsched::sim::Geometry;
use orbsched::timing::{advance_stp, delta_max, TargetTimeline};
use orbsched::{Scenario, TargetId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[allow(clippy::too_many_arguments)]
pub fn otw(
    sat: usize,
    target: u32,
    window: u32,
    start: f64,
    tau: f64,
    roll_deg: f64,
    pitch_deg: f64,
    proc: f64,
    profit: f64,
) -> ObservationTimeWindow {
    ObservationTimeWindow {
        key: OtwKey {
            satellite: sat,
            target: TargetId(target),
            orbit: 0,
            window,
        },
        start_s: start,
        end_s: start + tau,
        pointing: PointingSolution {
            roll_rad: roll_deg.to_radians(),
            pitch_rad: pitch_deg.to_radians(),
            yaw_rad: 0.0,
            off_nadir_rad: 0.0,
            slant_range_m: 600_000.0,
            gsd_m_per_px: 0.5,
            swath_m: 5000.0,
        },
        data_bits: 1e9,
        proc_time_s: proc,
        profit,
        stp_index: 0,
        vtw_start_s: start,
        vtw_end_s: start + tau,
    }
}

// ---- transition table, restated ------------------------------------------

pub fn oracle_transition_time(alpha_deg: f64) -> f64 {
    match alpha_deg {
        a if a <= 10.0 => 11.66,
        a if a <= 30.0 => 5.0 + a / 1.5,
        a if a <= 60.0 => 10.0 + a / 2.0,
        a if a <= 90.0 => 16.0 + a / 2.5,
        a => 22.0 + a / 3.0,
    }
}

fn angle_deg(a: (f64, f64, f64), b: (f64, f64, f64)) -> f64 {
    ((a.0 - b.0).abs() + (a.1 - b.1).abs() + (a.2 - b.2).abs()).to_degrees()
}

fn att(o: &ObservationTimeWindow) -> (f64, f64, f64) {
    (o.pointing.roll_rad, o.pointing.pitch_rad, o.pointing.yaw_rad)
}

/// Pairwise co-schedulability: distinct targets, and on a shared satellite
/// the earlier-starting entry must finish maneuver and processing in time.
pub fn oracle_co_schedulable(a: &ObservationTimeWindow, b: &ObservationTimeWindow) -> bool {
    if a.key.target == b.key.target {
        return false;
    }
    if a.key.satellite != b.key.satellite {
        return true;
    }
    let (e, l) = if a.start_s <= b.start_s { (a, b) } else { (b, a) };
    let dt = oracle_transition_time(angle_deg(att(e), att(l)));
    e.end_s + dt.max(e.proc_time_s) <= l.start_s
}

/// Whole-set feasibility for one satellite starting at nadir at `stp_start`.
pub fn oracle_feasible(set: &[&ObservationTimeWindow], stp_start: f64, sat: &SatelliteSpec) -> bool {
    let targets: HashSet<TargetId> = set.iter().map(|o| o.key.target).collect();
    if targets.len() != set.len() {
        return false;
    }
    let mut seq: Vec<&ObservationTimeWindow> = set.to_vec();
    seq.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    let mut energy = 0.0;
    let mut prev: Option<&ObservationTimeWindow> = None;
    for o in seq {
        let from = prev.map_or((0.0, 0.0, 0.0), att);
        let dt = oracle_transition_time(angle_deg(from, att(o)));
        let ready = match prev {
            None => stp_start + dt,
            Some(p) => p.end_s + dt.max(p.proc_time_s),
        };
        if ready > o.start_s {
            return false;
        }
        energy += sat.e_tran_per_s * dt + sat.e_obs_per_s * (o.end_s - o.start_s) + sat.e_proc_per_s * o.proc_time_s;
        prev = Some(o);
    }
    energy <= sat.e_max
}

/// Best total profit over all feasible subsets (single satellite).
pub fn oracle_optimum(otws: &[ObservationTimeWindow], stp_start: f64, sat: &SatelliteSpec) -> f64 {
    assert!(otws.len() <= 16);
    let mut best = 0.0_f64;
    for mask in 0u32..(1 << otws.len()) {
        let set: Vec<&ObservationTimeWindow> = (0..otws.len()).filter(|i| mask >> i & 1 == 1).map(|i| &otws[i]).collect();
        if oracle_feasible(&set, stp_start, sat) {
            best = best.max(set.iter().map(|o| o.profit).sum());
        }
    }
    best
}

// ---- AoI sawtooth, integrated numerically ---------------------------------

/// Instantaneous AoI at `t`: time since the freshest capture delivered by `t`.
pub fn oracle_aoi_at(events: &[(f64, f64)], t: f64) -> f64 {
    let freshest = events
        .iter()
        .filter(|&&(_, a)| a <= t)
        .map(|&(c, _)| c)
        .fold(0.0, f64::max);
    t - freshest
}

/// Midpoint-rule average of the AoI curve over `[0, sth]` at step `dt`.
pub fn oracle_average_aoi(events: &[(f64, f64)], sth: f64, dt: f64) -> f64 {
    let mut delivered: Vec<(f64, f64)> = events.iter().copied().filter(|&(_, a)| a <= sth).collect();
    delivered.sort_by(|x, y| x.1.total_cmp(&y.1));
    let steps = (sth / dt).round() as usize;
    let mut next = 0;
    let mut freshest = 0.0_f64;
    let mut area = 0.0;
    for k in 0..steps {
        let t = (k as f64 + 0.5) * dt;
        while next < delivered.len() && delivered[next].1 <= t {
            freshest = freshest.max(delivered[next].0);
            next += 1;
        }
        area += (t - freshest) * dt;
    }
    area / sth
}

/// AoI immediately before each delivered arrival, in (arrival, capture) order.
pub fn oracle_peaks(events: &[(f64, f64)], sth: f64) -> Vec<f64> {
    let mut delivered: Vec<(f64, f64)> = events.iter().copied().filter(|&(_, a)| a <= sth).collect();
    delivered.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)));
    delivered
        .iter()
        .map(|&(_, a)| {
            let before = delivered
                .iter()
                .filter(|&&(_, a2)| a2 < a)
                .map(|&(c, _)| c)
                .fold(0.0, f64::max);
            a - before
        })
        .collect()
}

// ---- scenarios ------------------------------------------------------------

/// Two satellites in two planes, `n` targets, three one-period STPs.
pub fn desk_scenario(n_targets: usize, seed: u64) -> Scenario {
    let config = ConstellationConfig {
        n_planes: 2,
        sats_per_plane: 1,
        altitude_m: 600_000.0,
        inclination_rad: 53f64.to_radians(),
        topology: Topology::WalkerDelta,
        phasing_factor: 0,
    };
    let horizon = Horizon::from_orbital_periods(600_000.0, 3.0, 3, 10.0);
    generate_instance(&config, n_targets, &horizon, seed).unwrap()
}

pub fn acceptance_scenario(n_targets: usize, seed: u64) -> Scenario {
    generate_instance(&ConstellationConfig::reference(), n_targets, &Horizon::reference(), seed).unwrap()
}

/// Random single-satellite STP with at most `max_otws` candidates and a
/// budget tight enough that energy often binds.
pub fn tiny_instance(seed: u64, max_otws: usize) -> (StpProblem, Vec<SatelliteSpec>) {
    let mut r = rng(seed);
    let n = r.random_range(4..=max_otws);
    let n_targets = r.random_range(2..=6u32);
    let mut window = vec![0u32; n_targets as usize];
    let otws: Vec<ObservationTimeWindow> = (0..n)
        .map(|_| {
            let t = r.random_range(0..n_targets);
            window[t as usize] += 1;
            otw(
                0,
                t,
                window[t as usize],
                r.random_range(15.0..400.0),
                r.random_range(1.0..5.0),
                r.random_range(-45.0..45.0),
                r.random_range(-45.0..45.0),
                r.random_range(5.0..40.0),
                r.random_range(0.05..1.0),
            )
        })
        .collect();
    let deltas = (0..n_targets).map(|t| (TargetId(t), r.random_range(1..=4u32))).collect();
    let sat = SatelliteSpec {
        e_max: r.random_range(60.0..400.0),
        ..SatelliteSpec::reference(0)
    };
    (StpProblem::new(0, 0.0, otws, deltas), vec![sat])
}

/// Per-STP (constructive, local search) schedules along the trajectory that
/// the Heuristic+LS run follows.
pub fn ls_trajectory(scenario: &Scenario, geometry: &Geometry) -> Vec<(Schedule, Schedule)> {
    let mut timelines: Vec<TargetTimeline> = scenario.targets.iter().map(|t| TargetTimeline::new(t.id)).collect();
    let mut out = Vec::new();
    for stp in 0..scenario.horizon.n_stp as usize {
        let vtws: Vec<_> = geometry.vtws.iter().copied().filter(|v| v.stp_index == stp).collect();
        let deltas = timelines.iter().map(|t| (t.target_id, t.delta)).collect();
        let otws = discretize(&vtws, scenario, &deltas, delta_max(&timelines));
        let problem = StpProblem::new(stp, scenario.horizon.stp_start_s(stp), otws, deltas);
        let greedy = construct(&problem, &scenario.satellites);
        let improved = local_search(&greedy, &problem, &scenario.satellites);
        advance_stp(&mut timelines, &improved.scheduled_targets(), stp);
        out.push((greedy, improved));
    }
    out
}

/// Conflict graph adjacency compared with the pairwise oracle; returns the
/// number of mismatching pairs.
pub fn graph_mismatches(otws: &[ObservationTimeWindow], graph: &ConflictGraph) -> usize {
    let mut bad = 0;
    for i in 0..otws.len() {
        for j in (i + 1)..otws.len() {
            let declared = graph.neighbors(i).contains(&j);
            if declared == oracle_co_schedulable(&otws[i], &otws[j]) {
                bad += 1;
            }
        }
    }
    bad
}
