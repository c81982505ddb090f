use super::{Schedule, StpProblem};
use crate::scenario::SatelliteSpec;

/// Baseline: visit visible windows in order of their opening time and take
/// the first feasible OTW of each, ignoring staleness and image quality.
pub fn fifo_schedule(problem: &StpProblem, satellites: &[SatelliteSpec]) -> Schedule {
    let otws = &problem.otws;
    let mut order: Vec<usize> = (0..otws.len()).collect();
    order.sort_by(|&a, &b| {
        let (a, b) = (&otws[a], &otws[b]);
        a.vtw_start_s
            .total_cmp(&b.vtw_start_s)
            .then(a.satellite().cmp(&b.satellite()))
            .then(a.target().cmp(&b.target()))
            .then(a.start_s.total_cmp(&b.start_s))
            .then(a.key.cmp(&b.key))
    });

    let mut schedule = Schedule::empty(problem.stp_index, problem.stp_start_s, satellites);
    for idx in order {
        let otw = &otws[idx];
        if schedule.contains_target(otw.target()) {
            continue;
        }
        schedule.try_insert(otw, satellites);
    }
    schedule
}
