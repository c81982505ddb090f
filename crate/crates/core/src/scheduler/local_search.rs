//! Insertion/removal local search over targets the constructive pass left
//! unscheduled.
//!
//! For each unscheduled target (priority order), its OTWs are tried in
//! ascending opportunity cost counted against the current schedule only.
//! A candidate that collides in time may evict the conflicting entries when
//! their combined profit is below its own; if energy then runs short, the
//! satellite's cheapest entries are evicted one at a time. A move is kept
//! only when total profit strictly increases, otherwise the schedule is left
//! as it was.

use std::collections::HashSet;

use super::{Schedule, StpProblem};
use crate::discretization::{ObservationTimeWindow, OtwKey};
use crate::priority::{conflicts, restricted_opportunity_cost};
use crate::scenario::SatelliteSpec;

pub fn local_search(initial: &Schedule, problem: &StpProblem, satellites: &[SatelliteSpec]) -> Schedule {
    let mut current = initial.clone();
    let scheduled = current.scheduled_targets();
    let unscheduled: Vec<_> = problem
        .priority
        .targets()
        .filter(|t| !scheduled.contains(t))
        .collect();

    for target in unscheduled {
        let in_schedule: HashSet<OtwKey> = current.entries().map(|o| o.key).collect();
        let mut candidates: Vec<(usize, f64)> = problem
            .priority
            .otws_of(target)
            .iter()
            .map(|&i| {
                let cost = restricted_opportunity_cost(i, &problem.graph, &problem.otws, |o| in_schedule.contains(&o.key));
                (i, cost)
            })
            .collect();
        candidates.sort_by(|a, b| {
            let (oa, ob) = (&problem.otws[a.0], &problem.otws[b.0]);
            a.1.total_cmp(&b.1)
                .then(oa.start_s.total_cmp(&ob.start_s))
                .then(oa.satellite().cmp(&ob.satellite()))
                .then(oa.key.cmp(&ob.key))
        });

        for (idx, cost) in candidates {
            let candidate = &problem.otws[idx];
            if let Some(next) = try_with_removals(&current, candidate, cost, satellites) {
                if next.total_profit() > current.total_profit() {
                    current = next;
                    break;
                }
            }
        }
    }
    current
}

/// Build the schedule obtained by inserting `candidate` under the removal
/// policy, or `None` when no feasible variant exists.
fn try_with_removals(
    current: &Schedule,
    candidate: &ObservationTimeWindow,
    restricted_cost: f64,
    satellites: &[SatelliteSpec],
) -> Option<Schedule> {
    let sat_id = candidate.satellite();
    let sat = &satellites[sat_id];

    let mut trial = if current.temporal_check(candidate).is_ok() {
        current.clone()
    } else {
        if restricted_cost >= candidate.profit {
            return None;
        }
        let mut trial = current.clone();
        let victims: Vec<OtwKey> = trial
            .sequence(sat_id)
            .iter()
            .filter(|o| conflicts(candidate, o))
            .map(|o| o.key)
            .collect();
        for key in &victims {
            trial.remove(key, satellites);
        }
        trial.temporal_check(candidate).ok()?;
        trial
    };

    let mut used = trial.energy_with(candidate, trial.temporal_check(candidate).ok()?, sat);
    while used > sat.e_max {
        let mut order: Vec<ObservationTimeWindow> = trial.sequence(sat_id).to_vec();
        order.sort_by(|a, b| {
            a.profit
                .total_cmp(&b.profit)
                .then(a.start_s.total_cmp(&b.start_s))
                .then(a.key.cmp(&b.key))
        });
        let mut repaired = None;
        for entry in order {
            let mut probe = trial.clone();
            probe.remove(&entry.key, satellites);
            if !probe.sequence_temporally_valid(sat_id) {
                continue;
            }
            let Ok(pos) = probe.temporal_check(candidate) else {
                continue;
            };
            let probe_used = probe.energy_with(candidate, pos, sat);
            if probe_used < used {
                repaired = Some((probe, probe_used));
                break;
            }
        }
        let (probe, probe_used) = repaired?;
        trial = probe;
        used = probe_used;
    }

    trial.insert_unchecked(*candidate, satellites);
    trial.satellite_feasible(sat_id).then_some(trial)
}
