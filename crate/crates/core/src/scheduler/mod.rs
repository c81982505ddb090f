//! Per-STP schedules: feasibility checks, the priority-driven constructive
//! heuristic, local search refinement and the FIFO baseline.
//!
//! A schedule keeps one start-ordered sequence per satellite. Every
//! sequence begins from a nadir attitude at the STP start; consecutive
//! entries must leave room for both the maneuver and the processing of the
//! earlier frame, each satellite's energy use stays within its per-STP
//! budget, and a target appears at most once.

mod export;
mod fifo;
mod local_search;
mod validate;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use export::{read_schedule_csv, schedule_rows, validate_rows, write_schedule, write_schedule_csv, ScheduleRow};
pub use fifo::fifo_schedule;
pub use local_search::local_search;
pub use validate::{validate_schedule, Violation};

use crate::discretization::{ObservationTimeWindow, OtwKey};
use crate::priority::{build_priority_order, can_precede, ConflictGraph, PriorityOrder};
use crate::resources::{transition_time_between, Attitude, EnergyKind, EnergyLedger};
use crate::scenario::{SatelliteSpec, TargetId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "FIFO")]
    Fifo,
    Heuristic,
    #[serde(rename = "Heuristic+LS")]
    HeuristicLs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Fifo, Algorithm::Heuristic, Algorithm::HeuristicLs];

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Fifo => "FIFO",
            Algorithm::Heuristic => "Heuristic",
            Algorithm::HeuristicLs => "Heuristic+LS",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fifo" => Ok(Algorithm::Fifo),
            "heuristic" => Ok(Algorithm::Heuristic),
            "heuristic-ls" | "heuristic+ls" | "heuristicls" | "ls" => Ok(Algorithm::HeuristicLs),
            other => Err(format!("unknown algorithm `{other}` (fifo, heuristic, heuristic-ls)")),
        }
    }
}

/// Everything the schedulers need for one STP.
#[derive(Debug, Clone)]
pub struct StpProblem {
    pub stp_index: usize,
    pub stp_start_s: f64,
    pub otws: Vec<ObservationTimeWindow>,
    pub deltas: HashMap<TargetId, u32>,
    pub graph: ConflictGraph,
    pub priority: PriorityOrder,
}

impl StpProblem {
    pub fn new(
        stp_index: usize,
        stp_start_s: f64,
        otws: Vec<ObservationTimeWindow>,
        deltas: HashMap<TargetId, u32>,
    ) -> Self {
        let graph = ConflictGraph::build(&otws, stp_index);
        let priority = build_priority_order(&otws, &deltas, &graph);
        Self {
            stp_index,
            stp_start_s,
            otws,
            deltas,
            graph,
            priority,
        }
    }
}

/// A scheduled OTW with its neighbors in the satellite's sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledObservation {
    pub otw: ObservationTimeWindow,
    pub predecessor: Option<OtwKey>,
    pub successor: Option<OtwKey>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Blocker {
    /// The maneuver from the nadir attitude held at the STP start.
    InitialAttitude,
    Entry(OtwKey),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Insertion {
    Feasible {
        insert_position: usize,
        /// Maneuver into the new entry, and out of it when it has a successor.
        transition_costs: (f64, Option<f64>),
    },
    TemporalViolation {
        conflicting_entries: Vec<Blocker>,
    },
    EnergyViolation {
        deficit: f64,
    },
    DuplicateTarget,
}

impl Insertion {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Insertion::Feasible { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub stp_index: usize,
    pub stp_start_s: f64,
    sequences: Vec<Vec<ObservationTimeWindow>>,
    ledgers: Vec<EnergyLedger>,
    total_profit: f64,
}

/// Replay the energy charges of a satellite sequence.
pub(crate) fn replay_ledger<'a>(
    seq: impl IntoIterator<Item = &'a ObservationTimeWindow>,
    sat: &SatelliteSpec,
    satellite_id: usize,
    stp: usize,
) -> EnergyLedger {
    let mut ledger = EnergyLedger::new(satellite_id, stp, f64::INFINITY);
    let mut prev = Attitude::NADIR;
    for o in seq {
        let dt = transition_time_between(prev, o.attitude());
        ledger = ledger.charge(EnergyKind::Tran, dt, sat).expect("uncapped");
        ledger = ledger.charge(EnergyKind::Obs, o.obs_duration_s(), sat).expect("uncapped");
        ledger = ledger.charge(EnergyKind::Proc, o.proc_time_s, sat).expect("uncapped");
        prev = o.attitude();
    }
    ledger.budget = sat.e_max;
    ledger
}

/// Whether `next` can be the first entry of a sequence starting at nadir.
pub(crate) fn reachable_from_nadir(stp_start_s: f64, next: &ObservationTimeWindow) -> bool {
    stp_start_s + transition_time_between(Attitude::NADIR, next.attitude()) <= next.start_s
}

impl Schedule {
    pub fn empty(stp_index: usize, stp_start_s: f64, satellites: &[SatelliteSpec]) -> Self {
        Self {
            stp_index,
            stp_start_s,
            sequences: vec![Vec::new(); satellites.len()],
            ledgers: satellites
                .iter()
                .enumerate()
                .map(|(i, s)| EnergyLedger::new(i, stp_index, s.e_max))
                .collect(),
            total_profit: 0.0,
        }
    }

    pub fn sequence(&self, satellite: usize) -> &[ObservationTimeWindow] {
        &self.sequences[satellite]
    }

    pub fn sequences(&self) -> &[Vec<ObservationTimeWindow>] {
        &self.sequences
    }

    pub fn ledger(&self, satellite: usize) -> &EnergyLedger {
        &self.ledgers[satellite]
    }

    pub fn total_profit(&self) -> f64 {
        self.total_profit
    }

    pub fn len(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> impl Iterator<Item = &ObservationTimeWindow> {
        self.sequences.iter().flatten()
    }

    pub fn observations(&self) -> Vec<ScheduledObservation> {
        let mut out = Vec::new();
        for seq in &self.sequences {
            for (i, o) in seq.iter().enumerate() {
                out.push(ScheduledObservation {
                    otw: *o,
                    predecessor: i.checked_sub(1).map(|p| seq[p].key),
                    successor: seq.get(i + 1).map(|s| s.key),
                });
            }
        }
        out
    }

    pub fn contains_target(&self, target: TargetId) -> bool {
        self.entries().any(|o| o.target() == target)
    }

    pub fn contains(&self, key: &OtwKey) -> bool {
        self.sequences[key.satellite].iter().any(|o| o.key == *key)
    }

    pub fn scheduled_targets(&self) -> HashSet<TargetId> {
        self.entries().map(|o| o.target()).collect()
    }

    fn refresh(&mut self, satellite: usize, satellites: &[SatelliteSpec]) {
        self.ledgers[satellite] = replay_ledger(
            &self.sequences[satellite],
            &satellites[satellite],
            satellite,
            self.stp_index,
        );
        self.total_profit = self.entries().map(|o| o.profit).sum();
    }

    /// Sequencing check of `otw` against its would-be neighbors only.
    pub(crate) fn temporal_check(&self, otw: &ObservationTimeWindow) -> Result<usize, Vec<Blocker>> {
        let seq = &self.sequences[otw.satellite()];
        let pos = seq.partition_point(|o| o.start_s <= otw.start_s);
        let mut blockers = Vec::new();
        match pos.checked_sub(1).map(|p| &seq[p]) {
            Some(pred) if !can_precede(pred, otw) => blockers.push(Blocker::Entry(pred.key)),
            None if !reachable_from_nadir(self.stp_start_s, otw) => blockers.push(Blocker::InitialAttitude),
            _ => {}
        }
        if let Some(succ) = seq.get(pos) {
            if !can_precede(otw, succ) {
                blockers.push(Blocker::Entry(succ.key));
            }
        }
        if blockers.is_empty() {
            Ok(pos)
        } else {
            Err(blockers)
        }
    }

    /// Energy used by `otw`'s satellite with `otw` inserted at `pos`.
    pub(crate) fn energy_with(&self, otw: &ObservationTimeWindow, pos: usize, sat: &SatelliteSpec) -> f64 {
        let seq = &self.sequences[otw.satellite()];
        let merged = seq[..pos].iter().chain(std::iter::once(otw)).chain(seq[pos..].iter());
        replay_ledger(merged, sat, otw.satellite(), self.stp_index).total()
    }

    pub fn check_insertion(&self, otw: &ObservationTimeWindow, satellites: &[SatelliteSpec]) -> Insertion {
        if self.contains_target(otw.target()) {
            return Insertion::DuplicateTarget;
        }
        let pos = match self.temporal_check(otw) {
            Ok(pos) => pos,
            Err(conflicting_entries) => return Insertion::TemporalViolation { conflicting_entries },
        };
        let sat = &satellites[otw.satellite()];
        let used = self.energy_with(otw, pos, sat);
        if used > sat.e_max {
            return Insertion::EnergyViolation {
                deficit: used - sat.e_max,
            };
        }
        let seq = &self.sequences[otw.satellite()];
        let from = pos.checked_sub(1).map(|p| seq[p].attitude()).unwrap_or(Attitude::NADIR);
        let dt_in = transition_time_between(from, otw.attitude());
        let dt_out = seq.get(pos).map(|s| transition_time_between(otw.attitude(), s.attitude()));
        Insertion::Feasible {
            insert_position: pos,
            transition_costs: (dt_in, dt_out),
        }
    }

    /// Insert without checks; callers establish feasibility first.
    pub(crate) fn insert_unchecked(&mut self, otw: ObservationTimeWindow, satellites: &[SatelliteSpec]) {
        let sat = otw.satellite();
        let pos = self.sequences[sat].partition_point(|o| o.start_s <= otw.start_s);
        self.sequences[sat].insert(pos, otw);
        self.refresh(sat, satellites);
    }

    /// Insert `otw` if feasible; returns the check outcome either way.
    pub fn try_insert(&mut self, otw: &ObservationTimeWindow, satellites: &[SatelliteSpec]) -> Insertion {
        let outcome = self.check_insertion(otw, satellites);
        if outcome.is_feasible() {
            self.insert_unchecked(*otw, satellites);
        }
        outcome
    }

    pub fn remove(&mut self, key: &OtwKey, satellites: &[SatelliteSpec]) -> Option<ObservationTimeWindow> {
        let seq = &mut self.sequences[key.satellite];
        let idx = seq.iter().position(|o| o.key == *key)?;
        let removed = seq.remove(idx);
        self.refresh(key.satellite, satellites);
        Some(removed)
    }

    /// Whether every consecutive pair of the satellite's sequence, starting
    /// from nadir, leaves room for maneuver and processing.
    pub(crate) fn sequence_temporally_valid(&self, satellite: usize) -> bool {
        let seq = &self.sequences[satellite];
        if let Some(first) = seq.first() {
            if !reachable_from_nadir(self.stp_start_s, first) {
                return false;
            }
        }
        seq.windows(2).all(|w| can_precede(&w[0], &w[1]))
    }

    /// Whether the satellite's whole sequence satisfies sequencing and energy.
    pub(crate) fn satellite_feasible(&self, satellite: usize) -> bool {
        self.sequence_temporally_valid(satellite) && self.ledgers[satellite].total() <= self.ledgers[satellite].budget
    }
}

/// Priority-driven constructive heuristic: walk targets in priority order
/// and commit each target's first feasible OTW in opportunity-cost order.
pub fn construct(problem: &StpProblem, satellites: &[SatelliteSpec]) -> Schedule {
    let mut schedule = Schedule::empty(problem.stp_index, problem.stp_start_s, satellites);
    for target in problem.priority.targets() {
        for &idx in problem.priority.otws_of(target) {
            if schedule.try_insert(&problem.otws[idx], satellites).is_feasible() {
                break;
            }
        }
    }
    schedule
}

/// Run one algorithm on one STP.
pub fn schedule_stp(problem: &StpProblem, satellites: &[SatelliteSpec], algorithm: Algorithm) -> Schedule {
    match algorithm {
        Algorithm::Fifo => fifo_schedule(problem, satellites),
        Algorithm::Heuristic => construct(problem, satellites),
        Algorithm::HeuristicLs => local_search(&construct(problem, satellites), problem, satellites),
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    pub use crate::priority::fixtures::otw;

    pub fn sats(n: usize, e_max: f64) -> Vec<SatelliteSpec> {
        (0..n)
            .map(|i| SatelliteSpec {
                e_max,
                ..SatelliteSpec::reference(i as u32)
            })
            .collect()
    }

    pub fn problem(otws: Vec<ObservationTimeWindow>, deltas: &[(u32, u32)]) -> StpProblem {
        let deltas = deltas.iter().map(|&(t, d)| (TargetId(t), d)).collect();
        StpProblem::new(0, 0.0, otws, deltas)
    }
}
