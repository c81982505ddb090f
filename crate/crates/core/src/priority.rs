//! Priority indicators for one STP: assignment flexibility, pairwise OTW
//! conflicts, opportunity cost, and the resulting processing order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use crate::discretization::ObservationTimeWindow;
use crate::resources::{transition_time, transition_time_between};
use crate::scenario::TargetId;

/// Whether `earlier` can be followed by `later` on one satellite: the
/// maneuver and the processing of `earlier` must both finish by the time
/// `later` starts.
pub fn can_precede(earlier: &ObservationTimeWindow, later: &ObservationTimeWindow) -> bool {
    let dt = transition_time_between(earlier.attitude(), later.attitude());
    earlier.end_s + dt.max(earlier.proc_time_s) <= later.start_s
}

/// Two distinct OTWs conflict when they observe the same target, or share a
/// satellite and neither order satisfies the sequencing constraint.
pub fn conflicts(a: &ObservationTimeWindow, b: &ObservationTimeWindow) -> bool {
    if a.key == b.key {
        return false;
    }
    if a.target() == b.target() {
        return true;
    }
    a.satellite() == b.satellite() && !can_precede(a, b) && !can_precede(b, a)
}

/// Symmetric conflict adjacency over the OTWs of one STP, by slice index.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictGraph {
    pub stp_index: usize,
    adjacency: Vec<Vec<usize>>,
}

impl ConflictGraph {
    pub fn build(otws: &[ObservationTimeWindow], stp_index: usize) -> Self {
        let mut adjacency = vec![Vec::new(); otws.len()];

        let mut by_target: BTreeMap<TargetId, Vec<usize>> = BTreeMap::new();
        let mut by_sat: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, o) in otws.iter().enumerate() {
            by_target.entry(o.target()).or_default().push(i);
            by_sat.entry(o.satellite()).or_default().push(i);
        }
        for members in by_target.values() {
            for (k, &i) in members.iter().enumerate() {
                for &j in &members[k + 1..] {
                    adjacency[i].push(j);
                    adjacency[j].push(i);
                }
            }
        }

        // Any maneuver is bounded by the widest attitude swing present.
        let swing = otws
            .iter()
            .map(|o| o.pointing.roll_rad.abs() + o.pointing.pitch_rad.abs() + o.pointing.yaw_rad.abs())
            .fold(0.0, f64::max);
        let dt_bound = transition_time(2.0 * swing.to_degrees());

        for members in by_sat.values_mut() {
            members.sort_by(|&a, &b| otws[a].start_s.total_cmp(&otws[b].start_s));
            for (k, &i) in members.iter().enumerate() {
                let a = &otws[i];
                let horizon = a.end_s + dt_bound.max(a.proc_time_s);
                for &j in &members[k + 1..] {
                    let b = &otws[j];
                    if b.start_s >= horizon {
                        break;
                    }
                    if a.target() != b.target() && conflicts(a, b) {
                        adjacency[i].push(j);
                        adjacency[j].push(i);
                    }
                }
            }
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        Self { stp_index, adjacency }
    }

    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adjacency[idx]
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Number of OTWs per target (over all satellites and orbits).
pub fn flexibility(otws: &[ObservationTimeWindow]) -> BTreeMap<TargetId, usize> {
    let mut fl = BTreeMap::new();
    for o in otws {
        *fl.entry(o.target()).or_insert(0) += 1;
    }
    fl
}

/// Sum of profits of every OTW conflicting with `otws[idx]`.
pub fn opportunity_cost(idx: usize, graph: &ConflictGraph, otws: &[ObservationTimeWindow]) -> f64 {
    graph.neighbors(idx).iter().map(|&j| otws[j].profit).sum()
}

/// Opportunity cost counting only conflicting OTWs for which `scheduled`
/// holds.
pub fn restricted_opportunity_cost(
    idx: usize,
    graph: &ConflictGraph,
    otws: &[ObservationTimeWindow],
    scheduled: impl Fn(&ObservationTimeWindow) -> bool,
) -> f64 {
    graph
        .neighbors(idx)
        .iter()
        .map(|&j| &otws[j])
        .filter(|o| scheduled(o))
        .map(|o| o.profit)
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorityGroup {
    pub delta: u32,
    pub targets: Vec<TargetId>,
}

/// Targets grouped by descending staleness, ascending flexibility inside a
/// group, each with its OTW indices in ascending opportunity cost.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorityOrder {
    pub groups: Vec<PriorityGroup>,
    pub otws_by_target: BTreeMap<TargetId, Vec<usize>>,
}

impl PriorityOrder {
    pub fn targets(&self) -> impl Iterator<Item = TargetId> + '_ {
        self.groups.iter().flat_map(|g| g.targets.iter().copied())
    }

    pub fn otws_of(&self, target: TargetId) -> &[usize] {
        self.otws_by_target.get(&target).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Sort `targets` by descending delta, then ascending FL, then id.
pub fn order_targets(targets: &mut [TargetId], deltas: &HashMap<TargetId, u32>, fl: &BTreeMap<TargetId, usize>) {
    let delta = |t: &TargetId| deltas.get(t).copied().unwrap_or(1);
    let flex = |t: &TargetId| fl.get(t).copied().unwrap_or(0);
    targets.sort_by(|a, b| {
        delta(b)
            .cmp(&delta(a))
            .then(flex(a).cmp(&flex(b)))
            .then(a.cmp(b))
    });
}

/// Sort OTW indices by ascending cost, then start time, then satellite.
pub fn order_by_cost(indices: &mut [usize], cost: &[f64], otws: &[ObservationTimeWindow]) {
    indices.sort_by(|&a, &b| {
        cost[a]
            .partial_cmp(&cost[b])
            .unwrap_or(Ordering::Equal)
            .then(otws[a].start_s.total_cmp(&otws[b].start_s))
            .then(otws[a].satellite().cmp(&otws[b].satellite()))
            .then(otws[a].key.cmp(&otws[b].key))
    });
}

pub fn build_priority_order(
    otws: &[ObservationTimeWindow],
    deltas: &HashMap<TargetId, u32>,
    graph: &ConflictGraph,
) -> PriorityOrder {
    let fl = flexibility(otws);
    let cost: Vec<f64> = (0..otws.len()).map(|i| opportunity_cost(i, graph, otws)).collect();

    let mut otws_by_target: BTreeMap<TargetId, Vec<usize>> = BTreeMap::new();
    for (i, o) in otws.iter().enumerate() {
        otws_by_target.entry(o.target()).or_default().push(i);
    }
    for list in otws_by_target.values_mut() {
        order_by_cost(list, &cost, otws);
    }

    let mut targets: Vec<TargetId> = otws_by_target.keys().copied().collect();
    order_targets(&mut targets, deltas, &fl);
    let mut groups: Vec<PriorityGroup> = Vec::new();
    for t in targets {
        let d = deltas.get(&t).copied().unwrap_or(1);
        match groups.last_mut() {
            Some(g) if g.delta == d => g.targets.push(t),
            _ => groups.push(PriorityGroup { delta: d, targets: vec![t] }),
        }
    }
    PriorityOrder { groups, otws_by_target }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::discretization::OtwKey;
    use crate::orbit_geometry::PointingSolution;

    /// Hand-built OTW for scheduling tests.
    #[allow(clippy::too_many_arguments)]
    pub fn otw(sat: usize, target: u32, window: u32, start: f64, tau: f64, roll_deg: f64, proc: f64, profit: f64) -> ObservationTimeWindow {
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
                pitch_rad: 0.0,
                yaw_rad: 0.0,
                off_nadir_rad: roll_deg.to_radians().abs(),
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
}
