//! Per-target capture/arrival history and the Age of Information metrics
//! derived from it.
//!
//! AoI at the ground is zero at t = 0 and then grows with slope 1, dropping
//! at each arrival to `arrival - capture` of the freshest frame received so
//! far. A frame older than the freshest one already on the ground does not
//! reset it, and frames arriving after the horizon are ignored.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::TargetId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameEvent {
    pub capture_s: f64,
    pub arrival_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTimeline {
    pub target_id: TargetId,
    /// Sorted by capture time.
    pub events: Vec<FrameEvent>,
    /// STPs elapsed since the target was last scheduled.
    pub delta: u32,
    pub last_scheduled_stp: Option<usize>,
}

impl TargetTimeline {
    /// Fresh timeline; a never-observed target starts with `delta = 1`.
    pub fn new(target_id: TargetId) -> Self {
        Self {
            target_id,
            events: Vec::new(),
            delta: 1,
            last_scheduled_stp: None,
        }
    }

    pub fn record_capture(&mut self, capture_s: f64) {
        let at = self.events.partition_point(|e| e.capture_s <= capture_s);
        self.events.insert(
            at,
            FrameEvent {
                capture_s,
                arrival_s: None,
            },
        );
    }

    pub fn record_arrival(&mut self, capture_s: f64, arrival_s: f64) -> Result<()> {
        if arrival_s < capture_s {
            return Err(Error::Timeline {
                target: self.target_id.0,
                reason: format!("arrival {arrival_s} precedes capture {capture_s}"),
            });
        }
        let event = self
            .events
            .iter_mut()
            .find(|e| e.capture_s == capture_s && e.arrival_s.is_none())
            .ok_or_else(|| Error::Timeline {
                target: self.target_id.0,
                reason: format!("no pending capture at {capture_s}"),
            })?;
        event.arrival_s = Some(arrival_s);
        Ok(())
    }

    pub fn n_captures(&self) -> usize {
        self.events.len()
    }

    /// Delivered (capture, arrival) pairs with arrival within `sth_s`,
    /// ordered by arrival then capture.
    pub fn deliveries(&self, sth_s: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self
            .events
            .iter()
            .filter_map(|e| e.arrival_s.filter(|a| *a <= sth_s).map(|a| (e.capture_s, a)))
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
        out
    }

    /// Deliveries that actually refresh the ground: arrival-ordered with
    /// strictly increasing capture times.
    pub fn updates(&self, sth_s: f64) -> Vec<(f64, f64)> {
        let mut freshest = f64::NEG_INFINITY;
        self.deliveries(sth_s)
            .into_iter()
            .filter(|&(capture, _)| {
                let fresh = capture > freshest;
                if fresh {
                    freshest = capture;
                }
                fresh
            })
            .collect()
    }
}

/// Time-average AoI over `[0, sth_s]`, or `None` if nothing was delivered.
///
/// Sum of per-update trapezoids `Y_i N_i + Y_i^2 / 2` (with the first
/// interframe time measured from t = 0) plus the closing triangle
/// `(STH - tau_n)^2 / 2` from the last refreshing capture, over STH.
pub fn average_aoi(timeline: &TargetTimeline, sth_s: f64) -> Option<f64> {
    let updates = timeline.updates(sth_s);
    let &(last_capture, _) = updates.last()?;
    let mut prev_capture = 0.0;
    let mut area = 0.0;
    for &(capture, arrival) in &updates {
        let y = capture - prev_capture;
        let n = arrival - capture;
        area += y * n + 0.5 * y * y;
        prev_capture = capture;
    }
    let tail = sth_s - last_capture;
    area += 0.5 * tail * tail;
    Some(area / sth_s)
}

/// Mean of the AoI values seen immediately before each arrival within the
/// horizon, or `None` if nothing was delivered.
pub fn average_paoi(timeline: &TargetTimeline, sth_s: f64) -> Option<f64> {
    let peaks = peak_aoi_values(timeline, sth_s);
    if peaks.is_empty() {
        return None;
    }
    Some(peaks.iter().sum::<f64>() / peaks.len() as f64)
}

/// AoI just before each arrival, in arrival order. Arrivals sharing an
/// instant all see the same pre-arrival value.
pub fn peak_aoi_values(timeline: &TargetTimeline, sth_s: f64) -> Vec<f64> {
    let deliveries = timeline.deliveries(sth_s);
    let mut peaks = Vec::with_capacity(deliveries.len());
    let mut freshest = 0.0_f64;
    let mut i = 0;
    while i < deliveries.len() {
        let arrival = deliveries[i].1;
        let mut j = i;
        let mut group_freshest = freshest;
        while j < deliveries.len() && deliveries[j].1 == arrival {
            peaks.push(arrival - freshest);
            group_freshest = group_freshest.max(deliveries[j].0);
            j += 1;
        }
        freshest = group_freshest;
        i = j;
    }
    peaks
}

/// Close an STP: scheduled targets restart their staleness count, then every
/// counter advances by one.
pub fn advance_stp(timelines: &mut [TargetTimeline], scheduled: &HashSet<TargetId>, stp: usize) {
    for tl in timelines.iter_mut() {
        if scheduled.contains(&tl.target_id) {
            tl.delta = 0;
            tl.last_scheduled_stp = Some(stp);
        }
        tl.delta += 1;
    }
}

/// Largest staleness counter, never below 1.
pub fn delta_max(timelines: &[TargetTimeline]) -> u32 {
    timelines.iter().map(|t| t.delta).max().unwrap_or(1).max(1)
}
