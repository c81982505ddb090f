//! Planning loop over the whole horizon, store-and-forward downlink
//! execution, and run reports.
//!
//! Each STP is planned with the staleness counters left by the previous one.
//! Every scheduled observation is executed: the frame is captured at the OTW
//! start, becomes ready for downlink once processing ends, and joins its
//! satellite's queue. A satellite transmits one frame at a time in order of
//! readiness over whichever contact is open, resuming an interrupted frame
//! at the next contact.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{compressed_size, discretize};
use crate::error::{Error, Result};
use crate::orbit_geometry::{compute_contact_windows, compute_vtws, ContactWindow, VisibleTimeWindow};
use crate::resources::SPEED_OF_LIGHT_M_S;
use crate::scenario::{Scenario, TargetId};
use crate::scheduler::{schedule_stp, Algorithm, Schedule, StpProblem};
use crate::timing::{advance_stp, average_aoi, average_paoi, delta_max, TargetTimeline};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Precomputed windows; tests may substitute their own.
#[derive(Debug, Clone, Default)]
pub struct Geometry {
    pub vtws: Vec<VisibleTimeWindow>,
    pub contacts: Vec<ContactWindow>,
}

impl Geometry {
    pub fn compute(scenario: &Scenario) -> Self {
        Self {
            vtws: compute_vtws(scenario),
            contacts: compute_contact_windows(scenario),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownlinkItem {
    pub satellite: usize,
    pub target: TargetId,
    pub capture_s: f64,
    /// Observation end plus processing time.
    pub ready_s: f64,
    pub compressed_bits: f64,
}

/// Per-satellite frames awaiting downlink, FIFO by readiness.
#[derive(Debug, Clone, Default)]
pub struct DownlinkQueue {
    items: VecDeque<DownlinkItem>,
}

impl DownlinkQueue {
    pub fn push(&mut self, item: DownlinkItem) {
        let at = self.items.partition_point(|i| {
            (i.ready_s, i.capture_s, i.target) <= (item.ready_s, item.capture_s, item.target)
        });
        self.items.insert(at, item);
    }

    pub fn front(&self) -> Option<&DownlinkItem> {
        self.items.front()
    }

    /// Remove the head; only a completed transmission may do this.
    fn complete(&mut self) -> Option<DownlinkItem> {
        self.items.pop_front()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSegment {
    pub station_id: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub item: DownlinkItem,
    /// Link time used, in order; empty when no contact was reached.
    pub segments: Vec<LinkSegment>,
    /// Last segment end plus propagation delay; `None` if the frame never
    /// finished transmitting.
    pub arrival_s: Option<f64>,
}

impl Transmission {
    /// Time spent queued before the first bit left the satellite.
    pub fn store_time_s(&self) -> Option<f64> {
        self.segments.first().map(|s| s.start_s - self.item.ready_s)
    }
}

/// Disjoint link intervals of one satellite. Where contacts overlap, the one
/// that opened first keeps the link until it closes.
fn link_pieces(contacts: &[ContactWindow], satellite: usize) -> Vec<LinkSegment> {
    let mut mine: Vec<&ContactWindow> = contacts.iter().filter(|c| c.satellite_id == satellite).collect();
    mine.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.station_id.cmp(&b.station_id)));
    let mut out = Vec::new();
    let mut cursor = f64::NEG_INFINITY;
    for c in mine {
        let start = c.start_s.max(cursor);
        if c.end_s > start {
            out.push(LinkSegment {
                station_id: c.station_id,
                start_s: start,
                end_s: c.end_s,
                distance_m: c.representative_distance_m,
            });
            cursor = c.end_s;
        }
    }
    out
}

/// Drain one satellite's queue over its contacts.
pub fn simulate_downlink(
    mut queue: DownlinkQueue,
    contacts: &[ContactWindow],
    satellite: usize,
    rate_bps: f64,
) -> Vec<Transmission> {
    let pieces = link_pieces(contacts, satellite);
    let mut out = Vec::with_capacity(queue.len());
    let mut link_free = f64::NEG_INFINITY;
    let mut piece = 0;
    while let Some(&item) = queue.front() {
        let mut t = link_free.max(item.ready_s);
        let mut remaining = item.compressed_bits / rate_bps;
        let mut segments = Vec::new();
        let mut arrival = None;
        while piece < pieces.len() {
            let p = pieces[piece];
            if p.end_s <= t {
                piece += 1;
                continue;
            }
            let start = t.max(p.start_s);
            let used = remaining.min(p.end_s - start);
            segments.push(LinkSegment {
                start_s: start,
                end_s: start + used,
                ..p
            });
            remaining -= used;
            t = start + used;
            if remaining <= 0.0 {
                arrival = Some(t + p.distance_m / SPEED_OF_LIGHT_M_S);
                break;
            }
        }
        queue.complete();
        link_free = t;
        out.push(Transmission {
            item,
            segments,
            arrival_s: arrival,
        });
    }
    out
}

/// Everything a run produced, before aggregation.
#[derive(Debug, Clone)]
pub struct Execution {
    pub schedules: Vec<Schedule>,
    pub timelines: Vec<TargetTimeline>,
    pub transmissions: Vec<Transmission>,
}

pub fn execute(scenario: &Scenario, geometry: &Geometry, algorithm: Algorithm) -> Result<Execution> {
    scenario.validate()?;
    let horizon = &scenario.horizon;
    let sats = &scenario.satellites;
    let mut timelines: Vec<TargetTimeline> = scenario.targets.iter().map(|t| TargetTimeline::new(t.id)).collect();
    let index: HashMap<TargetId, usize> = scenario.targets.iter().enumerate().map(|(i, t)| (t.id, i)).collect();

    let mut by_stp: Vec<Vec<VisibleTimeWindow>> = vec![Vec::new(); horizon.n_stp as usize];
    for v in &geometry.vtws {
        if let Some(bucket) = by_stp.get_mut(v.stp_index) {
            bucket.push(*v);
        }
    }

    let mut queues: Vec<DownlinkQueue> = vec![DownlinkQueue::default(); sats.len()];
    let mut schedules = Vec::with_capacity(by_stp.len());
    for (stp, vtws) in by_stp.iter().enumerate() {
        let deltas: HashMap<TargetId, u32> = timelines.iter().map(|t| (t.target_id, t.delta)).collect();
        let otws = discretize(vtws, scenario, &deltas, delta_max(&timelines));
        let problem = StpProblem::new(stp, horizon.stp_start_s(stp), otws, deltas);
        let schedule = schedule_stp(&problem, sats, algorithm);
        for o in schedule.entries() {
            let sat = &sats[o.satellite()];
            timelines[index[&o.target()]].record_capture(o.start_s);
            queues[o.satellite()].push(DownlinkItem {
                satellite: o.satellite(),
                target: o.target(),
                capture_s: o.start_s,
                ready_s: o.end_s + o.proc_time_s,
                compressed_bits: compressed_size(o.data_bits, sat.compression_factor),
            });
        }
        advance_stp(&mut timelines, &schedule.scheduled_targets(), stp);
        schedules.push(schedule);
    }

    let mut transmissions = Vec::new();
    for (s, queue) in queues.into_iter().enumerate() {
        transmissions.extend(simulate_downlink(queue, &geometry.contacts, s, sats[s].downlink_rate_bps));
    }
    for tx in &transmissions {
        if let Some(arrival) = tx.arrival_s {
            timelines[index[&tx.item.target]].record_arrival(tx.item.capture_s, arrival)?;
        }
    }
    Ok(Execution {
        schedules,
        timelines,
        transmissions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub target_id: u32,
    pub n_captures: usize,
    /// Frames that reached the ground within the horizon.
    pub n_delivered: usize,
    pub avg_aoi_s: Option<f64>,
    pub avg_paoi_s: Option<f64>,
    pub avg_aoi_periods: Option<f64>,
    pub avg_paoi_periods: Option<f64>,
    pub final_delta: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub n_targets: usize,
    pub total_profit: f64,
    pub missed_target_count: usize,
    pub missed_target_pct: f64,
    pub stp_profit: Vec<f64>,
    /// GSD of every captured frame, in schedule order.
    pub gsd_m_per_px: Vec<f64>,
    pub sth_s: f64,
    pub orbital_period_s: f64,
    pub targets: Vec<TargetRow>,
    /// Not serialized, so that repeated runs produce identical files.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn mean_gsd(&self) -> Option<f64> {
        (!self.gsd_m_per_px.is_empty()).then(|| self.gsd_m_per_px.iter().sum::<f64>() / self.gsd_m_per_px.len() as f64)
    }

    /// Per-target average AoI, with never-updated targets at `STH / 2`
    /// (their ground AoI grows from zero for the whole horizon).
    pub fn effective_aoi_s(&self) -> Vec<f64> {
        self.targets
            .iter()
            .map(|t| t.avg_aoi_s.unwrap_or(self.sth_s / 2.0))
            .collect()
    }

    /// Population variance of [`Self::effective_aoi_s`].
    pub fn aoi_variance(&self) -> Option<f64> {
        variance(&self.effective_aoi_s())
    }

    /// Population variance over targets with at least one delivery.
    pub fn delivered_aoi_variance(&self) -> Option<f64> {
        let v: Vec<f64> = self.targets.iter().filter_map(|t| t.avg_aoi_s).collect();
        variance(&v)
    }

    /// Copy with every float rounded to 6 significant digits.
    pub fn rounded(&self) -> RunReport {
        let r = |x: f64| round_sig6(x);
        let o = |x: Option<f64>| x.map(round_sig6);
        RunReport {
            total_profit: r(self.total_profit),
            missed_target_pct: r(self.missed_target_pct),
            stp_profit: self.stp_profit.iter().copied().map(r).collect(),
            gsd_m_per_px: self.gsd_m_per_px.iter().copied().map(r).collect(),
            sth_s: r(self.sth_s),
            orbital_period_s: r(self.orbital_period_s),
            targets: self
                .targets
                .iter()
                .map(|t| TargetRow {
                    avg_aoi_s: o(t.avg_aoi_s),
                    avg_paoi_s: o(t.avg_paoi_s),
                    avg_aoi_periods: o(t.avg_aoi_periods),
                    avg_paoi_periods: o(t.avg_paoi_periods),
                    ..t.clone()
                })
                .collect(),
            wall_time_s: r(self.wall_time_s),
            ..self.clone()
        }
    }
}

fn variance(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some(xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

pub fn summarize(scenario: &Scenario, exec: &Execution, algorithm: Algorithm, wall_time_s: f64) -> RunReport {
    let sth = scenario.horizon.sth_duration_s;
    let period = scenario.orbital_period_s();
    let targets: Vec<TargetRow> = exec
        .timelines
        .iter()
        .map(|tl| {
            let aoi = average_aoi(tl, sth);
            let paoi = average_paoi(tl, sth);
            TargetRow {
                target_id: tl.target_id.0,
                n_captures: tl.n_captures(),
                n_delivered: tl.deliveries(sth).len(),
                avg_aoi_s: aoi,
                avg_paoi_s: paoi,
                avg_aoi_periods: aoi.map(|a| a / period),
                avg_paoi_periods: paoi.map(|p| p / period),
                final_delta: tl.delta,
            }
        })
        .collect();
    let missed = targets.iter().filter(|t| t.n_captures == 0).count();
    let stp_profit: Vec<f64> = exec.schedules.iter().map(Schedule::total_profit).collect();
    RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        algorithm,
        seed: scenario.rng_seed,
        n_targets: targets.len(),
        total_profit: stp_profit.iter().sum(),
        missed_target_count: missed,
        missed_target_pct: if targets.is_empty() {
            0.0
        } else {
            100.0 * missed as f64 / targets.len() as f64
        },
        stp_profit,
        gsd_m_per_px: exec
            .schedules
            .iter()
            .flat_map(|s| s.entries().map(|o| o.pointing.gsd_m_per_px))
            .collect(),
        sth_s: sth,
        orbital_period_s: period,
        targets,
        wall_time_s,
    }
}

pub fn run_with(scenario: &Scenario, geometry: &Geometry, algorithm: Algorithm) -> Result<RunReport> {
    let t0 = Instant::now();
    let exec = execute(scenario, geometry, algorithm)?;
    Ok(summarize(scenario, &exec, algorithm, t0.elapsed().as_secs_f64()))
}

pub fn run(scenario: &Scenario, algorithm: Algorithm) -> Result<RunReport> {
    scenario.validate()?;
    run_with(scenario, &Geometry::compute(scenario), algorithm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub total_profit: f64,
    pub missed_target_pct: f64,
    pub mean_gsd_m_per_px: Option<f64>,
    pub aoi_variance_s2: Option<f64>,
}

/// Heuristic (and Heuristic+LS) relative to FIFO for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDelta {
    pub seed: u64,
    pub profit_ratio: f64,
    pub ls_profit_ratio: f64,
    pub missed_pct_fifo: f64,
    pub missed_pct_heuristic: f64,
    pub mean_gsd_ratio: Option<f64>,
    pub aoi_variance_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub rows: Vec<ComparisonRow>,
    pub deltas: Vec<PairedDelta>,
}

fn ratio(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) if b != 0.0 => Some(a / b),
        _ => None,
    }
}

/// All three algorithms on `scenario` with its targets redrawn from each
/// seed. Seeds run concurrently; output is ordered by (seed, algorithm).
pub fn compare(scenario: &Scenario, seeds: &[u64]) -> Result<(Vec<RunReport>, Comparison)> {
    if seeds.is_empty() {
        return Err(Error::Validation("compare needs at least one seed".into()));
    }
    scenario.validate()?;
    let per_seed: Vec<Result<Vec<RunReport>>> = seeds
        .par_iter()
        .map(|&seed| {
            let sc = scenario.resample_targets(seed);
            let geometry = Geometry::compute(&sc);
            Algorithm::ALL.iter().map(|&a| run_with(&sc, &geometry, a)).collect()
        })
        .collect();

    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let mut deltas = Vec::new();
    for (seed, runs) in seeds.iter().zip(per_seed) {
        let runs = runs?;
        for r in &runs {
            rows.push(ComparisonRow {
                seed: *seed,
                algorithm: r.algorithm,
                total_profit: r.total_profit,
                missed_target_pct: r.missed_target_pct,
                mean_gsd_m_per_px: r.mean_gsd(),
                aoi_variance_s2: r.aoi_variance(),
            });
        }
        let (fifo, heur, ls) = (&runs[0], &runs[1], &runs[2]);
        deltas.push(PairedDelta {
            seed: *seed,
            profit_ratio: heur.total_profit / fifo.total_profit,
            ls_profit_ratio: ls.total_profit / fifo.total_profit,
            missed_pct_fifo: fifo.missed_target_pct,
            missed_pct_heuristic: heur.missed_target_pct,
            mean_gsd_ratio: ratio(heur.mean_gsd(), fifo.mean_gsd()),
            aoi_variance_ratio: ratio(heur.aoi_variance(), fifo.aoi_variance()),
        });
        reports.extend(runs);
    }
    Ok((
        reports,
        Comparison {
            schema_version: REPORT_SCHEMA_VERSION,
            rows,
            deltas,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format `{other}` (csv, json)")),
        }
    }
}

const TARGET_COLUMNS: [&str; 9] = [
    "schema_version",
    "target_id",
    "n_captures",
    "n_delivered",
    "avg_aoi_s",
    "avg_paoi_s",
    "avg_aoi_periods",
    "avg_paoi_periods",
    "final_delta",
];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Per-target rows of `report` as CSV, values at 6 significant digits.
pub fn write_report_csv<W: Write>(writer: W, report: &RunReport) -> csv::Result<()> {
    let report = report.rounded();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TARGET_COLUMNS)?;
    for t in &report.targets {
        w.write_record([
            report.schema_version.to_string(),
            t.target_id.to_string(),
            t.n_captures.to_string(),
            t.n_delivered.to_string(),
            opt(t.avg_aoi_s),
            opt(t.avg_paoi_s),
            opt(t.avg_aoi_periods),
            opt(t.avg_paoi_periods),
            t.final_delta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Whole report as pretty JSON, values at 6 significant digits.
pub fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(&report.rounded()).expect("report serializes")
}

pub fn export_report(report: &RunReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    let path = path.as_ref();
    match format {
        ReportFormat::Json => std::fs::write(path, report_json(report) + "\n").map_err(|e| Error::io(path, e)),
        ReportFormat::Csv => {
            let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_report_csv(file, report).map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::Validation(format!("{other:?}")),
            })
        }
    }
}

pub fn load_report_json(path: impl AsRef<Path>) -> Result<RunReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}
