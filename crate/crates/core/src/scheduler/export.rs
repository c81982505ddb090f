//! Flat CSV form of a multi-STP schedule, and re-validation of such a file
//! against the scenario it claims to belong to.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::validate::{check_sequences, Violation};
use super::Schedule;
use crate::discretization::{ObservationTimeWindow, OtwKey};
use crate::error::{Error, Result};
use crate::orbit_geometry::{compute_vtws, PointingSolution};
use crate::scenario::{Scenario, TargetId};

/// Slack for values that went through a decimal round trip.
const FILE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub stp: usize,
    pub satellite: usize,
    pub target: u32,
    pub orbit: u32,
    pub window: u32,
    pub start_s: f64,
    pub end_s: f64,
    pub roll_deg: f64,
    pub pitch_deg: f64,
    pub yaw_deg: f64,
    pub gsd_m_per_px: f64,
    pub profit: f64,
    pub proc_time_s: f64,
}

impl ScheduleRow {
    fn from_otw(o: &ObservationTimeWindow, stp: usize) -> Self {
        Self {
            stp,
            satellite: o.key.satellite,
            target: o.key.target.0,
            orbit: o.key.orbit,
            window: o.key.window,
            start_s: o.start_s,
            end_s: o.end_s,
            roll_deg: o.pointing.roll_rad.to_degrees(),
            pitch_deg: o.pointing.pitch_rad.to_degrees(),
            yaw_deg: o.pointing.yaw_rad.to_degrees(),
            gsd_m_per_px: o.pointing.gsd_m_per_px,
            profit: o.profit,
            proc_time_s: o.proc_time_s,
        }
    }

    fn key(&self) -> OtwKey {
        OtwKey {
            satellite: self.satellite,
            target: TargetId(self.target),
            orbit: self.orbit,
            window: self.window,
        }
    }
}

/// Rows ordered by STP, satellite, then start time.
pub fn schedule_rows(schedules: &[Schedule]) -> Vec<ScheduleRow> {
    schedules
        .iter()
        .flat_map(|s| s.entries().map(move |o| ScheduleRow::from_otw(o, s.stp_index)))
        .collect()
}

pub fn write_schedule<W: Write>(writer: W, rows: &[ScheduleRow]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record([
        "stp",
        "satellite",
        "target",
        "orbit",
        "window",
        "start_s",
        "end_s",
        "roll_deg",
        "pitch_deg",
        "yaw_deg",
        "gsd_m_per_px",
        "profit",
        "proc_time_s",
    ])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_schedule_csv(path: impl AsRef<Path>, rows: &[ScheduleRow]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_schedule(file, rows).map_err(|e| csv_error(path, e))
}

pub fn read_schedule_csv(path: impl AsRef<Path>) -> Result<Vec<ScheduleRow>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<ScheduleRow>, _>>()
        .map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let csv::ErrorKind::Io(_) = e.kind() {
        let csv::ErrorKind::Io(io) = e.into_kind() else { unreachable!() };
        return Error::io(path, io);
    }
    let line = e.position().map_or(0, |p| p.line() as usize);
    let column = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.field().map_or(0, |f| f as usize + 1),
        _ => 0,
    };
    Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message: e.to_string(),
    }
}

/// Re-check exported rows against `scenario`: each row must sit inside a
/// visible window recomputed from the scenario geometry, and every STP must
/// satisfy sequencing, energy and uniqueness. Rows that reference unknown
/// satellites, targets or STPs are an error rather than a violation.
pub fn validate_rows(rows: &[ScheduleRow], scenario: &Scenario) -> Result<Vec<Violation>> {
    let n_sats = scenario.satellites.len();
    let n_stp = scenario.horizon.n_stp as usize;
    let durations: HashMap<TargetId, f64> = scenario.targets.iter().map(|t| (t.id, t.obs_duration_s)).collect();

    let mut windows: HashMap<(usize, TargetId, usize), Vec<(f64, f64)>> = HashMap::new();
    for v in compute_vtws(scenario) {
        windows
            .entry((v.satellite_id, v.target_id, v.stp_index))
            .or_default()
            .push((v.start_s, v.end_s));
    }

    let mut by_stp: BTreeMap<usize, Vec<Vec<ObservationTimeWindow>>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let line = i + 2;
        if r.satellite >= n_sats {
            return Err(Error::Validation(format!("row {line}: unknown satellite {}", r.satellite)));
        }
        if !durations.contains_key(&TargetId(r.target)) {
            return Err(Error::Validation(format!("row {line}: unknown target {}", r.target)));
        }
        if r.stp >= n_stp {
            return Err(Error::Validation(format!("row {line}: STP {} beyond horizon", r.stp)));
        }
        let (roll, pitch, yaw) = (r.roll_deg.to_radians(), r.pitch_deg.to_radians(), r.yaw_deg.to_radians());
        let (vtw_start_s, vtw_end_s) = windows
            .get(&(r.satellite, TargetId(r.target), r.stp))
            .and_then(|ws| {
                ws.iter()
                    .copied()
                    .find(|&(a, b)| r.start_s >= a - FILE_TOLERANCE && r.end_s <= b + FILE_TOLERANCE)
            })
            .unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
        let otw = ObservationTimeWindow {
            key: r.key(),
            start_s: r.start_s,
            end_s: r.end_s,
            pointing: PointingSolution {
                roll_rad: roll,
                pitch_rad: pitch,
                yaw_rad: yaw,
                off_nadir_rad: (roll.tan().powi(2) + pitch.tan().powi(2)).sqrt().atan(),
                slant_range_m: 0.0,
                gsd_m_per_px: r.gsd_m_per_px,
                swath_m: 0.0,
            },
            data_bits: 0.0,
            proc_time_s: r.proc_time_s,
            profit: r.profit,
            stp_index: r.stp,
            vtw_start_s,
            vtw_end_s,
        };
        by_stp.entry(r.stp).or_insert_with(|| vec![Vec::new(); n_sats])[r.satellite].push(otw);
    }

    let mut out = Vec::new();
    for (stp, mut sequences) in by_stp {
        for seq in &mut sequences {
            seq.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
        }
        out.extend(check_sequences(
            &sequences,
            scenario.horizon.stp_start_s(stp),
            &scenario.satellites,
            Some(&durations),
            FILE_TOLERANCE,
        ));
    }
    Ok(out)
}
