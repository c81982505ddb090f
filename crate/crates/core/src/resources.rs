//! Attitude transition time, onboard energy accounting and link delay.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::SatelliteSpec;

pub const SPEED_OF_LIGHT_M_S: f64 = 2.998e8;

/// Attitude as (roll, pitch, yaw) in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Attitude {
    pub roll_rad: f64,
    pub pitch_rad: f64,
    pub yaw_rad: f64,
}

impl Attitude {
    pub const NADIR: Attitude = Attitude {
        roll_rad: 0.0,
        pitch_rad: 0.0,
        yaw_rad: 0.0,
    };

    pub fn new(roll_rad: f64, pitch_rad: f64, yaw_rad: f64) -> Self {
        Self {
            roll_rad,
            pitch_rad,
            yaw_rad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionQuery {
    pub from: Attitude,
    pub to: Attitude,
}

/// Total transition angle in degrees: sum of absolute per-axis differences.
pub fn transition_angle(q: TransitionQuery) -> f64 {
    let d = (q.from.roll_rad - q.to.roll_rad).abs()
        + (q.from.pitch_rad - q.to.pitch_rad).abs()
        + (q.from.yaw_rad - q.to.yaw_rad).abs();
    d.to_degrees()
}

/// Piecewise-linear maneuver time (seconds) for a transition angle in degrees.
///
/// Branch bounds are inclusive on the upper side. The table is continuous at
/// 30/60/90 degrees and steps from 11.66 to 11.666.. just above 10 degrees.
pub fn transition_time(alpha_deg: f64) -> f64 {
    if alpha_deg <= 10.0 {
        11.66
    } else if alpha_deg <= 30.0 {
        5.0 + alpha_deg / 1.5
    } else if alpha_deg <= 60.0 {
        10.0 + alpha_deg / 2.0
    } else if alpha_deg <= 90.0 {
        16.0 + alpha_deg / 2.5
    } else {
        22.0 + alpha_deg / 3.0
    }
}

pub fn transition_time_between(from: Attitude, to: Attitude) -> f64 {
    transition_time(transition_angle(TransitionQuery { from, to }))
}

/// Link time: transmission plus propagation.
pub fn comm_time(d_bits: f64, rate_bps: f64, distance_m: f64) -> f64 {
    d_bits / rate_bps + distance_m / SPEED_OF_LIGHT_M_S
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnergyKind {
    Obs,
    Proc,
    Tran,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("satellite {satellite} over energy budget in STP {stp} by {deficit}")]
pub struct OverBudget {
    pub satellite: usize,
    pub stp: usize,
    pub deficit: f64,
}

/// Energy spent by one satellite during one STP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub satellite_id: usize,
    pub stp_index: usize,
    pub spent_obs: f64,
    pub spent_proc: f64,
    pub spent_tran: f64,
    pub budget: f64,
}

impl EnergyLedger {
    pub fn new(satellite_id: usize, stp_index: usize, budget: f64) -> Self {
        Self {
            satellite_id,
            stp_index,
            spent_obs: 0.0,
            spent_proc: 0.0,
            spent_tran: 0.0,
            budget,
        }
    }

    pub fn total(&self) -> f64 {
        self.spent_obs + self.spent_proc + self.spent_tran
    }

    pub fn remaining(&self) -> f64 {
        self.budget - self.total()
    }

    /// Ledger with `kind` charged for `duration_s`, or the deficit if that
    /// would exceed the budget. The budget bound is inclusive.
    pub fn charge(&self, kind: EnergyKind, duration_s: f64, sat: &SatelliteSpec) -> Result<EnergyLedger, OverBudget> {
        let mut next = *self;
        let (rate, slot) = match kind {
            EnergyKind::Obs => (sat.e_obs_per_s, &mut next.spent_obs),
            EnergyKind::Proc => (sat.e_proc_per_s, &mut next.spent_proc),
            EnergyKind::Tran => (sat.e_tran_per_s, &mut next.spent_tran),
        };
        *slot += rate * duration_s.max(0.0);
        let total = next.total();
        if total > self.budget {
            return Err(OverBudget {
                satellite: self.satellite_id,
                stp: self.stp_index,
                deficit: total - self.budget,
            });
        }
        Ok(next)
    }
}

pub fn charge_energy(
    ledger: &EnergyLedger,
    kind: EnergyKind,
    duration_s: f64,
    sat: &SatelliteSpec,
) -> Result<EnergyLedger, OverBudget> {
    ledger.charge(kind, duration_s, sat)
}
