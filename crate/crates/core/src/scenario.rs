//! Problem instances: constellation layout, satellite payload/bus parameters,
//! targets, ground stations and the planning horizon.
//!
//! Scenarios persist as versioned JSON. Angles are stored in radians and
//! written with round-trip float formatting, so `load(save(s)) == s` holds
//! bit for bit.

use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit_geometry::{self, max_ground_angle};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
pub const STATIONS_SCHEMA_VERSION: u32 = 1;

const BUNDLED_STATIONS: &str = include_str!("../data/stations.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TargetId(pub u32);

impl std::fmt::Display for TargetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    WalkerDelta,
    WalkerStar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub n_planes: u32,
    pub sats_per_plane: u32,
    pub altitude_m: f64,
    pub inclination_rad: f64,
    pub topology: Topology,
    #[serde(default)]
    pub phasing_factor: u32,
}

impl ConstellationConfig {
    /// 4 planes x 2 satellites, 600 km, 53 deg, Walker-Delta.
    pub fn reference() -> Self {
        Self {
            n_planes: 4,
            sats_per_plane: 2,
            altitude_m: 600_000.0,
            inclination_rad: 53f64.to_radians(),
            topology: Topology::WalkerDelta,
            phasing_factor: 0,
        }
    }

    pub fn n_satellites(&self) -> usize {
        (self.n_planes * self.sats_per_plane) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_planes < 1 {
            return Err(Error::config("n_planes", "must be at least 1"));
        }
        if self.sats_per_plane < 1 {
            return Err(Error::config("sats_per_plane", "must be at least 1"));
        }
        if !(self.altitude_m.is_finite() && self.altitude_m > 0.0) {
            return Err(Error::config(
                "altitude_m",
                format!("must be positive, got {}", self.altitude_m),
            ));
        }
        if !(0.0..=PI).contains(&self.inclination_rad) {
            return Err(Error::config(
                "inclination_rad",
                format!("must lie in [0, pi], got {}", self.inclination_rad),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SatelliteSpec {
    pub id: u32,
    pub max_roll_rad: f64,
    pub max_pitch_rad: f64,
    pub max_yaw_rad: f64,
    pub n_cores: u32,
    pub cpu_freq_hz: f64,
    pub gsd_nadir_m_per_px: f64,
    pub swath_nadir_m: f64,
    pub pixel_depth_bits: f64,
    pub e_obs_per_s: f64,
    pub e_proc_per_s: f64,
    pub e_tran_per_s: f64,
    pub e_max: f64,
    pub compression_factor: f64,
    pub cycles_per_bit: f64,
    pub downlink_rate_bps: f64,
}

impl SatelliteSpec {
    /// Payload and bus parameters of the reference constellation.
    ///
    /// The downlink rate (300 Mbit/s, a typical X-band figure) is not part of
    /// the reference parameter set and is chosen here.
    pub fn reference(id: u32) -> Self {
        Self {
            id,
            max_roll_rad: 45f64.to_radians(),
            max_pitch_rad: 45f64.to_radians(),
            max_yaw_rad: 90f64.to_radians(),
            n_cores: 8,
            cpu_freq_hz: 1.8e9,
            gsd_nadir_m_per_px: 0.5,
            swath_nadir_m: 5_000.0,
            pixel_depth_bits: 11.0,
            e_obs_per_s: 2.0,
            e_proc_per_s: 2.0,
            e_tran_per_s: 2.0,
            e_max: 5_000.0,
            compression_factor: 10.0,
            cycles_per_bit: 100.0,
            downlink_rate_bps: 300e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("cpu_freq_hz", self.cpu_freq_hz),
            ("gsd_nadir_m_per_px", self.gsd_nadir_m_per_px),
            ("swath_nadir_m", self.swath_nadir_m),
            ("pixel_depth_bits", self.pixel_depth_bits),
            ("e_obs_per_s", self.e_obs_per_s),
            ("e_proc_per_s", self.e_proc_per_s),
            ("e_tran_per_s", self.e_tran_per_s),
            ("e_max", self.e_max),
            ("cycles_per_bit", self.cycles_per_bit),
            ("downlink_rate_bps", self.downlink_rate_bps),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(
                    field,
                    format!("satellite {}: must be positive, got {value}", self.id),
                ));
            }
        }
        if self.n_cores == 0 {
            return Err(Error::config("n_cores", "must be at least 1"));
        }
        if !(self.compression_factor.is_finite() && self.compression_factor >= 1.0) {
            return Err(Error::config(
                "compression_factor",
                format!("must be >= 1, got {}", self.compression_factor),
            ));
        }
        for (field, value) in [
            ("max_roll_rad", self.max_roll_rad),
            ("max_pitch_rad", self.max_pitch_rad),
            ("max_yaw_rad", self.max_yaw_rad),
        ] {
            if !(value > 0.0 && value <= PI) {
                return Err(Error::config(
                    field,
                    format!("must lie in (0, pi], got {value}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub id: TargetId,
    pub lat_rad: f64,
    pub lon_rad: f64,
    pub obs_duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub id: u32,
    #[serde(default)]
    pub name: String,
    pub lat_rad: f64,
    pub lon_rad: f64,
    pub min_elevation_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    pub sth_duration_s: f64,
    pub n_stp: u32,
    pub otw_step_s: f64,
}

impl Horizon {
    /// Horizon spanning `n_periods` circular orbital periods at `altitude_m`,
    /// split into `n_stp` equal periods.
    pub fn from_orbital_periods(altitude_m: f64, n_periods: f64, n_stp: u32, otw_step_s: f64) -> Self {
        Self {
            sth_duration_s: n_periods * orbit_geometry::orbital_period(altitude_m),
            n_stp,
            otw_step_s,
        }
    }

    /// Ten orbital periods at 600 km, one period per STP, 10 s step.
    pub fn reference() -> Self {
        Self::from_orbital_periods(600_000.0, 10.0, 10, 10.0)
    }

    pub fn stp_duration_s(&self) -> f64 {
        self.sth_duration_s / f64::from(self.n_stp)
    }

    pub fn stp_start_s(&self, stp: usize) -> f64 {
        stp as f64 * self.stp_duration_s()
    }

    pub fn stp_end_s(&self, stp: usize) -> f64 {
        if stp + 1 >= self.n_stp as usize {
            self.sth_duration_s
        } else {
            (stp + 1) as f64 * self.stp_duration_s()
        }
    }

    /// STP containing `time_s`; the horizon end belongs to the last STP.
    pub fn stp_of(&self, time_s: f64) -> usize {
        let idx = (time_s / self.stp_duration_s()).floor();
        (idx.max(0.0) as usize).min(self.n_stp as usize - 1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sth_duration_s.is_finite() && self.sth_duration_s > 0.0) {
            return Err(Error::config("sth_duration_s", "must be positive"));
        }
        if self.n_stp == 0 {
            return Err(Error::config("n_stp", "must be at least 1"));
        }
        if (self.stp_duration_s() * f64::from(self.n_stp) - self.sth_duration_s).abs() > 1.0 {
            return Err(Error::config("n_stp", "horizon does not split into equal STPs"));
        }
        if !(self.otw_step_s.is_finite() && self.otw_step_s > 0.0) {
            return Err(Error::config("otw_step_s", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub constellation: ConstellationConfig,
    pub satellites: Vec<SatelliteSpec>,
    pub targets: Vec<Target>,
    pub stations: Vec<GroundStation>,
    pub horizon: Horizon,
    pub rng_seed: u64,
}

#[derive(Serialize)]
struct ScenarioFileRef<'a> {
    schema_version: u32,
    #[serde(flatten)]
    scenario: &'a Scenario,
}

#[derive(Deserialize)]
struct ScenarioFile {
    schema_version: u32,
    #[serde(flatten)]
    scenario: Scenario,
}

#[derive(Serialize, Deserialize)]
struct StationFile {
    schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
    stations: Vec<StationRecord>,
}

#[derive(Serialize, Deserialize)]
struct StationRecord {
    id: u32,
    #[serde(default)]
    name: String,
    lat_deg: f64,
    lon_deg: f64,
    min_elevation_deg: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.constellation.validate()?;
        self.horizon.validate()?;
        if self.satellites.len() != self.constellation.n_satellites() {
            return Err(Error::Validation(format!(
                "{} satellites listed but the constellation has {} x {} slots",
                self.satellites.len(),
                self.constellation.n_planes,
                self.constellation.sats_per_plane
            )));
        }
        for (i, sat) in self.satellites.iter().enumerate() {
            if sat.id as usize != i {
                return Err(Error::Validation(format!(
                    "satellite ids must be 0..n in slot order; slot {i} has id {}",
                    sat.id
                )));
            }
            sat.validate()?;
        }
        let mut seen = HashSet::new();
        for t in &self.targets {
            if !seen.insert(t.id) {
                return Err(Error::Validation(format!("duplicate target id {}", t.id)));
            }
            check_coordinates("target", t.id.0, t.lat_rad, t.lon_rad)?;
            if !(t.obs_duration_s.is_finite() && t.obs_duration_s > 0.0) {
                return Err(Error::Validation(format!(
                    "target {} has non-positive observation duration",
                    t.id
                )));
            }
        }
        let mut seen = HashSet::new();
        for g in &self.stations {
            if !seen.insert(g.id) {
                return Err(Error::Validation(format!("duplicate station id {}", g.id)));
            }
            check_coordinates("station", g.id, g.lat_rad, g.lon_rad)?;
            if !(0.0..FRAC_PI_2).contains(&g.min_elevation_rad) {
                return Err(Error::Validation(format!(
                    "station {} min elevation must lie in [0, pi/2)",
                    g.id
                )));
            }
        }
        Ok(())
    }

    pub fn orbital_period_s(&self) -> f64 {
        orbit_geometry::orbital_period(self.constellation.altitude_m)
    }

    pub fn target(&self, id: TargetId) -> Option<&Target> {
        self.targets.iter().find(|t| t.id == id)
    }

    /// Same scenario with the target set redrawn from `seed`, keeping the
    /// target count, constellation, stations and horizon.
    pub fn resample_targets(&self, seed: u64) -> Scenario {
        let mut next = self.clone();
        next.targets = sample_targets(&self.constellation, &self.satellites, self.targets.len(), seed);
        next.rng_seed = seed;
        next
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFileRef {
            schema_version: SCENARIO_SCHEMA_VERSION,
            scenario: self,
        };
        serde_json::to_string_pretty(&file).expect("scenario serializes")
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Scenario> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
        if file.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "unsupported scenario schema_version {} (expected {})",
                file.schema_version, SCENARIO_SCHEMA_VERSION
            )));
        }
        file.scenario.validate()?;
        Ok(file.scenario)
    }
}

fn check_coordinates(kind: &str, id: u32, lat: f64, lon: f64) -> Result<()> {
    // negated so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(lat.abs() <= FRAC_PI_2) {
        return Err(Error::Validation(format!("{kind} {id} latitude {lat} out of range")));
    }
    if !(-PI..PI).contains(&lon) {
        return Err(Error::Validation(format!(
            "{kind} {id} longitude {lon} outside [-pi, pi)"
        )));
    }
    Ok(())
}

fn parse_error(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_json(&text, path)
}

/// Stations shipped with the crate (approximate commercial ground network).
pub fn bundled_stations() -> Vec<GroundStation> {
    parse_stations(BUNDLED_STATIONS, Path::new("<bundled stations>")).expect("bundled station file is valid")
}

pub fn load_stations(path: impl AsRef<Path>) -> Result<Vec<GroundStation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stations(&text, path)
}

fn parse_stations(text: &str, origin: &Path) -> Result<Vec<GroundStation>> {
    let file: StationFile = serde_json::from_str(text).map_err(|e| parse_error(origin, e))?;
    if file.schema_version != STATIONS_SCHEMA_VERSION {
        return Err(Error::Validation(format!(
            "unsupported station schema_version {}",
            file.schema_version
        )));
    }
    let mut seen = HashSet::new();
    let stations: Vec<GroundStation> = file
        .stations
        .into_iter()
        .map(|r| GroundStation {
            id: r.id,
            name: r.name,
            lat_rad: r.lat_deg.to_radians(),
            lon_rad: wrap_longitude(r.lon_deg.to_radians()),
            min_elevation_rad: r.min_elevation_deg.to_radians(),
        })
        .collect();
    for g in &stations {
        if !seen.insert(g.id) {
            return Err(Error::Validation(format!("duplicate station id {}", g.id)));
        }
        check_coordinates("station", g.id, g.lat_rad, g.lon_rad)?;
    }
    Ok(stations)
}

/// Wrap a longitude into [-pi, pi).
pub fn wrap_longitude(lon: f64) -> f64 {
    let wrapped = (lon + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Highest latitude any satellite of the constellation can image.
pub fn observable_latitude_limit(config: &ConstellationConfig, satellites: &[SatelliteSpec]) -> f64 {
    let reach = satellites
        .iter()
        .map(|s| max_ground_angle(config.altitude_m, s.max_roll_rad, s.max_pitch_rad))
        .fold(0.0, f64::max);
    let apex = config.inclination_rad.min(PI - config.inclination_rad);
    (apex + reach).min(FRAC_PI_2)
}

fn sample_targets(
    config: &ConstellationConfig,
    satellites: &[SatelliteSpec],
    n_targets: usize,
    seed: u64,
) -> Vec<Target> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let band = observable_latitude_limit(config, satellites);
    let sin_band = band.sin();
    (0..n_targets)
        .map(|i| {
            // equal-area sampling over the latitude band
            let lat = rng.random_range(-sin_band..=sin_band).asin();
            let lon = rng.random_range(-PI..PI);
            let obs_duration_s = rng.random_range(1.0..=5.0);
            Target {
                id: TargetId(i as u32),
                lat_rad: lat,
                lon_rad: lon,
                obs_duration_s,
            }
        })
        .collect()
}

/// Synthesize a scenario with reference satellites and the bundled stations.
pub fn generate_instance(
    config: &ConstellationConfig,
    n_targets: usize,
    horizon: &Horizon,
    seed: u64,
) -> Result<Scenario> {
    generate_instance_with(config, n_targets, horizon, seed, SatelliteSpec::reference, bundled_stations())
}

/// As [`generate_instance`] with a custom satellite template and station list.
pub fn generate_instance_with(
    config: &ConstellationConfig,
    n_targets: usize,
    horizon: &Horizon,
    seed: u64,
    satellite: impl Fn(u32) -> SatelliteSpec,
    stations: Vec<GroundStation>,
) -> Result<Scenario> {
    config.validate()?;
    horizon.validate()?;
    if n_targets < 1 {
        return Err(Error::config("n_targets", "must be at least 1"));
    }
    let satellites: Vec<SatelliteSpec> = (0..config.n_satellites() as u32).map(satellite).collect();
    for s in &satellites {
        s.validate()?;
    }
    let targets = sample_targets(config, &satellites, n_targets, seed);
    let scenario = Scenario {
        constellation: config.clone(),
        satellites,
        targets,
        stations,
        horizon: horizon.clone(),
        rng_seed: seed,
    };
    scenario.validate()?;
    Ok(scenario)
}
