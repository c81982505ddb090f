use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use orbsched::error::{Error, Result};
use orbsched::scenario::{
    generate_instance_with, load_scenario, load_stations, bundled_stations, save_scenario, ConstellationConfig,
    Horizon, SatelliteSpec,
};
use orbsched::scheduler::{read_schedule_csv, schedule_rows, validate_rows, write_schedule_csv, Algorithm};
use orbsched::sim::{compare, execute, report_json, summarize, write_report_csv, Geometry, ReportFormat};
use orbsched::Scenario;

#[derive(Parser)]
#[command(name = "orbsched", version, about = "Freshness-aware AEOS constellation scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a scenario file on the reference constellation.
    Generate {
        #[command(flatten)]
        source: Source,
        /// Output scenario path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plan and execute the whole horizon with one algorithm.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "heuristic-ls")]
        algorithm: Algorithm,
        /// Report path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
        /// Also write the executed schedule as CSV.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Run all algorithms for each seed and report paired deltas.
    Compare {
        #[command(flatten)]
        source: Source,
        /// Seeds to redraw targets from (repeat or comma-separate).
        #[arg(long = "seeds", value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: ReportFormat,
    },
    /// Check a schedule CSV against a scenario.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        /// Schedule CSV as written by `run --schedule`.
        schedule: PathBuf,
    },
}

/// Where the scenario comes from: a file, or synthesized on the fly.
#[derive(Args)]
struct Source {
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Station file replacing the scenario's (or the bundled) stations.
    #[arg(long)]
    stations: Option<PathBuf>,
    /// Number of targets when synthesizing.
    #[arg(long, default_value_t = 200)]
    targets: usize,
    /// Target sampling seed; with --scenario, redraws its targets.
    #[arg(long)]
    seed: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<Scenario> {
        let stations = self.stations.as_deref().map(load_stations).transpose()?;
        let mut scenario = match &self.scenario {
            Some(path) => {
                let sc = load_scenario(path)?;
                match self.seed {
                    Some(seed) => sc.resample_targets(seed),
                    None => sc,
                }
            }
            None => generate_instance_with(
                &ConstellationConfig::reference(),
                self.targets,
                &Horizon::reference(),
                self.seed.unwrap_or(1),
                SatelliteSpec::reference,
                bundled_stations(),
            )?,
        };
        if let Some(stations) = stations {
            scenario.stations = stations;
            scenario.validate()?;
        }
        Ok(scenario)
    }
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
            write(&mut file).map_err(|e| io_error(path, e))
        }
        None => write(&mut std::io::stdout().lock()).map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_to_io(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Generate { source, out } => {
            let scenario = source.load()?;
            match out {
                Some(path) => save_scenario(&scenario, path)?,
                None => println!("{}", scenario.to_json()),
            }
        }
        Command::Run {
            source,
            algorithm,
            out,
            format,
            schedule,
        } => {
            let scenario = source.load()?;
            let t0 = std::time::Instant::now();
            let exec = execute(&scenario, &Geometry::compute(&scenario), algorithm)?;
            let report = summarize(&scenario, &exec, algorithm, t0.elapsed().as_secs_f64());
            if let Some(path) = schedule {
                write_schedule_csv(path, &schedule_rows(&exec.schedules))?;
            }
            emit(out.as_deref(), |w| match format {
                ReportFormat::Json => writeln!(w, "{}", report_json(&report)),
                ReportFormat::Csv => write_report_csv(w, &report).map_err(csv_to_io),
            })?;
            eprintln!(
                "{}: profit {:.4}, missed {}/{} targets, {:.2} s",
                report.algorithm, report.total_profit, report.missed_target_count, report.n_targets, report.wall_time_s
            );
        }
        Command::Compare {
            source,
            seeds,
            out,
            format,
        } => {
            let scenario = source.load()?;
            let (_, cmp) = compare(&scenario, &seeds)?;
            emit(out.as_deref(), |w| match format {
                ReportFormat::Json => writeln!(
                    w,
                    "{}",
                    serde_json::to_string_pretty(&cmp).expect("comparison serializes")
                ),
                ReportFormat::Csv => {
                    let mut cw = csv::Writer::from_writer(w);
                    for row in &cmp.rows {
                        cw.serialize(row).map_err(csv_to_io)?;
                    }
                    cw.flush()
                }
            })?;
            for d in &cmp.deltas {
                eprintln!(
                    "seed {}: profit x{:.3} (LS x{:.3}), missed {:.1}% vs FIFO {:.1}%",
                    d.seed, d.profit_ratio, d.ls_profit_ratio, d.missed_pct_heuristic, d.missed_pct_fifo
                );
            }
        }
        Command::Validate { scenario, schedule } => {
            let scenario = load_scenario(scenario)?;
            let rows = read_schedule_csv(&schedule)?;
            let violations = validate_rows(&rows, &scenario)?;
            if violations.is_empty() {
                println!("ok: {} observations, no violations", rows.len());
            } else {
                for v in &violations {
                    println!("{v:?}");
                }
                eprintln!("{} violation(s)", violations.len());
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 2,
        Error::Parse { .. } => 3,
        Error::Validation(_) => 4,
        Error::Io { .. } => 5,
        Error::Timeline { .. } => 6,
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
