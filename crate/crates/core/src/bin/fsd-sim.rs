use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsd_core::error::{Error, Result};
use fsd_core::harness::{
    compute_metrics, read_telemetry, ConeMapExport, ScenarioConfig, Simulation,
};
use fsd_core::sensors::log::read_records;
use fsd_core::world::{generate_track, TrackLayout, TrackSpec};

#[derive(Parser)]
#[command(
    name = "fsd-sim",
    version,
    about = "Deterministic Formula Student driverless simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop scenario and write telemetry, metrics and the cone map.
    Run {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, conflicts_with = "laps")]
        ticks: Option<u64>,
        #[arg(long)]
        laps: Option<u32>,
        /// Drive perception from a recorded sensor log instead of simulated sensors.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Record every sensor sample as JSON lines.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Print the resolved configuration and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Generate a track layout as JSON.
    GenTrack {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute metrics from a telemetry CSV.
    Metrics {
        #[arg(long)]
        telemetry: PathBuf,
        #[arg(long)]
        layout: PathBuf,
        /// Defaults to cone_map.json next to the telemetry file.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            ticks,
            laps,
            replay,
            record,
            print_config,
        } => {
            let mut cfg = match scenario {
                Some(p) => ScenarioConfig::load(&p)?,
                None => ScenarioConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = ticks {
                cfg.limits.ticks = Some(t);
                cfg.limits.laps = None;
            }
            if let Some(l) = laps {
                cfg.limits.laps = Some(l);
            }
            if print_config {
                cfg.validate()?;
                print!("{}", cfg.to_canonical_json());
                return Ok(());
            }
            let mut sim = match replay {
                Some(p) => Simulation::with_replay(
                    cfg.clone(),
                    read_records(BufReader::new(File::open(p)?))?,
                )?,
                None => Simulation::new(cfg.clone())?,
            };
            if let Some(p) = record {
                sim.set_sensor_log(Box::new(BufWriter::new(File::create(p)?)));
            }
            while sim.step()? {}
            let output = sim.finish()?;
            output.write_to(&out)?;
            cfg.save(&out.join("scenario.json"))?;
            let m = &output.metrics;
            println!(
                "ticks {} laps {} max_xte {:.3} violations {} precision {:.3} recall {:.3} ekf_rmse {:.3} gnss_rmse {:.3}",
                m.ticks, m.laps_completed, m.max_cross_track, m.boundary_violations, m.precision, m.recall, m.ekf_rmse, m.gnss_rmse
            );
            Ok(())
        }
        Command::GenTrack { spec, seed, out } => {
            let spec: TrackSpec = match spec {
                Some(p) => read_json(&p)?,
                None => TrackSpec::default(),
            };
            let layout = generate_track(&spec, seed)?;
            write_or_print(
                out.as_deref(),
                &(serde_json::to_string_pretty(&layout)? + "\n"),
            )
        }
        Command::Metrics {
            telemetry,
            layout,
            map,
            scenario,
        } => {
            let records = read_telemetry(BufReader::new(File::open(&telemetry)?))?;
            let layout: TrackLayout = read_json(&layout)?;
            let map_path = map.unwrap_or_else(|| telemetry.with_file_name("cone_map.json"));
            let map: ConeMapExport = read_json(&map_path)?;
            let cfg = match scenario {
                Some(p) => ScenarioConfig::load(&p)?,
                None => ScenarioConfig::default(),
            };
            let metrics = compute_metrics(&records, &layout, &map.cones, &cfg.metrics)?;
            println!("{}", serde_json::to_string_pretty(&metrics)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fsd-sim: {e}");
            match e {
                Error::Config(_) | Error::Json(_) => ExitCode::from(2),
                Error::Runtime { .. } => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
