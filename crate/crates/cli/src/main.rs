use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emvs_coarray::emvs::generate_snapshots;
use emvs_coarray::harness::{
    crb_rows, estimate_snapshots, read_snapshots_csv, run_sweep, trial_scene, write_crb_csv, write_estimates_csv,
    write_json, write_scatter_csv, write_snapshots_csv, write_sweep_csv, RunConfig, SweepKind, SweepPoint,
};
use emvs_coarray::{Error, Result};

#[derive(Parser)]
#[command(
    name = "emvs-coarray",
    version,
    about = "Coarray tensor estimation for bistatic coprime EMVS-MIMO radar"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (key = value text).
    #[arg(long)]
    config: PathBuf,
    /// Base seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; overrides `output` in the configuration. A JSON report is
    /// written next to it for the sweep commands.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write one batch of snapshots for the first SNR and snapshot count.
    Simulate(Common),
    /// Estimate all targets from a snapshot CSV (or a fresh simulation).
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Snapshot CSV written by `simulate`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// RMSE versus SNR.
    SweepSnr(Common),
    /// RMSE versus number of snapshots.
    SweepSnapshots(Common),
    /// RMSE versus number of targets.
    SweepK(Common),
    /// Bias versus SNR.
    Bias(Common),
    /// Per-trial estimates at the first SNR and snapshot count.
    Scatter(Common),
    /// Cramer-Rao bound versus SNR.
    Crb(Common),
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .ok_or_else(|| Error::Config("no output path: pass --out or set `output`".into()))?;
    Ok((cfg, out))
}

fn sidecar(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn sweep(common: &Common, kind: SweepKind) -> Result<()> {
    let (cfg, out) = load(common)?;
    let report = run_sweep(&cfg, kind)?;
    match kind {
        SweepKind::Scatter => write_scatter_csv(&report, &out)?,
        _ => write_sweep_csv(&report, &out)?,
    }
    write_json(&report, &sidecar(&out))
}

fn first_point(cfg: &RunConfig) -> SweepPoint {
    SweepPoint {
        snr_db: cfg.snr_db[0],
        snapshots: cfg.snapshots[0],
        k: cfg.targets.len(),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(common) => {
            let (cfg, out) = load(&common)?;
            // Trial 0 uses the base seed itself.
            let scene = trial_scene(&cfg, &first_point(&cfg), 0)?;
            write_snapshots_csv(&generate_snapshots(&scene)?, &out)
        }
        Command::Estimate { common, input } => {
            let (cfg, out) = load(&common)?;
            let y = match input {
                Some(path) => read_snapshots_csv(&path)?,
                None => generate_snapshots(&trial_scene(&cfg, &first_point(&cfg), 0)?)?,
            };
            let est = estimate_snapshots(&cfg, &y, cfg.targets.len(), cfg.seed)?;
            write_estimates_csv(&est, &out)
        }
        Command::SweepSnr(common) => sweep(&common, SweepKind::Snr),
        Command::SweepSnapshots(common) => sweep(&common, SweepKind::Snapshots),
        Command::SweepK(common) => sweep(&common, SweepKind::Targets),
        Command::Bias(common) => sweep(&common, SweepKind::Bias),
        Command::Scatter(common) => sweep(&common, SweepKind::Scatter),
        Command::Crb(common) => {
            let (cfg, out) = load(&common)?;
            let rows = crb_rows(&cfg)?;
            write_crb_csv(&rows, &out)?;
            write_json(&rows, &sidecar(&out))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": { "category": e.category(), "message": e.to_string() } });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
