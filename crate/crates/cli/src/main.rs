use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use stressfusion::fusion::FusionMode;
use stressfusion::synth::{self, SynthConfig, TlxMap};
use stressfusion::workflow::{self, RunConfig};

/// Multimodal stress detection: synthetic data, fusion training, evaluation
/// and stress timelines.
#[derive(Debug, Parser)]
#[command(name = "stressfusion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset with a schema manifest.
    Synth(SynthArgs),
    /// Train encoders and a fusion head; write a model bundle and reports.
    Train(RunArgs),
    /// Score one or more bundles on their own test splits.
    Evaluate(RunArgs),
    /// Write per-row stress probabilities, labels and TLX scores.
    Predict(RunArgs),
    /// Run a bundle over time-ordered rows and write alerts and a plot.
    Timeline(RunArgs),
    /// k-fold cross-validation of the full training recipe.
    Crossval(RunArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// paper-shape | drift
    #[arg(long, default_value = "paper-shape")]
    preset: String,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Use TLX = clamp(50 + slope * z, 0, 100) instead of 100 * sigmoid(z).
    #[arg(long)]
    tlx_slope: Option<f64>,
}

/// Flags override values from `--config`.
#[derive(Debug, Args)]
struct RunArgs {
    /// JSON file with any of the fields below (snake_case names).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Repeat to evaluate several bundles.
    #[arg(long)]
    bundle: Vec<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// early | late
    #[arg(long)]
    mode: Option<FusionMode>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch: Option<usize>,
    /// Training fraction of the aligned rows.
    #[arg(long)]
    split: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_run: Option<usize>,
    #[arg(long)]
    with_tlx: bool,
}

impl RunArgs {
    fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if self.manifest.is_some() {
            cfg.manifest = self.manifest;
        }
        if !self.bundle.is_empty() {
            cfg.bundle = self.bundle;
        }
        if self.out_dir.is_some() {
            cfg.out_dir = self.out_dir;
        }
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.mode = self.mode.unwrap_or(cfg.mode);
        cfg.epochs = self.epochs.unwrap_or(cfg.epochs);
        cfg.lr = self.lr.unwrap_or(cfg.lr);
        cfg.batch = self.batch.unwrap_or(cfg.batch);
        cfg.split = self.split.unwrap_or(cfg.split);
        cfg.k = self.k.unwrap_or(cfg.k);
        cfg.min_run = self.min_run.unwrap_or(cfg.min_run);
        cfg.with_tlx |= self.with_tlx;
        for path in cfg.manifest.iter().chain(&cfg.bundle) {
            if !path.exists() {
                bail!("config stage failed: {} does not exist", path.display());
            }
        }
        Ok(cfg)
    }
}

fn pct(v: f64) -> String {
    format!("{v:.4}")
}

fn synth_cmd(args: SynthArgs) -> Result<()> {
    let mut cfg = SynthConfig::preset(&args.preset, args.seed)?;
    if let Some(rows) = args.rows {
        cfg.rows = rows;
    }
    if let Some(noise) = args.noise_sigma {
        cfg.noise_sigma = noise;
    }
    if let Some(slope) = args.tlx_slope {
        cfg.tlx_map = TlxMap::Linear {
            intercept: 50.0,
            slope,
        };
    }
    let data = synth::generate(&cfg)?;
    data.write_to_dir(&args.out_dir)?;
    println!(
        "wrote {} rows ({} episodes) to {}",
        cfg.rows,
        data.episodes().len(),
        args.out_dir.join("manifest.json").display()
    );
    Ok(())
}

fn train_cmd(cfg: RunConfig) -> Result<()> {
    let run = workflow::train(&cfg)?;
    let r = &run.report;
    println!(
        "aligned {} rows: train {}, test {}",
        r.alignment.aligned, r.train_rows, r.test_rows
    );
    for (m, u) in &r.unimodal {
        println!("{m:<10} accuracy {}", pct(u.report.accuracy));
    }
    println!(
        "{} fusion accuracy {} f1 {}",
        r.test.mode,
        pct(r.test.report.accuracy),
        pct(r.test.report.f1)
    );
    if let Some(t) = &r.test.tlx {
        println!(
            "tlx rmse {} (normalized), {} (0-100)",
            pct(t.rmse_normalized),
            pct(t.rmse_raw)
        );
    }
    println!("bundle: {}", run.bundle_dir.display());
    Ok(())
}

fn evaluate_cmd(cfg: RunConfig) -> Result<()> {
    let results = workflow::evaluate(&cfg)?;
    println!(
        "{:<16} {:<6} {:>8} {:>8} {:>8} {:>8}",
        "bundle", "mode", "acc", "prec", "recall", "f1"
    );
    for (label, r) in &results {
        println!(
            "{label:<16} {:<6} {:>8} {:>8} {:>8} {:>8}",
            r.mode.to_string(),
            pct(r.report.accuracy),
            pct(r.report.precision),
            pct(r.report.recall),
            pct(r.report.f1)
        );
    }
    Ok(())
}

fn predict_cmd(cfg: RunConfig) -> Result<()> {
    let rows = workflow::predict(&cfg)?;
    let stressed = rows.iter().filter(|r| r.label == 1).count();
    println!("{} rows scored, {stressed} stressed", rows.len());
    Ok(())
}

fn timeline_cmd(cfg: RunConfig) -> Result<()> {
    let run = workflow::timeline(&cfg)?;
    println!(
        "{} entries, {} alerts",
        run.timeline.len(),
        run.timeline.alerts().len()
    );
    for a in run.timeline.alerts() {
        println!("alert {} .. {} ({} entries)", a.start_ts, a.end_ts, a.len());
    }
    Ok(())
}

fn crossval_cmd(cfg: RunConfig) -> Result<()> {
    let report = workflow::crossval(&cfg)?;
    for (name, a) in &report.aggregate {
        println!("{name:<20} {} ± {}", pct(a.mean), pct(a.std));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(args) => synth_cmd(args),
        Command::Train(args) => train_cmd(args.resolve()?),
        Command::Evaluate(args) => evaluate_cmd(args.resolve()?),
        Command::Predict(args) => predict_cmd(args.resolve()?),
        Command::Timeline(args) => timeline_cmd(args.resolve()?),
        Command::Crossval(args) => crossval_cmd(args.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"epochs": 7, "lr": 0.2, "mode": "late"}"#).unwrap();
        let cli = Cli::parse_from([
            "stressfusion",
            "train",
            "--config",
            path.to_str().unwrap(),
            "--epochs",
            "3",
        ]);
        let Command::Train(args) = cli.command else {
            panic!()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.epochs, cfg.lr, cfg.mode), (3, 0.2, FusionMode::Late));
    }
}
