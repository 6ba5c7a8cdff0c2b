//! Command-line interface.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{ExperimentKind, ExperimentReport};
use crate::fusion::Indicator;
use crate::manifest::Manifest;
use crate::pipeline::{load_predictions, prepare, train_indicator};
use crate::repro::{repro_all, run_eval, summary_markdown, write_experiment, write_plots, ReproReport};
use crate::synth::generate_synthetic;

#[derive(Debug, Parser)]
#[command(name = "neopain", version, about = "Multimodal neonatal pain assessment pipeline")]
pub struct Cli {
    /// TOML run configuration; missing keys take desk-scale defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Start from the full-size reference configuration instead of the
    /// desk-scale one.
    #[arg(long, global = true)]
    pub reference: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        subjects: Option<usize>,
        #[arg(long)]
        samples_per_subject: Option<usize>,
    },
    /// Leave-one-subject-out training of every approach of one indicator.
    Train {
        #[arg(long)]
        indicator: Indicator,
        #[arg(long)]
        manifest: PathBuf,
        /// Writes `<out>/<indicator>/predictions.json`, checkpoints and
        /// training curves.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate saved predictions.
    Eval {
        #[arg(long)]
        experiment: ExperimentKind,
        /// Directory `train` wrote to.
        #[arg(long)]
        models: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render ROC CSV and SVG (and a summary table) from a report JSON.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesise data, train every indicator and run all experiments.
    Repro {
        #[arg(long)]
        out: PathBuf,
    },
}

fn config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match (&cli.config, cli.reference) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, true) => RunConfig::reference(),
        (None, false) => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report(input: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(input)?;
    if let Ok(r) = serde_json::from_str::<ExperimentReport>(&text) {
        return write_plots(&r, out);
    }
    let bundle: ReproReport = serde_json::from_str(&text)?;
    fs::create_dir_all(out)?;
    fs::write(out.join("summary.md"), summary_markdown(&bundle.summary))?;
    fs::write(out.join("roc.csv"), crate::eval::roc_csv(&bundle.experiments))?;
    match bundle.experiment(ExperimentKind::Multimodal) {
        Some(m) => write_plots(m, out.join(ExperimentKind::Multimodal.as_str())),
        None => Ok(()),
    }
}

/// Executes a parsed command.
pub fn execute(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    match &cli.command {
        Command::Synth {
            out,
            subjects,
            samples_per_subject,
        } => {
            let mut synth = cfg.synth.clone();
            synth.subjects = subjects.unwrap_or(synth.subjects);
            synth.samples_per_subject = samples_per_subject.unwrap_or(synth.samples_per_subject);
            let m = generate_synthetic(&synth, cfg.seed, out)?;
            println!(
                "wrote {} segments to {}",
                m.samples.len(),
                out.join("manifest.csv").display()
            );
        }
        Command::Train {
            indicator,
            manifest,
            out,
        } => {
            if *indicator == Indicator::Fused {
                return Err(Error::Config("--indicator must be face, body or sound".into()));
            }
            let m = Manifest::load(manifest)?;
            let data = prepare(&m, &cfg, &[*indicator])?;
            let run = train_indicator(&data, *indicator, &cfg)?;
            run.save(out)?;
            println!(
                "wrote {}",
                out.join(indicator.as_str()).join("predictions.json").display()
            );
        }
        Command::Eval {
            experiment,
            models,
            out,
        } => {
            let table = load_predictions(models)?;
            let r = run_eval(&table, *experiment, cfg.seed)?;
            write_experiment(&r, out)?;
            println!("wrote {}", out.join("report.json").display());
        }
        Command::Report { input, out } => {
            report(input, out)?;
            println!("wrote {}", out.display());
        }
        Command::Repro { out } => {
            let r = repro_all(&cfg, out)?;
            print!("{}", summary_markdown(&r.summary));
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status: 0 on success, 1 on a pipeline error,
/// 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
