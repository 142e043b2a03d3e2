//! `contactdet`: synthesize trials, extract features, train and evaluate the
//! contact classifier, and run streaming detection on a recording.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use contact_core::config::PipelineConfig;
use contact_core::{pipeline, MaxFeatures, RandomForestModel, SplitMode};

#[derive(Debug, Parser)]
#[command(name = "contactdet", version, about = "Multimodal contact detection from audio and force/torque streams")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every command; flags override the config file.
#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding trial subdirectories and manifest.csv.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Model file (JSON).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Directory for report files.
    #[arg(long, global = true)]
    report_dir: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Frame,
    Trial,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the effective configuration as TOML.
    InitConfig {
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic trials into the data directory.
    Synth {
        #[arg(long)]
        n_trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Extract per-trial feature CSVs.
    Extract,
    /// Split, sweep the forest size, and train the final model.
    Train {
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        /// Seed for the split.
        #[arg(long)]
        split_seed: Option<u64>,
        /// Seed for the forest.
        #[arg(long)]
        forest_seed: Option<u64>,
        /// Features tried per split: a count, or `sqrt` / `all`.
        #[arg(long)]
        max_features: Option<String>,
        #[arg(long)]
        max_depth: Option<usize>,
    },
    /// Evaluate the model on the test split and run k-fold cross validation.
    Evaluate {
        #[arg(long, value_enum)]
        split: Option<SplitArg>,
        #[arg(long)]
        split_seed: Option<u64>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        cv_seed: Option<u64>,
    },
    /// Stream one trial directory through the model and report contact events.
    Detect {
        /// Trial directory with audio.wav, wrench.csv and annotations.csv.
        trial: PathBuf,
        /// Positive frames closer than this many seconds merge into one event.
        #[arg(long)]
        merge_gap: Option<f64>,
        /// Write the events CSV here instead of stdout.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Also write per-frame decisions and latencies as CSV.
        #[arg(long)]
        frames: Option<PathBuf>,
    },
    /// Print model configuration, importances and tree sizes.
    Inspect,
}

fn parse_max_features(s: &str) -> Result<MaxFeatures> {
    Ok(match s {
        "sqrt" => MaxFeatures::Sqrt,
        "all" => MaxFeatures::All,
        n => MaxFeatures::Count(n.parse().with_context(|| format!("bad --max-features `{n}`"))?),
    })
}

fn apply_split(cfg: &mut PipelineConfig, split: Option<SplitArg>, seed: Option<u64>) {
    if let Some(s) = split {
        cfg.split.mode = match s {
            SplitArg::Frame => SplitMode::FrameLevel,
            SplitArg::Trial => SplitMode::TrialLevel,
        };
    }
    if let Some(seed) = seed {
        cfg.split.seed = seed;
    }
}

fn load_config(global: &GlobalArgs) -> Result<PipelineConfig> {
    let mut cfg = match &global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(d) = &global.data_dir {
        cfg.paths.data_dir = d.clone();
    }
    if let Some(m) = &global.model {
        cfg.paths.model = m.clone();
    }
    if let Some(r) = &global.report_dir {
        cfg.paths.report_dir = r.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.global)?;
    match cli.command {
        Command::InitConfig { out } => {
            cfg.validate()?;
            let text = cfg.to_toml()?;
            match out {
                Some(path) => cfg.save(&path)?,
                None => print!("{text}"),
            }
        }
        Command::Synth { n_trials, seed } => {
            if let Some(n) = n_trials {
                cfg.synth.n_trials = n;
            }
            if let Some(s) = seed {
                cfg.synth.seed = s;
            }
            let entries = pipeline::synth(&cfg)?;
            println!("wrote {} trials to {}", entries.len(), cfg.paths.data_dir.display());
        }
        Command::Extract => {
            let summary = pipeline::extract(&cfg)?;
            println!(
                "extracted {} rows from {} trials",
                summary.total_rows(),
                summary.extracted.len()
            );
            for (id, err) in &summary.failed {
                eprintln!("error: {id}: {err}");
            }
            if !summary.failed.is_empty() {
                bail!("{} of {} trials failed", summary.failed.len(), summary.failed.len() + summary.extracted.len());
            }
        }
        Command::Train {
            split,
            split_seed,
            forest_seed,
            max_features,
            max_depth,
        } => {
            apply_split(&mut cfg, split, split_seed);
            if let Some(s) = forest_seed {
                cfg.forest.seed = s;
            }
            if let Some(m) = max_features {
                cfg.forest.max_features = parse_max_features(&m)?;
            }
            if max_depth.is_some() {
                cfg.forest.max_depth = max_depth;
            }
            let out = pipeline::train(&cfg)?;
            print!("{}", out.sweep);
            println!("validation accuracy of final model: {}", out.validation_accuracy);
            println!("model written to {}", cfg.paths.model.display());
        }
        Command::Evaluate {
            split,
            split_seed,
            folds,
            cv_seed,
        } => {
            apply_split(&mut cfg, split, split_seed);
            if let Some(k) = folds {
                cfg.cv.k = k;
            }
            if let Some(s) = cv_seed {
                cfg.cv.seed = s;
            }
            let out = pipeline::evaluate(&cfg)?;
            println!("{}", out.report.report);
            print!("{}", out.summary);
            println!("reports written to {}", cfg.paths.report_dir.display());
        }
        Command::Detect {
            trial,
            merge_gap,
            events,
            frames,
        } => {
            if let Some(g) = merge_gap {
                cfg.detect.merge_gap = g;
            }
            let out = pipeline::detect(&cfg, &trial)?;
            match events {
                Some(path) => std::fs::write(&path, out.events_csv()).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{}", out.events_csv()),
            }
            if let Some(path) = frames {
                std::fs::write(&path, out.frames_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            let (mean, max) = out.latency_stats();
            eprintln!(
                "{} events over {} frames; decision latency mean {:.3} s, max {:.3} s",
                out.events.len(),
                out.frames.len(),
                mean,
                max
            );
        }
        Command::Inspect => {
            let model = RandomForestModel::load(&cfg.paths.model)?;
            print!("{}", pipeline::inspect(&model));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
