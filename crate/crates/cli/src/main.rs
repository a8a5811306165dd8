//! `harlab` — command-line front end for the activity-recognition
//! workbench: corpus ingestion, synthetic data, preprocessing, feature
//! dumps, training, evaluation, full experiment runs and report tables.
//!
//! Exit codes: 0 success, 1 config or runtime error, 2 when every model in
//! a run failed.

use anyhow::bail;
use clap::{Args, Parser, Subcommand};
use harlab_core::dataset::{synth_generate, SplitStrategy, SynthSpec};
use harlab_core::harness::{
    dump_features, emit_table, evaluate_checkpoint, load_corpus, load_report, preprocess_to_dir,
    render_csv, render_text, run_experiment, ExperimentConfig, RunOverrides, SegmentSelector,
};
use harlab_core::models::ModelKind;
use harlab_core::training::Schedule;
use harlab_core::Error;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "harlab", version, about = "Sensor-based activity recognition workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated model kinds (overrides the config's list).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Training schedule: ce, supcon or triplet.
    #[arg(long)]
    schedule: Option<String>,
    /// Split strategy: stratified or by-user.
    #[arg(long)]
    split: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Load the configured corpus and print ingest statistics.
    Ingest {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus as generic CSV plus manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        classes: usize,
        #[arg(long, default_value_t = 6)]
        users: usize,
        #[arg(long, default_value_t = 3)]
        channels: usize,
        /// Samples per recording.
        #[arg(long, default_value_t = 576)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        recordings_per_user: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 2.0)]
        amplitude_ratio: f64,
    },
    /// Segment, smooth, split and normalize; write the segment cache.
    Preprocess {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        split: Option<String>,
    },
    /// Feature utilities.
    Features {
        #[command(subcommand)]
        command: FeaturesCommand,
    },
    /// Train the selected models (full pipeline; writes a report).
    Train(RunArgs),
    /// Evaluate a saved model on the config's test split.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Model kind stored in the checkpoint.
        #[arg(long)]
        model: String,
        /// `.ckpt` (neural) or `.model.json` (classical) file.
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the full experiment from the config.
    Run(RunArgs),
    /// Merge run reports into a comparison table.
    Table {
        /// Report JSON files.
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the published reference column.
        #[arg(long)]
        paper: bool,
    },
}

#[derive(Subcommand)]
enum FeaturesCommand {
    /// Dump one segment's temporal and spectral features as CSV.
    Dump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Segment id to dump.
        #[arg(long, conflicts_with = "class")]
        segment: Option<u64>,
        /// Dump the first segment of this class.
        #[arg(long)]
        class: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Error>() {
                Some(Error::AllModelsFailed(_)) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn parse_split(s: &str) -> anyhow::Result<SplitStrategy> {
    match s.trim().to_lowercase().replace('-', "_").as_str() {
        "stratified" | "segment_stratified" => Ok(SplitStrategy::SegmentStratified),
        "by_user" => Ok(SplitStrategy::ByUser),
        other => bail!(Error::Config(format!("unknown split strategy {other:?}"))),
    }
}

fn parse_overrides(args: &RunArgs) -> anyhow::Result<RunOverrides> {
    let models = match &args.models {
        Some(list) => Some(
            list.iter()
                .map(|m| m.parse::<ModelKind>())
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let schedule = match &args.schedule {
        Some(s) => Some(s.parse::<Schedule>()?),
        None => None,
    };
    let split = args.split.as_deref().map(parse_split).transpose()?;
    Ok(RunOverrides {
        models,
        schedule,
        seed: args.seed,
        split,
        out: args.out.clone(),
    })
}

fn hex(digest: &[u8; 32]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let (manifest, ingest, digest) = load_corpus(&config)?;
            let users: std::collections::BTreeSet<i64> =
                ingest.recordings.iter().map(|r| r.user_id).collect();
            println!("dataset:     {}", manifest.name);
            println!("classes:     {}", manifest.class_names.join(", "));
            println!("channels:    {}", manifest.channel_names.join(", "));
            println!("recordings:  {}", ingest.recordings.len());
            println!("users:       {}", users.len());
            println!(
                "lines:       {} total, {} malformed",
                ingest.stats.total_lines, ingest.stats.malformed_lines
            );
            println!("digest:      {}", hex(&digest));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let summary = serde_json::json!({
                    "dataset": manifest.name,
                    "recordings": ingest.recordings.len(),
                    "users": users.len(),
                    "total_lines": ingest.stats.total_lines,
                    "malformed_lines": ingest.stats.malformed_lines,
                    "corpus_digest": hex(&digest),
                });
                std::fs::write(
                    dir.join("ingest.json"),
                    serde_json::to_string_pretty(&summary)?,
                )?;
            }
            Ok(())
        }
        Command::Synth {
            out,
            seed,
            classes,
            users,
            channels,
            length,
            recordings_per_user,
            noise,
            amplitude_ratio,
        } => {
            let spec = SynthSpec {
                classes,
                users,
                channels,
                length,
                seed,
                recordings_per_user,
                noise,
                amplitude_ratio,
            };
            std::fs::create_dir_all(&out)?;
            let manifest = spec.manifest();
            let recordings = synth_generate(&spec);
            let mut csv = String::from("user,activity,");
            csv.push_str(&manifest.channel_names.join(","));
            csv.push('\n');
            for rec in &recordings {
                for r in 0..rec.len() {
                    let _ = write!(csv, "{},{}", rec.user_id, rec.activity.class_name);
                    for c in 0..rec.num_channels() {
                        let _ = write!(csv, ",{:.17e}", rec.channels.get(r, c));
                    }
                    csv.push('\n');
                }
            }
            let corpus_path = out.join("corpus.csv");
            std::fs::write(&corpus_path, csv)?;
            manifest.save(&out.join("manifest.toml"))?;
            println!(
                "wrote {} recordings ({classes} classes, {users} users) to {}",
                recordings.len(),
                corpus_path.display()
            );
            Ok(())
        }
        Command::Preprocess {
            config,
            out,
            seed,
            split,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let overrides = RunOverrides {
                seed,
                split: split.as_deref().map(parse_split).transpose()?,
                out: Some(out),
                ..RunOverrides::default()
            };
            let (config, out) = overrides.apply(config)?;
            let (total, train, val, test) = preprocess_to_dir(&config, &out)?;
            println!(
                "{total} segments ({train} train / {val} val / {test} test) written to {}",
                out.display()
            );
            Ok(())
        }
        Command::Features { command } => match command {
            FeaturesCommand::Dump {
                config,
                out,
                segment,
                class,
            } => {
                let config = ExperimentConfig::load(&config)?;
                let selector = match (segment, class) {
                    (Some(id), None) => SegmentSelector::ById(id),
                    (None, Some(name)) => SegmentSelector::ByClass(name),
                    _ => bail!(Error::Config(
                        "pass exactly one of --segment or --class".into()
                    )),
                };
                let (t, s) = dump_features(&config, &selector, &out)?;
                println!("wrote {}", t.display());
                println!("wrote {}", s.display());
                Ok(())
            }
        },
        Command::Train(args) | Command::Run(args) => {
            let config = ExperimentConfig::load(&args.config)?;
            let overrides = parse_overrides(&args)?;
            let (config, out) = overrides.apply(config)?;
            let report = run_experiment(&config, &out)?;
            let table = emit_table(&[&report], false)?;
            print!("{}", render_text(&table));
            std::fs::write(out.join("table.txt"), render_text(&table))?;
            std::fs::write(out.join("table.csv"), render_csv(&table))?;
            println!("report: {}", out.join("report.json").display());
            Ok(())
        }
        Command::Evaluate {
            config,
            model,
            checkpoint,
            seed,
        } => {
            let config = ExperimentConfig::load(&config)?;
            let overrides = RunOverrides {
                seed,
                out: Some(PathBuf::from(".")),
                ..RunOverrides::default()
            };
            let (config, _) = overrides.apply(config)?;
            let kind: ModelKind = model.parse()?;
            let (accuracy, confusion, class_names) =
                evaluate_checkpoint(&config, kind, &checkpoint)?;
            println!("model:    {kind}");
            println!("accuracy: {accuracy:.4}");
            println!("confusion (rows = true, columns = predicted):");
            for (i, row) in confusion.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>6}")).collect();
                println!("  {:>12} {}", class_names[i], cells.join(" "));
            }
            Ok(())
        }
        Command::Table { reports, out, paper } => {
            if reports.is_empty() {
                bail!(Error::Config("no report files given".into()));
            }
            let loaded: Vec<_> = reports
                .iter()
                .map(|p| load_report(p))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&_> = loaded.iter().collect();
            let table = emit_table(&refs, paper)?;
            print!("{}", render_text(&table));
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("table.txt"), render_text(&table))?;
                std::fs::write(dir.join("table.csv"), render_csv(&table))?;
            }
            Ok(())
        }
    }
}
