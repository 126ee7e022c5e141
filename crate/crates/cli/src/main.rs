//! `rumor`: generate synthetic corpora and run the detection pipeline stage
//! by stage or end to end.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 runtime
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use rumor_core::classifier::ModelKind;
use rumor_core::pipeline::{self, PipelineConfig, PipelineError, RunOutput, Stage};
use rumor_core::synth::{self, SynthSpec};

#[derive(Parser, Debug)]
#[command(
    name = "rumor",
    version,
    about = "Early rumor detection on tweet streams"
)]
struct Cli {
    /// Pipeline config (TOML), a run manifest (JSON) to replay, or a
    /// synthetic-corpus spec for `synth`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Prefix hours to evaluate, e.g. 1,6,12,48.
    #[arg(long, global = true, value_delimiter = ',')]
    hours: Option<Vec<usize>>,
    /// Models to train and evaluate.
    #[arg(long, global = true, value_delimiter = ',')]
    model: Option<Vec<ModelArg>>,
    /// Feature groups to evaluate, e.g. All,CreditScore,BestSet.
    #[arg(long = "feature-groups", global = true, value_delimiter = ',')]
    feature_groups: Option<Vec<String>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Rf,
    Svm,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Rf => ModelKind::Rf,
            ModelArg::Svm => ModelKind::Svm,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Benchmark,
    Mini,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic labeled corpus and a pipeline config for it.
    Synth {
        /// Bundled spec used when --config is absent.
        #[arg(long, value_enum, default_value = "benchmark")]
        preset: Preset,
    },
    /// Parse, validate and window events.
    Ingest,
    /// Extract per-interval surface features.
    Features,
    /// Fit diffusion models on every prefix of every event.
    FitEpi,
    /// Train (or load) the tweet credibility model.
    TrainCredibility,
    /// Score every interval with CreditScore and CrowdWisdom.
    Score,
    /// Assemble time-series vectors at the longest configured prefix.
    Dsts,
    /// Train each model on all events at the longest prefix.
    Train,
    /// Cross-validate over prefix hours and feature groups.
    Evaluate,
    /// Cross-validate and rank features by held-out permutation importance.
    Importance,
    /// Every stage, end to end.
    Run,
    /// Check a config's inputs, or a finished run's artifacts.
    Validate,
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Self {
            code: e.exit_code() as u8,
            error: e.into(),
        }
    }
}

fn runtime(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn config_error(error: anyhow::Error) -> Failure {
    Failure { code: 1, error }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| config_error(anyhow::anyhow!("--config is required")))?;
    let mut cfg = PipelineConfig::load(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(h) = &cli.hours {
        cfg.hours = h.clone();
    }
    if let Some(m) = &cli.model {
        cfg.models = m.iter().map(|&k| k.into()).collect();
        if let [only] = cfg.models[..] {
            cfg.importance_model = only;
        }
    }
    if let Some(g) = &cli.feature_groups {
        cfg.feature_groups = g.clone();
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out
        .clone()
        .unwrap_or_else(|| PathBuf::from("rumor-out"))
}

fn print_summary(out: &RunOutput) {
    if let Some(acc) = out.credibility_accuracy {
        println!("credibility training accuracy {acc:.4}");
    }
    if let Some(report) = &out.report {
        println!("model\tgroup\thour\tmean\tstd\tpooled");
        for s in &report.summaries {
            println!(
                "{}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
                s.model.as_str(),
                s.feature_group,
                s.hour,
                s.mean,
                s.std,
                s.pooled
            );
        }
    }
    for h in &out.importance {
        let top: Vec<String> = h
            .groups
            .iter()
            .take(3)
            .map(|g| format!("{} {:.3}", g.feature, g.importance))
            .collect();
        println!("hour {} top groups: {}", h.hour, top.join(", "));
    }
    if !out.best_set.is_empty() {
        println!("best set: {}", out.best_set.join(", "));
    }
    println!(
        "{} artifacts written to {}",
        out.artifacts.len() + 1,
        out.out_dir.display()
    );
}

fn synth_cmd(cli: &Cli, preset: Preset) -> Result<(), Failure> {
    let mut spec = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))
                .map_err(config_error)?;
            SynthSpec::from_toml(&text)
                .with_context(|| p.display().to_string())
                .map_err(config_error)?
        }
        None => match preset {
            Preset::Benchmark => SynthSpec::benchmark(),
            Preset::Mini => SynthSpec::mini(),
        },
    };
    if let Some(s) = cli.seed {
        spec.seed = s;
    }
    let corpus = synth::generate_synthetic_corpus(&spec).map_err(|e| config_error(e.into()))?;
    let dir = out_dir(cli);
    synth::write_corpus(&corpus, &spec, &dir).map_err(|e| runtime(e.into()))?;
    println!(
        "{} events, {} tweets, {} labeled tweets written to {}",
        corpus.labels.len(),
        corpus.tweets.len(),
        corpus.labeled_tweets.len(),
        dir.display()
    );
    println!(
        "run it with: rumor run --config {}",
        dir.join("pipeline.toml").display()
    );
    Ok(())
}

fn validate_cmd(cli: &Cli) -> Result<(), Failure> {
    if cli.config.is_none() && cli.out.is_none() {
        return Err(config_error(anyhow::anyhow!(
            "validate needs --config (check inputs) and/or --out (check artifacts)"
        )));
    }
    if cli.config.is_some() {
        let cfg = load_config(cli)?;
        cfg.validate()?;
        let inputs = pipeline::ingest(&cfg)?;
        println!("config ok: {} events", inputs.events.len());
    }
    if let Some(dir) = &cli.out {
        let checks = pipeline::validate_run_dir(dir)?;
        for c in &checks {
            println!("ok\t{}\t{} rows", c.name, c.rows);
        }
        println!("{} artifacts match the manifest", checks.len());
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let stage = match &cli.command {
        Command::Synth { preset } => return synth_cmd(cli, *preset),
        Command::Validate => return validate_cmd(cli),
        Command::Ingest => Stage::Ingest,
        Command::TrainCredibility => Stage::TrainCredibility,
        Command::Score => Stage::Score,
        Command::Features => Stage::Features,
        Command::FitEpi => Stage::FitEpi,
        Command::Dsts => Stage::Dsts,
        Command::Train => Stage::Train,
        Command::Evaluate => Stage::Evaluate,
        Command::Importance | Command::Run => Stage::Importance,
    };
    let cfg = load_config(cli)?;
    let out = pipeline::run_pipeline(&cfg, stage, &out_dir(cli))?;
    print_summary(&out);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
