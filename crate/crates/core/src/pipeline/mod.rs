//! End-to-end run: ingest and window events, score tweets, extract
//! per-interval frames, fit diffusion models, assemble time-series vectors,
//! then cross-validate and rank features, writing every intermediate table.

pub mod artifacts;
pub mod config;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use chrono::Duration;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{
    cross_validate, cross_validate_with_importance, train_random_forest, train_svm_rbf, CvOptions,
    Dataset, EvaluationReport, FeatureGroup, FeatureImportance, ModelKind,
};
use crate::credibility::{self, CredibilityModel};
use crate::dsts::{build_dsts_vector, column_names};
use crate::ensemble::{credit_score, crowd_wisdom, DebunkLexicon, ENSEMBLE_FEATURES};
use crate::epi::fit::fit_epi_features_warm;
use crate::epi::{simulate_seiz, simulate_sis, simulate_spikem, EpiFeatures, VolumeCurve};
use crate::features::{LookupTables, SurfaceFeatures};
use crate::ingestion::{
    assemble_events, read_events_csv, read_tweets_jsonl, window_event, DropReport, EventWindow,
    IntervalBucket, Label,
};
use crate::synth::read_labeled_tweets;

pub use artifacts::{validate_run_dir, ArtifactCheck, ArtifactWriter, MANIFEST};
pub use config::{CredibilitySettings, FitSettings, ForestSettings, PipelineConfig, SvmSettings};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {message}")]
    Config { message: String },
    #[error("validation: {message}")]
    Validation { message: String },
    #[error("stage `{stage}`{}: {message}", event_suffix(.event))]
    Stage {
        stage: Stage,
        event: Option<String>,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

fn event_suffix(event: &Option<String>) -> String {
    event
        .as_ref()
        .map(|e| format!(" (event `{e}`)"))
        .unwrap_or_default()
}

impl PipelineError {
    /// 1 for configuration and validation problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config { .. } | PipelineError::Validation { .. } => 1,
            _ => 2,
        }
    }

    fn stage(stage: Stage, event: Option<&str>, e: impl std::fmt::Display) -> Self {
        PipelineError::Stage {
            stage,
            event: event.map(str::to_string),
            message: e.to_string(),
        }
    }
}

/// Pipeline stages in execution order; a run stops after its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ingest,
    TrainCredibility,
    Score,
    Features,
    FitEpi,
    Dsts,
    Train,
    Evaluate,
    Importance,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::TrainCredibility => "train-credibility",
            Stage::Score => "score",
            Stage::Features => "features",
            Stage::FitEpi => "fit-epi",
            Stage::Dsts => "dsts",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Importance => "importance",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const GROUP_NAMES: [&str; 9] = [
    "Text",
    "Twitter",
    "User",
    "Epidemiological",
    "SpikeM",
    "CrowdWisdom",
    "CreditScore",
    "BestSet",
    "All",
];

/// Groups whose importance is ranked (the disjoint base groups).
pub const BASE_GROUPS: [&str; 7] = [
    "Text",
    "Twitter",
    "User",
    "Epidemiological",
    "SpikeM",
    "CrowdWisdom",
    "CreditScore",
];

/// Frame width: surface, diffusion and ensemble features.
pub const FRAME_DIM: usize = SurfaceFeatures::LEN + 15 + 2;
const EPI_OFFSET: usize = SurfaceFeatures::LEN;
const CREDIT_INDEX: usize = FRAME_DIM - 2;
const CROWD_INDEX: usize = FRAME_DIM - 1;

/// Names of the per-interval frame features, in column order.
pub fn frame_feature_names() -> Vec<String> {
    SurfaceFeatures::names()
        .chain(EpiFeatures::names())
        .chain(ENSEMBLE_FEATURES)
        .map(str::to_string)
        .collect()
}

/// Canonical spelling of a group name, matched case-insensitively.
pub fn group_by_name(name: &str) -> Option<&'static str> {
    GROUP_NAMES
        .iter()
        .find(|g| g.eq_ignore_ascii_case(name.trim()))
        .copied()
}

/// Frame feature indices of a base group or `All`; `BestSet` needs ranks.
pub fn group_features(name: &str, best: &[usize]) -> Vec<usize> {
    match name {
        "Text" => (0..16).collect(),
        "Twitter" => (16..25).collect(),
        "User" => (25..34).collect(),
        "Epidemiological" => (EPI_OFFSET..EPI_OFFSET + 9).collect(),
        "SpikeM" => (EPI_OFFSET + 9..EPI_OFFSET + 15).collect(),
        "CreditScore" => vec![CREDIT_INDEX],
        "CrowdWisdom" => vec![CROWD_INDEX],
        "BestSet" => best.to_vec(),
        _ => (0..FRAME_DIM).collect(),
    }
}

fn base_groups() -> Vec<FeatureGroup> {
    BASE_GROUPS
        .iter()
        .map(|g| FeatureGroup {
            name: g.to_string(),
            features: group_features(g, &[]),
        })
        .collect()
}

fn single_feature_groups(names: &[String]) -> Vec<FeatureGroup> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| FeatureGroup {
            name: n.clone(),
            features: vec![i],
        })
        .collect()
}

/// One event after windowing.
#[derive(Debug, Clone)]
pub struct WindowedEvent {
    pub event_id: String,
    pub label: Label,
    pub window: EventWindow,
    pub buckets: Vec<IntervalBucket>,
    pub drops: DropReport,
    pub n_tweets: usize,
}

/// Per-interval outputs for one event.
#[derive(Debug, Clone)]
pub struct EventFrames {
    pub event_id: String,
    pub label: Label,
    pub counts: Vec<usize>,
    pub surface: Vec<Vec<f64>>,
    pub credit: Vec<(f64, bool)>,
    pub crowd: Vec<f64>,
    pub epi: Vec<EpiFeatures>,
}

impl EventFrames {
    /// Full frame `t`: surface, diffusion, CreditScore, CrowdWisdom.
    pub fn frame(&self, t: usize) -> Vec<f64> {
        let mut f = Vec::with_capacity(FRAME_DIM);
        f.extend_from_slice(&self.surface[t]);
        f.extend_from_slice(&self.epi[t].values);
        f.push(self.credit[t].0);
        f.push(self.crowd[t]);
        f
    }

    pub fn frames(&self, hours: usize) -> Vec<Vec<f64>> {
        (0..hours).map(|t| self.frame(t)).collect()
    }
}

/// Everything read from disk, after validation.
pub struct Inputs {
    pub events: Vec<WindowedEvent>,
    pub tables: LookupTables,
    pub lexicon: DebunkLexicon,
}

fn read_file(path: &Path) -> Result<std::fs::File, PipelineError> {
    std::fs::File::open(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn validation(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Validation {
        message: format!("{}: {e}", path.display()),
    }
}

/// Parse inputs and window every event.
pub fn ingest(cfg: &PipelineConfig) -> Result<Inputs, PipelineError> {
    let tables = match &cfg.tables_dir {
        Some(dir) => LookupTables::load_dir(dir).map_err(|e| validation(dir, e))?,
        None => LookupTables::bundled(),
    };
    let lexicon = match &cfg.debunk_words {
        Some(p) => DebunkLexicon::load(p).map_err(|e| validation(p, e))?,
        None => DebunkLexicon::bundled(),
    };
    let tweets = read_tweets_jsonl(BufReader::new(read_file(&cfg.tweets)?))
        .map_err(|e| validation(&cfg.tweets, e))?;
    let labels =
        read_events_csv(read_file(&cfg.events)?).map_err(|e| validation(&cfg.events, e))?;
    let events = assemble_events(tweets, &labels).map_err(|e| validation(&cfg.events, e))?;
    let classes: Vec<usize> = [Label::News, Label::Rumor]
        .iter()
        .map(|l| events.iter().filter(|e| e.label == *l).count())
        .collect();
    if classes.iter().any(|&c| c < cfg.folds) {
        return Err(PipelineError::Validation {
            message: format!(
                "need at least {} events per class for {}-fold CV, got {} news and {} rumor",
                cfg.folds, cfg.folds, classes[0], classes[1]
            ),
        });
    }
    let len = Duration::minutes(cfg.interval_minutes);
    let windowed = events
        .iter()
        .map(|ev| {
            let (window, buckets, drops) = window_event(ev, cfg.n_intervals, len)
                .map_err(|e| PipelineError::stage(Stage::Ingest, Some(&ev.event_id), e))?;
            Ok(WindowedEvent {
                event_id: ev.event_id.clone(),
                label: ev.label,
                window,
                buckets,
                drops,
                n_tweets: ev.tweets.len(),
            })
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(Inputs {
        events: windowed,
        tables,
        lexicon,
    })
}

/// Load the configured model, or train one on the labeled corpus.
pub fn obtain_credibility(
    cfg: &PipelineConfig,
) -> Result<(CredibilityModel, Option<f64>), PipelineError> {
    let stage = Stage::TrainCredibility;
    if let Some(p) = &cfg.credibility_model {
        let model = credibility::io::load(p).map_err(|e| validation(p, e))?;
        return Ok((model, None));
    }
    let p = cfg
        .labeled_tweets
        .as_ref()
        .ok_or_else(|| PipelineError::Config {
            message: "need either credibility_model or labeled_tweets".into(),
        })?;
    let corpus = read_labeled_tweets(read_file(p)?).map_err(|e| validation(p, e))?;
    let (model, _) = credibility::train_credibility(&corpus, cfg.credibility.hyper(), cfg.seed)
        .map_err(|e| PipelineError::stage(stage, None, e))?;
    let acc =
        credibility::accuracy(&model, &corpus).map_err(|e| PipelineError::stage(stage, None, e))?;
    Ok((model, Some(acc)))
}

/// Per-interval CreditScore with its empty-bucket flag.
pub type CreditSeries = Vec<(f64, bool)>;

/// Per-interval CreditScore (with its empty-bucket flag) and CrowdWisdom.
pub fn score_event(
    ev: &WindowedEvent,
    model: &CredibilityModel,
    lexicon: &DebunkLexicon,
) -> Result<(CreditSeries, Vec<f64>), PipelineError> {
    let mut credit = Vec::with_capacity(ev.buckets.len());
    let mut crowd = Vec::with_capacity(ev.buckets.len());
    for b in &ev.buckets {
        let preds = b
            .tweets
            .iter()
            .map(|t| model.predict(&t.text))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PipelineError::stage(Stage::Score, Some(&ev.event_id), e))?;
        credit.push(credit_score(&preds));
        crowd.push(crowd_wisdom(b, lexicon));
    }
    Ok((credit, crowd))
}

/// Fits for every prefix `0..=t`; the first interval alone takes the
/// fallback.
pub fn fit_event_epi(
    event_id: &str,
    counts: &[usize],
    interval_hours: f64,
    settings: &FitSettings,
    seed: u64,
) -> Result<Vec<EpiFeatures>, PipelineError> {
    let err = |e: crate::epi::EpiError| PipelineError::stage(Stage::FitEpi, Some(event_id), e);
    let curve = VolumeCurve::new(counts.iter().map(|&c| c as f64).collect(), interval_hours)
        .map_err(err)?;
    let opts = settings.options(seed);
    let mut out: Vec<EpiFeatures> = Vec::with_capacity(counts.len());
    for t in 0..counts.len() {
        if t == 0 {
            out.push(EpiFeatures::fallback());
            continue;
        }
        let prev = if settings.warm_start {
            out.last()
        } else {
            None
        };
        out.push(fit_epi_features_warm(&curve.prefix(t + 1), &opts, prev).map_err(err)?);
    }
    Ok(out)
}

/// Score, extract and fit every event. Events run in parallel; each event's
/// work is independent and seeded, so results do not depend on scheduling.
pub fn extract_frames(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    model: &CredibilityModel,
    target: Stage,
) -> Result<Vec<EventFrames>, PipelineError> {
    let interval_hours = cfg.interval_minutes as f64 / 60.0;
    inputs
        .events
        .par_iter()
        .map(|ev| {
            let counts: Vec<usize> = ev.buckets.iter().map(|b| b.tweets.len()).collect();
            let (credit, crowd) = score_event(ev, model, &inputs.lexicon)?;
            let surface = if target >= Stage::Features {
                ev.buckets
                    .iter()
                    .map(|b| SurfaceFeatures::extract(b, &inputs.tables).to_vec())
                    .collect()
            } else {
                Vec::new()
            };
            let epi = if target >= Stage::FitEpi {
                fit_event_epi(&ev.event_id, &counts, interval_hours, &cfg.fit, cfg.seed)?
            } else {
                Vec::new()
            };
            Ok(EventFrames {
                event_id: ev.event_id.clone(),
                label: ev.label,
                counts,
                surface,
                credit,
                crowd,
                epi,
            })
        })
        .collect()
}

/// Prefix-`hours` dataset: one DSTS vector per event.
pub fn build_dataset(
    frames: &[EventFrames],
    hours: usize,
    interval_hours: f64,
    normalize: bool,
) -> Result<Dataset, PipelineError> {
    let mut x = Vec::with_capacity(frames.len());
    for ev in frames {
        let v = build_dsts_vector(&ev.event_id, &ev.frames(hours), interval_hours, normalize)
            .map_err(|e| PipelineError::stage(Stage::Dsts, Some(&ev.event_id), e))?;
        x.push(v.values);
    }
    Dataset::new(
        x,
        frames.iter().map(|f| f.label.as_class()).collect(),
        frames.iter().map(|f| f.event_id.clone()).collect(),
        frame_feature_names(),
    )
    .map_err(|e| PipelineError::stage(Stage::Dsts, None, e))
}

/// Tree models take raw frames; the SVM takes per-event z-scored frames.
pub fn normalize_for(kind: ModelKind) -> bool {
    kind == ModelKind::Svm
}

/// Held-out permutation importance at one hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourImportance {
    pub hour: usize,
    pub features: Vec<FeatureImportance>,
    pub groups: Vec<FeatureImportance>,
}

/// Outcome of a run, as written to disk.
pub struct RunOutput {
    pub report: Option<EvaluationReport>,
    pub importance: Vec<HourImportance>,
    pub best_set: Vec<String>,
    pub credibility_accuracy: Option<f64>,
    pub artifacts: BTreeMap<String, String>,
    pub out_dir: PathBuf,
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn fmt_num(v: f64) -> String {
    // Shortest round-trip representation keeps files exact and stable.
    format!("{v}")
}

fn join_nums(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| fmt_num(*v))
        .collect::<Vec<_>>()
        .join(",")
}

fn windows_csv(events: &[WindowedEvent]) -> String {
    let mut s = artifacts::WINDOWS_HEADER.join(",") + "\n";
    for e in events {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            csv_cell(&e.event_id),
            e.label.as_str(),
            e.window.t_0.to_rfc3339(),
            e.window.t_max.to_rfc3339(),
            e.window.t_end.to_rfc3339(),
            e.n_tweets,
            e.drops.dropped_count
        );
    }
    s
}

fn scores_csv(frames: &[EventFrames]) -> String {
    let mut s = artifacts::SCORES_HEADER.join(",") + "\n";
    for f in frames {
        for (t, ((c, fallback), w)) in f.credit.iter().zip(&f.crowd).enumerate() {
            let _ = writeln!(
                s,
                "{},{},{t},{},{},{},{}",
                csv_cell(&f.event_id),
                f.label.as_str(),
                f.counts[t],
                fmt_num(*c),
                fmt_num(*w),
                u8::from(*fallback)
            );
        }
    }
    s
}

fn features_csv(frames: &[EventFrames]) -> String {
    let mut s = artifacts::FEATURES_PREFIX.join(",");
    for n in SurfaceFeatures::names() {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for f in frames {
        for (t, row) in f.surface.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{t},{}",
                csv_cell(&f.event_id),
                f.label.as_str(),
                join_nums(row)
            );
        }
    }
    s
}

fn epi_csv(frames: &[EventFrames]) -> String {
    let mut s = artifacts::EPI_PREFIX.join(",");
    for n in EpiFeatures::names() {
        s.push(',');
        s.push_str(n);
    }
    s.push_str(",sse_sis,sse_seiz,sse_spikem,converged_sis,converged_seiz,converged_spikem\n");
    for f in frames {
        for (t, e) in f.epi.iter().enumerate() {
            let conv: Vec<f64> = e
                .converged
                .iter()
                .map(|&c| f64::from(u8::from(c)))
                .collect();
            let _ = writeln!(
                s,
                "{},{t},{},{},{}",
                csv_cell(&f.event_id),
                join_nums(&e.values),
                join_nums(&e.sse),
                join_nums(&conv)
            );
        }
    }
    s
}

/// Observed counts against each model's curve fitted on the whole window.
fn volume_csv(frames: &[EventFrames]) -> String {
    let mut s = artifacts::VOLUME_HEADER.join(",") + "\n";
    for f in frames {
        let n = f.counts.len();
        let Some(last) = f.epi.last() else { continue };
        let curve = |sim: Option<Vec<f64>>| sim.unwrap_or_else(|| vec![0.0; n]);
        let sis = curve(last.sis.and_then(|p| simulate_sis(&p, n).ok()));
        let seiz = curve(last.seiz.and_then(|p| simulate_seiz(&p, n).ok()));
        let spikem = curve(last.spikem.and_then(|p| simulate_spikem(&p, n).ok()));
        for t in 0..n {
            let _ = writeln!(
                s,
                "{},{t},{},{},{},{}",
                csv_cell(&f.event_id),
                f.counts[t],
                fmt_num(sis[t]),
                fmt_num(seiz[t]),
                fmt_num(spikem[t])
            );
        }
    }
    s
}

fn dsts_csv(frames: &[EventFrames], data: &Dataset, hours: usize) -> String {
    let mut s = artifacts::DSTS_PREFIX.join(",");
    for c in column_names(&data.features, hours) {
        s.push(',');
        s.push_str(&c);
    }
    s.push('\n');
    for (f, row) in frames.iter().zip(&data.x) {
        let _ = writeln!(
            s,
            "{},{},{hours},{}",
            csv_cell(&f.event_id),
            f.label.as_str(),
            join_nums(row)
        );
    }
    s
}

fn summary_csv(report: &EvaluationReport) -> String {
    let mut s = artifacts::SUMMARY_HEADER.join(",") + "\n";
    for h in &report.summaries {
        let c = h.confusion;
        let _ = writeln!(
            s,
            "{},{},{},{:.6},{:.6},{:.6},{},{},{},{}",
            h.model.as_str(),
            h.feature_group,
            h.hour,
            h.mean,
            h.std,
            h.pooled,
            c[0][0],
            c[0][1],
            c[1][0],
            c[1][1]
        );
    }
    s
}

fn importance_csv(imp: &[HourImportance]) -> (String, String) {
    let mut f = artifacts::IMPORTANCE_HEADER.join(",") + "\n";
    let mut g = artifacts::GROUP_IMPORTANCE_HEADER.join(",") + "\n";
    for h in imp {
        for (rank, fi) in h.features.iter().enumerate() {
            let _ = writeln!(
                f,
                "{},{},{:.6},{}",
                fi.feature,
                rank + 1,
                fi.importance,
                h.hour
            );
        }
        for (rank, fi) in h.groups.iter().enumerate() {
            let _ = writeln!(
                g,
                "{},{},{:.6},{:.6},{}",
                fi.feature,
                rank + 1,
                fi.importance,
                fi.std,
                h.hour
            );
        }
    }
    (f, g)
}

/// Top `k` frame features by importance averaged over hours, ties by name.
pub fn best_set(imp: &[HourImportance], k: usize) -> Vec<usize> {
    if imp.is_empty() {
        return Vec::new();
    }
    let names = frame_feature_names();
    let mut mean = vec![0.0; names.len()];
    for h in imp {
        for fi in &h.features {
            if let Some(i) = names.iter().position(|n| *n == fi.feature) {
                mean[i] += fi.importance / imp.len() as f64;
            }
        }
    }
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| mean[b].total_cmp(&mean[a]).then(names[a].cmp(&names[b])));
    order.truncate(k);
    order.sort_unstable();
    order
}

#[derive(Serialize)]
struct Manifest<'a> {
    format: &'static str,
    version: &'static str,
    stage: Stage,
    config_sha256: String,
    seeds: BTreeMap<&'static str, u64>,
    inputs: BTreeMap<String, String>,
    credibility_training_accuracy: Option<f64>,
    best_set: &'a [String],
    artifacts: &'a BTreeMap<String, String>,
    config: &'a PipelineConfig,
}

fn input_hashes(cfg: &PipelineConfig) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut out = BTreeMap::new();
    let mut add = |key: &str, p: &Path| -> Result<(), PipelineError> {
        let bytes = std::fs::read(p).map_err(|e| PipelineError::Io {
            path: p.to_path_buf(),
            message: e.to_string(),
        })?;
        out.insert(key.to_string(), artifacts::sha256_hex(&bytes));
        Ok(())
    };
    add("tweets", &cfg.tweets)?;
    add("events", &cfg.events)?;
    if let Some(p) = &cfg.labeled_tweets {
        add("labeled_tweets", p)?;
    }
    if let Some(p) = &cfg.credibility_model {
        add("credibility_model", p)?;
    }
    if let Some(p) = &cfg.debunk_words {
        add("debunk_words", p)?;
    }
    Ok(out)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

/// Run every stage up to and including `target`, writing their artifacts
/// to `out`. Files stay `.partial` unless the whole run succeeds.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    target: Stage,
    out: &Path,
) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let mut w = ArtifactWriter::create(out)?;
    let interval_hours = cfg.interval_minutes as f64 / 60.0;

    let inputs = ingest(cfg)?;
    let drops: Vec<&DropReport> = inputs.events.iter().map(|e| &e.drops).collect();
    w.write("drops.json", &to_json(&drops))?;
    w.write("windows.csv", windows_csv(&inputs.events).as_bytes())?;

    let mut result = RunOutput {
        report: None,
        importance: Vec::new(),
        best_set: Vec::new(),
        credibility_accuracy: None,
        artifacts: BTreeMap::new(),
        out_dir: out.to_path_buf(),
    };
    if target >= Stage::TrainCredibility {
        let (model, acc) = obtain_credibility(cfg)?;
        result.credibility_accuracy = acc;
        let json = credibility::io::to_json(&model)
            .map_err(|e| PipelineError::stage(Stage::TrainCredibility, None, e))?;
        w.write("credibility.json", json.as_bytes())?;
        if target >= Stage::Score {
            let frames = extract_frames(cfg, &inputs, &model, target)?;
            w.write("scores.csv", scores_csv(&frames).as_bytes())?;
            if target >= Stage::Features {
                w.write("features.csv", features_csv(&frames).as_bytes())?;
            }
            if target >= Stage::FitEpi {
                w.write("epi_features.csv", epi_csv(&frames).as_bytes())?;
                w.write("volume_fit.csv", volume_csv(&frames).as_bytes())?;
            }
            if target >= Stage::Dsts {
                let h = cfg.max_hour();
                let data = build_dataset(&frames, h, interval_hours, false)?;
                w.write("dsts.csv", dsts_csv(&frames, &data, h).as_bytes())?;
            }
            if target >= Stage::Train {
                train_final_models(cfg, &frames, interval_hours, &mut w)?;
            }
            if target >= Stage::Evaluate {
                evaluate(cfg, &frames, interval_hours, target, &mut w, &mut result)?;
            }
        }
    }

    let seeds: BTreeMap<&'static str, u64> = [
        ("credibility", cfg.seed),
        ("epi_fit", cfg.seed),
        ("folds", cfg.seed),
        ("forest", cfg.seed),
        ("svm", cfg.seed),
        ("importance", cfg.seed),
    ]
    .into_iter()
    .collect();
    let config_json = serde_json::to_vec(cfg).expect("serializable");
    let hashes = w.hashes().clone();
    let manifest = Manifest {
        format: "rumor-run",
        version: env!("CARGO_PKG_VERSION"),
        stage: target,
        config_sha256: artifacts::sha256_hex(&config_json),
        seeds,
        inputs: input_hashes(cfg)?,
        credibility_training_accuracy: result.credibility_accuracy,
        best_set: &result.best_set,
        artifacts: &hashes,
        config: cfg,
    };
    w.write(MANIFEST, &to_json(&manifest))?;
    let mut artifacts = w.commit()?;
    artifacts.remove(MANIFEST);
    result.artifacts = artifacts;
    Ok(result)
}

/// Fit each configured model on every event at the longest prefix.
fn train_final_models(
    cfg: &PipelineConfig,
    frames: &[EventFrames],
    interval_hours: f64,
    w: &mut ArtifactWriter,
) -> Result<(), PipelineError> {
    let h = cfg.max_hour();
    for &kind in &cfg.models {
        let data = build_dataset(frames, h, interval_hours, normalize_for(kind))?;
        let err = |e| PipelineError::stage(Stage::Train, None, e);
        let bytes = match kind {
            ModelKind::Rf => {
                to_json(&train_random_forest(&data, cfg.forest_options()).map_err(err)?)
            }
            ModelKind::Svm => to_json(&train_svm_rbf(&data, cfg.svm_options()).map_err(err)?),
        };
        w.write(&format!("model_{}_{h}h.json", kind.as_str()), &bytes)?;
    }
    Ok(())
}

fn evaluate(
    cfg: &PipelineConfig,
    frames: &[EventFrames],
    interval_hours: f64,
    target: Stage,
    w: &mut ArtifactWriter,
    result: &mut RunOutput,
) -> Result<(), PipelineError> {
    let cv = CvOptions {
        folds: cfg.folds,
        seed: cfg.seed,
        forest: cfg.forest_options(),
        svm: cfg.svm_options(),
    };
    let err = |e| PipelineError::stage(Stage::Evaluate, None, e);
    let groups: Vec<&'static str> = cfg
        .feature_groups
        .iter()
        .filter_map(|g| group_by_name(g))
        .collect();
    let names = frame_feature_names();
    let want_importance = target >= Stage::Importance || groups.contains(&"BestSet");

    let mut datasets: BTreeMap<(ModelKind, usize), Dataset> = BTreeMap::new();
    let mut dataset = |kind: ModelKind, h: usize| -> Result<Dataset, PipelineError> {
        let key = (kind, h);
        if let std::collections::btree_map::Entry::Vacant(e) = datasets.entry(key) {
            e.insert(build_dataset(
                frames,
                h,
                interval_hours,
                normalize_for(kind),
            )?);
        }
        Ok(datasets[&key].clone())
    };

    // Importance comes from the importance model on all features; its folds
    // double as that model's `All` rows.
    let mut all_folds = BTreeMap::new();
    if want_importance {
        let kind = cfg.importance_model;
        let sets = vec![single_feature_groups(&names), base_groups()];
        for &h in &cfg.hours {
            let data = dataset(kind, h)?;
            let (folds, mut lists) =
                cross_validate_with_importance(&data, kind, &cv, &sets, cfg.importance_repeats)
                    .map_err(err)?;
            let groups_imp = lists.pop().unwrap_or_default();
            let features_imp = lists.pop().unwrap_or_default();
            result.importance.push(HourImportance {
                hour: h,
                features: features_imp,
                groups: groups_imp,
            });
            all_folds.insert(h, folds);
        }
    }
    let best = best_set(&result.importance, cfg.best_set_size);
    result.best_set = best.iter().map(|&i| names[i].clone()).collect();

    let mut report = EvaluationReport::default();
    for &kind in &cfg.models {
        for &g in &groups {
            if g == "BestSet" && best.is_empty() {
                continue;
            }
            let keep = group_features(g, &best);
            for &h in &cfg.hours {
                let folds = match (g, all_folds.get(&h)) {
                    ("All", Some(f)) if kind == cfg.importance_model => f.clone(),
                    _ => {
                        let data = dataset(kind, h)?.select_features(&keep);
                        cross_validate(&data, kind, &cv).map_err(err)?
                    }
                };
                report.add(kind, g, h, folds);
            }
        }
    }
    w.write("report.csv", report.to_csv().as_bytes())?;
    w.write("summary.csv", summary_csv(&report).as_bytes())?;
    if target >= Stage::Importance {
        let (f, g) = importance_csv(&result.importance);
        w.write("importance.csv", f.as_bytes())?;
        w.write("group_importance.csv", g.as_bytes())?;
    }
    result.report = Some(report);
    Ok(())
}
