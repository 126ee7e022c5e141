//! Run configuration, loaded from TOML (or from a previous run's manifest)
//! with paths resolved against the file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{group_by_name, PipelineError, GROUP_NAMES};
use crate::classifier::{ForestOptions, ModelKind, SvmOptions};
use crate::credibility::{Hyper, InitScheme};
use crate::epi::{FitOptions, LmOptions};

pub const DEFAULT_HOURS: [usize; 9] = [1, 6, 12, 18, 24, 30, 36, 42, 48];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSettings {
    pub n_starts: usize,
    pub screen: usize,
    pub max_rounds: usize,
    pub max_iter: usize,
    pub population_factor: f64,
    /// Seed each prefix's fit from the previous prefix's solution.
    pub warm_start: bool,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            n_starts: 2,
            screen: 16,
            max_rounds: 1,
            max_iter: 40,
            population_factor: 10.0,
            warm_start: true,
        }
    }
}

impl FitSettings {
    pub fn options(&self, seed: u64) -> FitOptions {
        FitOptions {
            n_starts: self.n_starts,
            seed,
            lm: LmOptions {
                max_iter: self.max_iter,
                ..LmOptions::default()
            },
            population_factor: self.population_factor,
            screen: self.screen,
            max_rounds: self.max_rounds,
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestSettings {
    pub n_trees: usize,
    /// 0 means ⌊√P⌋.
    pub max_features: usize,
    pub min_leaf: usize,
}

impl Default for ForestSettings {
    fn default() -> Self {
        let d = ForestOptions::default();
        Self {
            n_trees: d.n_trees,
            max_features: d.max_features,
            min_leaf: d.min_leaf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmSettings {
    pub c: f64,
    pub gamma: f64,
    pub tolerance: f64,
    /// 0 means the solver's default cap.
    pub max_iter: usize,
}

impl Default for SvmSettings {
    fn default() -> Self {
        let d = SvmOptions::default();
        Self {
            c: d.c,
            gamma: d.gamma,
            tolerance: d.tolerance,
            max_iter: d.max_iter,
        }
    }
}

/// Credibility network settings; defaults are a small network sized for
/// scoring whole corpora quickly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CredibilitySettings {
    pub embed_dim: usize,
    pub max_len: usize,
    pub window: usize,
    pub filters: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init: InitScheme,
    pub init_scale: f64,
    pub forget_bias: f64,
    pub min_count: usize,
}

impl Default for CredibilitySettings {
    fn default() -> Self {
        Self {
            embed_dim: 16,
            max_len: 16,
            window: 3,
            filters: 16,
            hidden: 16,
            dropout: 0.25,
            learning_rate: 0.3,
            batch_size: 32,
            epochs: 20,
            init: InitScheme::Glorot,
            init_scale: 0.25,
            forget_bias: 2.0,
            min_count: 1,
        }
    }
}

impl CredibilitySettings {
    pub fn hyper(&self) -> Hyper {
        Hyper {
            embed_dim: self.embed_dim,
            max_len: self.max_len,
            window: self.window,
            filters: self.filters,
            hidden: self.hidden,
            dropout: self.dropout,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            init: self.init,
            init_scale: self.init_scale,
            forget_bias: self.forget_bias,
            min_count: self.min_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tweets: PathBuf,
    pub events: PathBuf,
    /// `text,label` corpus for training the credibility model.
    pub labeled_tweets: Option<PathBuf>,
    /// Pre-trained credibility model; takes precedence over training.
    pub credibility_model: Option<PathBuf>,
    /// Directory of lookup tables; bundled tables when absent.
    pub tables_dir: Option<PathBuf>,
    /// Debunking-phrase list; bundled list when absent.
    pub debunk_words: Option<PathBuf>,
    pub seed: u64,
    pub hours: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub feature_groups: Vec<String>,
    pub n_intervals: usize,
    pub interval_minutes: i64,
    pub folds: usize,
    pub importance_repeats: usize,
    /// Model whose held-out permutation importance ranks features.
    pub importance_model: ModelKind,
    pub best_set_size: usize,
    pub credibility: CredibilitySettings,
    pub fit: FitSettings,
    pub forest: ForestSettings,
    pub svm: SvmSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tweets: PathBuf::from("tweets.jsonl"),
            events: PathBuf::from("events.csv"),
            labeled_tweets: None,
            credibility_model: None,
            tables_dir: None,
            debunk_words: None,
            seed: 42,
            hours: DEFAULT_HOURS.to_vec(),
            models: vec![ModelKind::Rf, ModelKind::Svm],
            feature_groups: GROUP_NAMES.iter().map(|s| s.to_string()).collect(),
            n_intervals: 48,
            interval_minutes: 60,
            folds: 10,
            importance_repeats: 5,
            importance_model: ModelKind::Rf,
            best_set_size: 9,
            credibility: CredibilitySettings::default(),
            fit: FitSettings::default(),
            forest: ForestSettings::default(),
            svm: SvmSettings::default(),
        }
    }
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: PipelineConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Parse a TOML config, or a run manifest (`.json`) to replay its run.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config {
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            // Manifest paths are already absolute.
            return serde_json::from_str::<ManifestConfig>(&text)
                .map(|m| m.config)
                .map_err(|e| PipelineError::Config {
                    message: format!("{}: {e}", path.display()),
                });
        }
        let mut cfg: Self = toml::from_str(&text).map_err(|e| PipelineError::Config {
            message: format!("{}: {e}", path.display()),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.tweets);
        resolve(base, &mut self.events);
        for p in [
            &mut self.labeled_tweets,
            &mut self.credibility_model,
            &mut self.tables_dir,
            &mut self.debunk_words,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
    }

    /// Every check that needs no computation: files exist, hours and groups
    /// are in range, options are usable.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg_err = |m: String| Err(PipelineError::Config { message: m });
        let must_exist = |what: &str, p: &Path, dir: bool| {
            let ok = if dir { p.is_dir() } else { p.is_file() };
            if ok {
                Ok(())
            } else {
                Err(PipelineError::Config {
                    message: format!("{what} not found: {}", p.display()),
                })
            }
        };
        must_exist("tweets", &self.tweets, false)?;
        must_exist("events", &self.events, false)?;
        if let Some(p) = &self.tables_dir {
            must_exist("tables_dir", p, true)?;
        }
        if let Some(p) = &self.debunk_words {
            must_exist("debunk lexicon", p, false)?;
        }
        match (&self.credibility_model, &self.labeled_tweets) {
            (Some(p), _) => must_exist("credibility_model", p, false)?,
            (None, Some(p)) => must_exist("labeled_tweets", p, false)?,
            (None, None) => {
                return cfg_err(
                    "need either credibility_model or labeled_tweets to obtain CreditScore".into(),
                )
            }
        }
        if self.n_intervals == 0 || self.interval_minutes <= 0 {
            return cfg_err("n_intervals and interval_minutes must be positive".into());
        }
        if self.hours.is_empty() {
            return cfg_err("hours must not be empty".into());
        }
        if let Some(h) = self.hours.iter().find(|&&h| h == 0 || h > self.n_intervals) {
            return cfg_err(format!("hour {h} outside 1..={}", self.n_intervals));
        }
        if self.models.is_empty() {
            return cfg_err("models must not be empty".into());
        }
        if self.feature_groups.is_empty() {
            return cfg_err("feature_groups must not be empty".into());
        }
        for g in &self.feature_groups {
            if group_by_name(g).is_none() {
                return cfg_err(format!(
                    "unknown feature group `{g}` (expected one of {})",
                    GROUP_NAMES.join(", ")
                ));
            }
        }
        if self.folds < 2 {
            return cfg_err("folds must be at least 2".into());
        }
        if self.forest.n_trees == 0 {
            return cfg_err("forest.n_trees must be positive".into());
        }
        if !(self.svm.c > 0.0 && self.svm.gamma > 0.0 && self.svm.tolerance > 0.0) {
            return cfg_err("svm.c, svm.gamma and svm.tolerance must be positive".into());
        }
        if self.fit.n_starts == 0 || self.fit.max_iter == 0 {
            return cfg_err("fit.n_starts and fit.max_iter must be positive".into());
        }
        self.credibility
            .hyper()
            .validate()
            .map_err(|e| PipelineError::Config {
                message: format!("credibility: {e}"),
            })
    }

    pub fn forest_options(&self) -> ForestOptions {
        ForestOptions {
            n_trees: self.forest.n_trees,
            seed: self.seed,
            max_features: self.forest.max_features,
            min_leaf: self.forest.min_leaf,
        }
    }

    pub fn svm_options(&self) -> SvmOptions {
        SvmOptions {
            c: self.svm.c,
            gamma: self.svm.gamma,
            tolerance: self.svm.tolerance,
            max_iter: self.svm.max_iter,
            seed: self.seed,
            ..SvmOptions::default()
        }
    }

    pub fn max_hour(&self) -> usize {
        self.hours.iter().copied().max().unwrap_or(self.n_intervals)
    }
}
