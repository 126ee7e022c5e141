//! Event classifiers over DSTS vectors: a Gini random forest and an RBF
//! SVM trained by SMO, plus stratified cross-validation, accuracy over
//! prefix hours and grouped permutation importance.

pub mod eval;
pub mod forest;
pub mod importance;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use eval::{
    accuracy_over_time, cross_validate, cross_validate_with_importance, cv_group_importance,
    stratified_folds, CvOptions, EvaluationReport, FoldResult, HourSummary,
};
pub use forest::{train_random_forest, ForestModel, ForestOptions};
pub use importance::{group_importance, permutation_importance, FeatureGroup, FeatureImportance};
pub use svm::{train_svm_rbf, SvmModel, SvmOptions};
pub use tree::{DecisionTree, TreeOptions};

/// Class 1 is rumor, class 0 is news.
pub const RUMOR_CLASS: u8 = 1;
pub const NEWS_CLASS: u8 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifierError {
    #[error("training data has a single class")]
    SingleClass,
    #[error("dataset is empty")]
    Empty,
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("column {column} has std {std:.3}; standardize features before SVM training")]
    NotNormalized { column: usize, std: f64 },
    #[error("SMO stopped after {iterations} iterations with KKT violation {violation:.3e}")]
    NoConvergence { iterations: usize, violation: f64 },
    #[error("need at least {need} events per class, got {got}")]
    TooFewEvents { need: usize, got: usize },
    #[error("invalid option: {0}")]
    Options(String),
}

/// Anything that labels a feature row.
pub trait Classifier {
    fn predict(&self, row: &[f64]) -> u8;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Rf,
    Svm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rf => "rf",
            ModelKind::Svm => "svm",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rf" => Ok(ModelKind::Rf),
            "svm" => Ok(ModelKind::Svm),
            other => Err(format!("unknown model `{other}` (expected rf|svm)")),
        }
    }
}

/// Rows of one feature vector per event. `features` names the `D` base
/// features; column `c` belongs to base feature `c % D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<u8>,
    pub ids: Vec<String>,
    pub features: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Vec<Vec<f64>>,
        y: Vec<u8>,
        ids: Vec<String>,
        features: Vec<String>,
    ) -> Result<Self, ClassifierError> {
        let d = Self {
            x,
            y,
            ids,
            features,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.x.is_empty() {
            return Err(ClassifierError::Empty);
        }
        if self.y.len() != self.x.len() || self.ids.len() != self.x.len() {
            return Err(ClassifierError::BadRow {
                row: self.x.len().min(self.y.len()).min(self.ids.len()),
                message: "rows, labels and ids differ in length".into(),
            });
        }
        let p = self.x[0].len();
        if p == 0 || self.features.is_empty() || !p.is_multiple_of(self.features.len()) {
            return Err(ClassifierError::BadRow {
                row: 0,
                message: format!(
                    "{p} columns do not tile {} base features",
                    self.features.len()
                ),
            });
        }
        for (row, r) in self.x.iter().enumerate() {
            if r.len() != p {
                return Err(ClassifierError::BadRow {
                    row,
                    message: format!("{} columns, expected {p}", r.len()),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(ClassifierError::BadRow {
                    row,
                    message: "non-finite entry".into(),
                });
            }
            if self.y[row] > 1 {
                return Err(ClassifierError::BadRow {
                    row,
                    message: "label must be 0 or 1".into(),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.contains(&0) && self.y.contains(&1)
    }

    /// Columns belonging to base feature `f`.
    pub fn columns_of(&self, f: usize) -> Vec<usize> {
        let d = self.features.len();
        (f..self.n_columns()).step_by(d).collect()
    }

    pub fn subset_rows(&self, rows: &[usize]) -> Self {
        Self {
            x: rows.iter().map(|&i| self.x[i].clone()).collect(),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
            features: self.features.clone(),
        }
    }

    /// Keep only the named base features, preserving layout order.
    pub fn select_features(&self, keep: &[usize]) -> Self {
        let d = self.features.len();
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let cols: Vec<usize> = (0..self.n_columns())
            .filter(|c| keep.binary_search(&(c % d)).is_ok())
            .collect();
        Self {
            x: self
                .x
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect(),
            y: self.y.clone(),
            ids: self.ids.clone(),
            features: keep.iter().map(|&f| self.features[f].clone()).collect(),
        }
    }
}

/// Fraction of rows the classifier labels correctly.
pub fn accuracy_of(model: &dyn Classifier, data: &Dataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let hits = data
        .x
        .iter()
        .zip(&data.y)
        .filter(|(r, y)| model.predict(r) == **y)
        .count();
    hits as f64 / data.len() as f64
}

/// Per-column mean and population std fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let n = x.len().max(1) as f64;
        let p = x.first().map_or(0, Vec::len);
        let mut mean = vec![0.0; p];
        for r in x {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; p];
        for r in x {
            for ((s, v), m) in std.iter_mut().zip(r).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        std.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        Self { mean, std }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| if *s > 0.0 { (v - m) / s } else { 0.0 })
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}
