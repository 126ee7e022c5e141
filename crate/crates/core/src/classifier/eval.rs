//! Stratified k-fold cross-validation by event and accuracy over prefix
//! hours.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::{train_random_forest, ForestOptions};
use super::importance::{average, group_importance, FeatureGroup, FeatureImportance};
use super::svm::{train_svm_rbf, SvmOptions};
use super::{Classifier, ClassifierError, Dataset, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
    pub forest: ForestOptions,
    pub svm: SvmOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 0,
            forest: ForestOptions::default(),
            svm: SvmOptions::default(),
        }
    }
}

/// Fold index per row. Each class is shuffled and dealt round-robin, the
/// second class continuing where the first stopped, so folds differ in
/// size by at most one overall and per class.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; y.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub accuracy: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: [[usize; 2]; 2],
    pub test_ids: Vec<String>,
    pub predictions: Vec<u8>,
}

fn train(
    kind: ModelKind,
    data: &Dataset,
    opts: &CvOptions,
    fold: usize,
) -> Result<Box<dyn Classifier + Send + Sync>, ClassifierError> {
    Ok(match kind {
        ModelKind::Rf => {
            let forest = ForestOptions {
                seed: opts
                    .forest
                    .seed
                    .wrapping_add(opts.seed.wrapping_mul(1_000_003))
                    .wrapping_add(fold as u64),
                ..opts.forest
            };
            Box::new(train_random_forest(data, forest)?)
        }
        ModelKind::Svm => Box::new(train_svm_rbf(data, opts.svm)?),
    })
}

fn check_counts(data: &Dataset, folds: usize) -> Result<(), ClassifierError> {
    if folds < 2 {
        return Err(ClassifierError::Options("need at least 2 folds".into()));
    }
    for class in [0u8, 1] {
        let got = data.y.iter().filter(|&&c| c == class).count();
        if got < folds {
            return Err(ClassifierError::TooFewEvents { need: folds, got });
        }
    }
    Ok(())
}

fn split(data: &Dataset, assign: &[usize], fold: usize) -> (Dataset, Dataset) {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| assign[i] == fold);
    (data.subset_rows(&train), data.subset_rows(&test))
}

/// Train on k−1 folds, test on the held-out fold, for every fold.
pub fn cross_validate(
    data: &Dataset,
    kind: ModelKind,
    opts: &CvOptions,
) -> Result<Vec<FoldResult>, ClassifierError> {
    Ok(cross_validate_with_importance(data, kind, opts, &[], 0)?.0)
}

/// Mean held-out group importance over the CV folds.
pub fn cv_group_importance(
    data: &Dataset,
    kind: ModelKind,
    opts: &CvOptions,
    groups: &[FeatureGroup],
    n_repeats: usize,
) -> Result<Vec<FeatureImportance>, ClassifierError> {
    let (_, mut lists) =
        cross_validate_with_importance(data, kind, opts, &[groups.to_vec()], n_repeats)?;
    Ok(lists.pop().unwrap_or_default())
}

/// Cross-validation that also scores each grouping in `group_sets` on every
/// held-out fold with the fold's own model, averaged over folds.
pub fn cross_validate_with_importance(
    data: &Dataset,
    kind: ModelKind,
    opts: &CvOptions,
    group_sets: &[Vec<FeatureGroup>],
    n_repeats: usize,
) -> Result<(Vec<FoldResult>, Vec<Vec<FeatureImportance>>), ClassifierError> {
    data.validate()?;
    check_counts(data, opts.folds)?;
    let assign = stratified_folds(&data.y, opts.folds, opts.seed);
    let mut folds = Vec::with_capacity(opts.folds);
    let mut per_set: Vec<Vec<Vec<FeatureImportance>>> = vec![Vec::new(); group_sets.len()];
    for fold in 0..opts.folds {
        let (tr, te) = split(data, &assign, fold);
        let model = train(kind, &tr, opts, fold)?;
        let predictions: Vec<u8> = te.x.iter().map(|r| model.predict(r)).collect();
        let mut confusion = [[0usize; 2]; 2];
        for (p, t) in predictions.iter().zip(&te.y) {
            confusion[*t as usize][*p as usize] += 1;
        }
        let hits = confusion[0][0] + confusion[1][1];
        for (set, acc) in group_sets.iter().zip(per_set.iter_mut()) {
            acc.push(group_importance(
                model.as_ref(),
                &te,
                set,
                n_repeats,
                opts.seed.wrapping_add(fold as u64),
            ));
        }
        folds.push(FoldResult {
            fold,
            accuracy: hits as f64 / te.len() as f64,
            confusion,
            test_ids: te.ids,
            predictions,
        });
    }
    Ok((folds, per_set.iter().map(|l| average(l)).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourSummary {
    pub model: ModelKind,
    pub feature_group: String,
    pub hour: usize,
    pub mean: f64,
    pub std: f64,
    /// Accuracy of all held-out predictions pooled across folds.
    pub pooled: f64,
    pub confusion: [[usize; 2]; 2],
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub folds: Vec<(ModelKind, String, usize, FoldResult)>,
    pub summaries: Vec<HourSummary>,
}

impl EvaluationReport {
    pub fn summary(&self, model: ModelKind, group: &str, hour: usize) -> Option<&HourSummary> {
        self.summaries
            .iter()
            .find(|s| s.model == model && s.feature_group == group && s.hour == hour)
    }

    /// Summarize `folds` and append them.
    pub fn add(&mut self, model: ModelKind, group: &str, hour: usize, folds: Vec<FoldResult>) {
        let k = folds.len() as f64;
        let mean = folds.iter().map(|f| f.accuracy).sum::<f64>() / k;
        let std = (folds
            .iter()
            .map(|f| (f.accuracy - mean).powi(2))
            .sum::<f64>()
            / k)
            .sqrt();
        let mut confusion = [[0usize; 2]; 2];
        for f in &folds {
            for t in 0..2 {
                for p in 0..2 {
                    confusion[t][p] += f.confusion[t][p];
                }
            }
        }
        let total: usize = confusion.iter().flatten().sum();
        let pooled = (confusion[0][0] + confusion[1][1]) as f64 / total as f64;
        self.summaries.push(HourSummary {
            model,
            feature_group: group.to_string(),
            hour,
            mean,
            std,
            pooled,
            confusion,
        });
        for f in folds {
            self.folds.push((model, group.to_string(), hour, f));
        }
    }

    /// `model,feature_group,hour,fold,accuracy`; each cell is followed by a
    /// `mean`, `std` and `pooled` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,feature_group,hour,fold,accuracy\n");
        for s in &self.summaries {
            for (m, g, h, f) in &self.folds {
                if *m == s.model && *g == s.feature_group && *h == s.hour {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{:.6}",
                        m.as_str(),
                        g,
                        h,
                        f.fold,
                        f.accuracy
                    );
                }
            }
            for (tag, v) in [("mean", s.mean), ("std", s.std), ("pooled", s.pooled)] {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.6}",
                    s.model.as_str(),
                    s.feature_group,
                    s.hour,
                    tag,
                    v
                );
            }
        }
        out
    }
}

/// Cross-validate each model kind on each feature group at each hour.
/// `datasets` holds one dataset per prefix hour.
pub fn accuracy_over_time(
    datasets: &[(usize, Dataset)],
    kinds: &[ModelKind],
    groups: &[FeatureGroup],
    opts: &CvOptions,
) -> Result<EvaluationReport, ClassifierError> {
    let mut report = EvaluationReport::default();
    for kind in kinds {
        for group in groups {
            for (hour, data) in datasets {
                let sub = data.select_features(&group.features);
                let folds = cross_validate(&sub, *kind, opts)?;
                report.add(*kind, &group.name, *hour, folds);
            }
        }
    }
    Ok(report)
}
