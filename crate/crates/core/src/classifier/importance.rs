//! Permutation importance: the accuracy lost when a feature's columns are
//! shuffled jointly across rows of held-out data.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{accuracy_of, Classifier, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// Mean accuracy drop over repeats.
    pub importance: f64,
    pub std: f64,
}

/// A named set of base features shuffled together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    /// Base feature indices into [`Dataset::features`].
    pub features: Vec<usize>,
}

fn stream(seed: u64, group: usize, repeat: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((group as u64) << 20) | repeat as u64);
    rng
}

/// Sort by importance descending, ties by name.
pub fn rank(list: &mut [FeatureImportance]) {
    list.sort_by(|a, b| {
        b.importance
            .total_cmp(&a.importance)
            .then_with(|| a.feature.cmp(&b.feature))
    });
}

/// Importance of each group on `data`, ranked.
pub fn group_importance(
    model: &dyn Classifier,
    data: &Dataset,
    groups: &[FeatureGroup],
    n_repeats: usize,
    seed: u64,
) -> Vec<FeatureImportance> {
    let base = accuracy_of(model, data);
    let repeats = n_repeats.max(1);
    let mut out: Vec<FeatureImportance> = groups
        .iter()
        .enumerate()
        .map(|(g, group)| {
            let cols: Vec<usize> = group
                .features
                .iter()
                .flat_map(|&f| data.columns_of(f))
                .collect();
            let mut shuffled = data.clone();
            let drops: Vec<f64> = (0..repeats)
                .map(|r| {
                    let mut perm: Vec<usize> = (0..data.len()).collect();
                    perm.shuffle(&mut stream(seed, g, r));
                    for (row, &src) in perm.iter().enumerate() {
                        for &c in &cols {
                            shuffled.x[row][c] = data.x[src][c];
                        }
                    }
                    base - accuracy_of(model, &shuffled)
                })
                .collect();
            let mean = drops.iter().sum::<f64>() / repeats as f64;
            let var = drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / repeats as f64;
            FeatureImportance {
                feature: group.name.clone(),
                importance: mean,
                std: var.sqrt(),
            }
        })
        .collect();
    rank(&mut out);
    out
}

/// Importance of every base feature, ranked.
pub fn permutation_importance(
    model: &dyn Classifier,
    data: &Dataset,
    n_repeats: usize,
    seed: u64,
) -> Vec<FeatureImportance> {
    let groups: Vec<FeatureGroup> = data
        .features
        .iter()
        .enumerate()
        .map(|(i, name)| FeatureGroup {
            name: name.clone(),
            features: vec![i],
        })
        .collect();
    group_importance(model, data, &groups, n_repeats, seed)
}

/// Average ranked lists by name and re-rank.
pub fn average(lists: &[Vec<FeatureImportance>]) -> Vec<FeatureImportance> {
    let mut acc: std::collections::BTreeMap<&str, (f64, f64, usize)> = Default::default();
    for list in lists {
        for fi in list {
            let e = acc.entry(fi.feature.as_str()).or_default();
            e.0 += fi.importance;
            e.1 += fi.std;
            e.2 += 1;
        }
    }
    let mut out: Vec<FeatureImportance> = acc
        .into_iter()
        .map(|(name, (s, sd, n))| FeatureImportance {
            feature: name.to_string(),
            importance: s / n as f64,
            std: sd / n as f64,
        })
        .collect();
    rank(&mut out);
    out
}
