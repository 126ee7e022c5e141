//! Bagged CART forest with √P feature subsampling and out-of-bag accuracy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, TreeOptions};
use super::{Classifier, ClassifierError, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestOptions {
    pub n_trees: usize,
    pub seed: u64,
    /// Features per split; 0 means ⌊√P⌋.
    pub max_features: usize,
    pub min_leaf: usize,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            n_trees: 350,
            seed: 0,
            max_features: 0,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub options: ForestOptions,
    pub n_features: usize,
    /// Out-of-bag accuracy over rows left out by at least one tree.
    pub oob_accuracy: Option<f64>,
}

/// Seed of tree `i`'s private stream.
pub fn tree_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (i as u64).wrapping_add(1)
}

/// `n` row indices drawn with replacement.
pub fn bootstrap(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn train_random_forest(
    data: &Dataset,
    opts: ForestOptions,
) -> Result<ForestModel, ClassifierError> {
    data.validate()?;
    if !data.has_both_classes() {
        return Err(ClassifierError::SingleClass);
    }
    if opts.n_trees == 0 {
        return Err(ClassifierError::Options("n_trees must be positive".into()));
    }
    let p = data.n_columns();
    let mtry = if opts.max_features == 0 {
        ((p as f64).sqrt().floor() as usize).max(1)
    } else {
        opts.max_features
    };
    let tree_opts = TreeOptions {
        max_features: mtry,
        min_leaf: opts.min_leaf.max(1),
        max_depth: None,
    };
    let n = data.len();
    let grown: Vec<(DecisionTree, Vec<usize>)> = (0..opts.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(opts.seed, i));
            let sample = bootstrap(n, &mut rng);
            let tree = DecisionTree::fit(&data.x, &data.y, &sample, tree_opts, &mut rng);
            (tree, sample)
        })
        .collect();

    let mut votes = vec![[0usize; 2]; n];
    let mut in_bag = vec![false; n];
    for (tree, sample) in &grown {
        in_bag.iter_mut().for_each(|b| *b = false);
        for &i in sample {
            in_bag[i] = true;
        }
        for i in (0..n).filter(|&i| !in_bag[i]) {
            votes[i][tree.predict(&data.x[i]) as usize] += 1;
        }
    }
    let scored: Vec<usize> = (0..n).filter(|&i| votes[i][0] + votes[i][1] > 0).collect();
    let oob_accuracy = (!scored.is_empty()).then(|| {
        let hits = scored
            .iter()
            .filter(|&&i| u8::from(votes[i][1] > votes[i][0]) == data.y[i])
            .count();
        hits as f64 / scored.len() as f64
    });

    Ok(ForestModel {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        options: opts,
        n_features: p,
        oob_accuracy,
    })
}

impl ForestModel {
    /// Fraction of trees voting rumor.
    pub fn vote_fraction(&self, row: &[f64]) -> f64 {
        let yes = self.trees.iter().filter(|t| t.predict(row) == 1).count();
        yes as f64 / self.trees.len() as f64
    }
}

impl Classifier for ForestModel {
    /// Majority vote; an exact tie goes to news.
    fn predict(&self, row: &[f64]) -> u8 {
        let yes = self.trees.iter().filter(|t| t.predict(row) == 1).count();
        u8::from(2 * yes > self.trees.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::accuracy_of;
    use rand_distr::{Distribution, Normal};

    /// 50+50 points split by the line x0 + x1 = 0 with margin 1.
    fn separable(seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let (mut x, mut y, mut ids) = (vec![], vec![], vec![]);
        while x.len() < 100 {
            let a: f64 = noise.sample(&mut rng) * 2.0;
            let b: f64 = noise.sample(&mut rng) * 2.0;
            let s = (a + b) / 2f64.sqrt();
            let class = u8::from(s > 0.0);
            let want = y.iter().filter(|&&c| c == class).count() < 50;
            if s.abs() < 0.5 || !want {
                continue;
            }
            ids.push(format!("e{}", x.len()));
            x.push(vec![a, b]);
            y.push(class);
        }
        Dataset::new(x, y, ids, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn separable_training_accuracy() {
        let d = separable(3);
        let f = train_random_forest(
            &d,
            ForestOptions {
                n_trees: 50,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(accuracy_of(&f, &d), 1.0);
        assert!(f.oob_accuracy.unwrap() > 0.85);
    }

    #[test]
    fn one_tree_is_a_seeded_cart() {
        let d = separable(4);
        let f = train_random_forest(
            &d,
            ForestOptions {
                n_trees: 1,
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(9, 0));
        let sample = bootstrap(d.len(), &mut rng);
        let opts = TreeOptions {
            max_features: 1,
            ..TreeOptions::default()
        };
        let t = DecisionTree::fit(&d.x, &d.y, &sample, opts, &mut rng);
        assert_eq!(f.trees[0], t);
        for r in &d.x {
            assert_eq!(f.predict(r), t.predict(r));
        }
    }

    #[test]
    fn duplicated_rows_keep_predictions() {
        let d = separable(5);
        let opts = ForestOptions {
            n_trees: 40,
            seed: 2,
            ..Default::default()
        };
        let f = train_random_forest(&d, opts).unwrap();
        let mut dup = d.clone();
        dup.x.extend(d.x.clone());
        dup.y.extend(d.y.clone());
        dup.ids.extend(d.ids.iter().map(|s| format!("{s}'")));
        let g = train_random_forest(&dup, opts).unwrap();
        for r in &d.x {
            assert_eq!(f.predict(r), g.predict(r));
        }
    }

    #[test]
    fn deterministic_and_single_class_rejected() {
        let d = separable(6);
        let opts = ForestOptions {
            n_trees: 10,
            seed: 3,
            ..Default::default()
        };
        assert_eq!(
            train_random_forest(&d, opts).unwrap(),
            train_random_forest(&d, opts).unwrap()
        );
        let mut one = d.clone();
        one.y.iter_mut().for_each(|y| *y = 1);
        assert_eq!(
            train_random_forest(&one, opts),
            Err(ClassifierError::SingleClass)
        );
    }

    #[test]
    fn vote_is_recomputable() {
        let d = separable(7);
        let f = train_random_forest(
            &d,
            ForestOptions {
                n_trees: 25,
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        for r in &d.x {
            let mut votes = 0;
            for t in &f.trees {
                let c = t.leaf_counts(r);
                votes += usize::from(c[1] > c[0]);
            }
            assert_eq!(f.predict(r), u8::from(2 * votes > 25));
            assert_eq!(f.vote_fraction(r), votes as f64 / 25.0);
        }
    }
}
