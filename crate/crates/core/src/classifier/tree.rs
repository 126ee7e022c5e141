//! CART with Gini impurity and per-node feature subsampling.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Classifier;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeOptions {
    /// Features examined per split; 0 means all.
    pub max_features: usize,
    pub min_leaf: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
}

impl Default for TreeOptions {
    fn default() -> Self {
        Self {
            max_features: 0,
            min_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in a flat arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

fn gini(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p = c[1] as f64 / n;
    2.0 * p * (1.0 - p)
}

fn majority(c: [usize; 2]) -> u8 {
    u8::from(c[1] > c[0])
}

struct Builder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    opts: TreeOptions,
    rng: &'a mut R,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let mut c = [0, 0];
        for &i in rows {
            c[self.y[i] as usize] += 1;
        }
        c
    }

    /// Weighted child impurity of the best threshold on `f`, or `None` when
    /// the feature is constant over `rows` or no split honours `min_leaf`.
    fn best_on(&self, f: usize, rows: &[usize], total: [usize; 2]) -> Option<(f64, f64)> {
        let mut order: Vec<(f64, u8)> = rows.iter().map(|&i| (self.x[i][f], self.y[i])).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        if order[0].0 == order[order.len() - 1].0 {
            return None;
        }
        let n = order.len();
        let mut left = [0usize; 2];
        let mut best: Option<(f64, f64)> = None;
        for k in 0..n - 1 {
            left[order[k].1 as usize] += 1;
            if order[k].0 == order[k + 1].0 {
                continue;
            }
            let nl = k + 1;
            if nl < self.opts.min_leaf || n - nl < self.opts.min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = (nl as f64 * gini(left) + (n - nl) as f64 * gini(right)) / n as f64;
            if best.is_none_or(|(s, _)| score < s) {
                let mid = 0.5 * (order[k].0 + order[k + 1].0);
                // Guard against the midpoint rounding onto the upper value.
                let thr = if mid < order[k + 1].0 {
                    mid
                } else {
                    order[k].0
                };
                best = Some((score, thr));
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(&rows);
        self.nodes.push(Node::Leaf { counts });
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_ok = self.opts.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || rows.len() < 2 * self.opts.min_leaf {
            return id;
        }
        let parent = gini(counts);
        let p = self.features.len();
        let want = if self.opts.max_features == 0 {
            p
        } else {
            self.opts.max_features.min(p)
        };
        // Draw features without replacement until `want` non-constant ones
        // have been examined.
        self.features.shuffle(self.rng);
        let mut best: Option<BestSplit> = None;
        let mut examined = 0;
        for j in 0..p {
            if examined >= want {
                break;
            }
            let f = self.features[j];
            if let Some((score, threshold)) = self.best_on(f, &rows, counts) {
                examined += 1;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        let Some(split) = best else { return id };
        if split.score >= parent {
            return id;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.x[i][split.feature] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

impl DecisionTree {
    /// Fit on the rows listed in `sample` (repeats allowed).
    pub fn fit<R: Rng>(
        x: &[Vec<f64>],
        y: &[u8],
        sample: &[usize],
        opts: TreeOptions,
        rng: &mut R,
    ) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let mut b = Builder {
            x,
            y,
            opts,
            rng,
            nodes: Vec::new(),
            features: (0..p).collect(),
        };
        b.grow(sample.to_vec(), 0);
        Self { nodes: b.nodes }
    }

    pub fn leaf_counts(&self, row: &[f64]) -> [usize; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Classifier for DecisionTree {
    fn predict(&self, row: &[f64]) -> u8 {
        majority(self.leaf_counts(row))
    }
}
