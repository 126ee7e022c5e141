//! C-SVM with an RBF kernel, solved in the dual by SMO with second-order
//! working-set selection.
//!
//! Rumor rows are the positive class. The decision function is
//! `f(x) = Σ coef_i K(sv_i, x) + bias` with `coef_i = α_i y_i`.

use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifierError, Dataset, Standardizer};

/// Columns whose std exceeds this are treated as unstandardized input.
pub const MAX_COLUMN_STD: f64 = 10.0;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmOptions {
    pub c: f64,
    pub gamma: f64,
    /// KKT tolerance on the maximal violating pair.
    pub tolerance: f64,
    /// 0 picks `max(10_000_000, 100 n)`.
    pub max_iter: usize,
    /// Fit a column standardizer on the training rows and store it in the
    /// model.
    pub standardize: bool,
    /// Recorded for the run manifest; SMO itself draws no random numbers.
    pub seed: u64,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            c: 3.0,
            gamma: 0.2,
            tolerance: 1e-3,
            max_iter: 0,
            standardize: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    pub iterations: usize,
    pub scaler: Option<Standardizer>,
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Dual solution on a precomputed kernel.
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
}

pub(crate) fn solve_dual(
    k: &[Vec<f64>],
    y: &[f64],
    c: f64,
    eps: f64,
    max_iter: usize,
) -> Result<DualSolution, ClassifierError> {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let upper = |a: f64| a >= c;
    let lower = |a: f64| a <= 0.0;
    let mut iter = 0;
    loop {
        // First index: maximal violation.
        let (mut gmax, mut i) = (f64::NEG_INFINITY, usize::MAX);
        for t in 0..n {
            let cand = if y[t] > 0.0 {
                (!upper(alpha[t])).then_some(-g[t])
            } else {
                (!lower(alpha[t])).then_some(g[t])
            };
            if let Some(v) = cand {
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        // Second index: largest guaranteed objective decrease.
        let (mut gmax2, mut j, mut best) = (f64::NEG_INFINITY, usize::MAX, f64::INFINITY);
        if i != usize::MAX {
            for t in 0..n {
                let qit = y[i] * y[t] * k[i][t];
                let (ok, grad, diff, quad) = if y[t] > 0.0 {
                    (
                        !lower(alpha[t]),
                        g[t],
                        gmax + g[t],
                        k[i][i] + k[t][t] - 2.0 * y[i] * qit,
                    )
                } else {
                    (
                        !upper(alpha[t]),
                        -g[t],
                        gmax - g[t],
                        k[i][i] + k[t][t] + 2.0 * y[i] * qit,
                    )
                };
                if !ok {
                    continue;
                }
                gmax2 = gmax2.max(grad);
                if diff > 0.0 {
                    let obj = -diff * diff / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        let violation = gmax + gmax2;
        if i == usize::MAX || j == usize::MAX || violation < eps {
            break;
        }
        if iter >= max_iter {
            return Err(ClassifierError::NoConvergence {
                iterations: iter,
                violation,
            });
        }
        iter += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k[i][j];
        if y[i] != y[j] {
            let quad = (k[i][i] + k[j][j] + 2.0 * qij).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[i][i] + k[j][j] - 2.0 * qij).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            g[t] += y[i] * y[t] * k[i][t] * di + y[j] * y[t] * k[j][t] * dj;
        }
    }

    // Offset from free vectors, else the midpoint of the feasible range.
    let (mut ub, mut lb, mut sum, mut free) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * g[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    let rho = if free > 0 {
        sum / free as f64
    } else {
        0.5 * (ub + lb)
    };
    Ok(DualSolution {
        alpha,
        rho,
        iterations: iter,
    })
}

pub fn train_svm_rbf(data: &Dataset, opts: SvmOptions) -> Result<SvmModel, ClassifierError> {
    data.validate()?;
    if !data.has_both_classes() {
        return Err(ClassifierError::SingleClass);
    }
    if !(opts.c > 0.0 && opts.gamma > 0.0 && opts.tolerance > 0.0) {
        return Err(ClassifierError::Options(
            "C, gamma and tolerance must be positive".into(),
        ));
    }
    let scaler = opts.standardize.then(|| Standardizer::fit(&data.x));
    let x = match &scaler {
        Some(s) => s.transform(&data.x),
        None => data.x.clone(),
    };
    let stats = Standardizer::fit(&x);
    if let Some((column, &std)) = stats
        .std
        .iter()
        .enumerate()
        .find(|(_, s)| **s > MAX_COLUMN_STD)
    {
        return Err(ClassifierError::NotNormalized { column, std });
    }
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(&x[i], &x[j], opts.gamma);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    let y: Vec<f64> = data
        .y
        .iter()
        .map(|&c| if c == 1 { 1.0 } else { -1.0 })
        .collect();
    let max_iter = if opts.max_iter == 0 {
        10_000_000usize.max(100 * n)
    } else {
        opts.max_iter
    };
    let sol = solve_dual(&k, &y, opts.c, opts.tolerance, max_iter)?;
    let (mut support_vectors, mut coef) = (Vec::new(), Vec::new());
    for t in 0..n {
        if sol.alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            coef.push(sol.alpha[t] * y[t]);
        }
    }
    Ok(SvmModel {
        support_vectors,
        coef,
        bias: -sol.rho,
        gamma: opts.gamma,
        c: opts.c,
        iterations: sol.iterations,
        scaler,
    })
}

impl SvmModel {
    pub fn decision(&self, row: &[f64]) -> f64 {
        let scaled;
        let x = match &self.scaler {
            Some(s) => {
                scaled = s.transform_row(row);
                scaled.as_slice()
            }
            None => row,
        };
        self.support_vectors
            .iter()
            .zip(&self.coef)
            .map(|(sv, a)| a * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }

    /// Dual coefficients `α_i`.
    pub fn alphas(&self) -> impl Iterator<Item = f64> + '_ {
        self.coef.iter().map(|c| c.abs())
    }
}

impl Classifier for SvmModel {
    /// Positive margin is rumor; zero goes to news.
    fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) > 0.0)
    }
}
