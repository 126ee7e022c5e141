//! Bounded Levenberg–Marquardt least squares with a central-difference
//! Jacobian.
//!
//! The damped normal equations `(JᵀJ + λ·diag(JᵀJ)) δ = -Jᵀr` are solved by
//! Cholesky. Trial points are projected onto the box bounds. Parameters
//! whose bounds collapse (`lo == hi`) are held fixed and left out of the
//! solve. Only steps that lower the SSE are accepted, so the accepted SSE
//! sequence is non-increasing and the returned point is the best one seen.

use nalgebra::{DMatrix, DVector};

use super::EpiError;

#[derive(Debug, Clone, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when an accepted step improves the SSE by less than this fraction.
    pub ftol: f64,
    /// Stop when the projected step norm falls below this.
    pub xtol: f64,
    pub lambda_init: f64,
    pub lambda_factor: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-9,
            xtol: 1e-10,
            lambda_init: 1e-3,
            lambda_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Termination {
    ZeroResidual,
    SmallImprovement,
    SmallStep,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    pub sse: f64,
    /// Trial steps evaluated, accepted or not.
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// SSE at the start and after every accepted step.
    pub sse_history: Vec<f64>,
    /// Condition number of JᵀJ over the free parameters at the returned
    /// point (`inf` when singular).
    pub condition: f64,
}

/// Smallest finite-difference step used for the Jacobian.
pub const FD_MIN_STEP: f64 = 1e-6;
/// Relative finite-difference step.
pub const FD_REL_STEP: f64 = 1e-4;

fn fd_step(x: f64) -> f64 {
    FD_MIN_STEP.max(FD_REL_STEP * x.abs())
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn all_finite(r: &[f64]) -> bool {
    r.iter().all(|v| v.is_finite())
}

struct Problem<'a, F> {
    residual_fn: F,
    bounds: &'a [(f64, f64)],
    free: Vec<usize>,
}

impl<F> Problem<'_, F>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, EpiError>,
{
    fn eval(&mut self, theta: &[f64]) -> Option<Vec<f64>> {
        match (self.residual_fn)(theta) {
            Ok(r) if all_finite(&r) => Some(r),
            _ => None,
        }
    }

    fn project(&self, theta: &mut [f64]) {
        for (x, &(lo, hi)) in theta.iter_mut().zip(self.bounds) {
            *x = x.clamp(lo, hi);
        }
    }

    /// Central differences over the free parameters; falls back to a one-sided
    /// difference when one side is not finite, and to a zero column when
    /// neither is.
    fn jacobian(&mut self, theta: &[f64], r0: &[f64]) -> DMatrix<f64> {
        let m = r0.len();
        let mut jac = DMatrix::zeros(m, self.free.len());
        let mut probe = theta.to_vec();
        for (col, &j) in self.free.clone().iter().enumerate() {
            let h = fd_step(theta[j]);
            probe[j] = theta[j] + h;
            let plus = self.eval(&probe);
            probe[j] = theta[j] - h;
            let minus = self.eval(&probe);
            probe[j] = theta[j];
            match (plus, minus) {
                (Some(p), Some(n)) => {
                    for i in 0..m {
                        jac[(i, col)] = (p[i] - n[i]) / (2.0 * h);
                    }
                }
                (Some(p), None) => {
                    for i in 0..m {
                        jac[(i, col)] = (p[i] - r0[i]) / h;
                    }
                }
                (None, Some(n)) => {
                    for i in 0..m {
                        jac[(i, col)] = (r0[i] - n[i]) / h;
                    }
                }
                (None, None) => {}
            }
        }
        jac
    }
}

fn condition_number(jtj: &DMatrix<f64>) -> f64 {
    if jtj.nrows() == 0 {
        return 1.0;
    }
    let eig = jtj.clone().symmetric_eigen().eigenvalues;
    let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Minimize `Σ r(θ)²` within `bounds`, starting from `init`.
pub fn levenberg_marquardt<F>(
    residual_fn: F,
    init: &[f64],
    bounds: &[(f64, f64)],
    opts: &LmOptions,
) -> Result<LmOutcome, EpiError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, EpiError>,
{
    assert_eq!(init.len(), bounds.len(), "one bound per parameter");
    let free = (0..init.len())
        .filter(|&j| bounds[j].0 < bounds[j].1)
        .collect();
    let mut problem = Problem {
        residual_fn,
        bounds,
        free,
    };
    let mut theta = init.to_vec();
    problem.project(&mut theta);
    let mut r = problem.eval(&theta).ok_or(EpiError::NonFiniteInit)?;
    let mut sse = sum_sq(&r);
    let mut history = vec![sse];

    let n_free = problem.free.len();
    let mut jtj = DMatrix::zeros(n_free, n_free);
    let mut jtr = DVector::zeros(n_free);
    let refresh = |problem: &mut Problem<'_, F>,
                   theta: &[f64],
                   r: &[f64],
                   jtj: &mut DMatrix<f64>,
                   jtr: &mut DVector<f64>| {
        let jac = problem.jacobian(theta, r);
        *jtj = jac.transpose() * &jac;
        *jtr = jac.transpose() * DVector::from_column_slice(r);
    };

    if sse == 0.0 || n_free == 0 {
        refresh(&mut problem, &theta, &r, &mut jtj, &mut jtr);
        return Ok(LmOutcome {
            params: theta,
            sse,
            iterations: 0,
            converged: true,
            termination: if sse == 0.0 {
                Termination::ZeroResidual
            } else {
                Termination::SmallStep
            },
            sse_history: history,
            condition: condition_number(&jtj),
        });
    }

    refresh(&mut problem, &theta, &r, &mut jtj, &mut jtr);
    let mut lambda = opts.lambda_init;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    while iterations < opts.max_iter {
        iterations += 1;
        let max_diag = jtj.diagonal().iter().cloned().fold(0.0, f64::max);
        let floor = (1e-12 * max_diag).max(f64::MIN_POSITIVE);
        let mut a = jtj.clone();
        for k in 0..n_free {
            a[(k, k)] += lambda * jtj[(k, k)].max(floor);
        }
        let Some(chol) = a.cholesky() else {
            lambda *= opts.lambda_factor;
            continue;
        };
        let delta = chol.solve(&(-&jtr));

        let mut trial = theta.clone();
        for (k, &j) in problem.free.iter().enumerate() {
            trial[j] += delta[k];
        }
        problem.project(&mut trial);
        let step_norm = trial
            .iter()
            .zip(&theta)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if !step_norm.is_finite() {
            lambda *= opts.lambda_factor;
            continue;
        }
        if step_norm < opts.xtol {
            termination = Termination::SmallStep;
            break;
        }
        let Some(r_trial) = problem.eval(&trial) else {
            lambda *= opts.lambda_factor;
            continue;
        };
        let sse_trial = sum_sq(&r_trial);
        if sse_trial < sse {
            let improvement = (sse - sse_trial) / sse;
            theta = trial;
            r = r_trial;
            sse = sse_trial;
            history.push(sse);
            lambda = (lambda / opts.lambda_factor).max(1e-15);
            if sse == 0.0 {
                termination = Termination::ZeroResidual;
                break;
            }
            if improvement < opts.ftol {
                termination = Termination::SmallImprovement;
                break;
            }
            refresh(&mut problem, &theta, &r, &mut jtj, &mut jtr);
        } else {
            lambda *= opts.lambda_factor;
        }
    }

    Ok(LmOutcome {
        params: theta,
        sse,
        iterations,
        converged: termination != Termination::MaxIterations,
        termination,
        sse_history: history,
        condition: condition_number(&jtj),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_residuals<'a>(
        xs: &'a [f64],
        ys: &'a [f64],
    ) -> impl FnMut(&[f64]) -> Result<Vec<f64>, EpiError> + 'a {
        move |p: &[f64]| {
            Ok(xs
                .iter()
                .zip(ys)
                .map(|(x, y)| p[0] * x + p[1] - y)
                .collect())
        }
    }

    #[test]
    fn linear_fit_is_exact() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let unbounded = vec![(f64::NEG_INFINITY, f64::INFINITY); 2];
        let out = levenberg_marquardt(
            line_residuals(&xs, &ys),
            &[0.0, 0.0],
            &unbounded,
            &LmOptions::default(),
        )
        .unwrap();
        assert!((out.params[0] - 2.0).abs() < 1e-8, "{:?}", out.params);
        assert!((out.params[1] - 1.0).abs() < 1e-8);
        assert!(out.converged);
    }

    #[test]
    fn optimal_start_stays_put() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let unbounded = vec![(f64::NEG_INFINITY, f64::INFINITY); 2];
        let out = levenberg_marquardt(
            line_residuals(&xs, &ys),
            &[2.0, 1.0],
            &unbounded,
            &LmOptions::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 1);
        assert_eq!(out.params, vec![2.0, 1.0]);
    }

    #[test]
    fn optimal_start_with_noise_stays_put() {
        // Residuals are non-zero at the least-squares optimum.
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 2.0 * x + 1.0 + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let unbounded = vec![(f64::NEG_INFINITY, f64::INFINITY); 2];
        let first = levenberg_marquardt(
            line_residuals(&xs, &ys),
            &[0.0, 0.0],
            &unbounded,
            &LmOptions::default(),
        )
        .unwrap();
        let again = levenberg_marquardt(
            line_residuals(&xs, &ys),
            &first.params,
            &unbounded,
            &LmOptions::default(),
        )
        .unwrap();
        assert!(again.converged);
        assert!(again.iterations <= 1);
        for (a, b) in again.params.iter().zip(&first.params) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn respects_bounds() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let out = levenberg_marquardt(
            line_residuals(&xs, &ys),
            &[0.0, 0.0],
            &[(0.0, 1.5), (0.0, 10.0)],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(out.params[0] <= 1.5 && out.params[0] >= 0.0);
        assert!((out.params[0] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn fixed_parameter_is_untouched() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        let out = levenberg_marquardt(
            line_residuals(&xs, &ys),
            &[0.0, 3.0],
            &[(f64::NEG_INFINITY, f64::INFINITY), (3.0, 3.0)],
            &LmOptions::default(),
        )
        .unwrap();
        assert_eq!(out.params[1], 3.0);
    }

    #[test]
    fn accepted_sse_never_increases() {
        // Rosenbrock in residual form.
        let f = |p: &[f64]| Ok(vec![10.0 * (p[1] - p[0] * p[0]), 1.0 - p[0]]);
        let out = levenberg_marquardt(
            f,
            &[-1.2, 1.0],
            &[(f64::NEG_INFINITY, f64::INFINITY); 2],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(out.sse_history.windows(2).all(|w| w[1] <= w[0]));
        assert!((out.params[0] - 1.0).abs() < 1e-6 && (out.params[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_finite_init_is_an_error() {
        let f = |_: &[f64]| Ok(vec![f64::NAN]);
        let err = levenberg_marquardt(f, &[0.0], &[(-1.0, 1.0)], &LmOptions::default());
        assert!(matches!(err, Err(EpiError::NonFiniteInit)));
    }

    #[test]
    fn flat_problem_terminates() {
        // JᵀJ is identically zero: the fitter must stop without erroring.
        let f = |_: &[f64]| Ok(vec![1.0, 1.0]);
        let out = levenberg_marquardt(
            f,
            &[0.5, 0.5],
            &[(0.0, 1.0), (0.0, 1.0)],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.sse, 2.0);
    }
}
