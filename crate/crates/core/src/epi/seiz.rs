//! SEIZ model: susceptible, exposed, infected (posting) and skeptic users.

use serde::{Deserialize, Serialize};

use super::{rk4_step, EpiError, RK4_SUBSTEPS};

/// Skeptics present at t=0. With none, Z stays at zero and `b`, `l` have no
/// effect on the curve.
pub const DEFAULT_SKEPTIC_SEED: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeizParams {
    pub beta: f64,
    pub b: f64,
    pub l: f64,
    pub p: f64,
    pub epsilon: f64,
    pub rho: f64,
    pub population: f64,
    /// Initial skeptic count Z(0); not a fitted parameter.
    #[serde(default = "default_seed")]
    pub skeptic_seed: f64,
}

fn default_seed() -> f64 {
    DEFAULT_SKEPTIC_SEED
}

impl SeizParams {
    pub fn validate(&self) -> Result<(), EpiError> {
        let rates = [self.beta, self.b, self.epsilon, self.rho];
        if !rates.iter().all(|r| r.is_finite() && *r >= 0.0) {
            return Err(EpiError::InvalidParams(
                "SEIZ rates must be finite and >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.l) || !(0.0..=1.0).contains(&self.p) {
            return Err(EpiError::InvalidParams("l and p must lie in [0,1]".into()));
        }
        if !(self.skeptic_seed >= 0.0 && self.population > 1.0 + self.skeptic_seed) {
            return Err(EpiError::InvalidParams(
                "population must exceed the seeded compartments".into(),
            ));
        }
        Ok(())
    }
}

/// Ratio of inflow into E over outflow from E.
pub fn rsi(params: &SeizParams) -> Result<f64, EpiError> {
    let denom = params.rho + params.epsilon;
    if denom <= 0.0 {
        return Err(EpiError::UndefinedRatio);
    }
    Ok(((1.0 - params.p) * params.beta + (1.0 - params.l) * params.b) / denom)
}

/// Per-interval inflow into I. Starts from I(0)=1, Z(0)=`skeptic_seed`,
/// E(0)=0 and S holding the rest.
pub fn simulate_seiz(params: &SeizParams, steps: usize) -> Result<Vec<f64>, EpiError> {
    simulate_seiz_traced(params, steps, RK4_SUBSTEPS, |_| ()).map(|(v, _)| v)
}

/// As [`simulate_seiz`], calling `observe` with `[S, E, I, Z]` after every
/// substep. Returns the curve and the worst conservation error seen.
pub fn simulate_seiz_traced(
    params: &SeizParams,
    steps: usize,
    substeps: usize,
    mut observe: impl FnMut(&[f64; 4]),
) -> Result<(Vec<f64>, f64), EpiError> {
    if steps == 0 {
        return Err(EpiError::ZeroSteps);
    }
    params.validate()?;
    let SeizParams {
        beta,
        b,
        l,
        p,
        epsilon,
        rho,
        population: n,
        skeptic_seed,
    } = *params;
    // State: S, E, I, Z, cumulative inflow to I.
    let rhs = |y: &[f64; 5]| {
        let (s, e, i, z) = (y[0], y[1], y[2], y[3]);
        let si = beta * s * i / n;
        let sz = b * s * z / n;
        let ei = rho * e * i / n;
        let to_i = p * si + ei + epsilon * e;
        [
            -si - sz,
            (1.0 - p) * si + (1.0 - l) * sz - ei - epsilon * e,
            to_i,
            l * sz,
            to_i,
        ]
    };
    let mut y = [n - 1.0 - skeptic_seed, 0.0, 1.0, skeptic_seed, 0.0];
    let h = 1.0 / substeps as f64;
    let mut out = Vec::with_capacity(steps);
    let mut worst = 0.0f64;
    for step in 0..steps {
        let before = y[4];
        for _ in 0..substeps {
            rk4_step(&mut y, h, &rhs);
            let comp = [y[0], y[1], y[2], y[3]];
            worst = worst.max((comp.iter().sum::<f64>() - n).abs());
            observe(&comp);
        }
        let v = y[4] - before;
        if !v.is_finite() || !y.iter().all(|x| x.is_finite()) {
            return Err(EpiError::Numeric {
                model: "SEIZ",
                step,
            });
        }
        out.push(v.max(0.0));
    }
    Ok((out, worst))
}

#[cfg(test)]
mod tests {
    use super::super::sis::{simulate_sis, SisParams};
    use super::*;

    fn sample() -> SeizParams {
        SeizParams {
            beta: 0.6,
            b: 0.4,
            l: 0.5,
            p: 0.3,
            epsilon: 0.1,
            rho: 0.5,
            population: 5000.0,
            skeptic_seed: 1.0,
        }
    }

    #[test]
    fn rsi_examples() {
        let p = SeizParams {
            beta: 0.2,
            b: 0.2,
            p: 0.5,
            l: 0.5,
            rho: 0.1,
            epsilon: 0.1,
            ..sample()
        };
        assert!((rsi(&p).unwrap() - 1.0).abs() < 1e-12);
        let q = SeizParams {
            p: 1.0,
            l: 1.0,
            ..p
        };
        assert_eq!(rsi(&q).unwrap(), 0.0);
        let r = SeizParams {
            rho: 0.0,
            epsilon: 0.0,
            ..p
        };
        assert!(matches!(rsi(&r), Err(EpiError::UndefinedRatio)));
    }

    #[test]
    fn reduces_to_si() {
        let seiz = SeizParams {
            beta: 0.5,
            b: 0.0,
            l: 0.3,
            p: 1.0,
            epsilon: 0.0,
            rho: 0.0,
            population: 1000.0,
            skeptic_seed: 0.0,
        };
        let sis = SisParams {
            beta: 0.5,
            alpha: 0.0,
            population: 1000.0,
        };
        let a = simulate_seiz(&seiz, 48).unwrap();
        let b = simulate_sis(&sis, 48).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9 * y.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn zero_rates_zero_volume() {
        let p = SeizParams {
            beta: 0.0,
            b: 0.0,
            epsilon: 0.0,
            rho: 0.0,
            ..sample()
        };
        assert!(simulate_seiz(&p, 20).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conserves_population() {
        let p = sample();
        let mut checked = 0;
        let (_, worst) = simulate_seiz_traced(&p, 48, RK4_SUBSTEPS, |c| {
            assert!((c.iter().sum::<f64>() - p.population).abs() < 1e-6 * p.population);
            checked += 1;
        })
        .unwrap();
        assert_eq!(checked, 48 * RK4_SUBSTEPS);
        assert!(worst < 1e-6 * p.population);
    }
}
