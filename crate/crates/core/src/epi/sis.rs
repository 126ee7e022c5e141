//! SIS model adapted to posting: infected users stop posting at rate α and
//! do not return to the susceptible pool.

use serde::{Deserialize, Serialize};

use super::{rk4_step, EpiError, RK4_SUBSTEPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SisParams {
    pub beta: f64,
    pub alpha: f64,
    pub population: f64,
}

impl SisParams {
    pub fn validate(&self) -> Result<(), EpiError> {
        if !(self.beta >= 0.0
            && self.alpha >= 0.0
            && self.beta.is_finite()
            && self.alpha.is_finite())
        {
            return Err(EpiError::InvalidParams(
                "SIS rates must be finite and >= 0".into(),
            ));
        }
        if !(self.population.is_finite() && self.population > 1.0) {
            return Err(EpiError::InvalidParams("population must exceed 1".into()));
        }
        Ok(())
    }
}

/// Per-interval new infections for `steps` intervals, from I(0)=1,
/// S(0)=N-1.
pub fn simulate_sis(params: &SisParams, steps: usize) -> Result<Vec<f64>, EpiError> {
    simulate_sis_with(params, steps, RK4_SUBSTEPS)
}

pub fn simulate_sis_with(
    params: &SisParams,
    steps: usize,
    substeps: usize,
) -> Result<Vec<f64>, EpiError> {
    if steps == 0 {
        return Err(EpiError::ZeroSteps);
    }
    params.validate()?;
    let SisParams {
        beta,
        alpha,
        population: n,
    } = *params;
    // State: S, I, cumulative inflow to I.
    let rhs = |y: &[f64; 3]| {
        let inflow = beta * y[0] * y[1] / n;
        [-inflow, inflow - alpha * y[1], inflow]
    };
    let mut y = [n - 1.0, 1.0, 0.0];
    let h = 1.0 / substeps as f64;
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let before = y[2];
        for _ in 0..substeps {
            rk4_step(&mut y, h, &rhs);
        }
        let v = y[2] - before;
        if !v.is_finite() || !y.iter().all(|x| x.is_finite()) {
            return Err(EpiError::Numeric { model: "SIS", step });
        }
        out.push(v.max(0.0));
    }
    Ok(out)
}
