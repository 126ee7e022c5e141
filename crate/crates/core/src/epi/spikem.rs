//! SpikeM cascade model with power-law infectiveness decay, periodic
//! activity modulation and a periodic external shock.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::EpiError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeMParams {
    pub beta_strength: f64,
    /// Interval at which the external shock starts.
    pub start: usize,
    pub shock: f64,
    pub epsilon: f64,
    pub p_period: f64,
    pub p_amp: f64,
    pub p_shift: f64,
    pub q_period: f64,
    pub q_amp: f64,
    pub q_shift: f64,
    pub population: f64,
}

impl SpikeMParams {
    pub fn validate(&self) -> Result<(), EpiError> {
        let nonneg = [self.beta_strength, self.shock, self.epsilon, self.q_amp];
        if !nonneg.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return Err(EpiError::InvalidParams(
                "beta, shock, epsilon and Q_a must be finite and >= 0".into(),
            ));
        }
        if !(self.p_period > 0.0 && self.q_period > 0.0) {
            return Err(EpiError::InvalidParams("periods must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.p_amp) {
            return Err(EpiError::InvalidParams("P_a must lie in [0,1]".into()));
        }
        if !(self.p_shift.is_finite() && self.q_shift.is_finite()) {
            return Err(EpiError::InvalidParams("shifts must be finite".into()));
        }
        if !(self.population.is_finite() && self.population > 0.0) {
            return Err(EpiError::InvalidParams(
                "population must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Activity modulation p(n).
    pub fn activity(&self, n: f64) -> f64 {
        1.0 - 0.5 * self.p_amp * ((2.0 * PI * (n + self.p_shift) / self.p_period).sin() + 1.0)
    }

    /// External shock S(n), clipped at zero when Q_a > 1.
    pub fn external_shock(&self, n: usize) -> f64 {
        if n < self.start {
            return 0.0;
        }
        let q = 1.0
            - 0.5
                * self.q_amp
                * ((2.0 * PI * (n as f64 + self.q_shift) / self.q_period).sin() + 1.0);
        (self.shock * q).max(0.0)
    }
}

/// Power-law decay τ^-1.5 for τ = 0..=steps (index 0 unused).
fn decay_table(steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|t| if t == 0 { 0.0 } else { (t as f64).powf(-1.5) })
        .collect()
}

/// Returns ΔB(1..=steps): the new posts in each of the `steps` intervals.
pub fn simulate_spikem(params: &SpikeMParams, steps: usize) -> Result<Vec<f64>, EpiError> {
    if steps == 0 {
        return Err(EpiError::ZeroSteps);
    }
    params.validate()?;
    let decay = decay_table(steps);
    let shocks: Vec<f64> = (0..=steps).map(|n| params.external_shock(n)).collect();
    let mut delta = vec![0.0; steps + 1];
    let mut pool = params.population;
    for n in 0..steps {
        let mut excite = 0.0;
        for t in params.start..=n {
            excite += (delta[t] + shocks[t]) * decay[n + 1 - t];
        }
        let raw =
            params.activity(n as f64) * (pool * params.beta_strength * excite + params.epsilon);
        let next = raw.clamp(0.0, pool);
        if !next.is_finite() {
            return Err(EpiError::Numeric {
                model: "SpikeM",
                step: n,
            });
        }
        delta[n + 1] = next;
        pool -= next;
    }
    delta.remove(0);
    Ok(delta)
}
