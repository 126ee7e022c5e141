//! Diffusion models of tweet volume and their least-squares fits.
//!
//! Three forward simulators produce per-interval volume curves:
//! [`sis::simulate_sis`], [`seiz::simulate_seiz`] and
//! [`spikem::simulate_spikem`]. [`fit::fit_epi_features`] fits all three to a
//! volume prefix with multi-start Levenberg–Marquardt ([`lm`]) and returns
//! the fifteen parameter features used in the per-interval frames.

pub mod fit;
pub mod lm;
pub mod seiz;
pub mod sis;
pub mod spikem;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{
    fit_epi_features, fit_epi_features_warm, fit_model, DiffusionModel, EpiFeatures, FitOptions,
    FitTarget, SeizModel, SisModel, SpikeMModel,
};
pub use lm::{levenberg_marquardt, LmOptions, LmOutcome, Termination};
pub use seiz::{rsi, simulate_seiz, SeizParams, DEFAULT_SKEPTIC_SEED};
pub use sis::{simulate_sis, SisParams};
pub use spikem::{simulate_spikem, SpikeMParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpiError {
    #[error("non-finite value in {model} simulation at step {step}")]
    Numeric { model: &'static str, step: usize },
    #[error("residuals are not finite at the initial point")]
    NonFiniteInit,
    #[error("prefix has {0} intervals; at least 2 are required")]
    InsufficientData(usize),
    #[error("R_SI is undefined when rho + epsilon = 0")]
    UndefinedRatio,
    #[error("invalid volume curve: {0}")]
    InvalidCurve(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("steps must be at least 1")]
    ZeroSteps,
}

/// Per-interval tweet counts over consecutive intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeCurve {
    pub counts: Vec<f64>,
    pub interval_hours: f64,
}

impl VolumeCurve {
    pub fn new(counts: Vec<f64>, interval_hours: f64) -> Result<Self, EpiError> {
        if counts.is_empty() {
            return Err(EpiError::InvalidCurve("empty curve".into()));
        }
        if let Some(i) = counts.iter().position(|c| !c.is_finite() || *c < 0.0) {
            return Err(EpiError::InvalidCurve(format!(
                "entry {i} is negative or not finite"
            )));
        }
        if !(interval_hours.is_finite() && interval_hours > 0.0) {
            return Err(EpiError::InvalidCurve(
                "interval length must be positive".into(),
            ));
        }
        Ok(Self {
            counts,
            interval_hours,
        })
    }

    /// Hourly curve from integer counts.
    pub fn hourly(counts: &[usize]) -> Result<Self, EpiError> {
        Self::new(counts.iter().map(|&c| c as f64).collect(), 1.0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// First `n` intervals.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            counts: self.counts[..n.min(self.counts.len())].to_vec(),
            interval_hours: self.interval_hours,
        }
    }
}

/// Outcome of fitting one model to one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiFitResult<P> {
    pub params: P,
    pub residual_sse: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Condition number of JᵀJ at the solution.
    pub condition: f64,
    /// Index of the multi-start initialization that won.
    pub start_index: usize,
}

/// Fixed-step classical Runge–Kutta step for an autonomous system.
pub(crate) fn rk4_step<const K: usize>(
    y: &mut [f64; K],
    h: f64,
    f: &impl Fn(&[f64; K]) -> [f64; K],
) {
    let k1 = f(y);
    let mut tmp = [0.0; K];
    for i in 0..K {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(&tmp);
    for i in 0..K {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(&tmp);
    for i in 0..K {
        tmp[i] = y[i] + h * k3[i];
    }
    let k4 = f(&tmp);
    for i in 0..K {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// RK4 substeps per interval used by the compartmental simulators.
pub const RK4_SUBSTEPS: usize = 8;
