//! Dynamic series-time structure: per-interval frames, z-scored per event,
//! followed by their forward differences, flattened into one vector.
//!
//! Layout is frame-major: `f@t0 .. f@t{N-1}` for every feature in order,
//! then the `N-1` slope frames `df@t0 .. df@t{N-2}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DstsError {
    #[error("no frames")]
    NoFrames,
    #[error("slopes need at least 2 frames, got {0}")]
    InsufficientFrames(usize),
    #[error("non-finite value at interval {t}, feature {k}")]
    NonFinite { t: usize, k: usize },
    #[error("frame {t} has {got} features, expected {want}")]
    Ragged { t: usize, got: usize, want: usize },
    #[error("interval length must be positive")]
    BadInterval,
}

fn check(frames: &[Vec<f64>]) -> Result<usize, DstsError> {
    let d = frames.first().ok_or(DstsError::NoFrames)?.len();
    for (t, row) in frames.iter().enumerate() {
        if row.len() != d {
            return Err(DstsError::Ragged {
                t,
                got: row.len(),
                want: d,
            });
        }
        if let Some(k) = row.iter().position(|v| !v.is_finite()) {
            return Err(DstsError::NonFinite { t, k });
        }
    }
    Ok(d)
}

/// Column-wise z-score with population standard deviation; constant
/// columns become zero.
pub fn zscore_normalize(frames: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, DstsError> {
    let d = check(frames)?;
    let n = frames.len() as f64;
    let mut out = frames.to_vec();
    for k in 0..d {
        let rough = frames.iter().map(|r| r[k]).sum::<f64>() / n;
        // Second pass removes the rounding left in the first mean.
        let mean = rough + frames.iter().map(|r| r[k] - rough).sum::<f64>() / n;
        let var = frames.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        // Float noise in a constant column must not be amplified into ±1.
        let constant = std == 0.0 || std <= 1e-12 * mean.abs();
        for row in out.iter_mut() {
            row[k] = if constant { 0.0 } else { (row[k] - mean) / std };
        }
    }
    Ok(out)
}

/// Forward differences divided by the interval length in hours.
pub fn slope_block(frames: &[Vec<f64>], interval_hours: f64) -> Result<Vec<Vec<f64>>, DstsError> {
    if !(interval_hours.is_finite() && interval_hours > 0.0) {
        return Err(DstsError::BadInterval);
    }
    check(frames)?;
    if frames.len() < 2 {
        return Err(DstsError::InsufficientFrames(frames.len()));
    }
    Ok(frames
        .windows(2)
        .map(|w| {
            w[1].iter()
                .zip(&w[0])
                .map(|(b, a)| (b - a) / interval_hours)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DstsVector {
    pub event_id: String,
    pub n_frames: usize,
    pub dim: usize,
    pub prefix_hours: usize,
    pub values: Vec<f64>,
}

impl DstsVector {
    pub fn expected_len(n_frames: usize, dim: usize) -> usize {
        if n_frames == 0 {
            0
        } else {
            dim * (2 * n_frames - 1)
        }
    }
}

/// Emitted frames (z-scored when `normalize`) followed by their slopes. A
/// single frame yields just that frame.
pub fn build_dsts_vector(
    event_id: &str,
    frames: &[Vec<f64>],
    interval_hours: f64,
    normalize: bool,
) -> Result<DstsVector, DstsError> {
    let dim = check(frames)?;
    let emitted = if normalize {
        zscore_normalize(frames)?
    } else {
        frames.to_vec()
    };
    let slopes = if emitted.len() >= 2 {
        slope_block(&emitted, interval_hours)?
    } else {
        Vec::new()
    };
    let values: Vec<f64> = emitted.iter().chain(&slopes).flatten().copied().collect();
    debug_assert_eq!(values.len(), DstsVector::expected_len(frames.len(), dim));
    Ok(DstsVector {
        event_id: event_id.to_string(),
        n_frames: frames.len(),
        dim,
        prefix_hours: frames.len(),
        values,
    })
}

/// Column names matching [`build_dsts_vector`]'s layout.
pub fn column_names<S: AsRef<str>>(features: &[S], n_frames: usize) -> Vec<String> {
    let mut out = Vec::with_capacity(DstsVector::expected_len(n_frames, features.len()));
    for t in 0..n_frames {
        out.extend(features.iter().map(|f| format!("{}@t{t}", f.as_ref())));
    }
    for t in 0..n_frames.saturating_sub(1) {
        out.extend(features.iter().map(|f| format!("d{}@t{t}", f.as_ref())));
    }
    out
}

/// Index of the base feature that DSTS column `column` belongs to.
pub fn feature_of_column(column: usize, dim: usize) -> usize {
    column % dim
}
