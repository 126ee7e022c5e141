//! Multi-start fitting of the three diffusion models and the fifteen
//! epidemiological/SpikeM features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LmOptions, LmOutcome};
use super::seiz::{rsi, simulate_seiz, SeizParams, DEFAULT_SKEPTIC_SEED};
use super::sis::{simulate_sis, SisParams};
use super::spikem::{simulate_spikem, SpikeMParams};
use super::{EpiError, EpiFitResult, VolumeCurve};

pub const EPI_FEATURES: [&str; 9] = [
    "SIS_beta",
    "SIS_alpha",
    "SEIZ_beta",
    "SEIZ_b",
    "SEIZ_l",
    "SEIZ_p",
    "SEIZ_epsilon",
    "SEIZ_rho",
    "SEIZ_RSI",
];
pub const SPIKEM_FEATURES: [&str; 6] = [
    "SpikeM_Ps",
    "SpikeM_Pa",
    "SpikeM_Pp",
    "SpikeM_Qs",
    "SpikeM_Qa",
    "SpikeM_Qp",
];

/// Residual space of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTarget {
    #[default]
    PerInterval,
    Cumulative,
    /// Per-interval residuals divided by the observed value, floored at
    /// [`RELATIVE_FLOOR`] times the peak: least squares for noise whose
    /// spread is proportional to the volume.
    Relative,
}

/// Smallest divisor of a relative residual, as a fraction of the peak.
pub const RELATIVE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub lm: LmOptions,
    pub target: FitTarget,
    /// Population is this multiple of the total observed volume.
    pub population_factor: f64,
    /// Random candidates screened alongside the model's data-driven ones;
    /// the `n_starts` with the lowest SSE become LM starts.
    pub screen: usize,
    /// Minimum distance between screened starts, in units of each
    /// parameter's bound width.
    pub min_separation: f64,
    /// LM runs per start: a run that stops at its iteration cap is restarted
    /// from where it ended, with fresh damping, up to this many times.
    pub max_rounds: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            n_starts: 5,
            seed: 0,
            lm: LmOptions::default(),
            target: FitTarget::PerInterval,
            population_factor: 10.0,
            max_rounds: 10,
            screen: 64,
            min_separation: 0.1,
        }
    }
}

/// A model with a flat parameter vector `θ` for the optimizer.
pub trait DiffusionModel {
    type Params: Copy;
    /// Salt for the per-model start stream.
    const TAG: u64;
    fn bounds(&self) -> Vec<(f64, f64)>;
    fn to_params(&self, theta: &[f64]) -> Self::Params;
    fn to_theta(&self, params: &Self::Params) -> Vec<f64>;
    fn simulate(&self, params: &Self::Params, steps: usize) -> Result<Vec<f64>, EpiError>;
    /// Data-driven candidate starts.
    fn candidates(&self, curve: &[f64]) -> Vec<Vec<f64>>;
    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64>;
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Early exponential growth rate of a curve, from its start to its peak.
fn growth_rate(curve: &[f64]) -> f64 {
    let peak = curve
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > curve[best] { i } else { best });
    if peak == 0 {
        return 0.1;
    }
    ((curve[peak] + 1.0) / (curve[0] + 1.0)).ln() / peak as f64
}

pub struct SisModel {
    pub population: f64,
}

impl DiffusionModel for SisModel {
    type Params = SisParams;
    const TAG: u64 = 0x5151;

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 10.0), (0.0, 10.0)]
    }
    fn to_params(&self, t: &[f64]) -> SisParams {
        SisParams {
            beta: t[0],
            alpha: t[1],
            population: self.population,
        }
    }
    fn to_theta(&self, p: &SisParams) -> Vec<f64> {
        vec![p.beta, p.alpha]
    }
    fn simulate(&self, p: &SisParams, steps: usize) -> Result<Vec<f64>, EpiError> {
        simulate_sis(p, steps)
    }
    fn candidates(&self, curve: &[f64]) -> Vec<Vec<f64>> {
        let g = growth_rate(curve);
        [0.05, 0.2, 0.5]
            .iter()
            .map(|&alpha| vec![(g + alpha).clamp(0.01, 5.0), alpha])
            .collect()
    }
    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![log_uniform(rng, 0.05, 3.0), log_uniform(rng, 0.01, 1.0)]
    }
}

pub struct SeizModel {
    pub population: f64,
    pub skeptic_seed: f64,
}

impl SeizModel {
    pub fn new(population: f64) -> Self {
        Self {
            population,
            skeptic_seed: DEFAULT_SKEPTIC_SEED,
        }
    }
}

/// SEIZ in log/logit coordinates: `θ = [ln β, ln b, logit l, logit p, ln ε,
/// ln ρ]`. The model is sloppy in natural coordinates and LM crawls.
impl DiffusionModel for SeizModel {
    type Params = SeizParams;
    const TAG: u64 = 0x5E12;

    fn bounds(&self) -> Vec<(f64, f64)> {
        let rate = (RATE_FLOOR.ln(), RATE_CEIL.ln());
        let frac = (-LOGIT_CAP, LOGIT_CAP);
        vec![rate, rate, frac, frac, rate, rate]
    }
    fn to_params(&self, t: &[f64]) -> SeizParams {
        SeizParams {
            beta: t[0].exp(),
            b: t[1].exp(),
            l: logistic(t[2]),
            p: logistic(t[3]),
            epsilon: t[4].exp(),
            rho: t[5].exp(),
            population: self.population,
            skeptic_seed: self.skeptic_seed,
        }
    }
    fn to_theta(&self, p: &SeizParams) -> Vec<f64> {
        let ln = |x: f64| x.clamp(RATE_FLOOR, RATE_CEIL).ln();
        vec![
            ln(p.beta),
            ln(p.b),
            logit(p.l),
            logit(p.p),
            ln(p.epsilon),
            ln(p.rho),
        ]
    }
    fn simulate(&self, p: &SeizParams, steps: usize) -> Result<Vec<f64>, EpiError> {
        simulate_seiz(p, steps)
    }
    fn candidates(&self, curve: &[f64]) -> Vec<Vec<f64>> {
        let g = growth_rate(curve);
        let mut candidates = Vec::new();
        for beta in [g + 0.1, 2.0 * g + 0.1, 4.0 * g + 0.1] {
            for b in [0.1, 0.4, 1.0] {
                for l in [0.2, 0.5, 0.8] {
                    for p in [0.2, 0.5, 0.8] {
                        for (eps, rho) in [(0.02, 0.2), (0.1, 0.5), (0.3, 1.0)] {
                            let natural = SeizParams {
                                beta: beta.clamp(0.01, 5.0),
                                b,
                                l,
                                p,
                                epsilon: eps,
                                rho,
                                population: self.population,
                                skeptic_seed: self.skeptic_seed,
                            };
                            candidates.push(self.to_theta(&natural));
                        }
                    }
                }
            }
        }
        candidates
    }
    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![
            log_uniform(rng, 0.05, 3.0).ln(),
            log_uniform(rng, 0.05, 3.0).ln(),
            logit(rng.random_range(0.05..0.95)),
            logit(rng.random_range(0.05..0.95)),
            log_uniform(rng, 0.005, 1.0).ln(),
            log_uniform(rng, 0.05, 3.0).ln(),
        ]
    }
}

const RATE_FLOOR: f64 = 1e-6;
const RATE_CEIL: f64 = 10.0;
const LOGIT_CAP: f64 = 14.0;

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(logistic(-LOGIT_CAP), logistic(LOGIT_CAP));
    (p / (1.0 - p)).ln()
}

/// SpikeM in scaled coordinates: `θ = [β·N, S_0/s, ε/s, P_a, P_s, P_p, Q_a,
/// Q_s, Q_p]` with `s` the curve's peak volume, so every coordinate is of
/// order one.
pub struct SpikeMModel {
    pub population: f64,
    pub scale: f64,
    pub start: usize,
}

impl SpikeMModel {
    pub fn for_curve(population: f64, curve: &[f64]) -> Self {
        Self {
            population,
            scale: curve.iter().cloned().fold(1.0, f64::max),
            start: 0,
        }
    }
}

impl DiffusionModel for SpikeMModel {
    type Params = SpikeMParams;
    const TAG: u64 = 0x5B1C;

    fn bounds(&self) -> Vec<(f64, f64)> {
        vec![
            (0.0, 5.0),
            (0.0, 1e3),
            (0.0, 10.0),
            (0.0, 1.0),
            (0.0, 48.0),
            (MIN_PERIOD, 48.0),
            (0.0, 1.0),
            (0.0, 48.0),
            (MIN_PERIOD, 48.0),
        ]
    }
    fn to_params(&self, t: &[f64]) -> SpikeMParams {
        SpikeMParams {
            beta_strength: t[0] / self.population,
            start: self.start,
            shock: t[1] * self.scale,
            epsilon: t[2] * self.scale,
            p_amp: t[3],
            p_shift: t[4],
            p_period: t[5],
            q_amp: t[6],
            q_shift: t[7],
            q_period: t[8],
            population: self.population,
        }
    }
    fn to_theta(&self, p: &SpikeMParams) -> Vec<f64> {
        vec![
            p.beta_strength * self.population,
            p.shock / self.scale,
            p.epsilon / self.scale,
            p.p_amp,
            p.p_shift,
            p.p_period,
            p.q_amp,
            p.q_shift,
            p.q_period,
        ]
    }
    fn simulate(&self, p: &SpikeMParams, steps: usize) -> Result<Vec<f64>, EpiError> {
        simulate_spikem(p, steps)
    }
    fn candidates(&self, curve: &[f64]) -> Vec<Vec<f64>> {
        let first = curve.iter().cloned().find(|&v| v > 0.0).unwrap_or(1.0);
        let mut candidates = Vec::new();
        for bn in [0.1, 0.2, 0.3, 0.45] {
            for period in [12.0, 18.0, 24.0, 30.0, 36.0] {
                for k in 0..6 {
                    let shift = period * k as f64 / 6.0;
                    candidates.push(vec![
                        bn,
                        (first / bn / self.scale).clamp(1e-3, 100.0),
                        0.0,
                        0.3,
                        shift,
                        period,
                        0.0,
                        0.0,
                        24.0,
                    ]);
                }
            }
        }
        candidates
    }
    fn random_start(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![
            rng.random_range(0.05..0.6),
            log_uniform(rng, 0.05, 2.0),
            rng.random_range(0.0..0.05),
            rng.random_range(0.0..0.8),
            rng.random_range(0.0..24.0),
            rng.random_range(12.0..36.0),
            rng.random_range(0.0..0.8),
            rng.random_range(0.0..24.0),
            rng.random_range(12.0..36.0),
        ]
    }
}

/// Shortest modulation period. Periods of 2 or less alias to a constant at
/// integer steps.
pub const MIN_PERIOD: f64 = 4.0;

fn to_target(values: &[f64], target: FitTarget) -> Vec<f64> {
    match target {
        FitTarget::PerInterval | FitTarget::Relative => values.to_vec(),
        FitTarget::Cumulative => values
            .iter()
            .scan(0.0, |acc, v| {
                *acc += v;
                Some(*acc)
            })
            .collect(),
    }
}

/// Observed curve in target space with the per-point residual weights.
struct Objective {
    observed: Vec<f64>,
    weights: Vec<f64>,
    target: FitTarget,
}

impl Objective {
    fn new(curve: &[f64], target: FitTarget) -> Self {
        let observed = to_target(curve, target);
        let weights = match target {
            FitTarget::Relative => {
                let floor = RELATIVE_FLOOR * curve.iter().cloned().fold(0.0, f64::max);
                curve
                    .iter()
                    .map(|&o| 1.0 / o.max(floor).max(1e-12))
                    .collect()
            }
            _ => vec![1.0; curve.len()],
        };
        Self {
            observed,
            weights,
            target,
        }
    }

    fn residuals(&self, sim: &[f64]) -> Vec<f64> {
        to_target(sim, self.target)
            .iter()
            .zip(&self.observed)
            .zip(&self.weights)
            .map(|((m, o), w)| (m - o) * w)
            .collect()
    }

    fn sse(&self, sim: &[f64]) -> f64 {
        self.residuals(sim).iter().map(|r| r * r).sum()
    }
}

fn run_rounds<F>(
    mut residuals: F,
    init: &[f64],
    bounds: &[(f64, f64)],
    opts: &FitOptions,
) -> Result<LmOutcome, EpiError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, EpiError>,
{
    let mut out = levenberg_marquardt(&mut residuals, init, bounds, &opts.lm)?;
    for _ in 1..opts.max_rounds.max(1) {
        if out.converged {
            break;
        }
        let next = levenberg_marquardt(&mut residuals, &out.params, bounds, &opts.lm)?;
        let stalled = next.sse >= out.sse;
        let iterations = out.iterations + next.iterations;
        out = LmOutcome { iterations, ..next };
        if stalled {
            break;
        }
    }
    Ok(out)
}

/// Fit `model` to `curve` from `opts.n_starts` initializations.
///
/// The model's data-driven candidates and `opts.screen` random draws (from a
/// stream keyed by `opts.seed` and the model) are ranked by SSE and the best
/// become the starts, after `warm` when one is given. Lowest final SSE wins,
/// ties to the earlier start.
pub fn fit_model<M: DiffusionModel>(
    model: &M,
    curve: &[f64],
    opts: &FitOptions,
    warm: Option<&M::Params>,
) -> Result<EpiFitResult<M::Params>, EpiError> {
    let steps = curve.len();
    let objective = Objective::new(curve, opts.target);
    let bounds = model.bounds();
    let n_starts = opts.n_starts.max(1);
    let mut starts = Vec::with_capacity(n_starts);
    if let Some(p) = warm {
        starts.push(model.to_theta(p));
    }
    if starts.len() < n_starts {
        let mut rng =
            ChaCha8Rng::seed_from_u64(opts.seed ^ M::TAG.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut pool = model.candidates(curve);
        pool.extend((0..opts.screen).map(|_| model.random_start(&mut rng)));
        let mut scored: Vec<(f64, Vec<f64>)> = pool
            .into_iter()
            .map(|theta| {
                let sse = model
                    .simulate(&model.to_params(&theta), steps)
                    .map(|sim| objective.sse(&sim))
                    .ok()
                    .filter(|v| v.is_finite())
                    .unwrap_or(f64::INFINITY);
                (sse, theta)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spread: Vec<f64> = bounds
            .iter()
            .map(|&(lo, hi)| {
                if (hi - lo).is_finite() && hi > lo {
                    hi - lo
                } else {
                    1.0
                }
            })
            .collect();
        let distinct = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .zip(&spread)
                .map(|((x, y), w)| ((x - y) / w).powi(2))
                .sum::<f64>()
                .sqrt()
                >= opts.min_separation
        };
        let mut spare = Vec::new();
        for (_, theta) in scored {
            if starts.len() == n_starts {
                break;
            }
            if starts.iter().all(|s| distinct(s, &theta)) {
                starts.push(theta);
            } else {
                spare.push(theta);
            }
        }
        let need = n_starts - starts.len();
        starts.extend(spare.into_iter().take(need));
    }

    let mut best: Option<EpiFitResult<M::Params>> = None;
    let mut last_err = None;
    for (k, init) in starts.iter().enumerate() {
        let residuals = |theta: &[f64]| -> Result<Vec<f64>, EpiError> {
            let sim = model.simulate(&model.to_params(theta), steps)?;
            Ok(objective.residuals(&sim))
        };
        match run_rounds(residuals, init, &bounds, opts) {
            Ok(out) => {
                if best.as_ref().is_none_or(|b| out.sse < b.residual_sse) {
                    best = Some(EpiFitResult {
                        params: model.to_params(&out.params),
                        residual_sse: out.sse,
                        iterations: out.iterations,
                        converged: out.converged,
                        condition: out.condition,
                        start_index: k,
                    });
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(EpiError::NonFiniteInit))
}

/// Fitted features for one prefix, plus the fits for warm-starting the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpiFeatures {
    /// β, α (SIS); β, b, l, p, ε, ρ, R_SI (SEIZ); P_s, P_a, P_p, Q_s, Q_a,
    /// Q_p (SpikeM).
    pub values: [f64; 15],
    /// Residual SSE of SIS, SEIZ and SpikeM.
    pub sse: [f64; 3],
    pub converged: [bool; 3],
    pub sis: Option<SisParams>,
    pub seiz: Option<SeizParams>,
    pub spikem: Option<SpikeMParams>,
}

impl EpiFeatures {
    /// Zeros with every model flagged as not converged.
    pub fn fallback() -> Self {
        Self {
            values: [0.0; 15],
            sse: [0.0; 3],
            converged: [false; 3],
            sis: None,
            seiz: None,
            spikem: None,
        }
    }

    pub fn names() -> Vec<&'static str> {
        EPI_FEATURES
            .iter()
            .chain(SPIKEM_FEATURES.iter())
            .copied()
            .collect()
    }
}

/// Fit SIS, SEIZ and SpikeM to `prefix` with population fixed at
/// `population_factor` times its total volume.
pub fn fit_epi_features(prefix: &VolumeCurve, opts: &FitOptions) -> Result<EpiFeatures, EpiError> {
    fit_epi_features_warm(prefix, opts, None)
}

/// As [`fit_epi_features`], seeding each model's first start from `previous`.
pub fn fit_epi_features_warm(
    prefix: &VolumeCurve,
    opts: &FitOptions,
    previous: Option<&EpiFeatures>,
) -> Result<EpiFeatures, EpiError> {
    if prefix.len() < 2 {
        return Err(EpiError::InsufficientData(prefix.len()));
    }
    let total = prefix.total();
    if total <= 0.0 {
        return Ok(EpiFeatures::fallback());
    }
    let curve = &prefix.counts;
    let population = opts.population_factor * total;
    let mut out = EpiFeatures::fallback();

    let sis_model = SisModel { population };
    let warm = previous
        .and_then(|p| p.sis)
        .map(|p| SisParams { population, ..p });
    if let Ok(fit) = fit_model(&sis_model, curve, opts, warm.as_ref()) {
        out.values[0] = fit.params.beta;
        out.values[1] = fit.params.alpha;
        out.sse[0] = fit.residual_sse;
        out.converged[0] = fit.converged;
        out.sis = Some(fit.params);
    }

    let seiz_model = SeizModel::new(population);
    let warm = previous
        .and_then(|p| p.seiz)
        .map(|p| SeizParams { population, ..p });
    if let Ok(fit) = fit_model(&seiz_model, curve, opts, warm.as_ref()) {
        let p = fit.params;
        out.values[2..8].copy_from_slice(&[p.beta, p.b, p.l, p.p, p.epsilon, p.rho]);
        out.values[8] = rsi(&p).unwrap_or(0.0);
        out.sse[1] = fit.residual_sse;
        out.converged[1] = fit.converged;
        out.seiz = Some(p);
    }

    let spike_model = SpikeMModel::for_curve(population, curve);
    let warm = previous.and_then(|p| p.spikem).map(|p| SpikeMParams {
        population,
        beta_strength: p.beta_strength * p.population / population,
        ..p
    });
    if let Ok(fit) = fit_model(&spike_model, curve, opts, warm.as_ref()) {
        let p = fit.params;
        out.values[9..15].copy_from_slice(&[
            p.p_shift, p.p_amp, p.p_period, p.q_shift, p.q_amp, p.q_period,
        ]);
        out.sse[2] = fit.residual_sse;
        out.converged[2] = fit.converged;
        out.spikem = Some(p);
    }
    Ok(out)
}
