//! Embedding → convolution (tanh) → width-2 max pooling → LSTM → softmax.
//!
//! All tensors are flat row-major `Vec<f64>`. Class 0 is rumor, class 1 is
//! news.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::Vocabulary;
use super::CredibilityError;

pub const RUMOR: usize = 0;
pub const NEWS: usize = 1;
pub const POOL_WIDTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub embed_dim: usize,
    pub max_len: usize,
    pub window: usize,
    pub filters: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init: InitScheme,
    /// Bound of the uniform draw for [`InitScheme::Uniform`] and for the
    /// embedding under [`InitScheme::Glorot`].
    pub init_scale: f64,
    /// Added to the forget-gate biases after the uniform draw.
    pub forget_bias: f64,
    pub min_count: usize,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            embed_dim: 50,
            max_len: 40,
            window: 3,
            filters: 64,
            hidden: 100,
            dropout: 0.25,
            learning_rate: 0.05,
            batch_size: 32,
            epochs: 30,
            init: InitScheme::Glorot,
            init_scale: 0.25,
            forget_bias: 2.0,
            min_count: 1,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<(), CredibilityError> {
        let bad = |m: &str| Err(CredibilityError::Hyper(m.to_string()));
        if self.embed_dim == 0 || self.filters == 0 || self.hidden == 0 || self.window == 0 {
            return bad("dimensions must be positive");
        }
        if self.max_len < self.window + 1 {
            return bad("max_len must exceed the convolution window");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0,1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        Ok(())
    }

    /// Length of each feature map.
    pub fn conv_len(&self) -> usize {
        self.max_len - self.window + 1
    }

    /// LSTM steps after pooling.
    pub fn pooled_len(&self) -> usize {
        self.conv_len() / POOL_WIDTH
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Every tensor uniform in `[-init_scale, init_scale]`.
    Uniform,
    /// Weight matrices uniform in `±sqrt(6 / (fan_in + fan_out))`, biases
    /// zero, embedding as in `Uniform`.
    Glorot,
}

/// Trainable tensors. Also used for gradients of the same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// V × k
    pub embedding: Vec<f64>,
    /// F × (h·k)
    pub conv_w: Vec<f64>,
    /// F
    pub conv_b: Vec<f64>,
    /// 4d × F, gate blocks in order input, forget, output, candidate.
    pub lstm_w: Vec<f64>,
    /// 4d × d
    pub lstm_u: Vec<f64>,
    /// 4d
    pub lstm_b: Vec<f64>,
    /// d × 2
    pub out_w: Vec<f64>,
    /// 2
    pub out_b: Vec<f64>,
}

pub const PARAM_GROUPS: [&str; 8] = [
    "embedding",
    "conv_w",
    "conv_b",
    "lstm_w",
    "lstm_u",
    "lstm_b",
    "out_w",
    "out_b",
];

impl Params {
    pub fn zeros(vocab: usize, hy: &Hyper) -> Self {
        let (k, f, d) = (hy.embed_dim, hy.filters, hy.hidden);
        Self {
            embedding: vec![0.0; vocab * k],
            conv_w: vec![0.0; f * hy.window * k],
            conv_b: vec![0.0; f],
            lstm_w: vec![0.0; 4 * d * f],
            lstm_u: vec![0.0; 4 * d * d],
            lstm_b: vec![0.0; 4 * d],
            out_w: vec![0.0; d * 2],
            out_b: vec![0.0; 2],
        }
    }

    pub fn uniform(vocab: usize, hy: &Hyper, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(vocab, hy);
        let (k, f, d) = (hy.embed_dim, hy.filters, hy.hidden);
        let glorot = |fan_in: usize, fan_out: usize| (6.0 / (fan_in + fan_out) as f64).sqrt();
        let scales: [f64; 8] = match hy.init {
            InitScheme::Uniform => [hy.init_scale; 8],
            InitScheme::Glorot => [
                hy.init_scale,
                glorot(hy.window * k, f),
                0.0,
                glorot(f, 4 * d),
                glorot(d, 4 * d),
                0.0,
                glorot(d, 2),
                0.0,
            ],
        };
        for (group, s) in p.groups_mut().into_iter().zip(scales) {
            for v in group.iter_mut() {
                *v = if s > 0.0 {
                    rng.random_range(-s..=s)
                } else {
                    0.0
                };
            }
        }
        p.lstm_b[d..2 * d]
            .iter_mut()
            .for_each(|b| *b += hy.forget_bias);
        p
    }

    pub fn groups(&self) -> [&Vec<f64>; 8] {
        [
            &self.embedding,
            &self.conv_w,
            &self.conv_b,
            &self.lstm_w,
            &self.lstm_u,
            &self.lstm_b,
            &self.out_w,
            &self.out_b,
        ]
    }

    pub fn groups_mut(&mut self) -> [&mut Vec<f64>; 8] {
        [
            &mut self.embedding,
            &mut self.conv_w,
            &mut self.conv_b,
            &mut self.lstm_w,
            &mut self.lstm_u,
            &mut self.lstm_b,
            &mut self.out_w,
            &mut self.out_b,
        ]
    }

    pub fn fill(&mut self, value: f64) {
        for g in self.groups_mut() {
            g.iter_mut().for_each(|v| *v = value);
        }
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        for (a, b) in self.groups_mut().into_iter().zip(other.groups()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.groups()
            .iter()
            .all(|g| g.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibilityPrediction {
    pub p_news: f64,
    pub p_rumor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredibilityModel {
    pub hyper: Hyper,
    pub vocab: Vocabulary,
    pub params: Params,
    pub seed: u64,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Cache {
    ids: Vec<usize>,
    /// conv_len × F, after tanh
    conv: Vec<f64>,
    /// pooled_len × F
    pooled: Vec<f64>,
    /// pooled_len × F, index into `conv` rows that won each pool
    argmax: Vec<usize>,
    /// (T+1) × d, row 0 is the zero initial state
    h: Vec<f64>,
    c: Vec<f64>,
    /// T × 4d gate activations (i, f, o after sigmoid, g after tanh)
    gates: Vec<f64>,
    /// d; dropout mask scaled by 1/(1-r), ones at inference
    mask: Vec<f64>,
    /// Final hidden state after dropout.
    dropped: Vec<f64>,
    pub probs: [f64; 2],
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check(layer: &'static str, values: &[f64]) -> Result<(), CredibilityError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(CredibilityError::NonFinite(layer))
    }
}

impl CredibilityModel {
    pub fn new(vocab: Vocabulary, hyper: Hyper, seed: u64, rng: &mut ChaCha8Rng) -> Self {
        let params = Params::uniform(vocab.size(), &hyper, rng);
        Self {
            hyper,
            vocab,
            params,
            seed,
        }
    }

    /// Forward pass. `dropout_rng` enables training-mode dropout.
    pub fn forward(
        &self,
        ids: &[usize],
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Cache, CredibilityError> {
        let hy = &self.hyper;
        let (k, h, nf, d) = (hy.embed_dim, hy.window, hy.filters, hy.hidden);
        let vocab = self.vocab.size();
        if ids.len() != hy.max_len {
            return Err(CredibilityError::Shape(format!(
                "encoding has length {}, expected {}",
                ids.len(),
                hy.max_len
            )));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= vocab) {
            return Err(CredibilityError::Shape(format!(
                "token id {bad} >= {vocab}"
            )));
        }
        let p = &self.params;
        let m = hy.conv_len();
        let t_len = hy.pooled_len();

        let mut conv = vec![0.0; m * nf];
        for i in 0..m {
            for f in 0..nf {
                let w = &p.conv_w[f * h * k..(f + 1) * h * k];
                let mut acc = p.conv_b[f];
                for j in 0..h {
                    let x = &p.embedding[ids[i + j] * k..(ids[i + j] + 1) * k];
                    let wj = &w[j * k..(j + 1) * k];
                    acc += wj.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                }
                conv[i * nf + f] = acc.tanh();
            }
        }
        check("convolution", &conv)?;

        let mut pooled = vec![0.0; t_len * nf];
        let mut argmax = vec![0; t_len * nf];
        for s in 0..t_len {
            for f in 0..nf {
                let (r0, r1) = (POOL_WIDTH * s, POOL_WIDTH * s + 1);
                let (a, b) = (conv[r0 * nf + f], conv[r1 * nf + f]);
                let (win, val) = if b > a { (r1, b) } else { (r0, a) };
                pooled[s * nf + f] = val;
                argmax[s * nf + f] = win;
            }
        }

        let mut hs = vec![0.0; (t_len + 1) * d];
        let mut cs = vec![0.0; (t_len + 1) * d];
        let mut gates = vec![0.0; t_len * 4 * d];
        let mut z = vec![0.0; 4 * d];
        for s in 0..t_len {
            let x = &pooled[s * nf..(s + 1) * nf];
            let hp = &hs[s * d..(s + 1) * d];
            for r in 0..4 * d {
                let wr = &p.lstm_w[r * nf..(r + 1) * nf];
                let ur = &p.lstm_u[r * d..(r + 1) * d];
                z[r] = p.lstm_b[r]
                    + wr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                    + ur.iter().zip(hp).map(|(a, b)| a * b).sum::<f64>();
            }
            let g = &mut gates[s * 4 * d..(s + 1) * 4 * d];
            for j in 0..d {
                let (ig, fg, og, cg) = (
                    sigmoid(z[j]),
                    sigmoid(z[d + j]),
                    sigmoid(z[2 * d + j]),
                    z[3 * d + j].tanh(),
                );
                g[j] = ig;
                g[d + j] = fg;
                g[2 * d + j] = og;
                g[3 * d + j] = cg;
                let c_new = fg * cs[s * d + j] + ig * cg;
                cs[(s + 1) * d + j] = c_new;
                hs[(s + 1) * d + j] = og * c_new.tanh();
            }
        }
        check("lstm", &hs)?;

        let last = &hs[t_len * d..];
        let mask: Vec<f64> = match dropout_rng {
            Some(rng) if hy.dropout > 0.0 => {
                let keep = 1.0 / (1.0 - hy.dropout);
                (0..d)
                    .map(|_| {
                        if rng.random::<f64>() < hy.dropout {
                            0.0
                        } else {
                            keep
                        }
                    })
                    .collect()
            }
            _ => vec![1.0; d],
        };
        let dropped: Vec<f64> = last.iter().zip(&mask).map(|(a, b)| a * b).collect();
        let mut logits = [p.out_b[0], p.out_b[1]];
        for j in 0..d {
            logits[0] += dropped[j] * p.out_w[j * 2];
            logits[1] += dropped[j] * p.out_w[j * 2 + 1];
        }
        let mx = logits[0].max(logits[1]);
        let e0 = (logits[0] - mx).exp();
        let e1 = (logits[1] - mx).exp();
        let probs = [e0 / (e0 + e1), e1 / (e0 + e1)];
        check("softmax", &probs)?;

        Ok(Cache {
            ids: ids.to_vec(),
            conv,
            pooled,
            argmax,
            h: hs,
            c: cs,
            gates,
            mask,
            dropped,
            probs,
        })
    }

    pub fn predict_ids(&self, ids: &[usize]) -> Result<CredibilityPrediction, CredibilityError> {
        let cache = self.forward(ids, None)?;
        Ok(CredibilityPrediction {
            p_rumor: cache.probs[RUMOR],
            p_news: cache.probs[NEWS],
        })
    }

    pub fn predict(&self, text: &str) -> Result<CredibilityPrediction, CredibilityError> {
        let enc = super::vocab::tokenize_and_pad(text, &self.vocab, self.hyper.max_len);
        self.predict_ids(&enc.0)
    }

    /// Accumulate `scale · ∂(−ln p_label)/∂θ` into `grads`.
    pub fn backward(&self, cache: &Cache, label: usize, scale: f64, grads: &mut Params) {
        let hy = &self.hyper;
        let (k, h, nf, d) = (hy.embed_dim, hy.window, hy.filters, hy.hidden);
        let p = &self.params;
        let m = hy.conv_len();
        let t_len = hy.pooled_len();

        let mut dlogits = cache.probs;
        dlogits[label] -= 1.0;
        dlogits.iter_mut().for_each(|v| *v *= scale);
        grads.out_b[0] += dlogits[0];
        grads.out_b[1] += dlogits[1];
        let mut dh = vec![0.0; d];
        for j in 0..d {
            grads.out_w[j * 2] += cache.dropped[j] * dlogits[0];
            grads.out_w[j * 2 + 1] += cache.dropped[j] * dlogits[1];
            dh[j] = (p.out_w[j * 2] * dlogits[0] + p.out_w[j * 2 + 1] * dlogits[1]) * cache.mask[j];
        }

        let mut dc = vec![0.0; d];
        let mut dz = vec![0.0; 4 * d];
        let mut dpooled = vec![0.0; t_len * nf];
        for s in (0..t_len).rev() {
            let g = &cache.gates[s * 4 * d..(s + 1) * 4 * d];
            let c_prev = &cache.c[s * d..(s + 1) * d];
            let c_cur = &cache.c[(s + 1) * d..(s + 2) * d];
            for j in 0..d {
                let (ig, fg, og, cg) = (g[j], g[d + j], g[2 * d + j], g[3 * d + j]);
                let tc = c_cur[j].tanh();
                let d_o = dh[j] * tc;
                let dcj = dc[j] + dh[j] * og * (1.0 - tc * tc);
                dz[j] = dcj * cg * ig * (1.0 - ig);
                dz[d + j] = dcj * c_prev[j] * fg * (1.0 - fg);
                dz[2 * d + j] = d_o * og * (1.0 - og);
                dz[3 * d + j] = dcj * ig * (1.0 - cg * cg);
                dc[j] = dcj * fg;
            }
            let x = &cache.pooled[s * nf..(s + 1) * nf];
            let hp = &cache.h[s * d..(s + 1) * d];
            let dx = &mut dpooled[s * nf..(s + 1) * nf];
            dh.iter_mut().for_each(|v| *v = 0.0);
            for r in 0..4 * d {
                let dzr = dz[r];
                if dzr == 0.0 {
                    continue;
                }
                grads.lstm_b[r] += dzr;
                let wr = &p.lstm_w[r * nf..(r + 1) * nf];
                let gw = &mut grads.lstm_w[r * nf..(r + 1) * nf];
                for f in 0..nf {
                    gw[f] += dzr * x[f];
                    dx[f] += dzr * wr[f];
                }
                let ur = &p.lstm_u[r * d..(r + 1) * d];
                let gu = &mut grads.lstm_u[r * d..(r + 1) * d];
                for j in 0..d {
                    gu[j] += dzr * hp[j];
                    dh[j] += dzr * ur[j];
                }
            }
        }

        let mut dconv = vec![0.0; m * nf];
        for s in 0..t_len {
            for f in 0..nf {
                dconv[cache.argmax[s * nf + f] * nf + f] += dpooled[s * nf + f];
            }
        }
        for i in 0..m {
            for f in 0..nf {
                let y = cache.conv[i * nf + f];
                let da = dconv[i * nf + f] * (1.0 - y * y);
                if da == 0.0 {
                    continue;
                }
                grads.conv_b[f] += da;
                for j in 0..h {
                    let id = cache.ids[i + j];
                    let x = &p.embedding[id * k..(id + 1) * k];
                    let base = f * h * k + j * k;
                    for c in 0..k {
                        grads.conv_w[base + c] += da * x[c];
                        grads.embedding[id * k + c] += da * p.conv_w[base + c];
                    }
                }
            }
        }
    }
}

/// Negative log-likelihood of `label`; probabilities below 1e-12 are clamped.
pub fn loss(probs: &[f64; 2], label: usize) -> f64 {
    let p = probs[label];
    if p < 1e-12 {
        log::debug!("clamping p(true) = {p} to 1e-12");
    }
    -(p.max(1e-12)).ln()
}

/// Mean of [`loss`] over a batch.
pub fn batch_loss(batch: &[([f64; 2], usize)]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.iter().map(|(p, y)| loss(p, *y)).sum::<f64>() / batch.len() as f64
}
