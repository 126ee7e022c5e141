use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{loss, CredibilityModel, Hyper, Params, NEWS, PARAM_GROUPS, RUMOR};
use super::vocab::{build_vocabulary, tokenize_and_pad};
use super::CredibilityError;
use crate::ingestion::Label;

/// Class index of a label: rumor 0, news 1.
pub fn class_of(label: Label) -> usize {
    match label {
        Label::Rumor => RUMOR,
        Label::News => NEWS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Accuracy of the training-mode predictions seen during the epoch.
    pub train_accuracy: f64,
}

/// Mini-batch SGD, one epoch per [`Trainer::epoch`] call.
pub struct Trainer {
    model: CredibilityModel,
    data: Vec<(Vec<usize>, usize)>,
    rng: ChaCha8Rng,
    grads: Params,
    epochs_done: usize,
    pub log: Vec<EpochStats>,
}

impl Trainer {
    pub fn new(
        dataset: &[(String, Label)],
        hyper: Hyper,
        seed: u64,
    ) -> Result<Self, CredibilityError> {
        hyper.validate()?;
        let has = |l: Label| dataset.iter().any(|(_, x)| *x == l);
        if !has(Label::News) || !has(Label::Rumor) {
            return Err(CredibilityError::SingleClass);
        }
        let texts: Vec<&str> = dataset.iter().map(|(t, _)| t.as_str()).collect();
        let vocab = build_vocabulary(&texts, hyper.min_count)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = dataset
            .iter()
            .map(|(t, l)| (tokenize_and_pad(t, &vocab, hyper.max_len).0, class_of(*l)))
            .collect();
        let model = CredibilityModel::new(vocab, hyper, seed, &mut rng);
        let grads = Params::zeros(model.vocab.size(), &model.hyper);
        Ok(Self {
            model,
            data,
            rng,
            grads,
            epochs_done: 0,
            log: Vec::new(),
        })
    }

    pub fn model(&self) -> &CredibilityModel {
        &self.model
    }

    pub fn into_model(self) -> CredibilityModel {
        self.model
    }

    pub fn epoch(&mut self) -> Result<EpochStats, CredibilityError> {
        let epoch = self.epochs_done;
        let mut order: Vec<usize> = (0..self.data.len()).collect();
        order.shuffle(&mut self.rng);
        let lr = self.model.hyper.learning_rate;
        let (mut total, mut correct) = (0.0, 0usize);
        for batch in order.chunks(self.model.hyper.batch_size) {
            self.grads.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (ids, y) = &self.data[i];
                let cache = self.model.forward(ids, Some(&mut self.rng))?;
                total += loss(&cache.probs, *y);
                let pred = if cache.probs[NEWS] > cache.probs[RUMOR] {
                    NEWS
                } else {
                    RUMOR
                };
                correct += usize::from(pred == *y);
                self.model.backward(&cache, *y, scale, &mut self.grads);
            }
            self.model.params.add_scaled(&self.grads, -lr);
        }
        let mean_loss = total / self.data.len() as f64;
        if !mean_loss.is_finite() || !self.model.params.all_finite() {
            return Err(CredibilityError::Diverged { epoch });
        }
        self.epochs_done += 1;
        let stats = EpochStats {
            epoch,
            mean_loss,
            train_accuracy: correct as f64 / self.data.len() as f64,
        };
        self.log.push(stats);
        Ok(stats)
    }
}

/// Train for `hyper.epochs` epochs.
pub fn train_credibility(
    dataset: &[(String, Label)],
    hyper: Hyper,
    seed: u64,
) -> Result<(CredibilityModel, Vec<EpochStats>), CredibilityError> {
    let epochs = hyper.epochs;
    let mut trainer = Trainer::new(dataset, hyper, seed)?;
    for _ in 0..epochs {
        trainer.epoch()?;
    }
    let log = trainer.log.clone();
    Ok((trainer.into_model(), log))
}

/// Inference-mode accuracy on labeled texts.
pub fn accuracy(
    model: &CredibilityModel,
    dataset: &[(String, Label)],
) -> Result<f64, CredibilityError> {
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for (text, label) in dataset {
        let p = model.predict(text)?;
        let pred = if p.p_news > p.p_rumor {
            Label::News
        } else {
            Label::Rumor
        };
        correct += usize::from(pred == *label);
    }
    Ok(correct as f64 / dataset.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Worst relative error over all parameters.
    pub max_rel_error: f64,
    /// Worst absolute error over all parameters.
    pub max_abs_error: f64,
    /// Worst relative error per parameter group, in [`PARAM_GROUPS`] order.
    pub per_group: Vec<(&'static str, f64)>,
    /// Analytic gradient, for inspection.
    pub analytic: Params,
}

/// 64 tweets, alternating rumor and news, built from two disjoint
/// six-word vocabularies around a shared filler.
pub fn separable_toy_corpus() -> Vec<(String, Label)> {
    let rumor = ["hoax", "fake", "unverified", "claim", "allegedly", "rumor"];
    let news = [
        "confirmed",
        "official",
        "report",
        "announced",
        "police",
        "statement",
    ];
    (0..64)
        .map(|i| {
            let (pool, label) = if i % 2 == 0 {
                (&rumor, Label::Rumor)
            } else {
                (&news, Label::News)
            };
            let text = format!(
                "{} {} the event {}",
                pool[i % 6],
                pool[(i / 2) % 6],
                pool[(i / 3) % 6]
            );
            (text, label)
        })
        .collect()
}

/// Relative errors use `max(|a|, |n|, 1e-7)` as the denominator.
pub const GRAD_CHECK_FLOOR: f64 = 1e-7;

/// Compare the analytic gradient of the loss on one sample with central
/// differences of step `eps`, for every parameter. Dropout is off.
pub fn gradient_check(
    model: &CredibilityModel,
    ids: &[usize],
    label: usize,
    eps: f64,
) -> Result<GradCheck, CredibilityError> {
    let mut analytic = Params::zeros(model.vocab.size(), &model.hyper);
    let cache = model.forward(ids, None)?;
    model.backward(&cache, label, 1.0, &mut analytic);

    let mut probe = model.clone();
    let mut per_group = Vec::new();
    let (mut max_rel, mut max_abs) = (0.0f64, 0.0f64);
    for (g, name) in PARAM_GROUPS.iter().enumerate() {
        let mut worst = 0.0f64;
        for i in 0..analytic.groups()[g].len() {
            let orig = probe.params.groups()[g][i];
            probe.params.groups_mut()[g][i] = orig + eps;
            let lp = loss(&probe.forward(ids, None)?.probs, label);
            probe.params.groups_mut()[g][i] = orig - eps;
            let lm = loss(&probe.forward(ids, None)?.probs, label);
            probe.params.groups_mut()[g][i] = orig;
            let numeric = (lp - lm) / (2.0 * eps);
            let a = analytic.groups()[g][i];
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            worst = worst.max(rel);
            max_abs = max_abs.max(abs);
        }
        max_rel = max_rel.max(worst);
        per_group.push((*name, worst));
    }
    Ok(GradCheck {
        max_rel_error: max_rel,
        max_abs_error: max_abs,
        per_group,
        analytic,
    })
}
