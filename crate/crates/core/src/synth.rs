//! Seeded synthetic corpus: labeled events whose hourly volume follows a
//! diffusion model and whose tweets, links and authors carry
//! class-dependent signals of tunable strength.
//!
//! Every distribution is a field of [`SynthSpec`], split into a `[rumor]`
//! and a `[news]` section, so a spec file fully documents the corpus it
//! produces.

use std::io::Write;

use chrono::{DateTime, Duration, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epi::{
    simulate_seiz, simulate_sis, simulate_spikem, EpiError, SeizParams, SisParams, SpikeMParams,
};
use crate::features::LookupTables;
use crate::ingestion::{Label, Tweet, UserProfile};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("spec field `{field}`: {message}")]
    Spec { field: String, message: String },
    #[error(transparent)]
    Epi(#[from] EpiError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Ingest(#[from] crate::ingestion::IngestError),
}

fn bad(field: &str, message: &str) -> SynthError {
    SynthError::Spec {
        field: field.to_string(),
        message: message.to_string(),
    }
}

/// Inclusive `[lo, hi]` range sampled uniformly.
pub type Range = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SisRange {
    pub beta: Range,
    pub alpha: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeizRange {
    pub beta: Range,
    pub b: Range,
    pub l: Range,
    pub p: Range,
    pub epsilon: Range,
    pub rho: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeMRange {
    /// `β·N`.
    pub strength: Range,
    pub shock: Range,
    pub p_amp: Range,
    pub q_amp: Range,
    pub q_period: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    /// Relative weights of SIS, SEIZ and SpikeM volume curves.
    pub model_weights: [f64; 3],
    pub sis: SisRange,
    pub seiz: SeizRange,
    pub spikem: SpikeMRange,
    /// Chance a tweet carries one of this class's cue phrases.
    pub cue_rate: f64,
    /// Chance a tweet carries a cue phrase of the other class.
    pub cross_cue_rate: f64,
    pub debunk_rate: f64,
    pub question_rate: f64,
    pub exclaim_rate: f64,
    pub url_rate: f64,
    /// Share of links pointing at news outlets.
    pub news_url_share: f64,
    pub hashtag_rate: f64,
    pub mention_rate: f64,
    pub retweet_rate: f64,
    /// Log-normal `(μ, σ)` of follower and friend counts.
    pub followers_log: [f64; 2],
    pub friends_log: [f64; 2],
    pub verified_rate: f64,
    pub city_rate: f64,
    pub description_rate: f64,
    /// Account age in days, uniform.
    pub account_age_days: Range,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub events_per_class: usize,
    /// Size per class of the separate labeled-tweet corpus used to train
    /// the credibility model.
    pub labeled_tweets_per_class: usize,
    pub start: DateTime<Utc>,
    /// Tweets drawn from the volume curve, uniform per event.
    pub volume: [usize; 2],
    /// Poisson rate of chatter added to every hour of the curve.
    pub baseline_rate: f64,
    /// Tweets placed well before the burst; always dropped by windowing.
    pub background_max: usize,
    pub hours: usize,
    pub rumor: ClassSpec,
    pub news: ClassSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        let base = ClassSpec {
            model_weights: [1.0, 1.0, 1.0],
            sis: SisRange {
                beta: [0.5, 0.9],
                alpha: [0.05, 0.2],
            },
            seiz: SeizRange {
                beta: [0.5, 1.0],
                b: [0.2, 0.6],
                l: [0.3, 0.7],
                p: [0.3, 0.7],
                epsilon: [0.05, 0.2],
                rho: [0.2, 0.8],
            },
            spikem: SpikeMRange {
                strength: [0.25, 0.4],
                shock: [2.0, 6.0],
                p_amp: [0.0, 0.4],
                q_amp: [1.0, 1.0],
                q_period: [60.0, 96.0],
            },
            cue_rate: 0.6,
            cross_cue_rate: 0.1,
            debunk_rate: 0.03,
            question_rate: 0.15,
            exclaim_rate: 0.15,
            url_rate: 0.4,
            news_url_share: 0.5,
            hashtag_rate: 0.3,
            mention_rate: 0.3,
            retweet_rate: 0.3,
            followers_log: [6.0, 1.5],
            friends_log: [5.5, 1.0],
            verified_rate: 0.05,
            city_rate: 0.4,
            description_rate: 0.7,
            account_age_days: [30.0, 3000.0],
        };
        let rumor = ClassSpec {
            model_weights: [1.0, 1.0, 2.0],
            spikem: SpikeMRange {
                q_period: [14.0, 24.0],
                ..base.spikem.clone()
            },
            debunk_rate: 0.12,
            question_rate: 0.3,
            news_url_share: 0.35,
            verified_rate: 0.03,
            followers_log: [5.7, 1.5],
            ..base.clone()
        };
        let news = ClassSpec {
            model_weights: [2.0, 2.0, 1.0],
            debunk_rate: 0.03,
            news_url_share: 0.65,
            verified_rate: 0.08,
            followers_log: [6.3, 1.5],
            ..base
        };
        Self {
            seed: 42,
            events_per_class: 100,
            labeled_tweets_per_class: 2000,
            start: DateTime::parse_from_rfc3339("2016-07-01T00:00:00Z")
                .expect("valid literal")
                .with_timezone(&Utc),
            volume: [150, 400],
            baseline_rate: 2.0,
            background_max: 3,
            hours: 48,
            rumor,
            news,
        }
    }
}

fn check_range(field: &str, r: Range, lo: f64, hi: f64) -> Result<(), SynthError> {
    if !(r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi) {
        return Err(bad(field, &format!("need {lo} <= lo <= hi <= {hi}")));
    }
    Ok(())
}

fn check_rate(field: &str, v: f64) -> Result<(), SynthError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(bad(field, "must lie in [0,1]"));
    }
    Ok(())
}

impl ClassSpec {
    fn validate(&self, class: &str) -> Result<(), SynthError> {
        let f = |name: &str| format!("{class}.{name}");
        if self
            .model_weights
            .iter()
            .any(|w| !(w.is_finite() && *w >= 0.0))
            || self.model_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(bad(
                &f("model_weights"),
                "need non-negative weights with a positive sum",
            ));
        }
        let inf = f64::INFINITY;
        check_range(&f("sis.beta"), self.sis.beta, 0.0, inf)?;
        check_range(&f("sis.alpha"), self.sis.alpha, 0.0, inf)?;
        check_range(&f("seiz.beta"), self.seiz.beta, 0.0, inf)?;
        check_range(&f("seiz.b"), self.seiz.b, 0.0, inf)?;
        check_range(&f("seiz.l"), self.seiz.l, 0.0, 1.0)?;
        check_range(&f("seiz.p"), self.seiz.p, 0.0, 1.0)?;
        check_range(&f("seiz.epsilon"), self.seiz.epsilon, 0.0, inf)?;
        check_range(&f("seiz.rho"), self.seiz.rho, 0.0, inf)?;
        check_range(&f("spikem.strength"), self.spikem.strength, 0.0, inf)?;
        check_range(&f("spikem.shock"), self.spikem.shock, 0.0, inf)?;
        check_range(&f("spikem.p_amp"), self.spikem.p_amp, 0.0, 1.0)?;
        check_range(&f("spikem.q_amp"), self.spikem.q_amp, 0.0, inf)?;
        check_range(&f("spikem.q_period"), self.spikem.q_period, 1e-9, inf)?;
        check_range(&f("account_age_days"), self.account_age_days, 0.0, inf)?;
        for (name, v) in [
            ("cue_rate", self.cue_rate),
            ("cross_cue_rate", self.cross_cue_rate),
            ("debunk_rate", self.debunk_rate),
            ("question_rate", self.question_rate),
            ("exclaim_rate", self.exclaim_rate),
            ("url_rate", self.url_rate),
            ("news_url_share", self.news_url_share),
            ("hashtag_rate", self.hashtag_rate),
            ("mention_rate", self.mention_rate),
            ("retweet_rate", self.retweet_rate),
            ("verified_rate", self.verified_rate),
            ("city_rate", self.city_rate),
            ("description_rate", self.description_rate),
        ] {
            check_rate(&f(name), v)?;
        }
        if self.cue_rate + self.cross_cue_rate > 1.0 {
            return Err(bad(
                &f("cross_cue_rate"),
                "cue_rate + cross_cue_rate must not exceed 1",
            ));
        }
        for (name, v) in [
            ("followers_log", self.followers_log),
            ("friends_log", self.friends_log),
        ] {
            if !(v[0].is_finite() && v[1].is_finite() && v[1] >= 0.0) {
                return Err(bad(&f(name), "need finite μ and σ >= 0"));
            }
        }
        Ok(())
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.events_per_class == 0 {
            return Err(bad("events_per_class", "must be positive"));
        }
        if self.hours < 2 {
            return Err(bad("hours", "must be at least 2"));
        }
        if self.volume[0] == 0 || self.volume[0] > self.volume[1] {
            return Err(bad("volume", "need 1 <= lo <= hi"));
        }
        if !(self.baseline_rate.is_finite() && self.baseline_rate >= 0.0) {
            return Err(bad("baseline_rate", "must be finite and >= 0"));
        }
        self.rumor.validate("rumor")?;
        self.news.validate("news")
    }

    fn class(&self, label: Label) -> &ClassSpec {
        match label {
            Label::Rumor => &self.rumor,
            Label::News => &self.news,
        }
    }
}

/// Parameters behind one event's volume curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum TruthParams {
    Sis(SisParams),
    Seiz(SeizParams),
    Spikem(SpikeMParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTruth {
    pub event_id: String,
    pub label: Label,
    pub params: TruthParams,
    /// Noise-free expected tweets per hour before the baseline is added.
    pub expected: Vec<f64>,
}

pub struct SynthCorpus {
    pub tweets: Vec<Tweet>,
    pub labels: Vec<(String, Label)>,
    pub labeled_tweets: Vec<(String, Label)>,
    pub truth: Vec<EventTruth>,
}

const TOPICS: [&str; 24] = [
    "bridge",
    "stadium",
    "airport",
    "mall",
    "subway",
    "harbor",
    "museum",
    "festival",
    "election",
    "storm",
    "earthquake",
    "concert",
    "hospital",
    "factory",
    "university",
    "parade",
    "border",
    "river",
    "tower",
    "station",
    "market",
    "summit",
    "ferry",
    "embassy",
];

const FILLER: [&str; 40] = [
    "the", "a", "in", "at", "near", "today", "now", "people", "city", "downtown", "this",
    "morning", "evening", "crowd", "street", "area", "news", "update", "just", "about", "after",
    "before", "local", "reports", "video", "photo", "live", "more", "many", "everyone", "going",
    "happened", "seen", "there", "while", "still", "again", "around", "big", "new",
];

const RUMOR_CUES: [&str; 14] = [
    "apparently",
    "supposedly",
    "allegedly",
    "heard that",
    "someone said",
    "word is",
    "insiders whisper",
    "secretly",
    "they are hiding",
    "share before deleted",
    "cover up",
    "leaked",
    "shocking truth",
    "my cousin says",
];

const NEWS_CUES: [&str; 14] = [
    "officials confirmed",
    "police said",
    "according to authorities",
    "press conference",
    "statement released",
    "spokesperson said",
    "confirmed by",
    "official update",
    "authorities report",
    "ministry announced",
    "mayor said",
    "investigation ongoing",
    "emergency services",
    "verified footage",
];

const DEBUNK: [&str; 8] = [
    "hoax",
    "fake",
    "not true",
    "debunked",
    "no evidence",
    "misleading",
    "is this true",
    "unconfirmed",
];

const EMOTICONS: [&str; 4] = [":-)", ";-)", ":-(", ":("];

const SMALL_TOWNS: [&str; 8] = [
    "springfield",
    "riverside",
    "fairview",
    "greenville",
    "kingston",
    "ashland",
    "clinton",
    "salem",
];

const NEWS_DOMAINS: [&str; 10] = [
    "bbc.com",
    "cnn.com",
    "nytimes.com",
    "reuters.com",
    "theguardian.com",
    "apnews.com",
    "npr.org",
    "cbsnews.com",
    "washingtonpost.com",
    "aljazeera.com",
];

const OTHER_DOMAINS: [&str; 10] = [
    "youtube.com",
    "facebook.com",
    "bit.ly",
    "imgur.com",
    "worldnewsdailyreport.com",
    "empirenews.net",
    "beforeitsnews.com",
    "yournewswire.com",
    "myblog.example",
    "viral.example",
];

fn uniform(rng: &mut ChaCha8Rng, r: Range) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

fn pick_model(rng: &mut ChaCha8Rng, w: [f64; 3]) -> usize {
    let total: f64 = w.iter().sum();
    let mut u = rng.random_range(0.0..total);
    for (i, wi) in w.iter().enumerate() {
        if u < *wi {
            return i;
        }
        u -= wi;
    }
    2
}

fn sample_curve(
    rng: &mut ChaCha8Rng,
    spec: &ClassSpec,
    hours: usize,
) -> Result<(TruthParams, Vec<f64>), SynthError> {
    let population = 1000.0;
    Ok(match pick_model(rng, spec.model_weights) {
        0 => {
            let p = SisParams {
                beta: uniform(rng, spec.sis.beta),
                alpha: uniform(rng, spec.sis.alpha),
                population,
            };
            (TruthParams::Sis(p), simulate_sis(&p, hours)?)
        }
        1 => {
            let r = &spec.seiz;
            let p = SeizParams {
                beta: uniform(rng, r.beta),
                b: uniform(rng, r.b),
                l: uniform(rng, r.l),
                p: uniform(rng, r.p),
                epsilon: uniform(rng, r.epsilon),
                rho: uniform(rng, r.rho),
                population,
                skeptic_seed: crate::epi::seiz::DEFAULT_SKEPTIC_SEED,
            };
            (TruthParams::Seiz(p), simulate_seiz(&p, hours)?)
        }
        _ => {
            let r = &spec.spikem;
            let q_period = uniform(rng, r.q_period);
            let p = SpikeMParams {
                beta_strength: uniform(rng, r.strength) / population,
                start: 0,
                shock: uniform(rng, r.shock),
                epsilon: 0.0,
                p_period: 24.0,
                p_amp: uniform(rng, r.p_amp),
                p_shift: rng.random_range(0.0..24.0),
                q_period,
                q_amp: uniform(rng, r.q_amp),
                // Start each event on a rising shock.
                q_shift: 0.75 * q_period,
                population,
            };
            (TruthParams::Spikem(p), simulate_spikem(&p, hours)?)
        }
    })
}

fn compose_text(rng: &mut ChaCha8Rng, spec: &ClassSpec, label: Label, topic: &str) -> String {
    let mut words: Vec<String> = Vec::new();
    let n_fill = rng.random_range(4..9);
    for _ in 0..n_fill {
        words.push((*FILLER.choose(rng).expect("non-empty")).to_string());
    }
    let at = rng.random_range(0..=words.len());
    words.insert(at, topic.to_string());
    let (own, other) = match label {
        Label::Rumor => (&RUMOR_CUES, &NEWS_CUES),
        Label::News => (&NEWS_CUES, &RUMOR_CUES),
    };
    let u: f64 = rng.random();
    let cue = if u < spec.cue_rate {
        own.choose(rng)
    } else if u < spec.cue_rate + spec.cross_cue_rate {
        other.choose(rng)
    } else {
        None
    };
    if let Some(c) = cue {
        let at = rng.random_range(0..=words.len());
        words.insert(at, (*c).to_string());
    }
    if rng.random_bool(spec.debunk_rate) {
        words.push((*DEBUNK.choose(rng).expect("non-empty")).to_string());
    }
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        text = first.to_uppercase() + &text[1..];
    }
    if rng.random_bool(spec.question_rate) {
        text.push('?');
    }
    if rng.random_bool(spec.exclaim_rate) {
        text.push('!');
    }
    if rng.random_bool(0.1) {
        text.push(' ');
        text.push_str(EMOTICONS.choose(rng).expect("non-empty"));
    }
    text
}

fn make_author(
    rng: &mut ChaCha8Rng,
    spec: &ClassSpec,
    created_at: DateTime<Utc>,
    cities: &[String],
) -> UserProfile {
    let followers = LogNormal::new(spec.followers_log[0], spec.followers_log[1])
        .expect("validated")
        .sample(rng);
    let friends = LogNormal::new(spec.friends_log[0], spec.friends_log[1])
        .expect("validated")
        .sample(rng);
    let location = if rng.random_bool(spec.city_rate) && !cities.is_empty() {
        Some(cities.choose(rng).expect("non-empty").clone())
    } else if rng.random_bool(0.5) {
        Some((*SMALL_TOWNS.choose(rng).expect("non-empty")).to_string())
    } else {
        None
    };
    let age_days = uniform(rng, spec.account_age_days);
    UserProfile {
        followers_count: followers.round() as u64,
        friends_count: friends.round() as u64,
        statuses_count: rng.random_range(10..50_000),
        photos_count: rng.random_range(0..500),
        verified: rng.random_bool(spec.verified_rate),
        has_description: rng.random_bool(spec.description_rate),
        location,
        join_date: created_at - Duration::seconds((age_days * 86_400.0) as i64),
    }
}

struct TweetFactory<'a> {
    spec: &'a ClassSpec,
    label: Label,
    topic: &'a str,
    cities: &'a [String],
}

impl TweetFactory<'_> {
    fn make(&self, rng: &mut ChaCha8Rng, id: String, event_id: &str, at: DateTime<Utc>) -> Tweet {
        let spec = self.spec;
        let text = compose_text(rng, spec, self.label, self.topic);
        let urls = if rng.random_bool(spec.url_rate) {
            let pool: &[&str] = if rng.random_bool(spec.news_url_share) {
                &NEWS_DOMAINS
            } else {
                &OTHER_DOMAINS
            };
            let d = pool.choose(rng).expect("non-empty");
            vec![format!(
                "https://{d}/{}/{}",
                self.topic,
                rng.random_range(1000..9999)
            )]
        } else {
            vec![]
        };
        let hashtags = if rng.random_bool(spec.hashtag_rate) {
            vec![self.topic.to_string()]
        } else {
            vec![]
        };
        let mentions = if rng.random_bool(spec.mention_rate) {
            vec![format!("user{}", rng.random_range(0..1000))]
        } else {
            vec![]
        };
        let is_retweet = rng.random_bool(spec.retweet_rate);
        Tweet {
            id,
            event_id: Some(event_id.to_string()),
            text,
            created_at: at,
            author: make_author(rng, spec, at, self.cities),
            is_retweet,
            retweet_count: if is_retweet {
                rng.random_range(1..200)
            } else {
                0
            },
            urls,
            hashtags,
            mentions,
        }
    }
}

fn stream(seed: u64, kind: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((kind << 32) | index as u64);
    rng
}

/// Build the corpus described by `spec`.
pub fn generate_synthetic_corpus(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let cities = LookupTables::bundled().large_cities;
    let mut corpus = SynthCorpus {
        tweets: Vec::new(),
        labels: Vec::new(),
        labeled_tweets: Vec::new(),
        truth: Vec::new(),
    };
    let n = spec.events_per_class;
    for k in 0..2 * n {
        // Interleave classes so any prefix of the event list is balanced.
        let label = if k % 2 == 0 {
            Label::Rumor
        } else {
            Label::News
        };
        let class = spec.class(label);
        let event_id = format!("{}{:04}", label.as_str(), k / 2);
        let mut rng = stream(spec.seed, 1, k);
        let topic = *TOPICS.choose(&mut rng).expect("non-empty");
        let (params, curve) = sample_curve(&mut rng, class, spec.hours)?;
        let total: f64 = curve.iter().sum();
        let volume = rng.random_range(spec.volume[0]..=spec.volume[1]) as f64;
        let expected: Vec<f64> = curve
            .iter()
            .map(|c| if total > 0.0 { volume * c / total } else { 0.0 })
            .collect();
        // Events start on different days and hours.
        let start = spec.start + Duration::hours(rng.random_range(0..24 * 60));
        let factory = TweetFactory {
            spec: class,
            label,
            topic,
            cities: &cities,
        };
        let mut stamps: Vec<DateTime<Utc>> = Vec::new();
        for (h, lambda) in expected.iter().enumerate() {
            let rate = lambda + spec.baseline_rate;
            let count = if rate > 0.0 {
                Poisson::new(rate).expect("positive rate").sample(&mut rng) as usize
            } else {
                0
            };
            for _ in 0..count {
                let offset = rng.random_range(0..3600);
                stamps.push(start + Duration::hours(h as i64) + Duration::seconds(offset));
            }
        }
        if stamps.is_empty() {
            stamps.push(start);
        }
        let n_background = rng.random_range(0..=spec.background_max);
        for _ in 0..n_background {
            let back = rng.random_range(72..240);
            stamps.push(start - Duration::hours(back));
        }
        stamps.sort();
        for (i, at) in stamps.into_iter().enumerate() {
            let id = format!("{event_id}-{i:05}");
            corpus
                .tweets
                .push(factory.make(&mut rng, id, &event_id, at));
        }
        corpus.labels.push((event_id.clone(), label));
        corpus.truth.push(EventTruth {
            event_id,
            label,
            params,
            expected,
        });
    }
    for k in 0..2 * spec.labeled_tweets_per_class {
        let label = if k % 2 == 0 {
            Label::Rumor
        } else {
            Label::News
        };
        let mut rng = stream(spec.seed, 2, k);
        let topic = *TOPICS.choose(&mut rng).expect("non-empty");
        let text = compose_text(&mut rng, spec.class(label), label, topic);
        corpus.labeled_tweets.push((text, label));
    }
    Ok(corpus)
}

/// Seed-fixed 200-event benchmark spec.
pub const BENCHMARK_SPEC: &str = include_str!("../data/synth/benchmark.toml");
/// Seed-fixed 20-event smoke-test spec.
pub const MINI_SPEC: &str = include_str!("../data/synth/mini.toml");

impl SynthSpec {
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let spec: Self = toml::from_str(text).map_err(|e| bad("spec", &e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn benchmark() -> Self {
        Self::from_toml(BENCHMARK_SPEC).expect("bundled spec is valid")
    }

    pub fn mini() -> Self {
        Self::from_toml(MINI_SPEC).expect("bundled spec is valid")
    }
}

/// Files written by [`write_corpus`].
pub const CORPUS_FILES: [&str; 6] = [
    "tweets.jsonl",
    "events.csv",
    "labeled_tweets.csv",
    "truth.json",
    "spec.toml",
    "pipeline.toml",
];

/// Write the corpus, its ground truth, the spec that produced it and a
/// pipeline config pointing at the corpus files.
pub fn write_corpus(
    corpus: &SynthCorpus,
    spec: &SynthSpec,
    dir: &std::path::Path,
) -> Result<(), SynthError> {
    use std::fs::File;
    use std::io::BufWriter;
    std::fs::create_dir_all(dir)?;
    crate::ingestion::write_tweets_jsonl(
        BufWriter::new(File::create(dir.join("tweets.jsonl"))?),
        &corpus.tweets,
    )?;
    crate::ingestion::write_events_csv(File::create(dir.join("events.csv"))?, &corpus.labels)?;
    write_labeled_tweets(
        BufWriter::new(File::create(dir.join("labeled_tweets.csv"))?),
        &corpus.labeled_tweets,
    )?;
    let truth =
        serde_json::to_string_pretty(&corpus.truth).map_err(|e| bad("truth", &e.to_string()))?;
    std::fs::write(dir.join("truth.json"), truth + "\n")?;
    let spec_text = toml::to_string(spec).map_err(|e| bad("spec", &e.to_string()))?;
    std::fs::write(dir.join("spec.toml"), spec_text)?;
    let pipeline = format!(
        "tweets = \"tweets.jsonl\"\nevents = \"events.csv\"\nlabeled_tweets = \"labeled_tweets.csv\"\nseed = {}\n",
        spec.seed
    );
    std::fs::write(dir.join("pipeline.toml"), pipeline)?;
    Ok(())
}

/// `text,label` rows.
pub fn write_labeled_tweets<W: Write>(
    writer: W,
    rows: &[(String, Label)],
) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["text", "label"]).map_err(csv_io)?;
    for (text, label) in rows {
        w.write_record([text.as_str(), label.as_str()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> SynthError {
    SynthError::Io(std::io::Error::other(e.to_string()))
}

/// Read `text,label` rows.
pub fn read_labeled_tweets<R: std::io::Read>(
    reader: R,
) -> Result<Vec<(String, Label)>, SynthError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_io)?;
        let line = i + 2;
        let (Some(text), Some(label)) = (rec.get(0), rec.get(1)) else {
            return Err(bad(
                "labeled_tweets",
                &format!("line {line}: expected text,label"),
            ));
        };
        let label = label
            .parse::<Label>()
            .map_err(|m| bad("labeled_tweets", &format!("line {line}: {m}")))?;
        out.push((text.to_string(), label));
    }
    Ok(out)
}
