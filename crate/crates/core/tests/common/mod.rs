//! Shared generators and independent oracles for the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use rumor_core::features::LookupTables;
use rumor_core::ingestion::{IntervalBucket, Tweet, UserProfile};
use rumor_core::text::tokenize;

const WORDS: &[&str] = &[
    "good",
    "great",
    "love",
    "bad",
    "terrible",
    "scary",
    "crazy",
    "safe",
    "police",
    "confirm",
    "rumor",
    "fake",
    "the",
    "a",
    "is",
    "I",
    "me",
    "We",
    "our",
    "you",
    "ur",
    "YOUR",
    "he",
    "She",
    "they",
    "them",
    "via",
    "VIA:",
    "$AAPL",
    "$5",
    "wow!",
    "really?",
    "what?!",
    "no!?",
    "omg!!",
    "why??",
    ":)",
    ":-(",
    ";)",
    ":->",
    ";-<",
    "#breaking",
    "@bbc",
    "Müller",
    "ÉCOLE",
    "東京",
    "123",
    "--",
    "it's",
    "Good.",
    "(bad)",
    "LOVE",
];

const URLS: &[&str] = &[
    "http://bbc.com/news/1",
    "https://www.bbc.co.uk/x",
    "https://news.bbc.co.uk/a?b=c",
    "http://cnn.com",
    "https://edition.cnn.com/2016/07/22",
    "https://reuters.com/article",
    "http://example.org/page",
    "https://blog.example.net",
    "https://t.co/abc",
    "http://WWW.BBC.COM/",
    "not a url",
    "http//broken",
    "",
];

const LOCATIONS: &[&str] = &[
    "London",
    "new  YORK city",
    "somewhere small",
    "Tokyo, Japan",
    "",
    "munich",
];

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2016, 7, 22, 18, 0, 0).unwrap()
}

pub fn tweet_strategy() -> impl Strategy<Value = Tweet> {
    let text = prop::collection::vec(prop::sample::select(WORDS), 0..14).prop_map(|w| w.join(" "));
    let urls = prop::collection::vec(prop::sample::select(URLS).prop_map(String::from), 0..4);
    let tags = prop::collection::vec("[a-z]{1,6}", 0..3);
    let mentions = prop::collection::vec("[a-z]{1,6}", 0..3);
    let counts = (0u64..5000, 0u64..5000, 0u64..100_000, 0u64..500, 0u64..1000);
    let flags = (any::<bool>(), any::<bool>(), any::<bool>());
    let location = prop::option::of(prop::sample::select(LOCATIONS).prop_map(String::from));
    let times = (0i64..3600, -30i64..4000);
    (text, urls, tags, mentions, counts, flags, location, times).prop_map(
        |(text, urls, hashtags, mentions, c, f, location, (secs, age_days))| {
            let created_at = base_time() + Duration::seconds(secs);
            Tweet {
                id: format!("t{secs}"),
                event_id: None,
                text,
                created_at,
                author: UserProfile {
                    followers_count: c.0,
                    friends_count: c.1,
                    statuses_count: c.2,
                    photos_count: c.3,
                    verified: f.0,
                    has_description: f.1,
                    location,
                    join_date: created_at - Duration::days(age_days),
                },
                is_retweet: f.2,
                retweet_count: c.4,
                urls,
                hashtags,
                mentions,
            }
        },
    )
}

pub fn bucket_strategy() -> impl Strategy<Value = IntervalBucket> {
    (0usize..48, prop::collection::vec(tweet_strategy(), 0..9))
        .prop_map(|(i, tweets)| IntervalBucket::new(i, tweets))
}

fn mean_of(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Straightforward per-feature recomputation of the 34 surface features.
pub fn oracle_surface(bucket: &IntervalBucket, tables: &LookupTables) -> Vec<f64> {
    let tw = &bucket.tweets;
    let n = tw.len();
    if n == 0 {
        let mut v = vec![0.0; 34];
        v[16 + 6] = 50.0;
        return v;
    }
    let toks: Vec<Vec<String>> = tw.iter().map(|t| tokenize(&t.text)).collect();
    let has_tok = |i: usize, set: &[&str]| toks[i].iter().any(|t| set.contains(&t.as_str()));
    let text_mean = |f: &dyn Fn(usize) -> f64| mean_of((0..n).map(f), n);

    let mut v = Vec::with_capacity(34);
    v.push(text_mean(&|i| tw[i].text.chars().count() as f64));
    v.push(text_mean(&|i| {
        tw[i].text.chars().collect::<BTreeSet<char>>().len() as f64
    }));
    v.push(text_mean(&|i| {
        let letters: Vec<char> = tw[i].text.chars().filter(|c| c.is_alphabetic()).collect();
        if letters.is_empty() {
            0.0
        } else {
            letters.iter().filter(|c| c.is_uppercase()).count() as f64 / letters.len() as f64
        }
    }));
    v.push(text_mean(&|i| {
        flag(
            [":->", ":-)", ";->", ";-)", ":)", ";)"]
                .iter()
                .any(|e| tw[i].text.contains(e)),
        )
    }));
    v.push(text_mean(&|i| {
        flag(
            [":-<", ":-(", ";-<", ";-(", ":(", ";("]
                .iter()
                .any(|e| tw[i].text.contains(e)),
        )
    }));
    v.push(text_mean(&|i| {
        toks[i].iter().filter(|t| tables.polarity(t) > 0.0).count() as f64
    }));
    v.push(text_mean(&|i| {
        toks[i].iter().filter(|t| tables.polarity(t) < 0.0).count() as f64
    }));
    v.push(text_mean(&|i| {
        if toks[i].is_empty() {
            0.0
        } else {
            toks[i].iter().map(|t| tables.polarity(t)).sum::<f64>() / toks[i].len() as f64
        }
    }));
    v.push(text_mean(&|i| flag(has_tok(i, &["via"]))));
    v.push(text_mean(&|i| flag(tw[i].text.contains('$'))));
    v.push(text_mean(&|i| flag(tw[i].text.contains('?'))));
    v.push(text_mean(&|i| flag(tw[i].text.contains('!'))));
    v.push(text_mean(&|i| {
        flag(
            ["??", "!!", "?!", "!?"]
                .iter()
                .any(|p| tw[i].text.contains(p)),
        )
    }));
    v.push(text_mean(&|i| {
        flag(has_tok(
            i,
            &["i", "me", "my", "mine", "we", "us", "our", "ours"],
        ))
    }));
    v.push(text_mean(&|i| {
        flag(has_tok(i, &["u", "you", "your", "yours", "ur"]))
    }));
    v.push(text_mean(&|i| {
        flag(has_tok(
            i,
            &[
                "he", "she", "they", "his", "her", "him", "hers", "them", "their", "theirs",
            ],
        ))
    }));

    let classes: Vec<Vec<_>> = tw
        .iter()
        .map(|t| t.urls.iter().map(|u| tables.classify_url(u)).collect())
        .collect();
    v.push(text_mean(&|i| flag(!tw[i].hashtags.is_empty())));
    v.push(text_mean(&|i| flag(!tw[i].mentions.is_empty())));
    v.push(text_mean(&|i| tw[i].urls.len() as f64));
    v.push(text_mean(&|i| tw[i].retweet_count as f64));
    v.push(text_mean(&|i| flag(tw[i].is_retweet)));
    v.push(text_mean(&|i| flag(classes[i].iter().any(|c| c.is_news))));
    let all: Vec<f64> = classes.iter().flatten().map(|c| c.wot).collect();
    v.push(if all.is_empty() {
        50.0
    } else {
        mean_of(all.iter().copied(), all.len())
    });
    v.push(text_mean(&|i| {
        flag(classes[i].iter().any(|c| c.rank_lt_5000))
    }));
    v.push(text_mean(&|i| {
        flag(classes[i].iter().any(|c| c.in_news_list))
    }));

    v.push(text_mean(&|i| tw[i].author.followers_count as f64));
    v.push(text_mean(&|i| tw[i].author.friends_count as f64));
    v.push(text_mean(&|i| tw[i].author.statuses_count as f64));
    v.push(text_mean(&|i| tw[i].author.photos_count as f64));
    v.push(text_mean(&|i| {
        let loc = tw[i]
            .author
            .location
            .clone()
            .unwrap_or_default()
            .to_lowercase();
        let loc = loc.split_whitespace().collect::<Vec<_>>().join(" ");
        flag(!loc.is_empty() && tables.large_cities.iter().any(|c| loc.contains(c.as_str())))
    }));
    v.push(text_mean(&|i| {
        let secs = (tw[i].created_at - tw[i].author.join_date).num_seconds();
        secs.max(0) as f64 / 86_400.0
    }));
    v.push(text_mean(&|i| flag(tw[i].author.has_description)));
    v.push(text_mean(&|i| flag(tw[i].author.verified)));
    v.push(text_mean(&|i| {
        let a = &tw[i].author;
        let d = a.followers_count + a.friends_count;
        if d == 0 {
            0.0
        } else {
            a.friends_count as f64 / d as f64
        }
    }));
    v
}

/// First index where the two vectors differ by more than `tol` relative.
pub fn first_mismatch(a: &[f64], b: &[f64], tol: f64) -> Option<usize> {
    if a.len() != b.len() {
        return Some(a.len().min(b.len()));
    }
    a.iter()
        .zip(b)
        .position(|(x, y)| (x - y).abs() > tol * x.abs().max(y.abs()).max(1.0))
}

/// Naive DSTS assembly: loops over columns, per-event z-score with the
/// population deviation, constant columns zeroed, then forward slopes.
pub fn oracle_dsts(frames: &[Vec<f64>], interval_hours: f64, normalize: bool) -> Vec<f64> {
    let n = frames.len();
    let d = frames[0].len();
    let mut emitted = vec![vec![0.0; d]; n];
    for k in 0..d {
        let mut sum = 0.0;
        for row in frames {
            sum += row[k];
        }
        let first = sum / n as f64;
        let mut resid = 0.0;
        for row in frames {
            resid += row[k] - first;
        }
        let mean = first + resid / n as f64;
        let mut ss = 0.0;
        for row in frames {
            ss += (row[k] - mean) * (row[k] - mean);
        }
        let std = (ss / n as f64).sqrt();
        let constant = std == 0.0 || std <= 1e-12 * mean.abs();
        for t in 0..n {
            emitted[t][k] = if !normalize {
                frames[t][k]
            } else if constant {
                0.0
            } else {
                (frames[t][k] - mean) / std
            };
        }
    }
    let mut out = Vec::new();
    for row in &emitted {
        out.extend_from_slice(row);
    }
    for t in 0..n.saturating_sub(1) {
        for k in 0..d {
            out.push((emitted[t + 1][k] - emitted[t][k]) / interval_hours);
        }
    }
    out
}

/// Random frames with some constant columns and, when `near_constant`,
/// columns whose spread is tiny next to their level.
pub fn random_frames(
    rng: &mut ChaCha8Rng,
    n: usize,
    d: usize,
    near_constant: bool,
) -> Vec<Vec<f64>> {
    let kinds: Vec<u8> = (0..d)
        .map(|_| loop {
            let k = rng.random_range(0..4);
            if near_constant || k != 2 {
                break k;
            }
        })
        .collect();
    let levels: Vec<f64> = (0..d).map(|_| rng.random_range(-1e3..1e3)).collect();
    (0..n)
        .map(|_| {
            (0..d)
                .map(|k| match kinds[k] {
                    0 => levels[k],
                    1 => rng.random_range(0.0..1.0),
                    2 => levels[k] + rng.random_range(-1.0..1.0) * 1e-3,
                    _ => rng.random_range(-1e4..1e4),
                })
                .collect()
        })
        .collect()
}

/// Multiply every point by `1 + sigma·z`, clipped at zero.
pub fn multiplicative_noise(curve: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let z = Normal::new(0.0, sigma).unwrap();
    curve
        .iter()
        .map(|&v| (v * (1.0 + z.sample(rng))).max(0.0))
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

pub fn sse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Cramér-Rao lower bound on the relative standard deviation of each
/// parameter, for noise with standard deviation `sigma` times the volume.
/// Infinite when the Fisher information is singular or a parameter is zero.
pub fn relative_crlb(theta: &[f64], sigma: f64, simulate: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let y = simulate(theta);
    let p = theta.len();
    let mut jac = nalgebra::DMatrix::<f64>::zeros(y.len(), p);
    for k in 0..p {
        let h = 1e-6 * theta[k].abs().max(1e-3);
        // One-sided at a zero lower bound.
        let (lo, width) = if theta[k] == 0.0 {
            (0.0, h)
        } else {
            (h, 2.0 * h)
        };
        let (mut up, mut down) = (theta.to_vec(), theta.to_vec());
        up[k] += h;
        down[k] -= lo;
        let (a, b) = (simulate(&up), simulate(&down));
        for i in 0..y.len() {
            jac[(i, k)] = (a[i] - b[i]) / width;
        }
    }
    let mut fisher = nalgebra::DMatrix::<f64>::zeros(p, p);
    for i in 0..y.len() {
        let var = (sigma * y[i]).powi(2).max(1e-12);
        for a in 0..p {
            for b in 0..p {
                fisher[(a, b)] += jac[(i, a)] * jac[(i, b)] / var;
            }
        }
    }
    match fisher.try_inverse() {
        Some(cov) => (0..p)
            .map(|k| cov[(k, k)].max(0.0).sqrt() / theta[k].abs())
            .collect(),
        None => vec![f64::INFINITY; p],
    }
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
