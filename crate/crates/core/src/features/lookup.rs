//! Offline snapshots of the URL reputation data, the large-city list and
//! the sentiment lexicon.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use thiserror::Error;

use crate::text::normalize_whitespace;

/// Rank threshold used by the `URLRank5000` feature.
pub const RANK_THRESHOLD: u32 = 5000;
/// WOT score assumed for domains missing from the snapshot.
pub const NEUTRAL_WOT: f64 = 50.0;

pub const DOMAIN_RANK_FILE: &str = "domain_rank.tsv";
pub const DOMAIN_CATEGORY_FILE: &str = "domain_category.tsv";
pub const WOT_FILE: &str = "wot.tsv";
pub const CITIES_FILE: &str = "cities.txt";
pub const LEXICON_FILE: &str = "lexicon.tsv";
pub const NEWS_DOMAINS_FILE: &str = "news_domains.txt";

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{file}:{line}: {message}")]
    Format {
        file: String,
        line: usize,
        message: String,
    },
    #[error("missing table file {0}")]
    Missing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainCategory {
    News,
    NonNews,
}

/// Result of looking one URL up in the tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UrlClass {
    pub is_news: bool,
    pub rank_lt_5000: bool,
    pub wot: f64,
    pub in_news_list: bool,
    /// False when the URL could not be parsed; the other fields then hold
    /// the unknown-domain defaults.
    pub parsed: bool,
}

impl UrlClass {
    fn unknown(parsed: bool) -> Self {
        Self {
            is_news: false,
            rank_lt_5000: false,
            wot: NEUTRAL_WOT,
            in_news_list: false,
            parsed,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LookupTables {
    pub domain_rank: HashMap<String, u32>,
    pub domain_category: HashMap<String, DomainCategory>,
    pub wot_score: HashMap<String, f64>,
    /// Normalized (lowercase, single-spaced) city names.
    pub large_cities: Vec<String>,
    pub sentiment_lexicon: HashMap<String, f64>,
    pub news_domains: HashSet<String>,
}

fn tsv_rows<'a>(
    file: &'a str,
    content: &'a str,
) -> impl Iterator<Item = Result<(usize, &'a str, &'a str), TableError>> + 'a {
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(move |(i, l)| {
            let mut parts = l.splitn(2, '\t');
            match (parts.next(), parts.next()) {
                (Some(k), Some(v)) => Ok((i + 1, k.trim(), v.trim())),
                _ => Err(TableError::Format {
                    file: file.to_string(),
                    line: i + 1,
                    message: "expected two tab-separated columns".into(),
                }),
            }
        })
}

fn line_set(content: &str) -> impl Iterator<Item = String> + '_ {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(normalize_whitespace)
}

impl LookupTables {
    /// Tables shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_sources(
            include_str!("../../data/domain_rank.tsv"),
            include_str!("../../data/domain_category.tsv"),
            include_str!("../../data/wot.tsv"),
            include_str!("../../data/cities.txt"),
            include_str!("../../data/lexicon.tsv"),
            include_str!("../../data/news_domains.txt"),
        )
        .expect("bundled tables are well formed")
    }

    /// Load all six table files from a directory. Every file must exist.
    pub fn load_dir(dir: &Path) -> Result<Self, TableError> {
        let read = |name: &str| -> Result<String, TableError> {
            let path = dir.join(name);
            if !path.is_file() {
                return Err(TableError::Missing(path.display().to_string()));
            }
            Ok(std::fs::read_to_string(path)?)
        };
        Self::from_sources(
            &read(DOMAIN_RANK_FILE)?,
            &read(DOMAIN_CATEGORY_FILE)?,
            &read(WOT_FILE)?,
            &read(CITIES_FILE)?,
            &read(LEXICON_FILE)?,
            &read(NEWS_DOMAINS_FILE)?,
        )
    }

    pub fn from_sources(
        rank: &str,
        category: &str,
        wot: &str,
        cities: &str,
        lexicon: &str,
        news_domains: &str,
    ) -> Result<Self, TableError> {
        let bad = |file: &str, line: usize, message: String| TableError::Format {
            file: file.to_string(),
            line,
            message,
        };
        let mut tables = LookupTables::default();
        for row in tsv_rows(DOMAIN_RANK_FILE, rank) {
            let (line, k, v) = row?;
            let r: u32 = v
                .parse()
                .map_err(|e| bad(DOMAIN_RANK_FILE, line, format!("bad rank: {e}")))?;
            if r == 0 {
                return Err(bad(DOMAIN_RANK_FILE, line, "rank must be positive".into()));
            }
            tables.domain_rank.insert(k.to_lowercase(), r);
        }
        for row in tsv_rows(DOMAIN_CATEGORY_FILE, category) {
            let (line, k, v) = row?;
            let c = match v {
                "news" => DomainCategory::News,
                "non_news" => DomainCategory::NonNews,
                other => {
                    return Err(bad(
                        DOMAIN_CATEGORY_FILE,
                        line,
                        format!("unknown category `{other}`"),
                    ))
                }
            };
            tables.domain_category.insert(k.to_lowercase(), c);
        }
        for row in tsv_rows(WOT_FILE, wot) {
            let (line, k, v) = row?;
            let s: f64 = v
                .parse()
                .map_err(|e| bad(WOT_FILE, line, format!("bad score: {e}")))?;
            if !(0.0..=100.0).contains(&s) {
                return Err(bad(WOT_FILE, line, "score outside [0,100]".into()));
            }
            tables.wot_score.insert(k.to_lowercase(), s);
        }
        for row in tsv_rows(LEXICON_FILE, lexicon) {
            let (line, k, v) = row?;
            let p: f64 = v
                .parse()
                .map_err(|e| bad(LEXICON_FILE, line, format!("bad polarity: {e}")))?;
            if !(-1.0..=1.0).contains(&p) {
                return Err(bad(LEXICON_FILE, line, "polarity outside [-1,1]".into()));
            }
            tables.sentiment_lexicon.insert(k.to_lowercase(), p);
        }
        tables.large_cities = line_set(cities).collect();
        tables.news_domains = line_set(news_domains).collect();
        Ok(tables)
    }

    pub fn polarity(&self, token: &str) -> f64 {
        self.sentiment_lexicon.get(token).copied().unwrap_or(0.0)
    }

    /// Case-insensitive substring match of the location against the city list.
    pub fn is_large_city(&self, location: &str) -> bool {
        let loc = normalize_whitespace(location);
        !loc.is_empty() && self.large_cities.iter().any(|c| loc.contains(c.as_str()))
    }

    /// Look a URL up. Hosts are lowercased, `www.` is stripped and each table
    /// is probed from the full host down to its last two labels, so
    /// `news.bbc.co.uk` resolves to `bbc.co.uk`.
    pub fn classify_url(&self, url: &str) -> UrlClass {
        let Some(host) = host_of(url) else {
            return UrlClass::unknown(false);
        };
        let suffixes = host_suffixes(&host);
        let find = |pred: &dyn Fn(&str) -> bool| suffixes.iter().find(|s| pred(s)).cloned();

        let rank = find(&|s| self.domain_rank.contains_key(s)).map(|s| self.domain_rank[&s]);
        let category =
            find(&|s| self.domain_category.contains_key(s)).map(|s| self.domain_category[&s]);
        let wot = find(&|s| self.wot_score.contains_key(s))
            .map(|s| self.wot_score[&s])
            .unwrap_or(NEUTRAL_WOT);
        let in_news_list = find(&|s| self.news_domains.contains(s)).is_some();
        UrlClass {
            is_news: category == Some(DomainCategory::News),
            rank_lt_5000: rank.is_some_and(|r| r < RANK_THRESHOLD),
            wot,
            in_news_list,
            parsed: true,
        }
    }
}

fn host_of(raw: &str) -> Option<String> {
    let parsed = url::Url::parse(raw.trim()).ok()?;
    let host = parsed.host_str()?.trim_end_matches('.').to_lowercase();
    let host = host.strip_prefix("www.").unwrap_or(&host).to_string();
    (!host.is_empty()).then_some(host)
}

fn host_suffixes(host: &str) -> Vec<String> {
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() <= 2 {
        return vec![host.to_string()];
    }
    (0..=labels.len() - 2)
        .map(|i| labels[i..].join("."))
        .collect()
}
