//! Tweet records, labeled events and the 48-hour burst window.
//!
//! Input is a `tweets.jsonl` stream (one object per line) plus an
//! `events.csv` label table. An event's window is anchored on its busiest
//! interval; tweets are then assigned to half-open buckets
//! `[t_0 + i*len, t_0 + (i+1)*len)`. Tweets falling outside the window are
//! dropped and reported, never silently lost.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed JSON: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: schema error in field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("event has no timestamps")]
    EmptyEvent,
    #[error("event `{0}` is listed in events.csv but has no tweets")]
    EventWithoutTweets(String),
    #[error("tweet `{tweet_id}` references unknown event `{event_id}`")]
    UnknownEvent { tweet_id: String, event_id: String },
    #[error("tweet `{0}` has no event_id")]
    MissingEventId(String),
    #[error("duplicate tweet id `{0}`")]
    DuplicateTweetId(String),
    #[error("events.csv line {line}: {message}")]
    Labels { line: usize, message: String },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub followers_count: u64,
    pub friends_count: u64,
    pub statuses_count: u64,
    pub photos_count: u64,
    pub verified: bool,
    pub has_description: bool,
    pub location: Option<String>,
    pub join_date: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub event_id: Option<String>,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub author: UserProfile,
    pub is_retweet: bool,
    pub retweet_count: u64,
    pub urls: Vec<String>,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    News,
    Rumor,
}

impl Label {
    /// Class index used by the classifiers: rumor = 1, news = 0.
    pub fn as_class(self) -> u8 {
        match self {
            Label::News => 0,
            Label::Rumor => 1,
        }
    }

    pub fn from_class(class: u8) -> Label {
        if class == 1 {
            Label::Rumor
        } else {
            Label::News
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::News => "news",
            Label::Rumor => "rumor",
        }
    }
}

impl std::str::FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "rumor" => Ok(Label::Rumor),
            "news" => Ok(Label::News),
            other => Err(format!("unknown label `{other}` (expected rumor|news)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub event_id: String,
    pub label: Label,
    pub tweets: Vec<Tweet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventWindow {
    /// Start of the busiest interval.
    pub t_max: DateTime<Utc>,
    pub t_0: DateTime<Utc>,
    pub t_end: DateTime<Utc>,
    pub interval_length: Duration,
    pub n_intervals: usize,
}

impl EventWindow {
    pub fn interval_hours(&self) -> f64 {
        self.interval_length.num_milliseconds() as f64 / 3_600_000.0
    }

    pub fn interval_start(&self, index: usize) -> DateTime<Utc> {
        self.t_0 + self.interval_length * index as i32
    }

    /// Bucket index for a timestamp, `None` outside `[t_0, t_end)`.
    pub fn index_of(&self, ts: DateTime<Utc>) -> Option<usize> {
        if ts < self.t_0 || ts >= self.t_end {
            return None;
        }
        let offset = (ts - self.t_0).num_milliseconds();
        Some((offset / self.interval_length.num_milliseconds()) as usize)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBucket {
    pub index: usize,
    pub tweets: Vec<Tweet>,
}

impl IntervalBucket {
    pub fn new(index: usize, tweets: Vec<Tweet>) -> Self {
        Self { index, tweets }
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub event_id: String,
    pub dropped_count: usize,
}

// Wire format of one tweets.jsonl line.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum IdValue {
    Text(String),
    Number(u64),
}

impl IdValue {
    fn into_string(self) -> String {
        match self {
            IdValue::Text(s) => s,
            IdValue::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum DescriptionValue {
    Flag(bool),
    Text(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct UserRecord {
    #[serde(default)]
    followers: u64,
    #[serde(default)]
    friends: u64,
    #[serde(default)]
    statuses: u64,
    #[serde(default)]
    photos: u64,
    #[serde(default)]
    verified: bool,
    #[serde(default)]
    description: Option<DescriptionValue>,
    #[serde(default)]
    location: Option<String>,
    #[serde(default)]
    join_date: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TweetRecord {
    id: IdValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    event_id: Option<String>,
    text: String,
    created_at: String,
    #[serde(default)]
    is_retweet: bool,
    #[serde(default)]
    retweet_count: u64,
    #[serde(default)]
    urls: Vec<String>,
    #[serde(default)]
    hashtags: Vec<String>,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default)]
    user: Option<UserRecord>,
}

const REQUIRED_FIELDS: [&str; 3] = ["id", "text", "created_at"];

fn parse_timestamp(raw: &str, line: usize, field: &str) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(raw.trim())
        .map(|ts| ts.with_timezone(&Utc))
        .map_err(|e| IngestError::Schema {
            line,
            field: field.to_string(),
            message: format!("not an ISO-8601 timestamp: {e}"),
        })
}

/// Parse one `tweets.jsonl` line. `line_no` is 1-based and only used for
/// error messages.
pub fn parse_tweet_record(line: &str, line_no: usize) -> Result<Tweet> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| IngestError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
    let obj = value.as_object().ok_or_else(|| IngestError::Malformed {
        line: line_no,
        message: "expected a JSON object".into(),
    })?;
    for field in REQUIRED_FIELDS {
        if obj.get(field).is_none_or(|v| v.is_null()) {
            return Err(IngestError::Schema {
                line: line_no,
                field: field.to_string(),
                message: "required field is missing".into(),
            });
        }
    }
    let record: TweetRecord = serde_json::from_value(value).map_err(|e| IngestError::Schema {
        line: line_no,
        field: field_from_serde_message(&e.to_string()),
        message: e.to_string(),
    })?;

    let created_at = parse_timestamp(&record.created_at, line_no, "created_at")?;
    let user = record.user.unwrap_or_default();
    let join_date = match &user.join_date {
        Some(raw) => parse_timestamp(raw, line_no, "user.join_date")?,
        None => created_at,
    };
    let has_description = match user.description {
        Some(DescriptionValue::Flag(b)) => b,
        Some(DescriptionValue::Text(s)) => !s.trim().is_empty(),
        None => false,
    };
    Ok(Tweet {
        id: record.id.into_string(),
        event_id: record.event_id,
        text: record.text,
        created_at,
        author: UserProfile {
            followers_count: user.followers,
            friends_count: user.friends,
            statuses_count: user.statuses,
            photos_count: user.photos,
            verified: user.verified,
            has_description,
            location: user.location.filter(|l| !l.trim().is_empty()),
            join_date,
        },
        is_retweet: record.is_retweet,
        retweet_count: record.retweet_count,
        urls: record.urls,
        hashtags: record.hashtags,
        mentions: record.mentions,
    })
}

fn field_from_serde_message(msg: &str) -> String {
    // serde_json reports e.g. "invalid type: string \"x\", expected u64"; it does
    // not name the field for nested values, so fall back to a generic marker.
    if let Some(start) = msg.find('`') {
        if let Some(len) = msg[start + 1..].find('`') {
            return msg[start + 1..start + 1 + len].to_string();
        }
    }
    "<record>".to_string()
}

/// Serialize a tweet back into its wire form (one line, no trailing newline).
pub fn tweet_to_json_line(tweet: &Tweet) -> String {
    let record = TweetRecord {
        id: IdValue::Text(tweet.id.clone()),
        event_id: tweet.event_id.clone(),
        text: tweet.text.clone(),
        created_at: tweet
            .created_at
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        is_retweet: tweet.is_retweet,
        retweet_count: tweet.retweet_count,
        urls: tweet.urls.clone(),
        hashtags: tweet.hashtags.clone(),
        mentions: tweet.mentions.clone(),
        user: Some(UserRecord {
            followers: tweet.author.followers_count,
            friends: tweet.author.friends_count,
            statuses: tweet.author.statuses_count,
            photos: tweet.author.photos_count,
            verified: tweet.author.verified,
            description: Some(DescriptionValue::Flag(tweet.author.has_description)),
            location: tweet.author.location.clone(),
            join_date: Some(
                tweet
                    .author
                    .join_date
                    .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            ),
        }),
    };
    serde_json::to_string(&record).expect("tweet record serializes")
}

/// Read a whole `tweets.jsonl` stream. Blank lines are skipped; tweet ids
/// must be unique.
pub fn read_tweets_jsonl<R: BufRead>(reader: R) -> Result<Vec<Tweet>> {
    let mut tweets = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tweet = parse_tweet_record(&line, i + 1)?;
        if !seen.insert(tweet.id.clone()) {
            return Err(IngestError::DuplicateTweetId(tweet.id));
        }
        tweets.push(tweet);
    }
    Ok(tweets)
}

pub fn write_tweets_jsonl<W: Write>(mut writer: W, tweets: &[Tweet]) -> Result<()> {
    for tweet in tweets {
        writeln!(writer, "{}", tweet_to_json_line(tweet))?;
    }
    Ok(())
}

/// Read `events.csv` (`event_id,label`), preserving file order.
pub fn read_events_csv<R: std::io::Read>(reader: R) -> Result<Vec<(String, Label)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| IngestError::Labels {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.len() < 2 || &headers[0] != "event_id" || &headers[1] != "label" {
        return Err(IngestError::Labels {
            line: 1,
            message: "header must be `event_id,label`".into(),
        });
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| IngestError::Labels {
            line,
            message: e.to_string(),
        })?;
        let id = row.get(0).unwrap_or_default().to_string();
        let label: Label = row
            .get(1)
            .unwrap_or_default()
            .parse()
            .map_err(|message| IngestError::Labels { line, message })?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::Labels {
                line,
                message: format!("duplicate event_id `{id}`"),
            });
        }
        out.push((id, label));
    }
    Ok(out)
}

pub fn write_events_csv<W: Write>(writer: W, events: &[(String, Label)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| IngestError::Io(std::io::Error::other(e));
    w.write_record(["event_id", "label"]).map_err(io)?;
    for (id, label) in events {
        w.write_record([id.as_str(), label.as_str()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Group tweets by `event_id` into labeled events, in `events.csv` order.
/// Within an event tweets are sorted by `(created_at, id)`.
pub fn assemble_events(tweets: Vec<Tweet>, labels: &[(String, Label)]) -> Result<Vec<Event>> {
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.as_str(), i))
        .collect();
    let mut grouped: Vec<Vec<Tweet>> = vec![Vec::new(); labels.len()];
    for tweet in tweets {
        let event_id = tweet
            .event_id
            .clone()
            .ok_or_else(|| IngestError::MissingEventId(tweet.id.clone()))?;
        let slot = *index
            .get(event_id.as_str())
            .ok_or_else(|| IngestError::UnknownEvent {
                tweet_id: tweet.id.clone(),
                event_id: event_id.clone(),
            })?;
        grouped[slot].push(tweet);
    }
    labels
        .iter()
        .zip(grouped)
        .map(|((id, label), mut tweets)| {
            if tweets.is_empty() {
                return Err(IngestError::EventWithoutTweets(id.clone()));
            }
            tweets.sort_by(|a, b| {
                a.created_at
                    .cmp(&b.created_at)
                    .then_with(|| a.id.cmp(&b.id))
            });
            Ok(Event {
                event_id: id.clone(),
                label: *label,
                tweets,
            })
        })
        .collect()
}

/// Anchor the observation window on the busiest interval.
///
/// `t_max` is the start of the interval with the most tweets (earliest on
/// ties). `t_0` is the earliest timestamp in
/// `[t_max + len - n*len, t_max + len)`, so the peak interval always lies
/// inside `[t_0, t_end)`.
pub fn select_event_window(
    timestamps: &[DateTime<Utc>],
    n_intervals: usize,
    interval_length: Duration,
) -> Result<EventWindow> {
    if timestamps.is_empty() {
        return Err(IngestError::EmptyEvent);
    }
    let len_ms = interval_length.num_milliseconds();
    if len_ms <= 0 || n_intervals == 0 {
        return Err(IngestError::InvalidWindow(
            "interval length and interval count must be positive".into(),
        ));
    }
    let mut histogram: BTreeMap<i64, usize> = BTreeMap::new();
    for ts in timestamps {
        *histogram
            .entry(ts.timestamp_millis().div_euclid(len_ms))
            .or_default() += 1;
    }
    let mut peak = (i64::MIN, 0usize);
    for (&slot, &count) in &histogram {
        if count > peak.1 {
            peak = (slot, count);
        }
    }
    let t_max = DateTime::<Utc>::from_timestamp_millis(peak.0 * len_ms)
        .ok_or_else(|| IngestError::InvalidWindow("peak timestamp out of range".into()))?;
    let span = interval_length * n_intervals as i32;
    let peak_end = t_max + interval_length;
    let lower = peak_end - span;
    let t_0 = timestamps
        .iter()
        .copied()
        .filter(|ts| *ts >= lower && *ts < peak_end)
        .min()
        .expect("peak interval holds at least one timestamp");
    Ok(EventWindow {
        t_max,
        t_0,
        t_end: t_0 + span,
        interval_length,
        n_intervals,
    })
}

/// Assign the event's tweets to `window.n_intervals` half-open buckets.
pub fn bucket_tweets(event: &Event, window: &EventWindow) -> (Vec<IntervalBucket>, DropReport) {
    let mut buckets: Vec<IntervalBucket> = (0..window.n_intervals)
        .map(|i| IntervalBucket::new(i, Vec::new()))
        .collect();
    let mut dropped = 0;
    for tweet in &event.tweets {
        match window.index_of(tweet.created_at) {
            Some(i) => buckets[i].tweets.push(tweet.clone()),
            None => dropped += 1,
        }
    }
    (
        buckets,
        DropReport {
            event_id: event.event_id.clone(),
            dropped_count: dropped,
        },
    )
}

/// Window selection plus bucketing for one event.
pub fn window_event(
    event: &Event,
    n_intervals: usize,
    interval_length: Duration,
) -> Result<(EventWindow, Vec<IntervalBucket>, DropReport)> {
    let stamps: Vec<_> = event.tweets.iter().map(|t| t.created_at).collect();
    let window = select_event_window(&stamps, n_intervals, interval_length)?;
    let (buckets, report) = bucket_tweets(event, &window);
    Ok((window, buckets, report))
}
