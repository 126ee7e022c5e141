//! Per-interval aggregates of the text, Twitter and user features.
//!
//! Every feature is a mean (or fraction) over the tweets in one bucket, so
//! the blocks are invariant under tweet order. Authors are counted once per
//! tweet, not once per user.

pub mod lookup;

use std::collections::HashSet;

use crate::ingestion::IntervalBucket;
use crate::text::tokenize;

pub use lookup::{LookupTables, UrlClass};

pub const TEXT_FEATURES: [&str; 16] = [
    "LengthOfTweet",
    "NumOfChar",
    "Capital",
    "Smile",
    "Sad",
    "NumPositiveWords",
    "NumNegativeWords",
    "PolarityScores",
    "Via",
    "Stock",
    "Question",
    "Exclamation",
    "QuestionExclamation",
    "I",
    "You",
    "HeShe",
];

pub const TWITTER_FEATURES: [&str; 9] = [
    "Hashtag",
    "Mention",
    "NumUrls",
    "Retweets",
    "IsRetweet",
    "ContainNEWS",
    "WotScore",
    "URLRank5000",
    "ContainNewsURL",
];

pub const USER_FEATURES: [&str; 9] = [
    "UserNumFollowers",
    "UserNumFriends",
    "UserNumTweets",
    "UserNumPhotos",
    "UserIsInLargeCity",
    "UserJoinDate",
    "UserDescription",
    "UserVerified",
    "UserReputationScore",
];

pub const SMILE_EMOTICONS: [&str; 6] = [":->", ":-)", ";->", ";-)", ":)", ";)"];
pub const SAD_EMOTICONS: [&str; 6] = [":-<", ":-(", ";-<", ";-(", ":(", ";("];
pub const FIRST_PERSON: [&str; 8] = ["i", "me", "my", "mine", "we", "us", "our", "ours"];
pub const SECOND_PERSON: [&str; 5] = ["u", "you", "your", "yours", "ur"];
pub const THIRD_PERSON: [&str; 10] = [
    "he", "she", "they", "his", "her", "him", "hers", "them", "their", "theirs",
];
const MULTI_PUNCT: [&str; 4] = ["??", "!!", "?!", "!?"];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TextFeatureBlock {
    pub length_of_tweet: f64,
    pub num_of_char: f64,
    pub capital: f64,
    pub smile: f64,
    pub sad: f64,
    pub num_positive_words: f64,
    pub num_negative_words: f64,
    pub polarity_scores: f64,
    pub via: f64,
    pub stock: f64,
    pub question: f64,
    pub exclamation: f64,
    pub question_exclamation: f64,
    pub first_person: f64,
    pub second_person: f64,
    pub third_person: f64,
    /// Set when the bucket held no tweets and the block is all zeros.
    pub empty: bool,
}

impl TextFeatureBlock {
    pub fn to_array(&self) -> [f64; 16] {
        [
            self.length_of_tweet,
            self.num_of_char,
            self.capital,
            self.smile,
            self.sad,
            self.num_positive_words,
            self.num_negative_words,
            self.polarity_scores,
            self.via,
            self.stock,
            self.question,
            self.exclamation,
            self.question_exclamation,
            self.first_person,
            self.second_person,
            self.third_person,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwitterFeatureBlock {
    pub hashtag: f64,
    pub mention: f64,
    pub num_urls: f64,
    pub retweets: f64,
    pub is_retweet: f64,
    pub contain_news: f64,
    pub wot_score: f64,
    pub url_rank_5000: f64,
    pub contain_news_url: f64,
    /// URLs that failed to parse and were scored with the defaults.
    pub unparseable_urls: usize,
}

impl Default for TwitterFeatureBlock {
    fn default() -> Self {
        Self {
            hashtag: 0.0,
            mention: 0.0,
            num_urls: 0.0,
            retweets: 0.0,
            is_retweet: 0.0,
            contain_news: 0.0,
            wot_score: lookup::NEUTRAL_WOT,
            url_rank_5000: 0.0,
            contain_news_url: 0.0,
            unparseable_urls: 0,
        }
    }
}

impl TwitterFeatureBlock {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.hashtag,
            self.mention,
            self.num_urls,
            self.retweets,
            self.is_retweet,
            self.contain_news,
            self.wot_score,
            self.url_rank_5000,
            self.contain_news_url,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserFeatureBlock {
    pub num_followers: f64,
    pub num_friends: f64,
    pub num_tweets: f64,
    pub num_photos: f64,
    pub in_large_city: f64,
    /// Mean days between account creation and the tweet.
    pub join_date: f64,
    pub description: f64,
    pub verified: f64,
    pub reputation_score: f64,
}

impl UserFeatureBlock {
    pub fn to_array(&self) -> [f64; 9] {
        [
            self.num_followers,
            self.num_friends,
            self.num_tweets,
            self.num_photos,
            self.in_large_city,
            self.join_date,
            self.description,
            self.verified,
            self.reputation_score,
        ]
    }
}

/// Mean lexicon polarity over the tweet's tokens. Unknown tokens count as 0
/// but still count toward the denominator.
pub fn polarity_score(text: &str, tables: &LookupTables) -> f64 {
    polarity_of_tokens(&tokenize(text), tables)
}

fn polarity_of_tokens(tokens: &[String], tables: &LookupTables) -> f64 {
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().map(|t| tables.polarity(t)).sum::<f64>() / tokens.len() as f64
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn contains_any(tokens: &[String], words: &[&str]) -> bool {
    tokens.iter().any(|t| words.contains(&t.as_str()))
}

pub fn extract_text_features(bucket: &IntervalBucket, tables: &LookupTables) -> TextFeatureBlock {
    if bucket.is_empty() {
        return TextFeatureBlock {
            empty: true,
            ..Default::default()
        };
    }
    let mut acc = [0.0f64; 16];
    for tweet in &bucket.tweets {
        let text = tweet.text.as_str();
        let tokens = tokenize(text);
        let chars = text.chars().count();
        let distinct = text.chars().collect::<HashSet<_>>().len();
        let (alpha, upper) = text
            .chars()
            .filter(|c| c.is_alphabetic())
            .fold((0usize, 0usize), |(a, u), c| {
                (a + 1, u + usize::from(c.is_uppercase()))
            });
        let capital = if alpha == 0 {
            0.0
        } else {
            upper as f64 / alpha as f64
        };
        let positive = tokens.iter().filter(|t| tables.polarity(t) > 0.0).count();
        let negative = tokens.iter().filter(|t| tables.polarity(t) < 0.0).count();

        let row = [
            chars as f64,
            distinct as f64,
            capital,
            indicator(SMILE_EMOTICONS.iter().any(|e| text.contains(e))),
            indicator(SAD_EMOTICONS.iter().any(|e| text.contains(e))),
            positive as f64,
            negative as f64,
            polarity_of_tokens(&tokens, tables),
            indicator(tokens.iter().any(|t| t == "via")),
            indicator(text.contains('$')),
            indicator(text.contains('?')),
            indicator(text.contains('!')),
            indicator(MULTI_PUNCT.iter().any(|p| text.contains(p))),
            indicator(contains_any(&tokens, &FIRST_PERSON)),
            indicator(contains_any(&tokens, &SECOND_PERSON)),
            indicator(contains_any(&tokens, &THIRD_PERSON)),
        ];
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let n = bucket.len() as f64;
    let m = acc.map(|v| v / n);
    TextFeatureBlock {
        length_of_tweet: m[0],
        num_of_char: m[1],
        capital: m[2],
        smile: m[3],
        sad: m[4],
        num_positive_words: m[5],
        num_negative_words: m[6],
        polarity_scores: m[7],
        via: m[8],
        stock: m[9],
        question: m[10],
        exclamation: m[11],
        question_exclamation: m[12],
        first_person: m[13],
        second_person: m[14],
        third_person: m[15],
        empty: false,
    }
}

pub fn extract_twitter_features(
    bucket: &IntervalBucket,
    tables: &LookupTables,
) -> TwitterFeatureBlock {
    if bucket.is_empty() {
        return TwitterFeatureBlock::default();
    }
    let n = bucket.len() as f64;
    let mut block = TwitterFeatureBlock {
        wot_score: 0.0,
        ..Default::default()
    };
    let mut url_total = 0usize;
    for tweet in &bucket.tweets {
        let classes: Vec<UrlClass> = tweet.urls.iter().map(|u| tables.classify_url(u)).collect();
        block.hashtag += indicator(!tweet.hashtags.is_empty());
        block.mention += indicator(!tweet.mentions.is_empty());
        block.num_urls += tweet.urls.len() as f64;
        block.retweets += tweet.retweet_count as f64;
        block.is_retweet += indicator(tweet.is_retweet);
        block.contain_news += indicator(classes.iter().any(|c| c.is_news));
        block.url_rank_5000 += indicator(classes.iter().any(|c| c.rank_lt_5000));
        block.contain_news_url += indicator(classes.iter().any(|c| c.in_news_list));
        block.wot_score += classes.iter().map(|c| c.wot).sum::<f64>();
        block.unparseable_urls += classes.iter().filter(|c| !c.parsed).count();
        url_total += classes.len();
    }
    block.hashtag /= n;
    block.mention /= n;
    block.num_urls /= n;
    block.retweets /= n;
    block.is_retweet /= n;
    block.contain_news /= n;
    block.url_rank_5000 /= n;
    block.contain_news_url /= n;
    block.wot_score = if url_total == 0 {
        lookup::NEUTRAL_WOT
    } else {
        block.wot_score / url_total as f64
    };
    block
}

pub fn extract_user_features(bucket: &IntervalBucket, tables: &LookupTables) -> UserFeatureBlock {
    if bucket.is_empty() {
        return UserFeatureBlock::default();
    }
    let n = bucket.len() as f64;
    let mut block = UserFeatureBlock::default();
    for tweet in &bucket.tweets {
        let u = &tweet.author;
        block.num_followers += u.followers_count as f64;
        block.num_friends += u.friends_count as f64;
        block.num_tweets += u.statuses_count as f64;
        block.num_photos += u.photos_count as f64;
        block.in_large_city += indicator(
            u.location
                .as_deref()
                .is_some_and(|l| tables.is_large_city(l)),
        );
        let age_ms = (tweet.created_at - u.join_date).num_milliseconds().max(0);
        block.join_date += age_ms as f64 / 86_400_000.0;
        block.description += indicator(u.has_description);
        block.verified += indicator(u.verified);
        let denom = u.followers_count + u.friends_count;
        if denom > 0 {
            block.reputation_score += u.friends_count as f64 / denom as f64;
        }
    }
    block.num_followers /= n;
    block.num_friends /= n;
    block.num_tweets /= n;
    block.num_photos /= n;
    block.in_large_city /= n;
    block.join_date /= n;
    block.description /= n;
    block.verified /= n;
    block.reputation_score /= n;
    block
}

/// The 34 surface features of one bucket, text then Twitter then user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFeatures {
    pub text: TextFeatureBlock,
    pub twitter: TwitterFeatureBlock,
    pub user: UserFeatureBlock,
}

impl SurfaceFeatures {
    pub const LEN: usize = 34;

    pub fn extract(bucket: &IntervalBucket, tables: &LookupTables) -> Self {
        Self {
            text: extract_text_features(bucket, tables),
            twitter: extract_twitter_features(bucket, tables),
            user: extract_user_features(bucket, tables),
        }
    }

    pub fn names() -> impl Iterator<Item = &'static str> {
        TEXT_FEATURES
            .iter()
            .chain(TWITTER_FEATURES.iter())
            .chain(USER_FEATURES.iter())
            .copied()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        v.extend(self.text.to_array());
        v.extend(self.twitter.to_array());
        v.extend(self.user.to_array());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{Tweet, UserProfile};
    use chrono::{Duration, TimeZone, Utc};

    fn tweet(text: &str) -> Tweet {
        let ts = Utc.with_ymd_and_hms(2016, 7, 22, 18, 0, 0).unwrap();
        Tweet {
            id: text.to_string(),
            event_id: None,
            text: text.into(),
            created_at: ts,
            author: UserProfile {
                followers_count: 300,
                friends_count: 100,
                statuses_count: 10,
                photos_count: 1,
                verified: false,
                has_description: true,
                location: Some("London".into()),
                join_date: ts - Duration::days(10),
            },
            is_retweet: false,
            retweet_count: 0,
            urls: vec![],
            hashtags: vec![],
            mentions: vec![],
        }
    }

    fn bucket(tweets: Vec<Tweet>) -> IntervalBucket {
        IntervalBucket::new(0, tweets)
    }

    fn toy_lexicon() -> LookupTables {
        LookupTables::from_sources("", "", "", "", "good\t1\nbad\t-1\n", "").unwrap()
    }

    #[test]
    fn polarity_examples() {
        let t = toy_lexicon();
        assert_eq!(polarity_score("", &t), 0.0);
        assert!((polarity_score("good good bad", &t) - 1.0 / 3.0).abs() < 1e-15);
        assert!((polarity_score("good unknown", &t) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn punctuation_predicates() {
        let t = LookupTables::bundled();
        let b = extract_text_features(&bucket(vec![tweet("OMG!! Is this true?? :-)")]), &t);
        assert_eq!(b.question, 1.0);
        assert_eq!(b.exclamation, 1.0);
        assert_eq!(b.question_exclamation, 1.0);
        assert_eq!(b.smile, 1.0);
        assert_eq!(b.sad, 0.0);
        assert!(!b.empty);
    }

    #[test]
    fn capital_fraction() {
        let t = LookupTables::bundled();
        let b = extract_text_features(&bucket(vec![tweet("AbC")]), &t);
        assert!((b.capital - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.num_of_char, 3.0);
        assert_eq!(b.length_of_tweet, 3.0);
    }

    #[test]
    fn pronoun_and_via_tokens() {
        let t = LookupTables::bundled();
        let b = extract_text_features(
            &bucket(vec![tweet("My God, via @bbc"), tweet("you and THEY")]),
            &t,
        );
        assert_eq!(b.first_person, 0.5);
        assert_eq!(b.via, 0.5);
        assert_eq!(b.second_person, 0.5);
        assert_eq!(b.third_person, 0.5);
    }

    #[test]
    fn empty_bucket_defaults() {
        let t = LookupTables::bundled();
        let s = SurfaceFeatures::extract(&bucket(vec![]), &t);
        assert!(s.text.empty);
        assert!(s.text.to_array().iter().all(|v| *v == 0.0));
        assert_eq!(s.twitter.wot_score, 50.0);
        assert_eq!(s.twitter.url_rank_5000, 0.0);
        assert!(s.user.to_array().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn hashtag_fraction_and_url_defaults() {
        let t = LookupTables::bundled();
        let mut a = tweet("a");
        a.hashtags = vec!["x".into()];
        let b = extract_twitter_features(&bucket(vec![a, tweet("b")]), &t);
        assert_eq!(b.hashtag, 0.5);
        assert_eq!(b.wot_score, 50.0);
        assert_eq!(b.url_rank_5000, 0.0);
    }

    #[test]
    fn wot_is_mean_over_urls_not_tweets() {
        let t = LookupTables::bundled();
        let mut a = tweet("a");
        a.urls = vec!["http://bbc.com/1".into(), "http://huzlers.com/2".into()];
        let mut b = tweet("b");
        b.urls = vec!["not a url".into()];
        let f = extract_twitter_features(&bucket(vec![a, b]), &t);
        assert!((f.wot_score - (93.0 + 8.0 + 50.0) / 3.0).abs() < 1e-12);
        assert_eq!(f.contain_news, 0.5);
        assert_eq!(f.url_rank_5000, 0.5);
        assert_eq!(f.num_urls, 1.5);
        assert_eq!(f.unparseable_urls, 1);
    }

    #[test]
    fn reputation_score_examples() {
        let t = LookupTables::bundled();
        let u = extract_user_features(&bucket(vec![tweet("x")]), &t);
        assert!((u.reputation_score - 0.25).abs() < 1e-15);
        assert!((u.join_date - 10.0).abs() < 1e-12);
        assert_eq!(u.in_large_city, 1.0);

        let mut lonely = tweet("y");
        lonely.author.followers_count = 0;
        lonely.author.friends_count = 0;
        let u = extract_user_features(&bucket(vec![lonely]), &t);
        assert_eq!(u.reputation_score, 0.0);
    }

    #[test]
    fn names_match_vector_length() {
        assert_eq!(SurfaceFeatures::names().count(), SurfaceFeatures::LEN);
        let t = LookupTables::bundled();
        let s = SurfaceFeatures::extract(&bucket(vec![tweet("x")]), &t);
        assert_eq!(s.to_vec().len(), SurfaceFeatures::LEN);
    }
}
