//! Per-edge feature vectors.
//!
//! Every (spreader, receiver, message) exposure is described by 57 numbers:
//! network features of both users, solo interaction features of both users,
//! the pairwise interaction features, and the message features. The layout
//! is fixed by [`FeatureSchema::standard`].

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::content::{LatentScores, SCORE_NAMES};
use crate::corpus::{Corpus, TweetRecord, UserRecord, MAX_TWEET_CHARS};
use crate::error::{Error, Result};

/// Number of columns in the standard schema.
pub const FEATURE_COUNT: usize = 57;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Boolean,
    Ratio,
    Count,
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Log1p,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub transform: Transform,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureSpec>,
}

const NETWORK: [(&str, FeatureKind); 3] = [
    ("followers_count", FeatureKind::Count),
    ("friends_count", FeatureKind::Count),
    ("followers_friends", FeatureKind::Ratio),
];

const SOLO: [(&str, FeatureKind); 12] = [
    ("directed_tweets", FeatureKind::Ratio),
    ("retweet_to_tweet", FeatureKind::Ratio),
    ("tweets_with_hashtag", FeatureKind::Ratio),
    ("tweets_with_url", FeatureKind::Ratio),
    ("tweets_with_media", FeatureKind::Ratio),
    ("avg_favorite_tweet", FeatureKind::Ratio),
    ("avg_tweets_per_day", FeatureKind::Ratio),
    ("has_url", FeatureKind::Boolean),
    ("has_description", FeatureKind::Boolean),
    ("is_verified", FeatureKind::Boolean),
    ("status_count", FeatureKind::Count),
    ("account_age", FeatureKind::Count),
];

const PAIRWISE: [(&str, FeatureKind); 3] = [
    ("shared_friends", FeatureKind::Count),
    ("dialogue", FeatureKind::Ratio),
    ("social_homogeneity", FeatureKind::Probability),
];

const MESSAGE: [(&str, FeatureKind); 10] = [
    ("quoted_status", FeatureKind::Boolean),
    ("rt_status", FeatureKind::Boolean),
    ("rt_count", FeatureKind::Count),
    ("favorited_count", FeatureKind::Count),
    ("has_hashtag", FeatureKind::Boolean),
    ("has_url", FeatureKind::Boolean),
    ("has_mentions", FeatureKind::Boolean),
    ("has_media", FeatureKind::Boolean),
    ("avg_tweet_length", FeatureKind::Probability),
    ("is_rt", FeatureKind::Boolean),
];

impl FeatureSchema {
    /// The fixed 57-column layout shared by the whole crate.
    pub fn standard() -> &'static FeatureSchema {
        static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
        SCHEMA.get_or_init(|| {
            let mut features = Vec::with_capacity(FEATURE_COUNT);
            let mut push = |name: String, kind: FeatureKind| {
                let transform = match kind {
                    FeatureKind::Count => Transform::Log1p,
                    _ => Transform::Identity,
                };
                features.push(FeatureSpec {
                    name,
                    kind,
                    transform,
                });
            };
            for side in ["src", "dest"] {
                for (n, k) in NETWORK {
                    push(format!("{side}_{n}"), k);
                }
            }
            for side in ["src", "dest"] {
                for (n, k) in SOLO {
                    push(format!("{side}_{n}"), k);
                }
            }
            for (n, k) in PAIRWISE {
                push(n.to_string(), k);
            }
            for (n, k) in MESSAGE {
                push(format!("msg_{n}"), k);
            }
            for n in SCORE_NAMES {
                push(format!("msg_{n}"), FeatureKind::Probability);
            }
            assert_eq!(features.len(), FEATURE_COUNT);
            FeatureSchema { features }
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }
}

/// Offsets of the blocks inside a standard vector.
pub mod layout {
    pub const SRC_NETWORK: std::ops::Range<usize> = 0..3;
    pub const DEST_NETWORK: std::ops::Range<usize> = 3..6;
    pub const SRC_SOLO: std::ops::Range<usize> = 6..18;
    pub const DEST_SOLO: std::ops::Range<usize> = 18..30;
    pub const PAIRWISE: std::ops::Range<usize> = 30..33;
    pub const MESSAGE: std::ops::Range<usize> = 33..57;
}

/// One edge's feature values, aligned with the standard schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn names(&self) -> Vec<String> {
        FeatureSchema::standard().names()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FeatureSchema::standard()
            .index_of(name)
            .map(|i| self.values[i])
    }

    /// Name/value pairs in schema order.
    pub fn named(&self) -> impl Iterator<Item = (&str, f64)> {
        FeatureSchema::standard()
            .features
            .iter()
            .map(|f| f.name.as_str())
            .zip(self.values.iter().copied())
    }
}

/// How the "avg favorite-tweet" solo feature is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FavoriteMode {
    /// Mean favorite count of the user's posts divided by the largest
    /// favorite count in the corpus.
    #[default]
    NormalizedMean,
    /// Fraction of the user's posts with at least one favorite.
    FractionFavorited,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub favorite_mode: FavoriteMode,
}

/// Corpus-wide lookups shared by every feature computation.
pub struct FeatureContext<'a> {
    pub corpus: &'a Corpus,
    pub config: FeatureConfig,
    authored: HashMap<&'a str, Vec<&'a TweetRecord>>,
    max_favorite: u64,
    snapshot: chrono::DateTime<chrono::Utc>,
}

impl<'a> FeatureContext<'a> {
    pub fn new(corpus: &'a Corpus) -> FeatureContext<'a> {
        FeatureContext::with_config(corpus, FeatureConfig::default())
    }

    pub fn with_config(corpus: &'a Corpus, config: FeatureConfig) -> FeatureContext<'a> {
        let mut authored: HashMap<&str, Vec<&TweetRecord>> = HashMap::new();
        for t in corpus.tweets.values() {
            authored.entry(t.author_id.as_str()).or_default().push(t);
        }
        let max_favorite = corpus
            .tweets
            .values()
            .map(|t| t.favorite_count)
            .max()
            .unwrap_or(0);
        FeatureContext {
            corpus,
            config,
            authored,
            max_favorite,
            snapshot: corpus.snapshot(),
        }
    }

    pub fn authored(&self, user_id: &str) -> &[&'a TweetRecord] {
        self.authored.get(user_id).map(Vec::as_slice).unwrap_or(&[])
    }

    fn require_user(&self, u: &UserRecord) -> Result<()> {
        if self.corpus.users.contains_key(&u.user_id) {
            Ok(())
        } else {
            Err(Error::Unresolved {
                kind: "user",
                id: u.user_id.clone(),
                referrer: "feature extraction".into(),
            })
        }
    }

    /// Whole days between account creation and the corpus snapshot, at least 1.
    pub fn account_age_days(&self, u: &UserRecord) -> u64 {
        let days = (self.snapshot - u.account_created_at).num_days();
        days.max(1) as u64
    }
}

/// (followers, friends, followers / max(friends, 1)).
pub fn network_features(u: &UserRecord) -> [f64; 3] {
    let followers = u.followers_count as f64;
    let friends = u.friends_count as f64;
    [followers, friends, followers / friends.max(1.0)]
}

/// Posting-behavior and profile features of one user, untransformed.
pub fn solo_interaction_features(u: &UserRecord, ctx: &FeatureContext<'_>) -> Result<[f64; 12]> {
    ctx.require_user(u)?;
    let tweets = ctx.authored(&u.user_id);
    let denom = tweets.len().max(1) as f64;
    let frac = |pred: &dyn Fn(&TweetRecord) -> bool| {
        tweets.iter().filter(|t| pred(t)).count() as f64 / denom
    };
    let directed = frac(&|t| !t.mentions.is_empty());
    let retweets = frac(&|t| t.is_retweet);
    let hashtags = frac(&|t| !t.hashtags.is_empty());
    let urls = frac(&|t| !t.urls.is_empty());
    let media = frac(&|t| t.has_media);
    let favorite = match ctx.config.favorite_mode {
        FavoriteMode::NormalizedMean => {
            if ctx.max_favorite == 0 {
                0.0
            } else {
                let mean = tweets.iter().map(|t| t.favorite_count as f64).sum::<f64>() / denom;
                mean / ctx.max_favorite as f64
            }
        }
        FavoriteMode::FractionFavorited => frac(&|t| t.favorite_count > 0),
    };
    let age = ctx.account_age_days(u) as f64;
    Ok([
        directed,
        retweets,
        hashtags,
        urls,
        media,
        favorite,
        u.statuses_count as f64 / age,
        flag(u.has_profile_url),
        flag(u.has_description),
        flag(u.verified),
        u.statuses_count as f64,
        age,
    ])
}

/// (shared friends, dialogue, social homogeneity) for the directed pair
/// `src -> dst`.
pub fn pairwise_features(
    src: &UserRecord,
    dst: &UserRecord,
    ctx: &FeatureContext<'_>,
) -> Result<[f64; 3]> {
    ctx.require_user(src)?;
    ctx.require_user(dst)?;
    let shared = src.friend_ids.intersection(&dst.friend_ids).count();
    let union = src.friend_ids.len() + dst.friend_ids.len() - shared;
    let homogeneity = if union == 0 {
        0.0
    } else {
        shared as f64 / union as f64
    };
    let tweets = ctx.authored(&src.user_id);
    let mentioning = tweets
        .iter()
        .filter(|t| t.mentions.iter().any(|m| m == &dst.user_id))
        .count();
    let dialogue = mentioning as f64 / tweets.len().max(1) as f64;
    Ok([shared as f64, dialogue, homogeneity])
}

/// Observable post attributes followed by the 14 latent scores, untransformed.
pub fn message_features(t: &TweetRecord, s: &LatentScores) -> [f64; 24] {
    let mut out = [0.0; 24];
    let observed = [
        flag(t.is_quote),
        flag(t.is_retweet),
        t.retweet_count as f64,
        t.favorite_count as f64,
        flag(!t.hashtags.is_empty()),
        flag(!t.urls.is_empty()),
        flag(!t.mentions.is_empty()),
        flag(t.has_media),
        t.text.chars().count() as f64 / MAX_TWEET_CHARS as f64,
        // arrived as a re-share event (retweet or quote)
        flag(t.is_retweet || t.is_quote),
    ];
    out[..10].copy_from_slice(&observed);
    out[10..].copy_from_slice(&s.to_array());
    out
}

/// Builds the full transformed vector for one exposure.
pub fn assemble_edge_vector(
    src: &UserRecord,
    dst: &UserRecord,
    tweet: &TweetRecord,
    scores: &LatentScores,
    ctx: &FeatureContext<'_>,
) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    values.extend(network_features(src));
    values.extend(network_features(dst));
    values.extend(solo_interaction_features(src, ctx)?);
    values.extend(solo_interaction_features(dst, ctx)?);
    values.extend(pairwise_features(src, dst, ctx)?);
    values.extend(message_features(tweet, scores));
    let schema = FeatureSchema::standard();
    debug_assert_eq!(values.len(), schema.len());
    for (v, spec) in values.iter_mut().zip(&schema.features) {
        if spec.transform == Transform::Log1p {
            *v = v.ln_1p();
        }
        if !v.is_finite() {
            return Err(Error::invalid(
                "feature",
                format!(
                    "`{}` is not finite for tweet `{}`",
                    spec.name, tweet.tweet_id
                ),
            ));
        }
    }
    Ok(FeatureVector { values })
}

/// Resolves the latent scores for every tweet: precomputed scores win,
/// anything missing is scored with the lexicon.
pub fn resolve_scores(
    corpus: &Corpus,
    precomputed: &BTreeMap<String, LatentScores>,
    lexicon: &crate::content::Lexicon,
) -> BTreeMap<String, LatentScores> {
    corpus
        .tweets
        .values()
        .map(|t| {
            let s = precomputed
                .get(&t.tweet_id)
                .copied()
                .unwrap_or_else(|| crate::content::analyze_text(&t.text, lexicon));
            (t.tweet_id.clone(), s)
        })
        .collect()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}
