//! Planted-parameter corpus generator.
//!
//! Diffusion labels are drawn from a known logistic model over the real
//! feature pipeline's output, so a learner's scores can be compared with
//! the best achievable ones.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::content::{Lexicon, ScoreRow, SCORE_NAMES};
use crate::corpus::{
    write_corpus, write_jsonl, Corpus, FollowEdge, ReactionKind, ReactionRecord, TopicLabel,
    TruthStatus, TweetRecord, UserRecord, MAX_TWEET_CHARS,
};
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::learn::sigmoid;
use crate::pipeline::{EdgeTable, PipelineConfig, ScoredCorpus, SCORES_FILE};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";

/// Planted diffusion model and cascade shape for one truth class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassPlan {
    pub topics: usize,
    /// Mean retweet-chain depth of an original post.
    pub mean_depth: f64,
    /// Solve the intercept so the expected diffused fraction hits this;
    /// `None` uses `intercept` as given.
    pub diffused_fraction: Option<f64>,
    pub intercept: f64,
    /// Weights over standardized features; rescaled to unit norm.
    pub weights: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_users: usize,
    pub mean_follows: f64,
    pub roots_per_topic: usize,
    pub label_noise: f64,
    /// Standard deviation of the planted logit (before the intercept) when
    /// the weighted features are uncorrelated.
    pub signal: f64,
    /// Extra Dirichlet mass on fear and news words in False posts.
    pub class_signal: f64,
    /// Standardize planted features over both classes instead of per class,
    /// so equal plans give equal diffusion odds for equal features.
    pub pooled_standardization: bool,
    pub false_class: ClassPlan,
    pub true_class: ClassPlan,
}

fn weights(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|&(n, w)| (n.to_string(), w)).collect()
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_users: 800,
            mean_follows: 20.0,
            roots_per_topic: 60,
            label_noise: 0.05,
            signal: 16.0,
            class_signal: 2.0,
            pooled_standardization: false,
            false_class: ClassPlan {
                topics: 3,
                mean_depth: 4.0,
                diffused_fraction: Some(0.45),
                intercept: 0.0,
                weights: weights(&[
                    ("msg_is_rt", 1.0),
                    ("msg_favorited_count", 0.8),
                    ("msg_has_mentions", -0.6),
                    ("msg_news", 0.7),
                    ("msg_fear", 0.9),
                    ("src_retweet_to_tweet", 0.5),
                    ("src_followers_count", 0.7),
                ]),
            },
            true_class: ClassPlan {
                topics: 3,
                mean_depth: 2.0,
                diffused_fraction: Some(0.40),
                intercept: 0.0,
                weights: weights(&[
                    ("msg_is_rt", 0.8),
                    ("shared_friends", 1.0),
                    ("msg_favorited_count", 0.6),
                    ("src_tweets_with_url", -0.5),
                    ("msg_feedback", 0.7),
                    ("msg_positive", 0.6),
                ]),
            },
        }
    }
}

impl SynthConfig {
    /// Both classes share planted weights over features that are distributed
    /// alike in either class, so diffusion carries no truth signal.
    pub fn uncoupled(seed: u64) -> SynthConfig {
        let mut c = SynthConfig {
            seed,
            roots_per_topic: 120,
            pooled_standardization: true,
            ..SynthConfig::default()
        };
        let shared = weights(&[
            ("msg_favorited_count", 0.8),
            ("msg_has_mentions", -0.6),
            ("src_retweet_to_tweet", 0.5),
            ("src_followers_count", 0.7),
            ("shared_friends", 1.0),
            ("msg_is_rt", 0.8),
        ]);
        for plan in [&mut c.false_class, &mut c.true_class] {
            plan.weights = shared.clone();
            plan.mean_depth = 3.0;
            plan.diffused_fraction = None;
            plan.intercept = -2.0;
        }
        c
    }

    /// [`SynthConfig::uncoupled`] except False posts diffuse far more often
    /// than True ones.
    pub fn coupled(seed: u64) -> SynthConfig {
        let mut c = SynthConfig::uncoupled(seed);
        c.false_class.diffused_fraction = Some(0.75);
        c.true_class.diffused_fraction = Some(0.15);
        c
    }

    pub fn class(&self, status: TruthStatus) -> &ClassPlan {
        match status {
            TruthStatus::True => &self.true_class,
            TruthStatus::False => &self.false_class,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_users < 3 {
            return Err(Error::invalid("synth", "need at least 3 users"));
        }
        if !(self.mean_follows > 0.0 && self.mean_follows < self.n_users as f64) {
            return Err(Error::invalid(
                "synth",
                format!("mean follows {} out of range", self.mean_follows),
            ));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::invalid(
                "synth",
                format!("label noise {} not in [0, 0.5)", self.label_noise),
            ));
        }
        if !(self.signal >= 0.0 && self.signal.is_finite()) || self.class_signal < 0.0 {
            return Err(Error::invalid(
                "synth",
                "signal strengths must be non-negative",
            ));
        }
        let schema = FeatureSchema::standard();
        for status in TruthStatus::ALL {
            let c = self.class(status);
            if c.topics == 0 {
                return Err(Error::invalid(
                    "synth",
                    format!("{status} class has no topics"),
                ));
            }
            if !(0.0..=20.0).contains(&c.mean_depth) {
                return Err(Error::invalid(
                    "synth",
                    format!("{status} mean depth {} not in [0, 20]", c.mean_depth),
                ));
            }
            for (name, _) in &c.weights {
                if schema.index_of(name).is_none() {
                    return Err(Error::Schema(format!("unknown planted feature `{name}`")));
                }
            }
        }
        Ok(())
    }
}

/// Best-possible scores given the per-edge diffusion probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesRate {
    /// Expected accuracy of predicting the likelier label.
    pub accuracy: f64,
    /// Largest expected F over all probability thresholds.
    pub f_ceiling: f64,
    pub positive_rate: f64,
}

/// Expected accuracy and F ceiling of the optimal classifier when edge `i`
/// diffuses with probability `q[i]`.
pub fn bayes_rate(q: &[f64]) -> Result<BayesRate> {
    if q.is_empty() {
        return Err(Error::Empty("probabilities"));
    }
    if let Some(bad) = q.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(
            "probability",
            format!("{bad} not in [0, 1]"),
        ));
    }
    let n = q.len() as f64;
    let accuracy = q.iter().map(|&p| p.max(1.0 - p)).sum::<f64>() / n;
    let total: f64 = q.iter().sum();
    let mut sorted = q.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // predicting the top k positive: F = 2 TP / (k + Σq)
    let mut tp = 0.0;
    let mut best: f64 = 0.0;
    for (k, p) in sorted.iter().enumerate() {
        tp += p;
        best = best.max(2.0 * tp / ((k + 1) as f64 + total));
    }
    Ok(BayesRate {
        accuracy,
        f_ceiling: best,
        positive_rate: total / n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTruth {
    pub status: TruthStatus,
    pub intercept: f64,
    /// Unit-norm weights times `signal`.
    pub weights: Vec<(String, f64)>,
    /// Population mean and standard deviation used to standardize each
    /// weighted feature.
    pub standardization: Vec<(String, f64, f64)>,
    pub edges: usize,
    pub chain_edges: usize,
    pub expected_diffused_fraction: f64,
    pub realized_diffused_fraction: f64,
    pub original_posts: usize,
    pub planned_mean_depth: f64,
    pub bayes: BayesRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SynthConfig,
    pub classes: Vec<ClassTruth>,
}

impl GroundTruth {
    pub fn class(&self, status: TruthStatus) -> &ClassTruth {
        self.classes
            .iter()
            .find(|c| c.status == status)
            .expect("both classes are generated")
    }
}

/// One exposure with its planted probability and drawn label.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedEdge {
    pub spreader_id: String,
    pub receiver_id: String,
    pub tweet_id: String,
    pub probability: f64,
    pub diffused: bool,
}

pub struct SynthOutput {
    pub scored: ScoredCorpus,
    pub truth: GroundTruth,
    pub edges: Vec<PlantedEdge>,
}

impl SynthOutput {
    /// Writes the corpus files, `scores.jsonl` and `ground_truth.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        write_corpus(&self.scored.corpus, dir)?;
        let rows: Vec<ScoreRow> = self
            .scored
            .scores
            .iter()
            .map(|(id, s)| ScoreRow {
                tweet_id: id.clone(),
                scores: *s,
            })
            .collect();
        write_jsonl(&dir.join(SCORES_FILE), &rows)?;
        let path = dir.join(GROUND_TRUTH_FILE);
        let json = serde_json::to_string_pretty(&self.truth)? + "\n";
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

const TOPIC_WORDS: [&str; 16] = [
    "vaccine",
    "election",
    "storm",
    "border",
    "bank",
    "virus",
    "airport",
    "school",
    "bridge",
    "senator",
    "oil",
    "river",
    "stadium",
    "factory",
    "mayor",
    "satellite",
];

const FILLER: [&str; 20] = [
    "the", "a", "people", "today", "about", "city", "they", "we", "this", "that", "after",
    "before", "with", "from", "some", "many", "here", "there", "again", "around",
];

fn origin() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
}

struct Vocab {
    categories: Vec<Vec<String>>,
    filler: Vec<&'static str>,
}

impl Vocab {
    fn new(lexicon: &Lexicon) -> Vocab {
        let mut all: HashSet<&str> = HashSet::new();
        let categories: Vec<Vec<String>> = SCORE_NAMES
            .iter()
            .map(|c| {
                let mut terms: Vec<String> = lexicon
                    .terms(c)
                    .map(|t| t.iter().cloned().collect())
                    .unwrap_or_default();
                terms.sort();
                terms
            })
            .collect();
        for terms in &categories {
            all.extend(terms.iter().map(String::as_str));
        }
        let filler = FILLER
            .iter()
            .copied()
            .filter(|w| !all.contains(w))
            .collect();
        Vocab { categories, filler }
    }
}

struct Users {
    records: Vec<UserRecord>,
    followers: Vec<Vec<usize>>,
    popularity: Vec<f64>,
}

fn user_id(i: usize) -> String {
    format!("u{i:05}")
}

fn make_users(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<Users> {
    let n = cfg.n_users;
    let pop_dist = LogNormal::new(0.0, 1.0).expect("valid lognormal");
    let popularity: Vec<f64> = (0..n).map(|_| pop_dist.sample(rng)).collect();
    let pick =
        WeightedIndex::new(&popularity).map_err(|e| Error::invalid("synth", e.to_string()))?;
    let degree =
        Poisson::new(cfg.mean_follows).map_err(|e| Error::invalid("synth", e.to_string()))?;
    let mut followees: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut followers: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, out) in followees.iter_mut().enumerate() {
        let k = (degree.sample(rng) as usize).clamp(1, n - 1);
        let mut attempts = 0;
        while out.len() < k && attempts < 50 * k {
            attempts += 1;
            let v = pick.sample(rng);
            if v != u && out.insert(v) {
                followers[v].push(u);
            }
        }
    }
    let extra = LogNormal::new(3.0, 1.2).expect("valid lognormal");
    let records = (0..n)
        .map(|u| UserRecord {
            user_id: user_id(u),
            followers_count: followers[u].len() as u64 + (popularity[u] * extra.sample(rng)) as u64,
            friends_count: followees[u].len() as u64 + extra.sample(rng) as u64,
            statuses_count: 0,
            account_created_at: origin() - Duration::days(rng.random_range(30..3000)),
            verified: rng.random_bool((0.02 * popularity[u]).min(0.5)),
            has_profile_url: rng.random_bool(0.4),
            has_description: rng.random_bool(0.7),
            friend_ids: followees[u].iter().map(|&v| user_id(v)).collect(),
        })
        .collect();
    for f in &mut followers {
        f.sort_unstable();
    }
    Ok(Users {
        records,
        followers,
        popularity,
    })
}

fn sample_depth(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    let base = mean.floor();
    let mut d = base as i64 + i64::from(rng.random_bool(mean - base));
    // symmetric jitter keeps the mean
    if base >= 1.0 {
        d += rng.random_range(-1..=1);
    }
    d.max(0) as usize
}

fn compose_text(
    keywords: &[String],
    alpha: &[f64; 14],
    vocab: &Vocab,
    rng: &mut ChaCha8Rng,
) -> Result<String> {
    let tone: [f64; 14] = Dirichlet::new(*alpha)
        .map_err(|e| Error::invalid("synth", e.to_string()))?
        .sample(rng);
    let pick = WeightedIndex::new(tone).map_err(|e| Error::invalid("synth", e.to_string()))?;
    let mut words: Vec<&str> = keywords.iter().map(String::as_str).collect();
    for _ in 0..rng.random_range(6..14) {
        if rng.random_bool(0.4) {
            words.push(vocab.filler.choose(rng).copied().unwrap_or("the"));
        } else {
            let terms = &vocab.categories[pick.sample(rng)];
            if let Some(t) = terms.choose(rng) {
                words.push(t);
            }
        }
    }
    Ok(words.join(" "))
}

fn truncate_chars(s: &str, max: usize) -> String {
    s.chars().take(max).collect()
}

/// A planned original post and its retweet chain as (event index, author).
struct Cascade {
    root: usize,
    chain: Vec<(usize, usize)>,
}

/// Generates a corpus whose diffusion labels follow the planted model.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lexicon = Lexicon::default();
    let vocab = Vocab::new(&lexicon);
    let mut users = make_users(cfg, &mut rng)?;
    let n = cfg.n_users;

    // authors are picked by popularity among users with at least one follower
    let author_weight: Vec<f64> = (0..n)
        .map(|u| {
            if users.followers[u].is_empty() {
                0.0
            } else {
                users.popularity[u]
            }
        })
        .collect();
    let author_pick =
        WeightedIndex::new(&author_weight).map_err(|e| Error::invalid("synth", e.to_string()))?;

    let mut topics = Vec::new();
    let mut tweets: Vec<TweetRecord> = Vec::new();
    let mut cascades: Vec<Cascade> = Vec::new();
    let mut word = 0;
    for (ti, status) in TruthStatus::ALL.into_iter().enumerate() {
        let plan = cfg.class(status);
        let mut alpha = [1.0f64; 14];
        if status == TruthStatus::False {
            for c in ["fear", "news"] {
                alpha[SCORE_NAMES
                    .iter()
                    .position(|s| *s == c)
                    .expect("known score")] += cfg.class_signal;
            }
        }
        for k in 0..plan.topics {
            let topic_id = format!("{}-{}", status.as_str().to_lowercase(), k + 1);
            let keywords: Vec<String> = (0..2)
                .map(|j| {
                    let w = TOPIC_WORDS[(word + j) % TOPIC_WORDS.len()];
                    if word + j >= TOPIC_WORDS.len() {
                        format!("{w}{}", (word + j) / TOPIC_WORDS.len())
                    } else {
                        w.to_string()
                    }
                })
                .collect();
            word += 2;
            let start = origin() + Duration::days(14 * (ti * 16 + k) as i64);
            for r in 0..cfg.roots_per_topic {
                let id = format!("{topic_id}-p{r:04}");
                let depth = sample_depth(plan.mean_depth, &mut rng);
                let created = start + Duration::minutes(rng.random_range(0..10 * 24 * 60));
                let mut chain = None;
                let mut author = author_pick.sample(&mut rng);
                for _ in 0..50 {
                    if let Some(c) = plan_chain(author, depth, &users.followers, &mut rng) {
                        chain = Some(c);
                        break;
                    }
                    author = author_pick.sample(&mut rng);
                }
                let Some(chain_authors) = chain else {
                    return Err(Error::invalid(
                        "synth",
                        format!(
                            "cannot place a retweet chain of depth {depth} in this follower graph"
                        ),
                    ));
                };
                let mut text = compose_text(&keywords, &alpha, &vocab, &mut rng)?;
                let mentions = if rng.random_bool(0.3) {
                    let friends: Vec<&String> = users.records[author].friend_ids.iter().collect();
                    friends
                        .choose(&mut rng)
                        .map(|f| vec![(*f).clone()])
                        .unwrap_or_default()
                } else {
                    Vec::new()
                };
                for m in &mentions {
                    text = format!("@{m} {text}");
                }
                let hashtags = if rng.random_bool(0.4) {
                    vec![keywords[0].clone()]
                } else {
                    Vec::new()
                };
                for h in &hashtags {
                    text.push_str(&format!(" #{h}"));
                }
                let urls = if rng.random_bool(0.3) {
                    vec![format!("https://example.org/{id}")]
                } else {
                    Vec::new()
                };
                let favorite_count = LogNormal::new(1.5, 1.2)
                    .expect("valid lognormal")
                    .sample(&mut rng) as u64;
                let root = TweetRecord {
                    tweet_id: id.clone(),
                    author_id: user_id(author),
                    text: truncate_chars(&text, MAX_TWEET_CHARS),
                    created_at: created,
                    retweet_count: depth as u64,
                    favorite_count,
                    is_retweet: false,
                    retweet_of: None,
                    is_quote: rng.random_bool(0.08),
                    hashtags,
                    urls,
                    mentions,
                    has_media: rng.random_bool(0.2),
                    topic_id: topic_id.clone(),
                };
                let root_index = tweets.len();
                tweets.push(root.clone());
                let mut chain_events = Vec::new();
                let (mut prev_id, mut prev_time) = (id.clone(), created);
                for (k, &a) in chain_authors.iter().enumerate() {
                    let t = prev_time + Duration::minutes(rng.random_range(5..180));
                    let rt_id = format!("{id}-rt{}", k + 1);
                    let rt = TweetRecord {
                        tweet_id: rt_id.clone(),
                        author_id: user_id(a),
                        text: truncate_chars(
                            &format!("RT @{}: {}", root.author_id, root.text),
                            MAX_TWEET_CHARS,
                        ),
                        created_at: t,
                        is_retweet: true,
                        retweet_of: Some(prev_id.clone()),
                        is_quote: false,
                        ..root.clone()
                    };
                    chain_events.push((tweets.len(), a));
                    tweets.push(rt);
                    prev_id = rt_id;
                    prev_time = t;
                }
                cascades.push(Cascade {
                    root: root_index,
                    chain: chain_events,
                });
            }
            topics.push(TopicLabel {
                topic_id,
                status,
                keywords,
            });
        }
    }

    let mut authored = vec![0u64; n];
    for t in &tweets {
        let u: usize = t.author_id[1..].parse().expect("generated user id");
        authored[u] += 1;
    }
    let extra = LogNormal::new(4.0, 1.0).expect("valid lognormal");
    for (u, rec) in users.records.iter_mut().enumerate() {
        rec.statuses_count = authored[u] + extra.sample(&mut rng) as u64;
    }
    let follows: Vec<FollowEdge> = users
        .followers
        .iter()
        .enumerate()
        .flat_map(|(v, fs)| {
            fs.iter().map(move |&f| FollowEdge {
                follower: user_id(f),
                followee: user_id(v),
            })
        })
        .collect();

    let bare = Corpus::from_records(
        users.records.clone(),
        tweets.clone(),
        Vec::new(),
        follows.clone(),
        topics.clone(),
    )?;
    let snapshot = bare.snapshot();
    let scored = ScoredCorpus::new(bare, &BTreeMap::new(), &lexicon);
    let table = EdgeTable::build(&scored, &PipelineConfig::default())?;

    // (event id, receiver) pairs that must diffuse: each chain step
    let mut forced: HashSet<(String, String)> = HashSet::new();
    for c in &cascades {
        let mut prev = c.root;
        for &(ev, a) in &c.chain {
            forced.insert((tweets[prev].tweet_id.clone(), user_id(a)));
            prev = ev;
        }
    }

    let mut planted = vec![
        PlantedEdge {
            spreader_id: String::new(),
            receiver_id: String::new(),
            tweet_id: String::new(),
            probability: 0.0,
            diffused: false,
        };
        table.len()
    ];
    let mut classes = Vec::new();
    for status in TruthStatus::ALL {
        let plan = cfg.class(status);
        let idx = table.indices_with_status(status);
        let norm = plan.weights.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        let scaled: Vec<(String, f64)> = plan
            .weights
            .iter()
            .map(|(name, w)| {
                (
                    name.clone(),
                    if norm > 0.0 {
                        cfg.signal * w / norm
                    } else {
                        0.0
                    },
                )
            })
            .collect();
        let schema = FeatureSchema::standard();
        let mut standardization = Vec::new();
        let mut score = vec![0.0; idx.len()];
        for (name, w) in &scaled {
            let j = schema.index_of(name).expect("validated feature");
            let col: Vec<f64> = idx.iter().map(|&i| table.vectors[i].values[j]).collect();
            let (m, sd) = if cfg.pooled_standardization {
                let all: Vec<f64> = table.vectors.iter().map(|v| v.values[j]).collect();
                mean_std(&all)
            } else {
                mean_std(&col)
            };
            for (s, x) in score.iter_mut().zip(&col) {
                *s += w * (x - m) / sd;
            }
            standardization.push((name.clone(), m, sd));
        }
        let is_forced: Vec<bool> = idx
            .iter()
            .map(|&i| {
                let e = &table.edges[i];
                forced.contains(&(e.tweet_id.clone(), e.receiver_id.clone()))
            })
            .collect();
        let eta = cfg.label_noise;
        let q_of = |b: f64, s: f64, f: bool| {
            if f {
                1.0
            } else {
                let p = sigmoid(b + s);
                (1.0 - eta) * p + eta * (1.0 - p)
            }
        };
        let expected = |b: f64| {
            if idx.is_empty() {
                0.0
            } else {
                score
                    .iter()
                    .zip(&is_forced)
                    .map(|(&s, &f)| q_of(b, s, f))
                    .sum::<f64>()
                    / idx.len() as f64
            }
        };
        let intercept = match plan.diffused_fraction {
            None => plan.intercept,
            Some(target) => solve_intercept(target, &expected).ok_or_else(|| {
                Error::invalid(
                    "synth",
                    format!("{status} diffused fraction {target} is unreachable"),
                )
            })?,
        };
        let mut q = Vec::with_capacity(idx.len());
        let mut diffused_count = 0usize;
        for (k, &i) in idx.iter().enumerate() {
            let p = q_of(intercept, score[k], is_forced[k]);
            let d = is_forced[k] || rng.random_bool(p);
            diffused_count += usize::from(d);
            let e = &table.edges[i];
            planted[i] = PlantedEdge {
                spreader_id: e.spreader_id.clone(),
                receiver_id: e.receiver_id.clone(),
                tweet_id: e.tweet_id.clone(),
                probability: p,
                diffused: d,
            };
            q.push(p);
        }
        let roots = cascades
            .iter()
            .filter(|c| {
                topics
                    .iter()
                    .any(|t| t.topic_id == tweets[c.root].topic_id && t.status == status)
            })
            .count();
        classes.push(ClassTruth {
            status,
            intercept,
            weights: scaled,
            standardization,
            edges: idx.len(),
            chain_edges: is_forced.iter().filter(|&&f| f).count(),
            expected_diffused_fraction: expected(intercept),
            realized_diffused_fraction: if idx.is_empty() {
                0.0
            } else {
                diffused_count as f64 / idx.len() as f64
            },
            original_posts: roots,
            planned_mean_depth: plan.mean_depth,
            bayes: if q.is_empty() {
                BayesRate {
                    accuracy: 0.0,
                    f_ceiling: 0.0,
                    positive_rate: 0.0,
                }
            } else {
                bayes_rate(&q)?
            },
        });
    }

    let by_id: HashMap<&str, &TweetRecord> =
        tweets.iter().map(|t| (t.tweet_id.as_str(), t)).collect();
    let retweet_times: HashMap<(&str, &str), DateTime<Utc>> = cascades
        .iter()
        .flat_map(|c| {
            let mut prev = c.root;
            c.chain
                .iter()
                .map(|&(ev, _)| {
                    let key = (
                        tweets[prev].tweet_id.as_str(),
                        tweets[ev].author_id.as_str(),
                    );
                    prev = ev;
                    (key, tweets[ev].created_at)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let kinds = [ReactionKind::Like, ReactionKind::Reply, ReactionKind::Quote];
    let kind_pick = WeightedIndex::new([0.6, 0.25, 0.15]).expect("valid weights");
    let mut reactions = Vec::new();
    for e in planted.iter().filter(|e| e.diffused) {
        let key = (e.tweet_id.as_str(), e.receiver_id.as_str());
        let (kind, at) = match retweet_times.get(&key) {
            Some(&t) => (ReactionKind::Retweet, t),
            None => {
                let created = by_id[e.tweet_id.as_str()].created_at;
                let t = (created + Duration::minutes(rng.random_range(1..360))).min(snapshot);
                (kinds[kind_pick.sample(&mut rng)], t)
            }
        };
        reactions.push(ReactionRecord {
            reactor_id: e.receiver_id.clone(),
            tweet_id: e.tweet_id.clone(),
            kind,
            reacted_at: at,
        });
    }

    let corpus = Corpus::from_records(users.records, tweets, reactions, follows, topics)?;
    debug_assert_eq!(corpus.snapshot(), snapshot);
    let scores = scored.scores;
    Ok(SynthOutput {
        scored: ScoredCorpus { corpus, scores },
        truth: GroundTruth {
            config: cfg.clone(),
            classes,
        },
        edges: planted,
    })
}

/// Population mean and standard deviation; a (near-)constant column gets 1.
fn mean_std(col: &[f64]) -> (f64, f64) {
    if col.is_empty() {
        return (0.0, 1.0);
    }
    let n = col.len() as f64;
    let m = col.iter().sum::<f64>() / n;
    let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    (m, if sd < 1e-12 { 1.0 } else { sd })
}

/// Authors of a retweet chain of length `depth` starting at `author`, each a
/// follower of the previous one and new to the cascade.
fn plan_chain(
    author: usize,
    depth: usize,
    followers: &[Vec<usize>],
    rng: &mut ChaCha8Rng,
) -> Option<Vec<usize>> {
    for _ in 0..20 {
        let mut seen = vec![author];
        let mut out = Vec::with_capacity(depth);
        let mut cur = author;
        for _ in 0..depth {
            let options: Vec<usize> = followers[cur]
                .iter()
                .copied()
                .filter(|f| !seen.contains(f))
                .collect();
            let Some(&next) = options.choose(rng) else {
                break;
            };
            seen.push(next);
            out.push(next);
            cur = next;
        }
        if out.len() == depth {
            return Some(out);
        }
    }
    None
}

/// Bisection for the intercept giving an expected diffused fraction of
/// `target`; `None` when out of reach.
fn solve_intercept(target: f64, expected: &dyn Fn(f64) -> f64) -> Option<f64> {
    let (mut lo, mut hi) = (-60.0, 60.0);
    if !(expected(lo) <= target && target <= expected(hi)) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
