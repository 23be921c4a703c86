//! Exposure edges, diffusion labels and retweet cascades.
//!
//! Every post or retweet by a user exposes the message to each of that
//! user's followers. An exposure is labeled diffused when the follower
//! reacts to it no earlier than the moment of exposure.
//!
//! Platforms often flatten retweet chains so that every retweet points at
//! the original post. Both reactions and retweets that point at a post whose
//! author the reactor does not follow are attributed to the followed spreader
//! with the latest earlier spread event of the same cascade.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, ReactionKind, TopicId, TruthStatus, TweetId, TweetRecord, UserId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionLabel {
    Diffused,
    NotDiffused,
}

impl DiffusionLabel {
    pub fn from_bool(diffused: bool) -> DiffusionLabel {
        if diffused {
            DiffusionLabel::Diffused
        } else {
            DiffusionLabel::NotDiffused
        }
    }

    pub fn is_diffused(self) -> bool {
        self == DiffusionLabel::Diffused
    }
}

/// One (spreader, follower, message) exposure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffusionEdge {
    pub spreader_id: UserId,
    pub receiver_id: UserId,
    /// The spread event: the spreader's own post or retweet.
    pub tweet_id: TweetId,
    pub label: DiffusionLabel,
    pub topic_status: TruthStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeConfig {
    /// Whether replies count as engagement.
    pub count_replies: bool,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        EdgeConfig {
            count_replies: true,
        }
    }
}

/// Read-only lookups over the follower graph and retweet cascades.
pub struct GraphIndex<'a> {
    corpus: &'a Corpus,
    followers: HashMap<&'a str, Vec<&'a str>>,
    /// root id -> every spread event in its cascade, root included, ordered
    /// by (time, id)
    cascades: HashMap<&'a str, Vec<&'a TweetRecord>>,
}

impl<'a> GraphIndex<'a> {
    pub fn new(corpus: &'a Corpus) -> GraphIndex<'a> {
        let mut followers: HashMap<&str, Vec<&str>> = HashMap::new();
        // follow_edges is sorted by follower, so each list comes out sorted
        for (follower, followee) in &corpus.follow_edges {
            if follower != followee {
                followers
                    .entry(followee.as_str())
                    .or_default()
                    .push(follower.as_str());
            }
        }
        let mut cascades: HashMap<&str, Vec<&TweetRecord>> = HashMap::new();
        for t in corpus.tweets.values() {
            let root = corpus.root_of(t);
            cascades.entry(root.tweet_id.as_str()).or_default().push(t);
        }
        for events in cascades.values_mut() {
            events.sort_by(|a, b| (a.created_at, &a.tweet_id).cmp(&(b.created_at, &b.tweet_id)));
        }
        GraphIndex {
            corpus,
            followers,
            cascades,
        }
    }

    pub fn followers_of(&self, user: &str) -> &[&'a str] {
        self.followers.get(user).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All spread events sharing `tweet`'s original post.
    pub fn cascade_of(&self, tweet: &TweetRecord) -> &[&'a TweetRecord] {
        let root = self.corpus.root_of(tweet);
        self.cascades
            .get(root.tweet_id.as_str())
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// The latest event in `tweet`'s cascade that `user` was exposed to
    /// through someone they follow, strictly before (or, with `inclusive`, at)
    /// `at`.
    fn latest_followed_event(
        &self,
        tweet: &TweetRecord,
        user: &str,
        at: chrono::DateTime<chrono::Utc>,
        inclusive: bool,
        exclude: Option<&str>,
    ) -> Option<&'a TweetRecord> {
        self.cascade_of(tweet)
            .iter()
            .rev()
            .filter(|e| {
                if inclusive {
                    e.created_at <= at
                } else {
                    e.created_at < at
                }
            })
            .filter(|e| Some(e.tweet_id.as_str()) != exclude)
            .find(|e| e.author_id != user && self.corpus.follows(user, &e.author_id))
            .copied()
    }
}

/// Emits one labeled edge per exposure with the default configuration.
pub fn build_edges(corpus: &Corpus) -> Vec<DiffusionEdge> {
    build_edges_with(corpus, EdgeConfig::default())
}

pub fn build_edges_with(corpus: &Corpus, config: EdgeConfig) -> Vec<DiffusionEdge> {
    let index = GraphIndex::new(corpus);
    let diffused = attribute_reactions(corpus, &index, config);
    let mut edges = Vec::new();
    for t in corpus.tweets.values() {
        let status = corpus.status_of(t);
        for &receiver in index.followers_of(&t.author_id) {
            let hit = diffused.contains(&(t.tweet_id.as_str(), receiver));
            edges.push(DiffusionEdge {
                spreader_id: t.author_id.clone(),
                receiver_id: receiver.to_string(),
                tweet_id: t.tweet_id.clone(),
                label: DiffusionLabel::from_bool(hit),
                topic_status: status,
            });
        }
    }
    edges
}

/// Maps each reaction onto the exposure that caused it, returning the set of
/// (event id, receiver id) pairs that diffused.
fn attribute_reactions<'a>(
    corpus: &'a Corpus,
    index: &GraphIndex<'a>,
    config: EdgeConfig,
) -> HashSet<(&'a str, &'a str)> {
    let mut out = HashSet::new();
    for r in &corpus.reactions {
        if r.kind == ReactionKind::Reply && !config.count_replies {
            continue;
        }
        let target = &corpus.tweets[&r.tweet_id];
        let reactor = r.reactor_id.as_str();
        let direct = target.author_id != reactor
            && r.reacted_at >= target.created_at
            && corpus.follows(reactor, &target.author_id);
        let event = if direct {
            Some(target)
        } else {
            index.latest_followed_event(target, reactor, r.reacted_at, true, None)
        };
        if let Some(e) = event {
            out.insert((e.tweet_id.as_str(), reactor));
        }
    }
    out
}

/// Parent links of the retweet forest.
pub struct Cascades<'a> {
    children: HashMap<&'a str, Vec<&'a str>>,
    corpus: &'a Corpus,
}

impl<'a> Cascades<'a> {
    pub fn new(corpus: &'a Corpus) -> Cascades<'a> {
        let index = GraphIndex::new(corpus);
        let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
        for t in corpus.tweets.values() {
            if let Some(parent) = Self::parent_of(corpus, &index, t) {
                children
                    .entry(parent)
                    .or_default()
                    .push(t.tweet_id.as_str());
            }
        }
        Cascades { children, corpus }
    }

    fn parent_of(
        corpus: &'a Corpus,
        index: &GraphIndex<'a>,
        t: &'a TweetRecord,
    ) -> Option<&'a str> {
        let named = t.retweet_of.as_deref()?;
        let named_tweet = &corpus.tweets[named];
        if named_tweet.is_retweet {
            // explicit chain
            return Some(named);
        }
        // Flattened to the root: credit the followed spreader who shared last.
        let via = index
            .latest_followed_event(t, &t.author_id, t.created_at, false, Some(&t.tweet_id))
            .map(|e| e.tweet_id.as_str());
        Some(via.unwrap_or(named))
    }

    /// Length of the longest retweet chain below `tweet_id`.
    pub fn depth(&self, tweet_id: &str) -> Result<usize> {
        if !self.corpus.tweets.contains_key(tweet_id) {
            return Err(Error::Unresolved {
                kind: "tweet",
                id: tweet_id.to_string(),
                referrer: "cascade depth".into(),
            });
        }
        let mut best = 0;
        let mut seen: HashSet<&str> = HashSet::new();
        let mut stack = vec![(tweet_id, 0usize)];
        while let Some((id, d)) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            best = best.max(d);
            if let Some(kids) = self.children.get(id) {
                stack.extend(kids.iter().map(|&k| (k, d + 1)));
            }
        }
        Ok(best)
    }
}

/// Longest retweet chain rooted at `tweet_id` (the post itself is depth 0).
pub fn cascade_depth(corpus: &Corpus, tweet_id: &str) -> Result<usize> {
    Cascades::new(corpus).depth(tweet_id)
}

/// Fraction of diffused edges per truth status.
pub fn class_balance(edges: &[DiffusionEdge]) -> Result<BTreeMap<TruthStatus, f64>> {
    if edges.is_empty() {
        return Err(Error::Empty("edge list"));
    }
    let mut tally: BTreeMap<TruthStatus, (usize, usize)> = BTreeMap::new();
    for e in edges {
        let entry = tally.entry(e.topic_status).or_default();
        entry.1 += 1;
        if e.label.is_diffused() {
            entry.0 += 1;
        }
    }
    Ok(tally
        .into_iter()
        .map(|(s, (hit, n))| (s, hit as f64 / n as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeStats {
    /// Mean depth over original (non-retweet) posts.
    pub mean_depth: f64,
    pub max_depth: usize,
    pub edge_count: usize,
    pub diffused_fraction: f64,
    pub original_posts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub topics: BTreeMap<TopicId, CascadeStats>,
    pub by_status: BTreeMap<TruthStatus, CascadeStats>,
}

#[derive(Default)]
struct Acc {
    depth_sum: usize,
    max_depth: usize,
    originals: usize,
    edges: usize,
    diffused: usize,
}

impl Acc {
    fn finish(&self) -> CascadeStats {
        CascadeStats {
            mean_depth: if self.originals == 0 {
                0.0
            } else {
                self.depth_sum as f64 / self.originals as f64
            },
            max_depth: self.max_depth,
            edge_count: self.edges,
            diffused_fraction: if self.edges == 0 {
                0.0
            } else {
                self.diffused as f64 / self.edges as f64
            },
            original_posts: self.originals,
        }
    }
}

/// Per-topic and per-status cascade statistics.
pub fn cascade_stats(corpus: &Corpus, edges: &[DiffusionEdge]) -> CorpusStats {
    let cascades = Cascades::new(corpus);
    let mut topics: BTreeMap<&str, Acc> = BTreeMap::new();
    let mut status: BTreeMap<TruthStatus, Acc> = BTreeMap::new();
    for id in corpus.topics.keys() {
        topics.entry(id.as_str()).or_default();
    }
    for t in corpus.tweets.values().filter(|t| !t.is_retweet) {
        let d = cascades.depth(&t.tweet_id).expect("tweet exists");
        for acc in [
            topics
                .get_mut(t.topic_id.as_str())
                .expect("validated topic"),
            status.entry(corpus.status_of(t)).or_default(),
        ] {
            acc.depth_sum += d;
            acc.max_depth = acc.max_depth.max(d);
            acc.originals += 1;
        }
    }
    for e in edges {
        let topic = corpus.tweets[&e.tweet_id].topic_id.as_str();
        for acc in [
            topics.get_mut(topic).expect("validated topic"),
            status.entry(e.topic_status).or_default(),
        ] {
            acc.edges += 1;
            if e.label.is_diffused() {
                acc.diffused += 1;
            }
        }
    }
    CorpusStats {
        topics: topics
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.finish()))
            .collect(),
        by_status: status.into_iter().map(|(k, v)| (k, v.finish())).collect(),
    }
}
