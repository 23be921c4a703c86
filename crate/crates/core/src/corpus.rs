//! Corpus schema and JSONL ingestion.
//!
//! A corpus is five newline-delimited JSON files living side by side:
//!
//! | file              | record                                  |
//! |-------------------|-----------------------------------------|
//! | `users.jsonl`     | [`UserRecord`]                          |
//! | `tweets.jsonl`    | [`TweetRecord`]                         |
//! | `reactions.jsonl` | [`ReactionRecord`]                      |
//! | `follows.jsonl`   | `{"follower": id, "followee": id}`      |
//! | `topics.jsonl`    | [`TopicLabel`]                          |
//!
//! Parsing checks referential integrity across files, so a [`Corpus`] value
//! always satisfies its invariants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type UserId = String;
pub type TweetId = String;
pub type TopicId = String;

/// Longest post, in characters.
pub const MAX_TWEET_CHARS: usize = 280;

pub const USERS_FILE: &str = "users.jsonl";
pub const TWEETS_FILE: &str = "tweets.jsonl";
pub const REACTIONS_FILE: &str = "reactions.jsonl";
pub const FOLLOWS_FILE: &str = "follows.jsonl";
pub const TOPICS_FILE: &str = "topics.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    pub followers_count: u64,
    pub friends_count: u64,
    pub statuses_count: u64,
    pub account_created_at: DateTime<Utc>,
    #[serde(default)]
    pub verified: bool,
    #[serde(default)]
    pub has_profile_url: bool,
    #[serde(default)]
    pub has_description: bool,
    #[serde(default)]
    pub friend_ids: BTreeSet<UserId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: TweetId,
    pub author_id: UserId,
    pub text: String,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub retweet_count: u64,
    #[serde(default)]
    pub favorite_count: u64,
    #[serde(default)]
    pub is_retweet: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_of: Option<TweetId>,
    #[serde(default)]
    pub is_quote: bool,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub urls: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<UserId>,
    #[serde(default)]
    pub has_media: bool,
    pub topic_id: TopicId,
}

/// How a user engaged with a post. "share" maps to `Retweet` and "favorite"
/// to `Like`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReactionKind {
    Retweet,
    Quote,
    Reply,
    Like,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionRecord {
    pub reactor_id: UserId,
    pub tweet_id: TweetId,
    pub kind: ReactionKind,
    pub reacted_at: DateTime<Utc>,
}

/// Fact-check verdict of a topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TruthStatus {
    True,
    False,
}

impl TruthStatus {
    pub const ALL: [TruthStatus; 2] = [TruthStatus::False, TruthStatus::True];

    pub fn as_str(self) -> &'static str {
        match self {
            TruthStatus::True => "True",
            TruthStatus::False => "False",
        }
    }

    pub fn other(self) -> TruthStatus {
        match self {
            TruthStatus::True => TruthStatus::False,
            TruthStatus::False => TruthStatus::True,
        }
    }
}

impl fmt::Display for TruthStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TruthStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "true" => Ok(TruthStatus::True),
            "false" => Ok(TruthStatus::False),
            _ => Err(Error::invalid(
                "truth status",
                format!("`{s}` is neither True nor False"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicLabel {
    pub topic_id: TopicId,
    pub status: TruthStatus,
    pub keywords: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FollowEdge {
    pub follower: UserId,
    pub followee: UserId,
}

/// A validated, immutable collection of users, posts, reactions and the
/// follower graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub users: BTreeMap<UserId, UserRecord>,
    pub tweets: BTreeMap<TweetId, TweetRecord>,
    /// Sorted by (tweet, reactor, time, kind).
    pub reactions: Vec<ReactionRecord>,
    /// (follower, followee) pairs.
    pub follow_edges: BTreeSet<(UserId, UserId)>,
    pub topics: BTreeMap<TopicId, TopicLabel>,
}

impl Corpus {
    /// Builds a corpus from loose records, rejecting duplicates and dangling
    /// references.
    pub fn from_records(
        users: Vec<UserRecord>,
        tweets: Vec<TweetRecord>,
        mut reactions: Vec<ReactionRecord>,
        follows: Vec<FollowEdge>,
        topics: Vec<TopicLabel>,
    ) -> Result<Corpus> {
        let mut corpus = Corpus::default();
        for u in users {
            if corpus.users.contains_key(&u.user_id) {
                return Err(Error::invalid(
                    "users",
                    format!("duplicate user_id `{}`", u.user_id),
                ));
            }
            corpus.users.insert(u.user_id.clone(), u);
        }
        for t in tweets {
            if corpus.tweets.contains_key(&t.tweet_id) {
                return Err(Error::invalid(
                    "tweets",
                    format!("duplicate tweet_id `{}`", t.tweet_id),
                ));
            }
            corpus.tweets.insert(t.tweet_id.clone(), t);
        }
        for t in topics {
            if corpus.topics.contains_key(&t.topic_id) {
                return Err(Error::invalid(
                    "topics",
                    format!("duplicate topic_id `{}`", t.topic_id),
                ));
            }
            corpus.topics.insert(t.topic_id.clone(), t);
        }
        corpus.follow_edges = follows
            .into_iter()
            .map(|e| (e.follower, e.followee))
            .collect();
        reactions.sort_by(|a, b| {
            (&a.tweet_id, &a.reactor_id, a.reacted_at, a.kind).cmp(&(
                &b.tweet_id,
                &b.reactor_id,
                b.reacted_at,
                b.kind,
            ))
        });
        corpus.reactions = reactions;
        corpus.validate()?;
        Ok(corpus)
    }

    /// Checks every referential-integrity and field invariant.
    pub fn validate(&self) -> Result<()> {
        let snapshot = self.snapshot();
        for u in self.users.values() {
            if u.account_created_at > snapshot {
                return Err(Error::invalid(
                    "user",
                    format!("`{}` created after the corpus snapshot", u.user_id),
                ));
            }
        }
        for topic in self.topics.values() {
            if topic.keywords.is_empty() {
                return Err(Error::invalid(
                    "topic",
                    format!("`{}` has no keywords", topic.topic_id),
                ));
            }
            for k in &topic.keywords {
                if k.trim().is_empty() {
                    return Err(Error::invalid(
                        "topic",
                        format!("`{}` has a blank keyword", topic.topic_id),
                    ));
                }
                if k.chars().any(char::is_uppercase) {
                    return Err(Error::invalid(
                        "topic",
                        format!("`{}` keyword `{k}` is not lowercase", topic.topic_id),
                    ));
                }
            }
        }
        for t in self.tweets.values() {
            if !self.users.contains_key(&t.author_id) {
                return Err(Error::Unresolved {
                    kind: "author",
                    id: t.author_id.clone(),
                    referrer: format!("tweet `{}`", t.tweet_id),
                });
            }
            if !self.topics.contains_key(&t.topic_id) {
                return Err(Error::Unresolved {
                    kind: "topic",
                    id: t.topic_id.clone(),
                    referrer: format!("tweet `{}`", t.tweet_id),
                });
            }
            if t.is_retweet != t.retweet_of.is_some() {
                return Err(Error::invalid(
                    "tweet",
                    format!(
                        "`{}`: is_retweet must match presence of retweet_of",
                        t.tweet_id
                    ),
                ));
            }
            if let Some(parent) = &t.retweet_of {
                if parent == &t.tweet_id {
                    return Err(Error::invalid(
                        "tweet",
                        format!("`{}` retweets itself", t.tweet_id),
                    ));
                }
                if !self.tweets.contains_key(parent) {
                    return Err(Error::Unresolved {
                        kind: "retweeted tweet",
                        id: parent.clone(),
                        referrer: format!("tweet `{}`", t.tweet_id),
                    });
                }
            }
            let chars = t.text.chars().count();
            if chars > MAX_TWEET_CHARS {
                return Err(Error::invalid(
                    "tweet",
                    format!(
                        "`{}` has {chars} characters (max {MAX_TWEET_CHARS})",
                        t.tweet_id
                    ),
                ));
            }
        }
        for r in &self.reactions {
            if !self.users.contains_key(&r.reactor_id) {
                return Err(Error::Unresolved {
                    kind: "reactor",
                    id: r.reactor_id.clone(),
                    referrer: format!("reaction on `{}`", r.tweet_id),
                });
            }
            if !self.tweets.contains_key(&r.tweet_id) {
                return Err(Error::Unresolved {
                    kind: "reacted tweet",
                    id: r.tweet_id.clone(),
                    referrer: format!("reaction by `{}`", r.reactor_id),
                });
            }
        }
        for (follower, followee) in &self.follow_edges {
            for id in [follower, followee] {
                if !self.users.contains_key(id) {
                    return Err(Error::Unresolved {
                        kind: "follow endpoint",
                        id: id.clone(),
                        referrer: format!("follow edge {follower} -> {followee}"),
                    });
                }
            }
        }
        self.check_retweet_cycles()
    }

    fn check_retweet_cycles(&self) -> Result<()> {
        for start in self.tweets.values() {
            let mut steps = 0usize;
            let mut cur = start;
            while let Some(parent) = &cur.retweet_of {
                steps += 1;
                if steps > self.tweets.len() {
                    return Err(Error::invalid(
                        "tweet",
                        format!("retweet chain through `{}` is cyclic", start.tweet_id),
                    ));
                }
                cur = &self.tweets[parent];
            }
        }
        Ok(())
    }

    /// The corpus reference time: the latest timestamp appearing anywhere in
    /// the corpus, or the Unix epoch for an empty corpus.
    pub fn snapshot(&self) -> DateTime<Utc> {
        let users = self.users.values().map(|u| u.account_created_at);
        let tweets = self.tweets.values().map(|t| t.created_at);
        let reactions = self.reactions.iter().map(|r| r.reacted_at);
        users
            .chain(tweets)
            .chain(reactions)
            .max()
            .unwrap_or(DateTime::<Utc>::UNIX_EPOCH)
    }

    pub fn user(&self, id: &str) -> Result<&UserRecord> {
        self.users.get(id).ok_or_else(|| Error::Unresolved {
            kind: "user",
            id: id.to_string(),
            referrer: "lookup".to_string(),
        })
    }

    pub fn tweet(&self, id: &str) -> Result<&TweetRecord> {
        self.tweets.get(id).ok_or_else(|| Error::Unresolved {
            kind: "tweet",
            id: id.to_string(),
            referrer: "lookup".to_string(),
        })
    }

    pub fn follows(&self, follower: &str, followee: &str) -> bool {
        self.follow_edges
            .contains(&(follower.to_string(), followee.to_string()))
    }

    /// Truth status of the topic a tweet belongs to.
    pub fn status_of(&self, tweet: &TweetRecord) -> TruthStatus {
        self.topics[&tweet.topic_id].status
    }

    /// Follows `retweet_of` links up to the original post.
    pub fn root_of<'a>(&'a self, tweet: &'a TweetRecord) -> &'a TweetRecord {
        let mut cur = tweet;
        while let Some(parent) = &cur.retweet_of {
            cur = &self.tweets[parent];
        }
        cur
    }

    pub fn follow_records(&self) -> impl Iterator<Item = FollowEdge> + '_ {
        self.follow_edges.iter().map(|(a, b)| FollowEdge {
            follower: a.clone(),
            followee: b.clone(),
        })
    }
}

/// Locations of the five corpus files.
#[derive(Debug, Clone, Default)]
pub struct CorpusFiles {
    pub users: Option<PathBuf>,
    pub tweets: Option<PathBuf>,
    pub reactions: Option<PathBuf>,
    pub follows: Option<PathBuf>,
    pub topics: Option<PathBuf>,
}

impl CorpusFiles {
    /// Standard file names inside `dir`. Files that do not exist are treated
    /// as empty.
    pub fn in_dir(dir: impl AsRef<Path>) -> CorpusFiles {
        let dir = dir.as_ref();
        let pick = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        CorpusFiles {
            users: pick(USERS_FILE),
            tweets: pick(TWEETS_FILE),
            reactions: pick(REACTIONS_FILE),
            follows: pick(FOLLOWS_FILE),
            topics: pick(TOPICS_FILE),
        }
    }

    pub fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        [
            &self.users,
            &self.tweets,
            &self.reactions,
            &self.follows,
            &self.topics,
        ]
        .into_iter()
        .flatten()
    }
}

/// Reads one JSONL file. Blank lines are skipped; line numbers in errors are
/// 1-based.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            file: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_opt<T: DeserializeOwned>(path: &Option<PathBuf>) -> Result<Vec<T>> {
    match path {
        Some(p) => read_jsonl(p),
        None => Ok(Vec::new()),
    }
}

pub fn parse_corpus(files: &CorpusFiles) -> Result<Corpus> {
    Corpus::from_records(
        read_opt(&files.users)?,
        read_opt(&files.tweets)?,
        read_opt(&files.reactions)?,
        read_opt(&files.follows)?,
        read_opt(&files.topics)?,
    )
}

/// Parses the standard files under `dir`.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Corpus> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    parse_corpus(&CorpusFiles::in_dir(dir))
}

/// Writes the corpus as the five standard JSONL files under `dir`, in
/// canonical order.
pub fn write_corpus(corpus: &Corpus, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join(USERS_FILE), corpus.users.values())?;
    write_jsonl(&dir.join(TWEETS_FILE), corpus.tweets.values())?;
    write_jsonl(&dir.join(REACTIONS_FILE), corpus.reactions.iter())?;
    let follows: Vec<FollowEdge> = corpus.follow_records().collect();
    write_jsonl(&dir.join(FOLLOWS_FILE), follows.iter())?;
    write_jsonl(&dir.join(TOPICS_FILE), corpus.topics.values())?;
    Ok(())
}
