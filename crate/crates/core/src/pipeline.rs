//! Corpus to labeled feature table.

use std::collections::BTreeMap;
use std::path::Path;

use crate::content::{load_scores, LatentScores, Lexicon};
use crate::corpus::{load_corpus, Corpus, TopicId, TruthStatus, TweetId};
use crate::error::{Error, Result};
use crate::features::{
    assemble_edge_vector, resolve_scores, FeatureConfig, FeatureContext, FeatureSchema,
    FeatureVector,
};
use crate::graph::{build_edges_with, DiffusionEdge, EdgeConfig};
use crate::learn::Dataset;

/// Optional precomputed latent scores living next to the corpus files.
pub const SCORES_FILE: &str = "scores.jsonl";

/// Name of the diffusion-label column appended for credibility models.
pub const DIFFUSION_COLUMN: &str = "diffused";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineConfig {
    pub features: FeatureConfig,
    pub edges: EdgeConfig,
}

/// A corpus directory loaded together with resolved per-tweet scores.
pub struct ScoredCorpus {
    pub corpus: Corpus,
    pub scores: BTreeMap<TweetId, LatentScores>,
}

impl ScoredCorpus {
    /// Loads `dir`, taking scores from `scores.jsonl` when present and
    /// scoring the rest with `lexicon`.
    pub fn load(dir: impl AsRef<Path>, lexicon: &Lexicon) -> Result<ScoredCorpus> {
        let dir = dir.as_ref();
        let corpus = load_corpus(dir)?;
        let path = dir.join(SCORES_FILE);
        let precomputed = if path.exists() {
            load_scores(&path)?
        } else {
            BTreeMap::new()
        };
        Ok(ScoredCorpus::new(corpus, &precomputed, lexicon))
    }

    pub fn new(
        corpus: Corpus,
        precomputed: &BTreeMap<TweetId, LatentScores>,
        lexicon: &Lexicon,
    ) -> ScoredCorpus {
        let scores = resolve_scores(&corpus, precomputed, lexicon);
        ScoredCorpus { corpus, scores }
    }
}

/// Every exposure edge of a corpus with its feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTable {
    pub edges: Vec<DiffusionEdge>,
    pub vectors: Vec<FeatureVector>,
    /// Original post of each edge's message, used to group edges by message.
    pub message_ids: Vec<TweetId>,
    pub topic_ids: Vec<TopicId>,
}

impl EdgeTable {
    pub fn build(scored: &ScoredCorpus, config: &PipelineConfig) -> Result<EdgeTable> {
        let corpus = &scored.corpus;
        let edges = build_edges_with(corpus, config.edges);
        let ctx = FeatureContext::with_config(corpus, config.features);
        let mut vectors = Vec::with_capacity(edges.len());
        let mut message_ids = Vec::with_capacity(edges.len());
        let mut topic_ids = Vec::with_capacity(edges.len());
        for e in &edges {
            let tweet = corpus.tweet(&e.tweet_id)?;
            let scores = scored
                .scores
                .get(&e.tweet_id)
                .ok_or_else(|| Error::Unresolved {
                    kind: "scores",
                    id: e.tweet_id.clone(),
                    referrer: "edge table".into(),
                })?;
            vectors.push(assemble_edge_vector(
                corpus.user(&e.spreader_id)?,
                corpus.user(&e.receiver_id)?,
                tweet,
                scores,
                &ctx,
            )?);
            message_ids.push(corpus.root_of(tweet).tweet_id.clone());
            topic_ids.push(tweet.topic_id.clone());
        }
        Ok(EdgeTable {
            edges,
            vectors,
            message_ids,
            topic_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> EdgeTable {
        EdgeTable {
            edges: indices.iter().map(|&i| self.edges[i].clone()).collect(),
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            message_ids: indices
                .iter()
                .map(|&i| self.message_ids[i].clone())
                .collect(),
            topic_ids: indices.iter().map(|&i| self.topic_ids[i].clone()).collect(),
        }
    }

    pub fn indices_with_status(&self, status: TruthStatus) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.edges[i].topic_status == status)
            .collect()
    }

    pub fn with_status(&self, status: TruthStatus) -> EdgeTable {
        self.subset(&self.indices_with_status(status))
    }

    pub fn diffusion_labels(&self) -> Vec<bool> {
        self.edges.iter().map(|e| e.label.is_diffused()).collect()
    }

    /// Standard-schema features labeled by diffusion.
    pub fn diffusion_dataset(&self) -> Dataset {
        Dataset {
            names: FeatureSchema::standard().names(),
            rows: self.vectors.iter().map(|v| v.values.clone()).collect(),
            labels: self.diffusion_labels(),
        }
    }

    /// Standard-schema features labeled by truth status (True = positive),
    /// optionally with a diffusion column appended.
    pub fn credibility_dataset(&self, diffusion: Option<&[bool]>) -> Result<Dataset> {
        let base = Dataset {
            names: FeatureSchema::standard().names(),
            rows: self.vectors.iter().map(|v| v.values.clone()).collect(),
            labels: self
                .edges
                .iter()
                .map(|e| e.topic_status == TruthStatus::True)
                .collect(),
        };
        match diffusion {
            None => Ok(base),
            Some(col) => {
                let values: Vec<f64> = col.iter().map(|&d| f64::from(u8::from(d))).collect();
                base.with_column(DIFFUSION_COLUMN, &values)
            }
        }
    }

    /// Edge indices grouped by message, in message-id order.
    pub fn messages(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, m) in self.message_ids.iter().enumerate() {
            out.entry(m.as_str()).or_default().push(i);
        }
        out
    }
}
