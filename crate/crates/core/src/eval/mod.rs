//! Metrics, splits, credibility voting and the experiment harness.

pub mod credibility;
pub mod experiment;
pub mod metrics;
pub mod split;

use serde::{Deserialize, Serialize};

pub use credibility::{majority_vote, predict_credibility, Verdict};
pub use experiment::{
    ablate_diffusion_feature, run_credibility, run_diffusion, AblationReport, ClassReport,
    CredibilityReport, DiffusionReport, DiffusionRun, DiffusionSource, ExperimentConfig,
    RankingScope,
};
pub use metrics::{
    f_score, mean_metrics, precision, recall, ConfusionCounts, MeanMetrics, Metrics,
};
pub use split::{k_fold, make_split, SplitPlan};

use crate::corpus::TruthStatus;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::graph::DiffusionEdge;
use crate::learn::{Dataset, LogRegModel};

/// Precision, recall and F of `model` on labeled edges, diffused = positive.
pub fn evaluate_diffusion(
    model: &LogRegModel,
    edges: &[DiffusionEdge],
    vectors: &[FeatureVector],
    threshold: f64,
) -> Result<Metrics> {
    if edges.len() != vectors.len() {
        return Err(Error::Schema(format!(
            "{} edges but {} feature vectors",
            edges.len(),
            vectors.len()
        )));
    }
    if edges.is_empty() {
        return Err(Error::Empty("evaluation edges"));
    }
    let mut counts = ConfusionCounts::default();
    for (e, x) in edges.iter().zip(vectors) {
        counts.record(model.predict_proba(x)? >= threshold, e.label.is_diffused());
    }
    Ok(Metrics::from_counts(counts))
}

/// Metrics of a fitted model on any dataset, thresholding its probabilities.
pub fn evaluate_dataset(model: &LogRegModel, data: &Dataset, threshold: f64) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation rows"));
    }
    let probs = model.predict_dataset(data)?;
    Ok(Metrics::from_counts(ConfusionCounts::tally(
        probs
            .iter()
            .map(|&p| p >= threshold)
            .zip(data.labels.iter().copied()),
    )))
}

/// A diffusion model trained on one truth class scored on the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossResult {
    /// e.g. "False model-True test".
    pub label: String,
    pub trained_on: TruthStatus,
    pub tested_on: TruthStatus,
    pub metrics: Metrics,
}

pub fn cross_label(trained_on: TruthStatus) -> String {
    format!("{trained_on} model-{} test", trained_on.other())
}

/// Scores a model trained on `trained_on` edges against edges of the other
/// class; mixing in edges of the training class is an error.
pub fn cross_credibility(
    model: &LogRegModel,
    trained_on: TruthStatus,
    edges: &[DiffusionEdge],
    vectors: &[FeatureVector],
    threshold: f64,
) -> Result<CrossResult> {
    if let Some(e) = edges.iter().find(|e| e.topic_status == trained_on) {
        return Err(Error::invalid(
            "cross evaluation",
            format!(
                "edge {}->{} on {} belongs to the training class {trained_on}",
                e.spreader_id, e.receiver_id, e.tweet_id
            ),
        ));
    }
    Ok(CrossResult {
        label: cross_label(trained_on),
        trained_on,
        tested_on: trained_on.other(),
        metrics: evaluate_diffusion(model, edges, vectors, threshold)?,
    })
}
