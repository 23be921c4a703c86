use serde::{Deserialize, Serialize};

use crate::corpus::TruthStatus;
use crate::error::{Error, Result};
use crate::learn::{Dataset, LogRegModel};

/// Outcome of a per-message vote over edge-level predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: TruthStatus,
    pub true_votes: usize,
    pub false_votes: usize,
    /// Votes were split evenly; the status fell back to `False`.
    pub tie: bool,
}

/// Strict majority of `True` votes wins; ties resolve to `False`.
pub fn majority_vote(votes: &[TruthStatus]) -> Result<Verdict> {
    if votes.is_empty() {
        return Err(Error::Empty("votes"));
    }
    let true_votes = votes.iter().filter(|&&v| v == TruthStatus::True).count();
    let false_votes = votes.len() - true_votes;
    Ok(Verdict {
        status: if true_votes > false_votes {
            TruthStatus::True
        } else {
            TruthStatus::False
        },
        true_votes,
        false_votes,
        tie: true_votes == false_votes,
    })
}

/// Classifies each edge of one message with a credibility model (positive
/// class `True`) and takes the majority vote.
pub fn predict_credibility(
    model: &LogRegModel,
    edges: &Dataset,
    threshold: f64,
) -> Result<Verdict> {
    if edges.is_empty() {
        return Err(Error::Empty("message edges"));
    }
    let votes: Vec<TruthStatus> = model
        .predict_dataset(edges)?
        .into_iter()
        .map(|p| {
            if p >= threshold {
                TruthStatus::True
            } else {
                TruthStatus::False
            }
        })
        .collect();
    majority_vote(&votes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TruthStatus::{False as F, True as T};

    #[test]
    fn votes() {
        let v = majority_vote(&[T, T, T, F, F]).unwrap();
        assert_eq!(
            (v.status, v.true_votes, v.false_votes, v.tie),
            (T, 3, 2, false)
        );
        let v = majority_vote(&[T, T, F, F]).unwrap();
        assert_eq!(v.status, F);
        assert!(v.tie);
        assert_eq!(majority_vote(&[F]).unwrap().status, F);
        assert!(majority_vote(&[]).is_err());
    }
}
