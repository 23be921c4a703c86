use serde::{Deserialize, Serialize};

/// Binary confusion counts with "diffused" (or the chosen class) as positive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> ConfusionCounts {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    /// Tallies (predicted, actual) pairs.
    pub fn tally(pairs: impl IntoIterator<Item = (bool, bool)>) -> ConfusionCounts {
        let mut c = ConfusionCounts::default();
        for (pred, actual) in pairs {
            c.record(pred, actual);
        }
        c
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn merge(&self, other: &ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            fn_: self.fn_ + other.fn_,
            tn: self.tn + other.tn,
        }
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / self.total() as f64
        }
    }
}

/// A ratio that falls back to zero on an empty denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    /// True when the denominator was zero.
    pub degenerate: bool,
}

fn ratio(num: u64, den: u64) -> Score {
    if den == 0 {
        Score {
            value: 0.0,
            degenerate: true,
        }
    } else {
        Score {
            value: num as f64 / den as f64,
            degenerate: false,
        }
    }
}

/// TP / (TP + FP).
pub fn precision(c: &ConfusionCounts) -> Score {
    ratio(c.tp, c.tp + c.fp)
}

/// TP / (TP + FN).
pub fn recall(c: &ConfusionCounts) -> Score {
    ratio(c.tp, c.tp + c.fn_)
}

/// Harmonic mean 2pr / (p + r), zero when p + r = 0.
pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * (p * r) / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    /// Either ratio had a zero denominator.
    pub degenerate: bool,
    pub counts: ConfusionCounts,
}

impl Metrics {
    pub fn from_counts(c: ConfusionCounts) -> Metrics {
        let p = precision(&c);
        let r = recall(&c);
        Metrics {
            precision: p.value,
            recall: r.value,
            f: f_score(p.value, r.value),
            degenerate: p.degenerate || r.degenerate,
            counts: c,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.counts.accuracy()
    }
}

/// Unweighted mean of precision, recall and F over folds.
pub fn mean_metrics(folds: &[Metrics]) -> Option<MeanMetrics> {
    if folds.is_empty() {
        return None;
    }
    let n = folds.len() as f64;
    Some(MeanMetrics {
        precision: folds.iter().map(|m| m.precision).sum::<f64>() / n,
        recall: folds.iter().map(|m| m.recall).sum::<f64>() / n,
        f: folds.iter().map(|m| m.f).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}
