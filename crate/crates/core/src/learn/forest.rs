//! Random forest of Gini-split decision trees, used to rank features by
//! mean decrease in impurity.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means ⌈√d⌉.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 12,
            min_leaf: 5,
            features_per_split: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        positive_rate: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { positive_rate } => return positive_rate,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    /// (feature, threshold) of every internal node.
    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
    pub feature_names: Vec<String>,
    /// Normalized mean decrease in impurity, aligned with `feature_names`.
    pub importances: Vec<f64>,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean leaf positive rate across trees.
    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn ranking(&self) -> FeatureRanking {
        FeatureRanking::from_importances(&self.feature_names, &self.importances)
    }
}

/// Seed of the `i`-th tree's generator.
pub fn tree_seed(seed: u64, i: usize) -> u64 {
    seed ^ i as u64
}

/// `n` draws with replacement from `0..n`.
pub fn bootstrap_indices(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

pub fn fit_forest(data: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    data.check_two_classes()?;
    data.check_finite()?;
    if params.n_trees == 0 {
        return Err(Error::invalid("forest", "n_trees must be positive"));
    }
    let d = data.n_features();
    if d == 0 {
        return Err(Error::Empty("feature set"));
    }
    let mtry = params
        .features_per_split
        .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
        .clamp(1, d);
    let builder = TreeBuilder {
        data,
        max_depth: params.max_depth,
        min_leaf: params.min_leaf.max(1),
        mtry,
    };
    let fitted: Vec<(DecisionTree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(params.seed, i));
            let mut sample = bootstrap_indices(data.len(), &mut rng);
            builder.build(&mut sample, &mut rng)
        })
        .collect();

    let mut importances = vec![0.0; d];
    let mut trees = Vec::with_capacity(fitted.len());
    for (tree, imp) in fitted {
        let total: f64 = imp.iter().sum();
        if total > 0.0 {
            for (acc, v) in importances.iter_mut().zip(&imp) {
                *acc += v / total;
            }
        }
        trees.push(tree);
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    } else {
        // no tree found a useful split
        importances.iter_mut().for_each(|v| *v = 1.0 / d as f64);
    }
    Ok(ForestModel {
        trees,
        params: *params,
        feature_names: data.names.clone(),
        importances,
    })
}

struct TreeBuilder<'a> {
    data: &'a Dataset,
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// n * Gini impurity of a node with `pos` positives among `n`.
fn weighted_gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let pos = pos as f64;
    2.0 * pos * (n as f64 - pos) / n as f64
}

impl TreeBuilder<'_> {
    fn build(&self, sample: &mut [usize], rng: &mut ChaCha8Rng) -> (DecisionTree, Vec<f64>) {
        let mut nodes = Vec::new();
        let mut importance = vec![0.0; self.data.n_features()];
        let mut scratch = Vec::with_capacity(sample.len());
        self.grow(sample, 0, rng, &mut nodes, &mut importance, &mut scratch);
        (DecisionTree { nodes }, importance)
    }

    fn grow(
        &self,
        sample: &mut [usize],
        depth: usize,
        rng: &mut ChaCha8Rng,
        nodes: &mut Vec<Node>,
        importance: &mut [f64],
        scratch: &mut Vec<(f64, bool)>,
    ) -> usize {
        let n = sample.len();
        let pos = sample.iter().filter(|&&i| self.data.labels[i]).count();
        let id = nodes.len();
        nodes.push(Node::Leaf {
            positive_rate: pos as f64 / n.max(1) as f64,
        });
        if depth >= self.max_depth || n < 2 * self.min_leaf || pos == 0 || pos == n {
            return id;
        }
        let Some(best) = self.best_split(sample, pos, rng, scratch) else {
            return id;
        };
        importance[best.feature] += best.gain;

        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            if self.data.rows[sample[lo]][best.feature] <= best.threshold {
                lo += 1;
            } else {
                hi -= 1;
                sample.swap(lo, hi);
            }
        }
        let (left_s, right_s) = sample.split_at_mut(lo);
        let left = self.grow(left_s, depth + 1, rng, nodes, importance, scratch);
        let right = self.grow(right_s, depth + 1, rng, nodes, importance, scratch);
        nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(
        &self,
        sample: &[usize],
        pos: usize,
        rng: &mut ChaCha8Rng,
        scratch: &mut Vec<(f64, bool)>,
    ) -> Option<BestSplit> {
        let n = sample.len();
        let parent = weighted_gini(pos, n);
        let mut best: Option<BestSplit> = None;
        for feature in index::sample(rng, self.data.n_features(), self.mtry) {
            scratch.clear();
            scratch.extend(
                sample
                    .iter()
                    .map(|&i| (self.data.rows[i][feature], self.data.labels[i])),
            );
            scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 1..n {
                if scratch[k - 1].1 {
                    left_pos += 1;
                }
                let (a, b) = (scratch[k - 1].0, scratch[k].0);
                if k < self.min_leaf || n - k < self.min_leaf || a == b {
                    continue;
                }
                let gain =
                    parent - weighted_gini(left_pos, k) - weighted_gini(pos - left_pos, n - k);
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}

/// Features ordered by decreasing importance; ties keep input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    pub fn from_importances(names: &[String], importances: &[f64]) -> FeatureRanking {
        let mut entries: Vec<(String, f64)> = names
            .iter()
            .cloned()
            .zip(importances.iter().copied())
            .collect();
        // stable sort keeps schema order among ties
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        FeatureRanking { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }
}

/// The `k` most important feature names, most important first.
pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<String>> {
    if k > ranking.len() {
        return Err(Error::invalid(
            "top-k",
            format!("k = {k} exceeds the {} ranked features", ranking.len()),
        ));
    }
    Ok(ranking.entries[..k]
        .iter()
        .map(|(n, _)| n.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn planted(n: usize, noise: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let signal: f64 = rng.random();
            let mut row = vec![signal];
            row.extend((0..noise).map(|_| rng.random::<f64>()));
            labels.push(signal > 0.5);
            rows.push(row);
        }
        let mut names = vec!["signal".to_string()];
        names.extend((0..noise).map(|i| format!("noise{i}")));
        Dataset::new(names, rows, labels).unwrap()
    }

    #[test]
    fn planted_feature_ranks_first() {
        let data = planted(300, 5, 1);
        let m = fit_forest(
            &data,
            &ForestParams {
                n_trees: 30,
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(m.ranking().entries[0].0, "signal");
        let sum: f64 = m.importances.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(m.importances.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn deterministic_per_seed() {
        let data = planted(200, 4, 2);
        let p = ForestParams {
            n_trees: 10,
            seed: 9,
            ..Default::default()
        };
        assert_eq!(
            fit_forest(&data, &p).unwrap(),
            fit_forest(&data, &p).unwrap()
        );
    }

    #[test]
    fn thresholds_lie_between_observed_values() {
        let data = planted(150, 3, 3);
        let m = fit_forest(
            &data,
            &ForestParams {
                n_trees: 5,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        for tree in &m.trees {
            for (f, thr) in tree.splits() {
                let below = data.rows.iter().any(|r| r[f] <= thr);
                let above = data.rows.iter().any(|r| r[f] > thr);
                assert!(
                    below && above,
                    "threshold {thr} on feature {f} separates nothing"
                );
            }
        }
    }

    #[test]
    fn single_class_and_empty_error() {
        let data = Dataset::new(
            vec!["a".into()],
            vec![vec![1.0], vec![2.0]],
            vec![true, true],
        )
        .unwrap();
        assert!(fit_forest(&data, &ForestParams::default()).is_err());
        let empty = Dataset::new(vec!["a".into()], vec![], vec![]).unwrap();
        assert!(fit_forest(&empty, &ForestParams::default()).is_err());
    }

    #[test]
    fn top_k() {
        let r = FeatureRanking::from_importances(
            &["a".into(), "b".into(), "c".into()],
            &[0.2, 0.5, 0.3],
        );
        assert_eq!(select_top_k(&r, 1).unwrap(), vec!["b"]);
        assert_eq!(select_top_k(&r, 3).unwrap(), vec!["b", "c", "a"]);
        assert!(select_top_k(&r, 4).is_err());
    }

    #[test]
    fn ranking_ties_keep_schema_order() {
        let r = FeatureRanking::from_importances(
            &["x".into(), "y".into(), "z".into()],
            &[0.25, 0.5, 0.25],
        );
        let names: Vec<_> = r.entries.iter().map(|e| e.0.as_str()).collect();
        assert_eq!(names, ["y", "x", "z"]);
    }

    #[test]
    fn bootstrap_out_of_bag_rate() {
        // P(point i absent from a bootstrap of size n) = (1 - 1/n)^n ≈ 0.366
        let n = 200;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 300;
        let mut absent = 0usize;
        for _ in 0..trials {
            let b = bootstrap_indices(n, &mut rng);
            assert_eq!(b.len(), n);
            let mut seen = vec![false; n];
            b.iter().for_each(|&i| seen[i] = true);
            absent += seen.iter().filter(|s| !**s).count();
        }
        let rate = absent as f64 / (n * trials) as f64;
        let expected = (1.0 - 1.0 / n as f64).powi(n as i32);
        assert!((rate - expected).abs() < 0.01, "{rate} vs {expected}");
    }
}
