use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index sets for a train/test split and, optionally, k cross-validation
/// folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<Vec<Vec<usize>>>,
    pub seed: u64,
}

impl SplitPlan {
    pub fn n_folds(&self) -> usize {
        self.folds.as_ref().map_or(0, Vec::len)
    }

    /// (train, test) indices for fold `i`: fold `i` is held out, the other
    /// folds train.
    pub fn fold(&self, i: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let folds = self.folds.as_ref()?;
        let test = folds.get(i)?.clone();
        let train = folds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        Some((train, test))
    }
}

fn shuffled(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

/// Seeded shuffle then split. With `labels`, each class is split separately
/// so both sides keep the class ratio.
pub fn make_split(
    n: usize,
    train_frac: f64,
    seed: u64,
    labels: Option<&[bool]>,
) -> Result<SplitPlan> {
    if n < 2 {
        return Err(Error::invalid(
            "split",
            format!("need at least 2 items, got {n}"),
        ));
    }
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(Error::invalid(
            "split",
            format!("train fraction {train_frac} not in (0, 1)"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    match labels {
        Some(y) => {
            if y.len() != n {
                return Err(Error::Schema(format!("{} labels for {n} items", y.len())));
            }
            for class in [true, false] {
                let mut members: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
                members.shuffle(&mut rng);
                let k = (members.len() as f64 * train_frac).round() as usize;
                train.extend_from_slice(&members[..k]);
                test.extend_from_slice(&members[k..]);
            }
        }
        None => {
            let idx = shuffled(n, &mut rng);
            let k = ((n as f64 * train_frac).round() as usize).clamp(1, n - 1);
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::invalid("split", "one side of the split is empty"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        folds: None,
        seed,
    })
}

/// Seeded partition of `0..n` into `k` folds whose sizes differ by at most one.
pub fn k_fold(n: usize, k: usize, seed: u64) -> Result<SplitPlan> {
    if k == 0 {
        return Err(Error::invalid("k-fold", "k must be positive"));
    }
    if n < k {
        return Err(Error::invalid(
            "k-fold",
            format!("{n} items cannot fill {k} folds"),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = shuffled(n, &mut rng);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        let mut fold = idx[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(SplitPlan {
        train_indices: (0..n).collect(),
        test_indices: Vec::new(),
        folds: Some(folds),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eighty_twenty() {
        let p = make_split(10, 0.8, 1, None).unwrap();
        assert_eq!(p.train_indices.len(), 8);
        assert_eq!(p.test_indices.len(), 2);
        assert_eq!(p, make_split(10, 0.8, 1, None).unwrap());
    }

    #[test]
    fn split_needs_two_items() {
        assert!(make_split(1, 0.8, 1, None).is_err());
        assert!(k_fold(5, 10, 1).is_err());
    }

    #[test]
    fn stratified_keeps_ratio() {
        let labels: Vec<bool> = (0..100).map(|i| i % 100 < 35).collect();
        let p = make_split(100, 0.8, 42, Some(&labels)).unwrap();
        let pos = p.train_indices.iter().filter(|&&i| labels[i]).count();
        // 35/65 of 80 train items is 28
        assert!(pos.abs_diff(28) <= 1, "{pos}");
        assert_eq!(p.train_indices.len() + p.test_indices.len(), 100);
    }

    #[test]
    fn fold_sizes_for_23() {
        let p = k_fold(23, 10, 3).unwrap();
        let mut sizes: Vec<usize> = p.folds.unwrap().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [2, 2, 2, 2, 2, 2, 2, 3, 3, 3]);
    }

    #[test]
    fn ten_folds_of_ten() {
        let p = k_fold(100, 10, 3).unwrap();
        assert!(p.folds.as_ref().unwrap().iter().all(|f| f.len() == 10));
        let (train, test) = p.fold(4).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(test.len(), 10);
    }
}
