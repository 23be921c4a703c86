use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rumorflow::learn::{fit_forest, select_top_k, Dataset, ForestParams};

fn data(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..400 {
        let signal: f64 = rng.random_range(-1.0..1.0);
        let mut row = vec![signal, signal];
        row.extend((0..6).map(|_| rng.random_range(-1.0..1.0)));
        labels.push(signal + rng.random_range(-0.3..0.3) > 0.0);
        rows.push(row);
    }
    let names = ["a", "a_copy", "n1", "n2", "n3", "n4", "n5", "n6"]
        .map(String::from)
        .to_vec();
    Dataset::new(names, rows, labels).unwrap()
}

#[test]
fn duplicated_feature_shares_the_top() {
    let forest = fit_forest(
        &data(5),
        &ForestParams {
            seed: 5,
            ..ForestParams::default()
        },
    )
    .unwrap();
    let top = select_top_k(&forest.ranking(), 2).unwrap();
    let mut top_sorted = top.clone();
    top_sorted.sort();
    assert_eq!(top_sorted, ["a", "a_copy"]);
    let imp = &forest.importances;
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let noise_max = imp[2..].iter().cloned().fold(0.0, f64::max);
    assert!(imp[0] > noise_max && imp[1] > noise_max);
}

#[test]
fn ranking_is_seed_deterministic() {
    let p = ForestParams {
        n_trees: 30,
        seed: 9,
        ..ForestParams::default()
    };
    let a = fit_forest(&data(1), &p).unwrap();
    let b = fit_forest(&data(1), &p).unwrap();
    assert_eq!(a.importances, b.importances);
    assert!(select_top_k(&a.ranking(), 9).is_err());
}
