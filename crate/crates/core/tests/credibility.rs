use rumorflow::corpus::TruthStatus;
use rumorflow::eval::{
    cross_credibility, cross_label, evaluate_diffusion, predict_credibility, run_credibility,
    ExperimentConfig,
};
use rumorflow::learn::{fit_logreg, Dataset, LogRegOptions};
use rumorflow::pipeline::{EdgeTable, PipelineConfig};
use rumorflow::synth::{generate, SynthConfig};

fn table() -> EdgeTable {
    let cfg = SynthConfig {
        n_users: 300,
        mean_follows: 10.0,
        roots_per_topic: 20,
        ..SynthConfig::default()
    };
    EdgeTable::build(&generate(&cfg).unwrap().scored, &PipelineConfig::default()).unwrap()
}

fn quick() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.forest.n_trees = 20;
    cfg
}

#[test]
fn labels_name_both_classes() {
    assert_eq!(cross_label(TruthStatus::False), "False model-True test");
    assert_eq!(cross_label(TruthStatus::True), "True model-False test");
}

#[test]
fn cross_evaluation_rejects_training_class_edges() {
    let t = table();
    let false_edges = t.with_status(TruthStatus::False);
    let data = false_edges.diffusion_dataset();
    let model = fit_logreg(
        &data.select(&data.names[..5]).unwrap(),
        &LogRegOptions::default(),
    )
    .unwrap();
    let err = cross_credibility(
        &model,
        TruthStatus::False,
        &false_edges.edges,
        &false_edges.vectors,
        0.5,
    );
    assert!(err.is_err());
    let true_edges = t.with_status(TruthStatus::True);
    let r = cross_credibility(
        &model,
        TruthStatus::False,
        &true_edges.edges,
        &true_edges.vectors,
        0.5,
    )
    .unwrap();
    assert_eq!(r.label, "False model-True test");
    let direct = evaluate_diffusion(&model, &true_edges.edges, &true_edges.vectors, 0.5).unwrap();
    assert_eq!(r.metrics, direct);
}

#[test]
fn empty_evaluation_is_an_error() {
    let t = table();
    let data = t.diffusion_dataset();
    let model = fit_logreg(
        &data.select(&data.names[..3]).unwrap(),
        &LogRegOptions::default(),
    )
    .unwrap();
    assert!(evaluate_diffusion(&model, &[], &[], 0.5).is_err());
    assert!(evaluate_diffusion(&model, &t.edges[..2], &t.vectors[..1], 0.5).is_err());
}

#[test]
fn message_verdicts_are_majority_votes() {
    let t = table();
    let (report, model) = run_credibility(&t, &quick(), true).unwrap();
    assert!(report.selected.iter().any(|f| f == "diffused"));
    assert!(!report.verdicts.is_empty());
    let data = t.credibility_dataset(Some(&t.diffusion_labels())).unwrap();
    let messages = t.messages();
    for v in &report.verdicts {
        let idx = &messages[v.message_id.as_str()];
        let again = predict_credibility(&model, &data.subset(idx), 0.5).unwrap();
        assert_eq!(again, v.verdict);
        assert_eq!(v.verdict.true_votes + v.verdict.false_votes, idx.len());
    }
    let (without, _) = run_credibility(&t, &quick(), false).unwrap();
    assert!(!without.selected.iter().any(|f| f == "diffused"));
}

#[test]
fn predict_credibility_needs_edges() {
    let data = Dataset::new(
        vec!["x".into()],
        vec![vec![0.0], vec![1.0]],
        vec![false, true],
    )
    .unwrap();
    let model = fit_logreg(&data, &LogRegOptions::default()).unwrap();
    assert!(predict_credibility(&model, &data.subset(&[]), 0.5).is_err());
    let v = predict_credibility(&model, &data, 0.5).unwrap();
    assert_eq!(v.true_votes + v.false_votes, 2);
}
