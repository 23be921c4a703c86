use std::path::PathBuf;

use rumorflow::content::{analyze_text, Lexicon};
use rumorflow::features::FeatureSchema;
use rumorflow::graph::{cascade_depth, DiffusionLabel};
use rumorflow::pipeline::{EdgeTable, PipelineConfig, ScoredCorpus};
use serde::Deserialize;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny")
}

#[derive(Deserialize)]
struct Golden {
    spreader_id: String,
    receiver_id: String,
    tweet_id: String,
    features: Vec<(String, f64)>,
}

fn load() -> (ScoredCorpus, EdgeTable) {
    let scored = ScoredCorpus::load(fixture(), &Lexicon::default()).unwrap();
    let table = EdgeTable::build(&scored, &PipelineConfig::default()).unwrap();
    (scored, table)
}

#[test]
fn hand_derived_vector() {
    let (_, table) = load();
    let text = std::fs::read_to_string(fixture().join("golden_alice_bob_a1.json")).unwrap();
    let golden: Golden = serde_json::from_str(&text).unwrap();
    let i = table
        .edges
        .iter()
        .position(|e| {
            e.spreader_id == golden.spreader_id
                && e.receiver_id == golden.receiver_id
                && e.tweet_id == golden.tweet_id
        })
        .expect("golden edge present");
    let names = FeatureSchema::standard().names();
    assert_eq!(golden.features.len(), names.len());
    for ((name, want), (schema_name, got)) in golden
        .features
        .iter()
        .zip(names.iter().zip(&table.vectors[i].values))
    {
        assert_eq!(name, schema_name);
        assert!((want - got).abs() < 1e-12, "{name}: want {want}, got {got}");
    }
}

#[test]
fn edges_and_labels() {
    let (scored, table) = load();
    let got: Vec<(&str, &str, bool)> = table
        .edges
        .iter()
        .map(|e| {
            (
                e.tweet_id.as_str(),
                e.receiver_id.as_str(),
                e.label == DiffusionLabel::Diffused,
            )
        })
        .collect();
    assert_eq!(
        got,
        [
            ("a1", "bob", true),
            ("a1", "carol", true),
            ("a2", "bob", false),
            ("a2", "carol", false),
            ("c1", "alice", false),
            ("c1", "bob", false),
        ]
    );
    assert_eq!(cascade_depth(&scored.corpus, "a1").unwrap(), 1);
    assert_eq!(cascade_depth(&scored.corpus, "a2").unwrap(), 0);
    assert!(table.message_ids.iter().all(|m| m == "a1" || m == "a2"));
}

#[test]
fn file_scores_take_precedence() {
    let (scored, _) = load();
    let lex = Lexicon::default();
    let a1 = &scored.scores["a1"];
    assert_eq!(a1.news, 0.6);
    assert_ne!(*a1, analyze_text(&scored.corpus.tweets["a1"].text, &lex));
    for id in ["a2", "c1"] {
        assert_eq!(
            scored.scores[id],
            analyze_text(&scored.corpus.tweets[id].text, &lex)
        );
    }
}
