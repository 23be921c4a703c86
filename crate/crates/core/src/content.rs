//! Latent message attributes: sentiment, emotion, intent and abusiveness.
//!
//! The built-in scorer is a smoothed bag-of-words lexicon model. Scores from
//! any other analyzer can be supplied through [`load_scores`]; the feature
//! pipeline prefers those over the lexicon whenever both exist.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::{read_jsonl, TweetId};
use crate::error::{Error, Result};

/// Slack allowed when checking that a group of scores sums to one.
pub const SUM_TOLERANCE: f64 = 1e-9;

pub const SENTIMENT: [&str; 3] = ["positive", "negative", "neutral"];
pub const EMOTION: [&str; 5] = ["happy", "fear", "sad", "angry", "bored"];
pub const INTENT: [&str; 5] = ["feedback", "news", "query", "spam", "marketing"];
pub const ABUSIVE: &str = "abusive";

/// The 14 score names in feature order.
pub const SCORE_NAMES: [&str; 14] = [
    "positive",
    "negative",
    "neutral",
    "happy",
    "fear",
    "sad",
    "angry",
    "bored",
    "feedback",
    "news",
    "query",
    "spam",
    "marketing",
    "abusive",
];

const DEFAULT_LEXICON: &str = include_str!("../data/default_lexicon.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentScores {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
    pub happy: f64,
    pub fear: f64,
    pub sad: f64,
    pub angry: f64,
    pub bored: f64,
    pub feedback: f64,
    pub news: f64,
    pub query: f64,
    pub spam: f64,
    pub marketing: f64,
    pub abusive: f64,
}

impl LatentScores {
    /// Uniform distributions in every group and zero abusiveness.
    pub fn uniform() -> LatentScores {
        LatentScores::from_array([
            1.0 / 3.0,
            1.0 / 3.0,
            1.0 / 3.0,
            0.2,
            0.2,
            0.2,
            0.2,
            0.2,
            0.2,
            0.2,
            0.2,
            0.2,
            0.2,
            0.0,
        ])
    }

    pub fn to_array(&self) -> [f64; 14] {
        [
            self.positive,
            self.negative,
            self.neutral,
            self.happy,
            self.fear,
            self.sad,
            self.angry,
            self.bored,
            self.feedback,
            self.news,
            self.query,
            self.spam,
            self.marketing,
            self.abusive,
        ]
    }

    pub fn from_array(a: [f64; 14]) -> LatentScores {
        LatentScores {
            positive: a[0],
            negative: a[1],
            neutral: a[2],
            happy: a[3],
            fear: a[4],
            sad: a[5],
            angry: a[6],
            bored: a[7],
            feedback: a[8],
            news: a[9],
            query: a[10],
            spam: a[11],
            marketing: a[12],
            abusive: a[13],
        }
    }

    /// Checks ranges and group sums. `context` names the owner in errors.
    pub fn validate(&self, context: &str) -> Result<()> {
        let values = self.to_array();
        for (name, v) in SCORE_NAMES.iter().zip(values) {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(
                    format!("scores for {context}"),
                    format!("field `{name}` = {v} out of range [0, 1]"),
                ));
            }
        }
        let groups: [(&str, &[f64]); 3] = [
            ("sentiment", &values[0..3]),
            ("emotion", &values[3..8]),
            ("intent", &values[8..13]),
        ];
        for (group, vals) in groups {
            let sum: f64 = vals.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::invalid(
                    format!("scores for {context}"),
                    format!("{group} scores sum to {sum}, expected 1"),
                ));
            }
        }
        Ok(())
    }
}

/// Term lists for the 13 multinomial classes plus `abusive`.
#[derive(Debug, Clone)]
pub struct Lexicon {
    categories: BTreeMap<String, HashSet<String>>,
    alpha: f64,
    // term -> indices into SCORE_NAMES
    index: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn new(categories: BTreeMap<String, HashSet<String>>, alpha: f64) -> Result<Lexicon> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "lexicon",
                format!("smoothing constant {alpha} must be > 0"),
            ));
        }
        for name in categories.keys() {
            if !SCORE_NAMES.contains(&name.as_str()) {
                return Err(Error::invalid(
                    "lexicon",
                    format!("unknown category `{name}`"),
                ));
            }
        }
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (slot, name) in SCORE_NAMES.iter().enumerate() {
            let terms = categories
                .get(*name)
                .ok_or_else(|| Error::invalid("lexicon", format!("missing category `{name}`")))?;
            for term in terms {
                if term.trim().is_empty() {
                    return Err(Error::invalid("lexicon", format!("blank term in `{name}`")));
                }
                index.entry(term.to_lowercase()).or_default().push(slot);
            }
        }
        Ok(Lexicon {
            categories,
            alpha,
            index,
        })
    }

    /// Parses a JSON object mapping category name to an array of terms.
    pub fn from_json(json: &str, alpha: f64) -> Result<Lexicon> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)?;
        let categories = raw
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().map(|t| t.to_lowercase()).collect()))
            .collect();
        Lexicon::new(categories, alpha)
    }

    pub fn from_file(path: &Path, alpha: f64) -> Result<Lexicon> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::from_json(&json, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn terms(&self, category: &str) -> Option<&HashSet<String>> {
        self.categories.get(category)
    }

    /// Same term lists with a different smoothing constant.
    pub fn with_alpha(&self, alpha: f64) -> Result<Lexicon> {
        Lexicon::new(self.categories.clone(), alpha)
    }
}

impl Default for Lexicon {
    /// The small lexicon bundled with the crate, with Laplace smoothing.
    fn default() -> Lexicon {
        Lexicon::from_json(DEFAULT_LEXICON, 1.0).expect("bundled lexicon is valid")
    }
}

/// Lowercased Unicode word tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

/// Scores a text against a lexicon.
///
/// Each group's scores are `(hits_c + α) / Σ_group (hits + α)`; abusiveness
/// is `hits_abusive / (tokens + 1)`.
pub fn analyze_text(text: &str, lexicon: &Lexicon) -> LatentScores {
    let tokens = tokenize(text);
    let mut hits = [0.0f64; 14];
    for tok in &tokens {
        if let Some(slots) = lexicon.index.get(tok) {
            for &s in slots {
                hits[s] += 1.0;
            }
        }
    }
    let a = lexicon.alpha;
    let mut out = [0.0f64; 14];
    for range in [0..3, 3..8, 8..13] {
        let total: f64 = hits[range.clone()].iter().map(|h| h + a).sum();
        for i in range {
            out[i] = (hits[i] + a) / total;
        }
    }
    out[13] = hits[13] / (tokens.len() as f64 + 1.0);
    LatentScores::from_array(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRow {
    pub tweet_id: TweetId,
    #[serde(flatten)]
    pub scores: LatentScores,
}

/// Reads externally produced scores, one JSON object per line.
pub fn load_scores(path: &Path) -> Result<BTreeMap<TweetId, LatentScores>> {
    let rows: Vec<ScoreRow> = read_jsonl(path)?;
    let mut out = BTreeMap::new();
    for row in rows {
        row.scores.validate(&format!("tweet `{}`", row.tweet_id))?;
        out.insert(row.tweet_id, row.scores);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64) {
        assert!((a - b).abs() < 1e-12, "{a} != {b}");
    }

    #[test]
    fn empty_text_is_uniform() {
        let s = analyze_text("", &Lexicon::default());
        assert_close(s.positive, 1.0 / 3.0);
        assert_close(s.negative, 1.0 / 3.0);
        assert_close(s.neutral, 1.0 / 3.0);
        assert_close(s.fear, 0.2);
        assert_close(s.abusive, 0.0);
    }

    #[test]
    fn single_fear_term_concentrates_mass() {
        let lex = Lexicon::default().with_alpha(1e-12).unwrap();
        let s = analyze_text("terrified", &lex);
        assert!((s.fear - 1.0).abs() < 1e-9);
        assert!(s.happy < 1e-9 && s.sad < 1e-9 && s.angry < 1e-9 && s.bored < 1e-9);
    }

    // Hand count against data/default_lexicon.json:
    //   tokens (10): breaking news terrified residents flee as deadly storm hits stupid
    //   news     <- breaking, news            = 2
    //   fear     <- terrified, deadly         = 2
    //   angry    <- stupid                    = 1
    //   abusive  <- stupid                    = 1
    //   every other category                  = 0
    #[test]
    fn default_lexicon_hand_count() {
        let text = "BREAKING news: terrified residents flee as deadly storm hits, stupid!";
        assert_eq!(tokenize(text).len(), 10);
        let s = analyze_text(text, &Lexicon::default());
        // sentiment: no hits, all (0 + 1) / 3
        assert_close(s.positive, 1.0 / 3.0);
        assert_close(s.neutral, 1.0 / 3.0);
        // emotion: fear 2, angry 1 => denominators 3 + 5 = 8
        assert_close(s.fear, 3.0 / 8.0);
        assert_close(s.angry, 2.0 / 8.0);
        assert_close(s.happy, 1.0 / 8.0);
        assert_close(s.sad, 1.0 / 8.0);
        assert_close(s.bored, 1.0 / 8.0);
        // intent: news 2 => denominator 2 + 5 = 7
        assert_close(s.news, 3.0 / 7.0);
        assert_close(s.feedback, 1.0 / 7.0);
        assert_close(s.query, 1.0 / 7.0);
        assert_close(s.spam, 1.0 / 7.0);
        assert_close(s.marketing, 1.0 / 7.0);
        // abusive: 1 / (10 + 1)
        assert_close(s.abusive, 1.0 / 11.0);
    }

    #[test]
    fn lexicon_requires_all_categories() {
        assert!(Lexicon::from_json(r#"{"positive": ["good"]}"#, 1.0).is_err());
        assert!(Lexicon::default().with_alpha(0.0).is_err());
    }

    #[test]
    fn load_scores_validates_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scores.jsonl");
        let mut ok = LatentScores::uniform();
        ok.positive = 0.5;
        ok.negative = 0.3;
        ok.neutral = 0.2;
        let row = |s: LatentScores| {
            serde_json::to_string(&ScoreRow {
                tweet_id: "t9".into(),
                scores: s,
            })
            .unwrap()
        };
        std::fs::write(&path, row(ok)).unwrap();
        let m = load_scores(&path).unwrap();
        assert_eq!(m["t9"], ok);

        let mut bad = LatentScores::uniform();
        bad.fear = 1.2;
        std::fs::write(&path, row(bad)).unwrap();
        let err = load_scores(&path).unwrap_err().to_string();
        assert!(
            err.contains("out of range") && err.contains("t9") && err.contains("fear"),
            "{err}"
        );

        std::fs::write(&path, "").unwrap();
        assert!(load_scores(&path).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn scores_are_always_valid(text in "\\PC{0,200}") {
            let s = analyze_text(&text, &Lexicon::default());
            prop_assert!(s.validate("prop").is_ok());
        }

        #[test]
        fn word_order_does_not_matter(words in prop::collection::vec("[a-z]{1,8}|fear|news|stupid|love", 0..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let lex = Lexicon::default();
            let a = analyze_text(&words.join(" "), &lex);
            let b = analyze_text(&shuffled.join(" "), &lex);
            prop_assert_eq!(a, b);
        }
    }
}
