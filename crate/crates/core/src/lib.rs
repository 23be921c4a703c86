//! Microscopic rumor diffusion: per-edge features over a follower graph,
//! forest-ranked feature selection, Bayesian logistic regression of
//! diffusion, and message-level credibility voting.

pub mod content;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod learn;
pub mod pipeline;
pub mod query;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        };
    }
    chapter!(introduction, "introduction.md");
    chapter!(corpus, "corpus.md");
    chapter!(content, "content.md");
    chapter!(features, "features.md");
    chapter!(diffusion, "diffusion.md");
    chapter!(learners, "learners.md");
    chapter!(evaluation, "evaluation.md");
    chapter!(synthetic, "synthetic.md");
    chapter!(cli, "cli.md");
}
