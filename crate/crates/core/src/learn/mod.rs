//! From-scratch learners: a random forest for ranking features and a
//! Bayesian logistic regression for prediction.

mod dataset;
pub mod forest;
pub mod logreg;

pub use dataset::Dataset;
pub use forest::{fit_forest, select_top_k, FeatureRanking, ForestModel, ForestParams};
pub use logreg::{classify, fit_logreg, sigmoid, LogPosterior, LogRegModel, LogRegOptions};
