//! Bayesian logistic regression with an isotropic Gaussian prior.
//!
//! The model is fitted by Newton's method to the maximum a posteriori
//! weights on standardized features. The intercept carries no prior. The
//! inverse of the negative Hessian at the mode gives a Laplace approximation
//! of the posterior covariance, which can be used for a probit-approximated
//! predictive probability.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::graph::DiffusionLabel;

pub const MODEL_FORMAT: &str = "rumorflow-logreg";
pub const MODEL_VERSION: u32 = 1;

/// Columns whose standard deviation falls below this are treated as constant.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegOptions {
    /// Prior variance σ² of every non-intercept weight.
    pub prior_variance: f64,
    /// Convergence threshold on the ∞-norm of the gradient.
    pub tol: f64,
    pub max_iter: usize,
    /// Store the Laplace covariance in the fitted model.
    pub laplace: bool,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        LogRegOptions {
            prior_variance: 10.0,
            tol: 1e-6,
            max_iter: 100,
            laplace: true,
        }
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Log-posterior (up to a constant) of weights `[intercept, w_1, .., w_d]`
/// given standardized rows.
pub struct LogPosterior<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    prior_variance: f64,
}

impl<'a> LogPosterior<'a> {
    pub fn new(rows: &'a [Vec<f64>], labels: &'a [bool], prior_variance: f64) -> LogPosterior<'a> {
        LogPosterior {
            rows,
            labels,
            prior_variance,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len) + 1
    }

    fn linear(w: &[f64], row: &[f64]) -> f64 {
        w[0] + row.iter().zip(&w[1..]).map(|(x, b)| x * b).sum::<f64>()
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let ll: f64 = self
            .rows
            .iter()
            .zip(self.labels)
            .map(|(row, &y)| {
                let eta = Self::linear(w, row);
                (if y { eta } else { 0.0 }) - softplus(eta)
            })
            .sum();
        let penalty: f64 = w[1..].iter().map(|b| b * b).sum::<f64>() / (2.0 * self.prior_variance);
        ll - penalty
    }

    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        for (row, &y) in self.rows.iter().zip(self.labels) {
            let r = f64::from(u8::from(y)) - sigmoid(Self::linear(w, row));
            g[0] += r;
            for (gj, x) in g[1..].iter_mut().zip(row) {
                *gj += r * x;
            }
        }
        for (gj, b) in g[1..].iter_mut().zip(&w[1..]) {
            *gj -= b / self.prior_variance;
        }
        g
    }

    /// Negative Hessian (positive definite for finite weights).
    pub fn neg_hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let d = w.len();
        let mut h = DMatrix::zeros(d, d);
        let mut ext = vec![1.0; d];
        for row in self.rows {
            ext[1..].copy_from_slice(row);
            let p = sigmoid(Self::linear(w, row));
            let s = p * (1.0 - p);
            for i in 0..d {
                let si = s * ext[i];
                for j in i..d {
                    h[(i, j)] += si * ext[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                h[(i, j)] = h[(j, i)];
            }
        }
        for i in 1..d {
            h[(i, i)] += 1.0 / self.prior_variance;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitInfo {
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    pub log_posterior: f64,
    /// Set when a singular Hessian forced backtracking gradient steps.
    pub gradient_fallback: bool,
    /// Log-posterior after each accepted step, starting from w = 0.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub format: String,
    pub version: u32,
    pub selected_features: Vec<String>,
    /// Intercept first, then one weight per selected feature, in
    /// standardized units.
    pub weights: Vec<f64>,
    pub prior_variance: f64,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplace_covariance: Option<Vec<Vec<f64>>>,
    pub fit: FitInfo,
    /// Free-form description of the training data, e.g. "False".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trained_on: Option<String>,
}

/// Fits MAP weights by Newton's method on standardized features.
pub fn fit_logreg(data: &Dataset, opts: &LogRegOptions) -> Result<LogRegModel> {
    if !(opts.prior_variance > 0.0 && opts.prior_variance.is_finite()) {
        return Err(Error::invalid(
            "prior variance",
            format!("{} must be > 0", opts.prior_variance),
        ));
    }
    data.check_finite()?;
    data.check_two_classes()?;
    let d = data.n_features();
    let n = data.len() as f64;
    let mut means = vec![0.0; d];
    for row in &data.rows {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut stds = vec![0.0; d];
    for row in &data.rows {
        for ((s, x), m) in stds.iter_mut().zip(row).zip(&means) {
            *s += (x - m).powi(2);
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
        if *s < MIN_STD {
            *s = 1.0;
        }
    }
    let z: Vec<Vec<f64>> = data
        .rows
        .iter()
        .map(|row| standardize(row, &means, &stds))
        .collect();
    // constant columns standardize to exactly zero, so the prior pins
    // their weights at zero
    let post = LogPosterior::new(&z, &data.labels, opts.prior_variance);
    let (weights, fit) = newton(&post, opts);
    let laplace_covariance = if opts.laplace {
        let h = post.neg_hessian(&weights);
        h.try_inverse().map(|inv| {
            (0..inv.nrows())
                .map(|i| (0..inv.ncols()).map(|j| inv[(i, j)]).collect())
                .collect()
        })
    } else {
        None
    };
    Ok(LogRegModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        selected_features: data.names.clone(),
        weights,
        prior_variance: opts.prior_variance,
        feature_means: means,
        feature_stds: stds,
        laplace_covariance,
        fit,
        trained_on: None,
    })
}

fn standardize(row: &[f64], means: &[f64], stds: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(means)
        .zip(stds)
        .map(|((x, m), s)| (x - m) / s)
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn newton(post: &LogPosterior<'_>, opts: &LogRegOptions) -> (Vec<f64>, FitInfo) {
    let dim = post.dim();
    let mut w = vec![0.0; dim];
    let mut value = post.value(&w);
    let mut trace = vec![value];
    let mut fallback = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = post.gradient(&w);
    while iterations < opts.max_iter {
        if inf_norm(&grad) < opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let g = DVector::from_column_slice(&grad);
        let direction = match post.neg_hessian(&w).cholesky() {
            Some(chol) => chol.solve(&g),
            None => {
                fallback = true;
                g.clone()
            }
        };
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = w
                .iter()
                .zip(direction.iter())
                .map(|(a, d)| a + step * d)
                .collect();
            let v = post.value(&cand);
            if v.is_finite() && v >= value {
                accepted = Some((cand, v));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else {
            // no ascent possible at machine precision
            break;
        };
        let stalled = v - value <= f64::EPSILON * value.abs().max(1.0);
        w = cand;
        value = v;
        trace.push(value);
        grad = post.gradient(&w);
        if stalled {
            converged = inf_norm(&grad) < opts.tol;
            break;
        }
    }
    if !converged {
        converged = inf_norm(&grad) < opts.tol;
    }
    let info = FitInfo {
        iterations,
        converged,
        gradient_norm: inf_norm(&grad),
        log_posterior: value,
        gradient_fallback: fallback,
        trace,
    };
    (w, info)
}

impl LogRegModel {
    pub fn n_features(&self) -> usize {
        self.selected_features.len()
    }

    fn check_len(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Schema(format!(
                "model expects {} features, got {}",
                self.n_features(),
                row.len()
            )));
        }
        Ok(())
    }

    /// Linear predictor for a row aligned with `selected_features`.
    pub fn logit(&self, row: &[f64]) -> Result<f64> {
        self.check_len(row)?;
        let z = standardize(row, &self.feature_means, &self.feature_stds);
        Ok(self.weights[0]
            + z.iter()
                .zip(&self.weights[1..])
                .map(|(a, b)| a * b)
                .sum::<f64>())
    }

    pub fn predict_proba_row(&self, row: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.logit(row)?))
    }

    /// Probit-approximated posterior predictive σ(μ / √(1 + π s² / 8)).
    /// Falls back to the MAP plug-in when no covariance was stored.
    pub fn predict_proba_laplace(&self, row: &[f64]) -> Result<f64> {
        let mu = self.logit(row)?;
        let Some(cov) = &self.laplace_covariance else {
            return Ok(sigmoid(mu));
        };
        let mut ext = vec![1.0];
        ext.extend(standardize(row, &self.feature_means, &self.feature_stds));
        let s2: f64 = (0..ext.len())
            .map(|i| ext[i] * (0..ext.len()).map(|j| cov[i][j] * ext[j]).sum::<f64>())
            .sum();
        Ok(sigmoid(
            mu / (1.0 + std::f64::consts::PI * s2.max(0.0) / 8.0).sqrt(),
        ))
    }

    /// Picks this model's columns out of a named row.
    pub fn project(&self, names: &[String], values: &[f64]) -> Result<Vec<f64>> {
        self.selected_features
            .iter()
            .map(|f| {
                names
                    .iter()
                    .position(|n| n == f)
                    .map(|i| values[i])
                    .ok_or_else(|| Error::Schema(format!("input lacks feature `{f}`")))
            })
            .collect()
    }

    /// Probability of diffusion for a standard-schema edge vector.
    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        let names = x.names();
        self.predict_proba_row(&self.project(&names, &x.values)?)
    }

    /// Probabilities for every row of a dataset, matched by column name.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<f64>> {
        let idx = data.column_indices(&self.selected_features)?;
        data.rows
            .iter()
            .map(|r| {
                let row: Vec<f64> = idx.iter().map(|&j| r[j]).collect();
                self.predict_proba_row(&row)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(json: &str) -> Result<LogRegModel> {
        let m: LogRegModel = serde_json::from_str(json)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::Schema(format!(
                "unknown model format `{}`",
                m.format
            )));
        }
        if m.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model version {}",
                m.version
            )));
        }
        let d = m.selected_features.len();
        if m.weights.len() != d + 1 || m.feature_means.len() != d || m.feature_stds.len() != d {
            return Err(Error::Schema("model vectors disagree in length".into()));
        }
        if m.feature_stds.iter().any(|&s| s <= 0.0) {
            return Err(Error::Schema(
                "feature standard deviations must be positive".into(),
            ));
        }
        Ok(m)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<LogRegModel> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LogRegModel::from_json(&json)
    }
}

/// `diffused` when the predicted probability reaches the threshold.
pub fn classify(model: &LogRegModel, x: &FeatureVector, threshold: f64) -> Result<DiffusionLabel> {
    Ok(DiffusionLabel::from_bool(
        model.predict_proba(x)? >= threshold,
    ))
}
