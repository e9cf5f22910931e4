//! Binomial logit of sympathy on dummy-coded sentiment, fitted by IRLS.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::special::{chi2_sf, normal_sf};
use super::StatsError;
use crate::annotation::{Sentiment, Sympathy};

const GRADIENT_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: Coefficient,
    pub neutral: Coefficient,
    pub positive: Coefficient,
    pub deviance: f64,
    pub null_deviance: f64,
    pub aic: f64,
    pub mcfadden_r2: f64,
    /// Likelihood-ratio statistic of the model against the intercept-only fit.
    pub lr_chi2: f64,
    pub lr_df: usize,
    pub lr_p_value: f64,
    pub n: usize,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn coefficients(&self) -> [&Coefficient; 3] {
        [&self.intercept, &self.neutral, &self.positive]
    }

    pub fn linear_predictor(&self, sentiment: Sentiment) -> f64 {
        let x = design_row(sentiment);
        self.intercept.estimate + x[1] * self.neutral.estimate + x[2] * self.positive.estimate
    }

    /// Fitted probability that a tweet with this sentiment is sympathetic.
    pub fn probability(&self, sentiment: Sentiment) -> f64 {
        sigmoid(self.linear_predictor(sentiment))
    }

    pub fn predict(&self, sentiment: Sentiment) -> Sympathy {
        if self.probability(sentiment) >= 0.5 {
            Sympathy::Sympathetic
        } else {
            Sympathy::Unsympathetic
        }
    }
}

fn design_row(s: Sentiment) -> Vector3<f64> {
    match s {
        Sentiment::Negative => Vector3::new(1.0, 0.0, 0.0),
        Sentiment::Neutral => Vector3::new(1.0, 1.0, 0.0),
        Sentiment::Positive => Vector3::new(1.0, 0.0, 1.0),
    }
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// ln σ(η) and ln(1 - σ(η)) without cancellation.
fn log_sigmoids(eta: f64) -> (f64, f64) {
    let softplus = |x: f64| if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    (-softplus(-eta), -softplus(eta))
}

/// Fit `logit P(Sympathetic) = β0 + β_neutral·NEU + β_positive·POS` with
/// Negative sentiment as the reference level.
pub fn logistic_fit(sentiment: &[Sentiment], sympathy: &[Sympathy]) -> Result<LogisticModel, StatsError> {
    if sentiment.len() != sympathy.len() {
        return Err(StatsError::LengthMismatch(sentiment.len(), sympathy.len()));
    }
    let n = sentiment.len();
    // per-level (total, sympathetic) counts; the likelihood depends on nothing else
    let mut cells = [(0usize, 0usize); 3];
    for (&s, &y) in sentiment.iter().zip(sympathy) {
        let cell = &mut cells[s as usize];
        cell.0 += 1;
        cell.1 += (y == Sympathy::Sympathetic) as usize;
    }
    let positives: usize = cells.iter().map(|c| c.1).sum();
    if positives == 0 || positives == n {
        return Err(StatsError::DegenerateDesign("only one sympathy class present".into()));
    }
    for (level, &(total, pos)) in Sentiment::ALL.iter().zip(&cells) {
        if total == 0 {
            return Err(StatsError::DegenerateDesign(format!("no {level} tweets; its dummy column is constant")));
        }
        if pos == 0 || pos == total {
            return Err(StatsError::Separation(level.to_string()));
        }
    }

    let mut beta = Vector3::zeros();
    let mut iterations = 0;
    let hessian = loop {
        let mut grad = Vector3::zeros();
        let mut info = Matrix3::zeros();
        for (s, &(total, pos)) in Sentiment::ALL.iter().zip(&cells) {
            let x = design_row(*s);
            let p = sigmoid(x.dot(&beta));
            grad += x * (pos as f64 - total as f64 * p);
            info += x * x.transpose() * (total as f64 * p * (1.0 - p));
        }
        if grad.norm() < GRADIENT_TOL {
            break info;
        }
        if iterations == MAX_ITER {
            return Err(StatsError::NoConvergence(format!("gradient norm {} after {MAX_ITER} iterations", grad.norm())));
        }
        let step = info
            .cholesky()
            .ok_or_else(|| StatsError::DegenerateDesign("information matrix is not positive definite".into()))?
            .solve(&grad);
        beta += step;
        iterations += 1;
    };
    let cov = hessian
        .try_inverse()
        .ok_or_else(|| StatsError::DegenerateDesign("singular information matrix".into()))?;

    let loglik: f64 = Sentiment::ALL
        .iter()
        .zip(&cells)
        .map(|(s, &(total, pos))| {
            let (lp, lq) = log_sigmoids(design_row(*s).dot(&beta));
            pos as f64 * lp + (total - pos) as f64 * lq
        })
        .sum();
    let p0 = positives as f64 / n as f64;
    let null_loglik = positives as f64 * p0.ln() + (n - positives) as f64 * (1.0 - p0).ln();
    let deviance = -2.0 * loglik;
    let null_deviance = -2.0 * null_loglik;
    let lr_chi2 = (null_deviance - deviance).max(0.0);
    let lr_df = 2;

    let coef = |i: usize, name: &str| {
        let se = cov[(i, i)].sqrt();
        let z = beta[i] / se;
        Coefficient { name: name.to_string(), estimate: beta[i], se, z, p_value: (2.0 * normal_sf(z.abs())).min(1.0) }
    };
    Ok(LogisticModel {
        intercept: coef(0, "(Intercept)"),
        neutral: coef(1, "NEUT"),
        positive: coef(2, "POS"),
        deviance,
        null_deviance,
        aic: deviance + 2.0 * 3.0,
        mcfadden_r2: 1.0 - loglik / null_loglik,
        lr_chi2,
        lr_df,
        lr_p_value: chi2_sf(lr_chi2, lr_df as f64),
        n,
        iterations,
    })
}
