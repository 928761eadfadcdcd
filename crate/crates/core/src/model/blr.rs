use nalgebra::DMatrix;

use super::TargetModel;
use crate::error::{Error, Result};

/// Observations for Bayesian logistic regression with a Gaussian prior.
#[derive(Debug, Clone, PartialEq)]
pub struct BlrDataset {
    /// Row-major `n_obs x n_features` design matrix.
    pub features: Vec<f64>,
    pub n_obs: usize,
    pub n_features: usize,
    /// Labels in {-1, +1}.
    pub labels: Vec<f64>,
    /// Precision of the isotropic Gaussian prior on the coefficients.
    pub prior_precision: f64,
}

impl BlrDataset {
    pub fn new(
        features: Vec<f64>,
        n_obs: usize,
        n_features: usize,
        labels: Vec<f64>,
        prior_precision: f64,
    ) -> Result<Self> {
        let data = BlrDataset {
            features,
            n_obs,
            n_features,
            labels,
            prior_precision,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_obs == 0 || self.n_features == 0 {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        if self.features.len() != self.n_obs * self.n_features {
            return Err(Error::InvalidArgument(format!(
                "design matrix has {} entries, expected {} x {}",
                self.features.len(),
                self.n_obs,
                self.n_features
            )));
        }
        if self.labels.len() != self.n_obs {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} observations",
                self.labels.len(),
                self.n_obs
            )));
        }
        if let Some(i) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite feature at row {}, column {}",
                i / self.n_features + 1,
                i % self.n_features + 1
            )));
        }
        if let Some(i) = self.labels.iter().position(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidArgument(format!(
                "label {} at row {} is not -1 or +1",
                self.labels[i],
                i + 1
            )));
        }
        if !(self.prior_precision > 0.0 && self.prior_precision.is_finite()) {
            return Err(Error::InvalidArgument(
                "prior precision must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Posterior of a logistic regression with prior `N(0, I / prior_precision)`:
///
/// `U(θ) = Σ_i log(1 + exp(-y_i x_iᵀθ)) + prior_precision/2 θᵀθ`.
#[derive(Debug, Clone)]
pub struct BlrModel {
    data: BlrDataset,
}

pub fn make_blr_model(data: BlrDataset) -> Result<BlrModel> {
    data.validate()?;
    Ok(BlrModel { data })
}

impl BlrModel {
    pub fn data(&self) -> &BlrDataset {
        &self.data
    }

    fn margin(&self, i: usize, theta: &[f64]) -> f64 {
        self.data.labels[i] * dot(self.data.row(i), theta)
    }
}

/// Four independent accumulators so the reduction pipelines.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `log(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl TargetModel for BlrModel {
    fn dim(&self) -> usize {
        self.data.n_features
    }

    fn potential(&self, theta: &[f64]) -> f64 {
        let lik: f64 = (0..self.data.n_obs)
            .map(|i| softplus(-self.margin(i, theta)))
            .sum();
        lik + 0.5 * self.data.prior_precision * dot(theta, theta)
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) {
        for (g, t) in grad.iter_mut().zip(theta) {
            *g = self.data.prior_precision * t;
        }
        for i in 0..self.data.n_obs {
            let y = self.data.labels[i];
            let w = -y * logistic(-self.margin(i, theta));
            for (g, x) in grad.iter_mut().zip(self.data.row(i)) {
                *g += w * x;
            }
        }
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let d = self.data.n_features;
        let mut h = DMatrix::from_diagonal_element(d, d, self.data.prior_precision);
        for i in 0..self.data.n_obs {
            let s = logistic(self.margin(i, theta));
            let w = s * (1.0 - s);
            let x = self.data.row(i);
            for c in 0..d {
                let wx = w * x[c];
                for r in 0..d {
                    h[(r, c)] += wx * x[r];
                }
            }
        }
        Some(h)
    }

    fn has_analytic_hessian(&self) -> bool {
        true
    }
}
