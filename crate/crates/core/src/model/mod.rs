//! Target distributions for HMC.
//!
//! A target is described by its potential `U(θ) = -log π(θ) + const`, the
//! gradient of `U` and, when cheap, its Hessian. Models are immutable after
//! construction and safe to share between chains.

mod blr;
mod dataset;
mod frequency;
mod gaussian;

pub use blr::{make_blr_model, BlrDataset, BlrModel};
pub use dataset::{load_dataset, LabelPosition, LoadOptions};
pub use frequency::{
    frequencies_from_hessians, max_frequency_power_iteration, FrequencySource,
    FrequencySummary, PowerIteration,
};
pub use gaussian::{
    make_gaussian_diag_mixture, make_gaussian_wishart, wishart_bartlett, GaussianModel,
    Precision,
};

use nalgebra::DMatrix;

/// A differentiable log-density on `R^D`, expressed through its potential.
pub trait TargetModel: Send + Sync {
    fn dim(&self) -> usize;

    fn potential(&self, theta: &[f64]) -> f64;

    /// Writes `∇U(θ)` into `grad`.
    fn gradient(&self, theta: &[f64], grad: &mut [f64]);

    /// Analytic Hessian of `U`, if the model provides one.
    fn hessian(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    fn has_analytic_hessian(&self) -> bool {
        false
    }
}

impl<T: TargetModel + ?Sized> TargetModel for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn potential(&self, theta: &[f64]) -> f64 {
        (**self).potential(theta)
    }
    fn gradient(&self, theta: &[f64], grad: &mut [f64]) {
        (**self).gradient(theta, grad)
    }
    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        (**self).hessian(theta)
    }
    fn has_analytic_hessian(&self) -> bool {
        (**self).has_analytic_hessian()
    }
}

fn fd_step(x: f64) -> f64 {
    1e-6 * x.abs().max(1.0)
}

/// Central finite-difference gradient of the potential.
pub fn finite_difference_gradient<M: TargetModel + ?Sized>(model: &M, theta: &[f64]) -> Vec<f64> {
    let mut x = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            let h = fd_step(theta[i]);
            x[i] = theta[i] + h;
            let up = model.potential(&x);
            x[i] = theta[i] - h;
            let down = model.potential(&x);
            x[i] = theta[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Hessian by central differences of the gradient, symmetrized.
pub fn finite_difference_hessian<M: TargetModel + ?Sized>(model: &M, theta: &[f64]) -> DMatrix<f64> {
    let d = theta.len();
    let mut x = theta.to_vec();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    let mut h = DMatrix::zeros(d, d);
    for j in 0..d {
        let eps = 1e-5 * theta[j].abs().max(1.0);
        x[j] = theta[j] + eps;
        model.gradient(&x, &mut gp);
        x[j] = theta[j] - eps;
        model.gradient(&x, &mut gm);
        x[j] = theta[j];
        for i in 0..d {
            h[(i, j)] = (gp[i] - gm[i]) / (2.0 * eps);
        }
    }
    (&h + h.transpose()) * 0.5
}

/// Analytic Hessian when available, finite differences otherwise.
pub fn hessian_or_fd<M: TargetModel + ?Sized>(model: &M, theta: &[f64]) -> DMatrix<f64> {
    model
        .hessian(theta)
        .unwrap_or_else(|| finite_difference_hessian(model, theta))
}
