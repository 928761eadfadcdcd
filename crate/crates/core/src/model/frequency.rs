use nalgebra::{DMatrix, SymmetricEigen};

use super::TargetModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencySource {
    /// Rank-matched average of Hessian eigenvalue square roots over samples.
    AveragedHessianEigs,
    /// Only the largest frequency, from power iteration.
    PowerIterationMaxOnly,
}

/// Harmonic frequencies `ω_j = sqrt(λ_j)` of a target, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySummary {
    pub omegas: Vec<f64>,
    pub omega_max: f64,
    /// Population standard deviation of `omegas` (0 when only `omega_max` is known).
    pub sigma: f64,
    pub source: FrequencySource,
}

impl FrequencySummary {
    pub fn from_omegas(mut omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidArgument("no frequencies".into()));
        }
        if omegas.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "frequencies must be finite and nonnegative".into(),
            ));
        }
        omegas.sort_by(f64::total_cmp);
        let n = omegas.len() as f64;
        let mean = omegas.iter().sum::<f64>() / n;
        let var = omegas.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / n;
        Ok(FrequencySummary {
            omega_max: *omegas.last().unwrap(),
            sigma: var.sqrt(),
            omegas,
            source: FrequencySource::AveragedHessianEigs,
        })
    }

    pub fn max_only(omega_max: f64) -> Self {
        FrequencySummary {
            omegas: vec![omega_max],
            omega_max,
            sigma: 0.0,
            source: FrequencySource::PowerIterationMaxOnly,
        }
    }

    pub fn has_full_spectrum(&self) -> bool {
        self.source == FrequencySource::AveragedHessianEigs
    }

    /// `Σ_j ω_j⁶`.
    pub fn sum_sixth_powers(&self) -> f64 {
        self.omegas.iter().map(|w| w.powi(6)).sum()
    }
}

/// Averages frequencies over a set of Hessians by sorted eigenvalue rank.
///
/// Negative eigenvalues are clamped to zero before the square root.
pub fn frequencies_from_hessians(samples: &[DMatrix<f64>]) -> Result<FrequencySummary> {
    let Some(first) = samples.first() else {
        return Err(Error::InvalidArgument("no Hessian samples".into()));
    };
    let d = first.nrows();
    let mut acc = vec![0.0; d];
    for h in samples {
        if h.nrows() != d || h.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "Hessian samples must all be {d}x{d}"
            )));
        }
        let eig = SymmetricEigen::try_new(h.clone(), 1e-14, 10_000)
            .ok_or_else(|| Error::Numerical("symmetric eigendecomposition did not converge".into()))?;
        let mut lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::Numerical("non-finite Hessian eigenvalue".into()));
        }
        lambdas.sort_by(f64::total_cmp);
        for (a, l) in acc.iter_mut().zip(&lambdas) {
            *a += l.max(0.0).sqrt();
        }
    }
    let m = samples.len() as f64;
    FrequencySummary::from_omegas(acc.into_iter().map(|s| s / m).collect())
}

/// Outcome of [`max_frequency_power_iteration`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerIteration {
    /// `sqrt(|λ_max|)`.
    pub omega_max: f64,
    /// Dominant Hessian eigenvalue estimate (Rayleigh quotient).
    pub eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest Hessian frequency at `theta` by power iteration on finite-difference
/// Hessian-vector products of the gradient.
///
/// Stops when successive Rayleigh quotients agree to `tol` relative. If
/// `max_iters` is hit, the best estimate is returned with `converged = false`.
pub fn max_frequency_power_iteration<M: TargetModel + ?Sized>(
    model: &M,
    theta: &[f64],
    tol: f64,
    max_iters: usize,
) -> Result<PowerIteration> {
    let d = model.dim();
    if theta.len() != d {
        return Err(Error::InvalidArgument(format!(
            "anchor has length {}, model dimension is {d}",
            theta.len()
        )));
    }
    let scale = theta.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let eps = 1e-5 * scale;
    let mut x = theta.to_vec();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    let mut hv = |v: &[f64], out: &mut [f64]| {
        for i in 0..d {
            x[i] = theta[i] + eps * v[i];
        }
        model.gradient(&x, &mut gp);
        for i in 0..d {
            x[i] = theta[i] - eps * v[i];
        }
        model.gradient(&x, &mut gm);
        for i in 0..d {
            out[i] = (gp[i] - gm[i]) / (2.0 * eps);
        }
    };

    // Deterministic start with all components nonzero and unequal.
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.1 * ((i * 7919) % 17) as f64).collect();
    normalize(&mut v);
    let mut w = vec![0.0; d];
    let mut lambda = 0.0;
    for it in 1..=max_iters {
        hv(&v, &mut w);
        let next = dot(&v, &w);
        let norm = normalize(&mut w);
        if !(norm.is_finite() && next.is_finite()) {
            return Err(Error::Numerical("Hessian-vector product is not finite".into()));
        }
        if norm == 0.0 {
            return Ok(PowerIteration {
                omega_max: 0.0,
                eigenvalue: 0.0,
                iterations: it,
                converged: true,
            });
        }
        std::mem::swap(&mut v, &mut w);
        if it > 1 && (next - lambda).abs() <= tol * next.abs() {
            return Ok(PowerIteration {
                omega_max: next.abs().sqrt(),
                eigenvalue: next,
                iterations: it,
                converged: true,
            });
        }
        lambda = next;
    }
    Ok(PowerIteration {
        omega_max: lambda.abs().sqrt(),
        eigenvalue: lambda,
        iterations: max_iters,
        converged: false,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}
