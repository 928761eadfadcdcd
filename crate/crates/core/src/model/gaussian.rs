use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::TargetModel;
use crate::error::{Error, Result};

const MAX_WISHART_RETRIES: usize = 10;
const MAX_POSITIVE_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum Precision {
    Dense(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

impl Precision {
    pub fn dim(&self) -> usize {
        match self {
            Precision::Dense(m) => m.nrows(),
            Precision::Diagonal(d) => d.len(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Precision::Dense(m) => m.clone(),
            Precision::Diagonal(d) => DMatrix::from_diagonal(d),
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match self {
            Precision::Dense(m) => m.clone().symmetric_eigenvalues().iter().copied().collect(),
            Precision::Diagonal(d) => d.iter().copied().collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Precision::Dense(m) => {
                let d = m.nrows();
                // column-major storage: out = Σ_j x_j m[:, j]
                out.iter_mut().for_each(|o| *o = 0.0);
                for (j, col) in m.as_slice().chunks_exact(d).enumerate() {
                    let xj = x[j];
                    for (o, &mij) in out.iter_mut().zip(col) {
                        *o += mij * xj;
                    }
                }
            }
            Precision::Diagonal(diag) => {
                for ((o, &p), &xi) in out.iter_mut().zip(diag.iter()).zip(x) {
                    *o = p * xi;
                }
            }
        }
    }
}

/// Multivariate Gaussian `N(μ, Σ)` parameterized by the precision `Σ^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    precision: Precision,
    mean: Vec<f64>,
}

impl GaussianModel {
    pub fn new(precision: Precision, mean: Vec<f64>) -> Result<Self> {
        let d = precision.dim();
        if d == 0 {
            return Err(Error::InvalidArgument("empty precision matrix".into()));
        }
        if mean.len() != d {
            return Err(Error::InvalidArgument(format!(
                "mean has length {}, precision is {d}x{d}",
                mean.len()
            )));
        }
        if let Precision::Dense(m) = &precision {
            if m.ncols() != d {
                return Err(Error::InvalidArgument("precision must be square".into()));
            }
            let asym = (m - m.transpose()).amax();
            if asym > 1e-10 * m.amax().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "precision is not symmetric (max asymmetry {asym:e})"
                )));
            }
        }
        if precision.eigenvalues().first().is_none_or(|&l| l <= 0.0) {
            return Err(Error::InvalidArgument(
                "precision must be positive definite".into(),
            ));
        }
        Ok(GaussianModel { precision, mean })
    }

    /// Zero-mean Gaussian.
    pub fn centered(precision: Precision) -> Result<Self> {
        let d = precision.dim();
        Self::new(precision, vec![0.0; d])
    }

    /// Standard normal in `dim` dimensions (unit harmonic oscillators).
    pub fn standard(dim: usize) -> Self {
        Self::centered(Precision::Diagonal(DVector::from_element(dim, 1.0))).unwrap()
    }

    pub fn precision(&self) -> &Precision {
        &self.precision
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Angular frequencies `sqrt(λ_j)` of the precision, ascending.
    pub fn frequencies(&self) -> Vec<f64> {
        self.precision
            .eigenvalues()
            .into_iter()
            .map(|l| l.max(0.0).sqrt())
            .collect()
    }

    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        self.precision.to_dense().try_inverse()
    }
}

impl TargetModel for GaussianModel {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn potential(&self, theta: &[f64]) -> f64 {
        let diff: Vec<f64> = theta.iter().zip(&self.mean).map(|(t, m)| t - m).collect();
        let mut pd = vec![0.0; diff.len()];
        self.precision.apply(&diff, &mut pd);
        0.5 * diff.iter().zip(&pd).map(|(a, b)| a * b).sum::<f64>()
    }

    fn gradient(&self, theta: &[f64], grad: &mut [f64]) {
        if self.mean.iter().all(|&m| m == 0.0) {
            self.precision.apply(theta, grad);
        } else {
            let diff: Vec<f64> = theta.iter().zip(&self.mean).map(|(t, m)| t - m).collect();
            self.precision.apply(&diff, grad);
        }
    }

    fn hessian(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(self.precision.to_dense())
    }

    fn has_analytic_hessian(&self) -> bool {
        true
    }
}

/// Draws `W ~ Wishart(dof, I_D)` by the Bartlett decomposition `W = A Aᵀ`.
pub fn wishart_bartlett<R: Rng + ?Sized>(dim: usize, dof: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    if dof <= (dim as f64) - 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Wishart degrees of freedom {dof} must exceed D - 1 = {}",
            dim as f64 - 1.0
        )));
    }
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        let chi = ChiSquared::new(dof - i as f64)
            .map_err(|e| Error::Numerical(format!("chi-square sampler: {e}")))?;
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    let w = &a * a.transpose();
    // exact symmetry
    Ok((&w + w.transpose()) * 0.5)
}

/// Gaussian with precision drawn from `Wishart(D, I_D)`.
pub fn make_gaussian_wishart(dim: usize, seed: u64) -> Result<GaussianModel> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_WISHART_RETRIES {
        let w = wishart_bartlett(dim, dim as f64, &mut rng)?;
        if w.clone().cholesky().is_some() {
            if let Ok(model) = GaussianModel::centered(Precision::Dense(w)) {
                return Ok(model);
            }
        }
    }
    Err(Error::Numerical(format!(
        "no positive-definite Wishart draw after {MAX_WISHART_RETRIES} attempts"
    )))
}

/// Gaussian with diagonal precision: `d1` entries from `N(loc1, scale1²)` and
/// `d2` entries from `N(loc2, scale2²)`. Non-positive draws are redrawn.
pub fn make_gaussian_diag_mixture(
    d1: usize,
    d2: usize,
    loc1: f64,
    scale1: f64,
    loc2: f64,
    scale2: f64,
    seed: u64,
) -> Result<GaussianModel> {
    if d1 + d2 == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |loc: f64, scale: f64| -> Result<f64> {
        for _ in 0..MAX_POSITIVE_REDRAWS {
            let z: f64 = rng.sample(StandardNormal);
            let v = loc + scale * z;
            if v > 0.0 {
                return Ok(v);
            }
        }
        Err(Error::Numerical(format!(
            "N({loc}, {scale}^2) produced no positive draw in {MAX_POSITIVE_REDRAWS} tries"
        )))
    };
    let mut diag = Vec::with_capacity(d1 + d2);
    for _ in 0..d1 {
        diag.push(draw(loc1, scale1)?);
    }
    for _ in 0..d2 {
        diag.push(draw(loc2, scale2)?);
    }
    GaussianModel::centered(Precision::Diagonal(DVector::from_vec(diag)))
}
