//! Acceptance rate, effective sample size, Monte Carlo standard error and
//! potential scale reduction, plus gradient-normalized efficiency figures.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sampler::ChainRecord;

/// Chains up to this length use direct autocovariance sums.
pub const DIRECT_AUTOCOV_MAX: usize = 10_000;

/// `N_acc / N` (NaN for an empty record).
pub fn acceptance_rate(record: &ChainRecord) -> f64 {
    if record.is_empty() {
        return f64::NAN;
    }
    record.accepted.iter().filter(|&&a| a).count() as f64 / record.len() as f64
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn column(samples: &[f64], dim: usize, j: usize) -> Vec<f64> {
    samples.iter().skip(j).step_by(dim).copied().collect()
}

fn check_shape(samples: &[f64], dim: usize, min_n: usize) -> Result<usize> {
    if dim == 0 || samples.len() % dim != 0 {
        return Err(Error::InvalidArgument(format!(
            "{} values do not form rows of length {dim}",
            samples.len()
        )));
    }
    let n = samples.len() / dim;
    if n < min_n {
        return Err(Error::InvalidArgument(format!("need at least {min_n} draws, got {n}")));
    }
    Ok(n)
}

/// Biased autocovariances `γ_t = (1/N) Σ (x_i - x̄)(x_{i+t} - x̄)` for
/// `t < max_lag`, by direct summation.
pub fn autocovariance_direct(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let m = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    (0..max_lag.min(n))
        .map(|t| c[..n - t].iter().zip(&c[t..]).map(|(a, b)| a * b).sum::<f64>() / n as f64)
        .collect()
}

/// All `N` biased autocovariances via a zero-padded FFT.
pub fn autocovariance_fft(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let m = mean(x);
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = x
        .iter()
        .map(|v| Complex::new(v - m, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf[..n].iter().map(|z| z.re / (len as f64 * n as f64)).collect()
}

/// Effective sample size of one scalar chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    /// The chain is constant; ESS is set to `N`.
    pub constant: bool,
}

/// Geyer's initial monotone sequence estimator, capped at `N`.
pub fn ess_1d(x: &[f64]) -> Result<EssEstimate> {
    let n = x.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!("ESS needs at least 10 draws, got {n}")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("chain contains non-finite values".into()));
    }
    let acov = if n <= DIRECT_AUTOCOV_MAX {
        LazyAcov::Direct { x, cache: Vec::new() }
    } else {
        LazyAcov::Full(autocovariance_fft(x))
    };
    ess_from_acov(acov, n)
}

enum LazyAcov<'a> {
    Direct { x: &'a [f64], cache: Vec<f64> },
    Full(Vec<f64>),
}

impl LazyAcov<'_> {
    fn get(&mut self, t: usize) -> f64 {
        match self {
            LazyAcov::Full(v) => v[t],
            LazyAcov::Direct { x, cache } => {
                if t >= cache.len() {
                    let want = (2 * cache.len()).max(t + 1).max(64).min(x.len());
                    *cache = autocovariance_direct(x, want);
                }
                cache[t]
            }
        }
    }
}

fn ess_from_acov(mut acov: LazyAcov<'_>, n: usize) -> Result<EssEstimate> {
    let g0 = acov.get(0);
    if g0 <= 0.0 {
        return Ok(EssEstimate { ess: n as f64, constant: true });
    }
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let pair = (acov.get(t) + acov.get(t + 1)) / g0;
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        t += 2;
    }
    let tau = -1.0 + 2.0 * sum;
    let ess = if tau > 0.0 { (n as f64 / tau).min(n as f64) } else { n as f64 };
    Ok(EssEstimate { ess, constant: false })
}

/// Per-dimension ESS of a row-major `N × dim` chain.
pub fn ess(samples: &[f64], dim: usize) -> Result<Vec<f64>> {
    check_shape(samples, dim, 10)?;
    (0..dim).map(|j| ess_1d(&column(samples, dim, j)).map(|e| e.ess)).collect()
}

/// `sqrt(σ̂² / ESS)` per dimension.
pub fn mcse(samples: &[f64], dim: usize) -> Result<Vec<f64>> {
    check_shape(samples, dim, 10)?;
    (0..dim)
        .map(|j| {
            let x = column(samples, dim, j);
            let e = ess_1d(&x)?;
            Ok((variance(&x) / e.ess).sqrt())
        })
        .collect()
}

/// Per-dimension means and unbiased variances of one chain: all the PSRF
/// needs from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMoments {
    pub n: usize,
    pub means: Vec<f64>,
    pub vars: Vec<f64>,
}

impl ChainMoments {
    pub fn from_samples(samples: &[f64], dim: usize) -> Result<Self> {
        let n = check_shape(samples, dim, 2)?;
        let cols: Vec<Vec<f64>> = (0..dim).map(|j| column(samples, dim, j)).collect();
        Ok(ChainMoments {
            n,
            means: cols.iter().map(|c| mean(c)).collect(),
            vars: cols.iter().map(|c| variance(c)).collect(),
        })
    }
}

/// Brooks–Gelman corrected PSRF per dimension for `M ≥ 2` equal-length
/// row-major chains, floored at 1.
pub fn psrf(chains: &[&[f64]], dim: usize) -> Result<Vec<f64>> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("PSRF needs at least two chains".into()));
    }
    let n = check_shape(chains[0], dim, 10)?;
    let mut moments = Vec::with_capacity(chains.len());
    for c in chains {
        if check_shape(c, dim, 10)? != n {
            return Err(Error::InvalidArgument("PSRF chains must have equal length".into()));
        }
        moments.push(ChainMoments::from_samples(c, dim)?);
    }
    psrf_from_moments(&moments)
}

/// [`psrf`] from precomputed chain moments.
pub fn psrf_from_moments(chains: &[ChainMoments]) -> Result<Vec<f64>> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument("PSRF needs at least two chains".into()));
    }
    let (n, dim) = (chains[0].n, chains[0].means.len());
    if n < 2 || chains.iter().any(|c| c.n != n || c.means.len() != dim || c.vars.len() != dim) {
        return Err(Error::InvalidArgument("PSRF chains must have equal shape".into()));
    }
    Ok((0..dim)
        .map(|j| {
            let means: Vec<f64> = chains.iter().map(|c| c.means[j]).collect();
            let vars: Vec<f64> = chains.iter().map(|c| c.vars[j]).collect();
            psrf_1d(&means, &vars, n)
        })
        .collect())
}

fn psrf_1d(means: &[f64], vars: &[f64], n: usize) -> f64 {
    let m = means.len() as f64;
    let n = n as f64;
    let w = mean(vars);
    if w <= 0.0 {
        return 1.0;
    }
    let grand = mean(means);
    let b_over_n = means.iter().map(|x| (x - grand).powi(2)).sum::<f64>() / (m - 1.0);
    let b = n * b_over_n;
    let v_hat = (n - 1.0) / n * w + (1.0 + 1.0 / m) * b_over_n;

    let var_s2 = means_var(vars);
    let means_sq: Vec<f64> = means.iter().map(|x| x * x).collect();
    let cov_s2_xsq = covariance(vars, &means_sq);
    let cov_s2_x = covariance(vars, means);
    let var_v = ((n - 1.0) / n).powi(2) / m * var_s2
        + ((m + 1.0) / (m * n)).powi(2) * 2.0 / (m - 1.0) * b * b
        + 2.0 * (m + 1.0) * (n - 1.0) / (m * n * n) * (n / m)
            * (cov_s2_xsq - 2.0 * grand * cov_s2_x);
    let d = if var_v > 0.0 { 2.0 * v_hat * v_hat / var_v } else { f64::INFINITY };
    let correction = if d.is_finite() { (d + 3.0) / (d + 1.0) } else { 1.0 };
    (correction * v_hat / w).sqrt().max(1.0)
}

fn means_var(x: &[f64]) -> f64 {
    if x.len() < 2 {
        0.0
    } else {
        variance(x)
    }
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// PSRF of a single chain from its two halves (odd `N` drops the middle draw).
pub fn split_psrf(samples: &[f64], dim: usize) -> Result<Vec<f64>> {
    let n = check_shape(samples, dim, 20)?;
    let half = n / 2;
    let first = &samples[..half * dim];
    let second = &samples[(n - half) * dim..];
    psrf(&[first, second], dim)
}

/// Efficiency figures of one production chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub n: usize,
    pub ar: f64,
    pub ess: Vec<f64>,
    pub min_ess: f64,
    pub mcse: Vec<f64>,
    pub min_inv_mcse: f64,
    pub max_psrf: f64,
    /// Theoretical gradient evaluations per iteration, `k L̄`.
    pub grad_evals_per_iter: f64,
    pub grad_evals_actual: u64,
    pub min_ess_norm: f64,
    pub min_inv_mcse_norm: f64,
    /// Dimensions whose chain never moved.
    pub constant_dims: Vec<usize>,
}

/// Report for `record`. `max_psrf` comes from companion chains when given,
/// otherwise from the two halves of this chain.
pub fn efficiency_summary(record: &ChainRecord, max_psrf: Option<f64>) -> Result<DiagnosticsReport> {
    let dim = record.dim;
    let n = check_shape(&record.samples, dim, 10)?;
    let mut ess_v = Vec::with_capacity(dim);
    let mut mcse_v = Vec::with_capacity(dim);
    let mut constant_dims = Vec::new();
    for j in 0..dim {
        let x = column(&record.samples, dim, j);
        let e = ess_1d(&x)?;
        if e.constant {
            constant_dims.push(j);
        }
        mcse_v.push((variance(&x) / e.ess).sqrt());
        ess_v.push(e.ess);
    }
    let max_psrf = match max_psrf {
        Some(p) => p,
        None if n >= 20 => max_of(&split_psrf(&record.samples, dim)?),
        None => f64::NAN,
    };
    let min_ess = ess_v.iter().copied().fold(f64::INFINITY, f64::min);
    let min_inv_mcse = mcse_v.iter().map(|m| 1.0 / m).fold(f64::INFINITY, f64::min);
    let norm = record.stages as f64 * record.l_bar;
    Ok(DiagnosticsReport {
        n,
        ar: acceptance_rate(record),
        min_ess,
        min_inv_mcse,
        ess: ess_v,
        mcse: mcse_v,
        max_psrf,
        grad_evals_per_iter: norm,
        grad_evals_actual: record.grad_evals,
        min_ess_norm: min_ess / norm,
        min_inv_mcse_norm: min_inv_mcse / norm,
        constant_dims,
    })
}

/// Largest entry, NaN if any entry is NaN.
pub fn max_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}
