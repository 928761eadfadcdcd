//! Python bindings for `splitting_hmc`.
//!
//! Vectors cross the boundary as Python lists of floats; chains are
//! row-major lists of length `n * dim`.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use splitting_hmc::adapt::{self, BOptTable};
use splitting_hmc::diagnostics;
use splitting_hmc::integrator::{self, SplittingScheme};
use splitting_hmc::model::{
    self, FrequencySummary, GaussianModel, LabelPosition, LoadOptions, Precision, TargetModel,
};
use splitting_hmc::sampler::{self, HmcConfig, IntegratorKind};
use splitting_hmc::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::OutOfStability { .. } | Error::Config(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A palindromic kick/drift splitting scheme.
#[pyclass(name = "Scheme", frozen, from_py_object)]
#[derive(Clone)]
struct PyScheme {
    inner: SplittingScheme,
}

#[pymethods]
impl PyScheme {
    /// Named scheme: VV, VV2, VV3, BCSS2, BCSS3, ME2 or ME3.
    #[staticmethod]
    fn named(label: &str) -> PyResult<Self> {
        let inner = match IntegratorKind::from_label(label).map_err(py_err)? {
            IntegratorKind::Fixed(s) => s,
            _ => return Err(PyValueError::new_err(format!("{label} is adaptive, not a fixed scheme"))),
        };
        Ok(PyScheme { inner })
    }

    /// Member of the k-stage family with kick coefficient `b`.
    #[staticmethod]
    fn from_family(k: usize, b: f64) -> PyResult<Self> {
        Ok(PyScheme { inner: SplittingScheme::from_family(k, b).map_err(py_err)? })
    }

    #[getter]
    fn stages(&self) -> usize {
        self.inner.stages()
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.b()
    }

    #[getter]
    fn a(&self) -> f64 {
        self.inner.a()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    /// One-step harmonic-oscillator matrix `(A, B, C, D)` at step `h`.
    fn propagator(&self, h: f64) -> (f64, f64, f64, f64) {
        let m = integrator::harmonic_propagator(&self.inner, h);
        (m.a, m.b, m.c, m.d)
    }

    fn stability_limit(&self) -> f64 {
        integrator::scheme_stability_limit(&self.inner)
    }

    fn expected_energy_error(&self, h: f64, n_steps: usize) -> PyResult<f64> {
        integrator::expected_energy_error_harmonic(&self.inner, h, n_steps).map_err(py_err)
    }

    /// Integrates `n_steps` steps from `(theta, p)` on `model`; returns
    /// `(theta', p', delta_h)`.
    fn integrate(
        &self,
        model: &PyModel,
        theta: Vec<f64>,
        p: Vec<f64>,
        h: f64,
        n_steps: usize,
    ) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
        if theta.len() != model.inner.dim() || p.len() != theta.len() {
            return Err(PyValueError::new_err("state length does not match the model"));
        }
        let start = integrator::PhasePoint::new(theta, p);
        let leg = integrator::integrate_leg(&self.inner, model.inner.as_ref(), &start, h, n_steps)
            .map_err(py_err)?;
        Ok((leg.end.position, leg.end.momentum, leg.delta_h))
    }

    fn __repr__(&self) -> String {
        format!("Scheme('{}', k={}, b={})", self.inner.label(), self.inner.stages(), self.inner.b())
    }
}

/// Closed-form `ρ_k(h, b)`.
#[pyfunction]
fn rho(k: usize, h: f64, b: f64) -> PyResult<f64> {
    integrator::rho(k, h, b).map_err(py_err)
}

#[pyfunction]
fn stability_limit(k: usize, b: f64) -> PyResult<f64> {
    integrator::stability_limit_dimensionless(k, b).map_err(py_err)
}

/// Minimax map `h̄ → b_opt` for the k-stage family.
#[pyclass(name = "BOptTable", frozen)]
struct PyTable {
    inner: BOptTable,
}

#[pymethods]
impl PyTable {
    #[new]
    #[pyo3(signature = (k, n_grid = adapt::DEFAULT_N_GRID))]
    fn new(py: Python<'_>, k: usize, n_grid: usize) -> PyResult<Self> {
        let inner = py.detach(|| adapt::tabulate_bopt(k, n_grid)).map_err(py_err)?;
        Ok(PyTable { inner })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf, k: usize, n_grid: usize) -> PyResult<Self> {
        Ok(PyTable { inner: BOptTable::read_csv(path, k, n_grid).map_err(py_err)? })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_csv(path).map_err(py_err)
    }

    /// `(b, a, clamped)`; `a` is `None` for two stages.
    fn lookup(&self, h_bar: f64) -> PyResult<(f64, Option<f64>, bool)> {
        let l = adapt::lookup_bopt(&self.inner, h_bar).map_err(py_err)?;
        Ok((l.b, l.a, l.clamped))
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }

    #[getter]
    fn h(&self) -> Vec<f64> {
        self.inner.h.clone()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.h.len()
    }
}

/// Fitting factors from a Verlet burn-in. With `omegas` given the full
/// spectrum is used and `S_omega` is returned as well.
#[pyfunction]
#[pyo3(signature = (ar, dt_vv, dim, omega_max, omegas = None))]
fn fitting_factors<'py>(
    py: Python<'py>,
    ar: f64,
    dt_vv: f64,
    dim: usize,
    omega_max: f64,
    omegas: Option<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let want = omegas.is_some();
    let freqs = match omegas {
        Some(w) => FrequencySummary::from_omegas(w).map_err(py_err)?,
        None => FrequencySummary::max_only(omega_max),
    };
    let r = adapt::fitting_factors(ar, dt_vv, dim, &freqs, want).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("S", r.s)?;
    d.set_item("S_omega", r.s_omega)?;
    d.set_item("mode", r.mode.name())?;
    d.set_item("E_dH", r.e_dh)?;
    d.set_item("sigma", freqs.sigma)?;
    for k in [1usize, 2, 3] {
        d.set_item(format!("SL{k}"), adapt::estimate_stability_limit(k, &r, &freqs).map_err(py_err)?)?;
    }
    Ok(d)
}

/// Target density: Gaussian or Bayesian logistic regression.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: Box<dyn TargetModel + Send + Sync>,
}

#[pymethods]
impl PyModel {
    /// Gaussian with diagonal precision.
    #[staticmethod]
    #[pyo3(signature = (precision, mean = None))]
    fn gaussian_diagonal(precision: Vec<f64>, mean: Option<Vec<f64>>) -> PyResult<Self> {
        let mean = mean.unwrap_or_else(|| vec![0.0; precision.len()]);
        let m = GaussianModel::new(Precision::Diagonal(precision.into()), mean).map_err(py_err)?;
        Ok(PyModel { inner: Box::new(m) })
    }

    /// Gaussian with a dense precision given as a list of rows.
    #[staticmethod]
    #[pyo3(signature = (precision, mean = None))]
    fn gaussian_dense(precision: Vec<Vec<f64>>, mean: Option<Vec<f64>>) -> PyResult<Self> {
        let n = precision.len();
        if precision.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("precision must be square"));
        }
        let flat: Vec<f64> = precision.into_iter().flatten().collect();
        let p = nalgebra::DMatrix::from_row_slice(n, n, &flat);
        let mean = mean.unwrap_or_else(|| vec![0.0; n]);
        let m = GaussianModel::new(Precision::Dense(p), mean).map_err(py_err)?;
        Ok(PyModel { inner: Box::new(m) })
    }

    /// Centred Gaussian whose precision is a seeded Wishart draw.
    #[staticmethod]
    fn gaussian_wishart(dim: usize, seed: u64) -> PyResult<Self> {
        Ok(PyModel { inner: Box::new(model::make_gaussian_wishart(dim, seed).map_err(py_err)?) })
    }

    /// Bayesian logistic regression on a numeric CSV with 0/1 or 1/2 labels.
    #[staticmethod]
    #[pyo3(signature = (path, labels_first = false, standardize = true, intercept = true, prior_precision = 1.0))]
    fn blr(
        path: PathBuf,
        labels_first: bool,
        standardize: bool,
        intercept: bool,
        prior_precision: f64,
    ) -> PyResult<Self> {
        let opts = LoadOptions {
            label_position: if labels_first { LabelPosition::First } else { LabelPosition::Last },
            standardize,
            intercept,
            prior_precision,
            ..LoadOptions::default()
        };
        let data = model::load_dataset(path, &opts).map_err(py_err)?;
        Ok(PyModel { inner: Box::new(model::make_blr_model(data).map_err(py_err)?) })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn potential(&self, theta: Vec<f64>) -> PyResult<f64> {
        self.check(&theta)?;
        Ok(self.inner.potential(&theta))
    }

    fn gradient(&self, theta: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check(&theta)?;
        let mut g = vec![0.0; theta.len()];
        self.inner.gradient(&theta, &mut g);
        Ok(g)
    }
}

impl PyModel {
    fn check(&self, theta: &[f64]) -> PyResult<()> {
        if theta.len() != self.inner.dim() {
            return Err(PyValueError::new_err(format!(
                "expected {} coordinates, got {}",
                self.inner.dim(),
                theta.len()
            )));
        }
        Ok(())
    }
}

/// Tuning, burn-in and one production chain at half the stability limit.
/// `config` takes the same keys as the command line config file.
#[pyfunction]
#[pyo3(signature = (model, integrator = "sAIA3", start = None, seed = 0, config = None))]
fn run_pipeline<'py>(
    py: Python<'py>,
    model: &PyModel,
    integrator: &str,
    start: Option<Vec<f64>>,
    seed: u64,
    config: Option<Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = HmcConfig { seed, ..HmcConfig::default() };
    if let Some(c) = config {
        for (k, v) in c.iter() {
            cfg.set(&k.str()?.to_cow()?, &v.str()?.to_cow()?).map_err(py_err)?;
        }
    }
    let integ = IntegratorKind::from_label(integrator).map_err(py_err)?;
    let start = start.unwrap_or_else(|| vec![0.0; model.inner.dim()]);
    let (state, rec, rep) = py
        .detach(|| sampler::run_pipeline(model.inner.as_ref(), &cfg, integ, &start, None))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("dt_vv", state.dt_vv)?;
    d.set_item("ar_burnin", state.ar_burnin)?;
    d.set_item("omega_max", state.freqs.omega_max)?;
    d.set_item("S", state.fitting.s)?;
    d.set_item("S_omega", state.s_omega)?;
    d.set_item("mode", state.mode.name())?;
    d.set_item("dt_sl", state.dt_sl)?;
    d.set_item("samples", rec.samples)?;
    d.set_item("dim", rec.dim)?;
    d.set_item("accepted", rec.accepted)?;
    d.set_item("dt", rec.dt)?;
    d.set_item("n_steps", rec.n_steps)?;
    d.set_item("b", rec.b)?;
    d.set_item("grad_evals", rec.grad_evals)?;
    d.set_item("ar", rep.ar)?;
    d.set_item("ess", rep.ess)?;
    d.set_item("mcse", rep.mcse)?;
    d.set_item("min_ess_norm", rep.min_ess_norm)?;
    d.set_item("min_inv_mcse_norm", rep.min_inv_mcse_norm)?;
    d.set_item("max_psrf", rep.max_psrf)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (samples, dim = 1))]
fn ess(samples: Vec<f64>, dim: usize) -> PyResult<Vec<f64>> {
    diagnostics::ess(&samples, dim).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (samples, dim = 1))]
fn mcse(samples: Vec<f64>, dim: usize) -> PyResult<Vec<f64>> {
    diagnostics::mcse(&samples, dim).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (chains, dim = 1))]
fn psrf(chains: Vec<Vec<f64>>, dim: usize) -> PyResult<Vec<f64>> {
    let refs: Vec<&[f64]> = chains.iter().map(Vec::as_slice).collect();
    diagnostics::psrf(&refs, dim).map_err(py_err)
}

#[pymodule]
fn splitting_hmc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScheme>()?;
    m.add_class::<PyTable>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(rho, m)?)?;
    m.add_function(wrap_pyfunction!(stability_limit, m)?)?;
    m.add_function(wrap_pyfunction!(fitting_factors, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(ess, m)?)?;
    m.add_function(wrap_pyfunction!(mcse, m)?)?;
    m.add_function(wrap_pyfunction!(psrf, m)?)?;
    Ok(())
}
