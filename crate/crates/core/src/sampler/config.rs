use std::path::Path;

use crate::error::{Error, Result};

/// Per-grid-point randomization of step size and leg length.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRandomization {
    pub grid_points: usize,
    /// Signed width of the uniform step-size interval, as a fraction of the
    /// k-stage stability limit. Negative values extend below the grid point.
    pub dt_frac: f64,
    /// Draw `L` uniformly from `{1, ..., 2L̄ - 1}` each iteration instead of
    /// using `L̄`.
    pub per_iteration_l: bool,
}

impl Default for StepRandomization {
    fn default() -> Self {
        StepRandomization { grid_points: 20, dt_frac: -1.0 / 20.0, per_iteration_l: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig {
    pub n_tune: usize,
    pub n_burnin: usize,
    pub n_pr: usize,
    /// Window length of the acceptance-rate check during tuning.
    pub n_check: usize,
    pub alpha_target: f64,
    pub epsilon: f64,
    /// Tuning increment; `None` means a tenth of the initial step `1/D`.
    pub dt_tune: Option<f64>,
    pub seed: u64,
    /// Trajectory-length constant: `L̄ k = τ D`.
    pub tau: f64,
    /// Stage count used by adaptive production.
    pub k: usize,
    /// Always compute the frequency spectrum after burn-in.
    pub i_omega: bool,
    pub randomization: StepRandomization,
    pub divergence_cap: f64,
    /// Keep every n-th burn-in state for Hessians; `None` picks 1 for
    /// `D ≤ 200` and 10 above.
    pub hessian_stride: Option<usize>,
    /// Burn-in states used for power iteration on `ω̃`.
    pub power_states: usize,
    pub power_tol: f64,
    pub power_max_iters: usize,
    pub n_grid: usize,
    pub s_threshold: f64,
    pub sigma_threshold: f64,
    /// Compute the spectrum and `S_ω` during burn-in even when the selected
    /// mode does not use them.
    pub report_spectrum: bool,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            n_tune: 4000,
            n_burnin: 2000,
            n_pr: 2000,
            n_check: 100,
            alpha_target: 0.92,
            epsilon: 0.01,
            dt_tune: None,
            seed: 0,
            tau: 1.0,
            k: 3,
            i_omega: false,
            randomization: StepRandomization::default(),
            divergence_cap: crate::integrator::DEFAULT_DIVERGENCE_CAP,
            hessian_stride: None,
            power_states: 20,
            power_tol: 1e-6,
            power_max_iters: 500,
            n_grid: crate::adapt::DEFAULT_N_GRID,
            s_threshold: 2.0,
            sigma_threshold: 1.0,
            report_spectrum: false,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        _ => Err(Error::Config(format!("cannot parse {value:?} for {key} as a flag"))),
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_tune", self.n_tune),
            ("n_burnin", self.n_burnin),
            ("n_pr", self.n_pr),
            ("n_check", self.n_check),
            ("grid_points", self.randomization.grid_points),
            ("power_states", self.power_states),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if !(self.alpha_target > 0.0 && self.alpha_target < 1.0) {
            return Err(Error::Config("alpha_target must lie in (0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if self.dt_tune.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Config("dt_tune must be positive".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be positive".into()));
        }
        if self.k != 2 && self.k != 3 {
            return Err(Error::Config("k must be 2 or 3".into()));
        }
        if !(self.randomization.dt_frac.abs() < 1.0) {
            return Err(Error::Config("|dt_frac| must be below 1".into()));
        }
        if !(self.divergence_cap > 0.0) {
            return Err(Error::Config("divergence_cap must be positive".into()));
        }
        Ok(())
    }

    /// Sets one field by name (field names as in this struct; randomization
    /// fields are addressed without prefix).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "n_tune" => self.n_tune = parse(key, value)?,
            "n_burnin" => self.n_burnin = parse(key, value)?,
            "n_pr" => self.n_pr = parse(key, value)?,
            "n_check" => self.n_check = parse(key, value)?,
            "alpha_target" => self.alpha_target = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "dt_tune" => self.dt_tune = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "tau" => self.tau = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "i_omega" => self.i_omega = parse_bool(key, value)?,
            "grid_points" => self.randomization.grid_points = parse(key, value)?,
            "dt_frac" => self.randomization.dt_frac = parse(key, value)?,
            "per_iteration_l" => self.randomization.per_iteration_l = parse_bool(key, value)?,
            "divergence_cap" => self.divergence_cap = parse(key, value)?,
            "hessian_stride" => self.hessian_stride = Some(parse(key, value)?),
            "power_states" => self.power_states = parse(key, value)?,
            "power_tol" => self.power_tol = parse(key, value)?,
            "power_max_iters" => self.power_max_iters = parse(key, value)?,
            "n_grid" => self.n_grid = parse(key, value)?,
            "s_threshold" => self.s_threshold = parse(key, value)?,
            "sigma_threshold" => self.sigma_threshold = parse(key, value)?,
            "report_spectrum" => self.report_spectrum = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment. Keys unknown to
    /// this struct are returned for the caller to handle.
    pub fn apply_str(&mut self, text: &str) -> Result<Vec<(String, String)>> {
        let mut rest = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", i + 1)));
            };
            let (k, v) = (k.trim(), v.trim());
            match self.set(k, v) {
                Err(Error::Config(msg)) if msg.starts_with("unknown key") => {
                    rest.push((k.to_string(), v.to_string()))
                }
                Err(Error::Config(msg)) => {
                    return Err(Error::Config(format!("line {}: {msg}", i + 1)))
                }
                other => other?,
            }
        }
        Ok(rest)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<(Self, Vec<(String, String)>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = HmcConfig::default();
        let rest = cfg.apply_str(&text)?;
        cfg.validate()?;
        Ok((cfg, rest))
    }

    pub fn hessian_stride_for(&self, dim: usize) -> usize {
        self.hessian_stride.unwrap_or(if dim <= 200 { 1 } else { 10 }).max(1)
    }

    /// `L̄ = max(1, round(τ D / k))`.
    pub fn l_bar(&self, dim: usize, k: usize) -> usize {
        ((self.tau * dim as f64 / k as f64).round() as usize).max(1)
    }
}
