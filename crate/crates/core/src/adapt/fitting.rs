use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::FrequencySummary;

/// How a dimensional step size is mapped to the harmonic scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NondimMode {
    /// `h̄ = S ω̃ Δt`, univariate fit; frequencies not needed beyond `ω̃`.
    SPlain,
    /// `h̄ = S_ω ω̃ Δt`, fit over the full frequency spectrum.
    SOmegaPlain,
    /// `h̄ = S_ω (ω̃ - σ) Δt` for dispersed spectra.
    SOmegaSigma,
}

impl NondimMode {
    pub fn needs_spectrum(self) -> bool {
        self != NondimMode::SPlain
    }

    pub fn name(self) -> &'static str {
        match self {
            NondimMode::SPlain => "S",
            NondimMode::SOmegaPlain => "S_omega",
            NondimMode::SOmegaSigma => "S_omega_sigma",
        }
    }
}

/// Switching thresholds for [`select_mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeThresholds {
    /// Above this `S` the target is treated as anharmonic.
    pub s_max: f64,
    /// Above this `σ` the σ-corrected scaling is used.
    pub sigma_max: f64,
}

impl Default for ModeThresholds {
    fn default() -> Self {
        ModeThresholds { s_max: 2.0, sigma_max: 1.0 }
    }
}

/// Fitting factors and derived quantities from a Verlet burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct FittingResult {
    pub s: f64,
    pub s_omega: Option<f64>,
    pub mode: NondimMode,
    pub ar_burnin: f64,
    /// `E^D_VV[ΔH] = 4π(1 - AR)²`.
    pub e_dh: f64,
    pub dt_vv: f64,
    pub dim: usize,
    /// Set when σ-corrected scaling fell back to `ω̃` because `σ ≥ ω̃`.
    pub sigma_fallback: bool,
}

pub fn expected_energy_error_from_ar(ar: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&ar) {
        return Err(Error::InvalidArgument(format!("AR = {ar} is not in [0, 1]")));
    }
    Ok(4.0 * PI * (1.0 - ar).powi(2))
}

/// `(2π(1 - AR)² / x)^{1/6}` with `x = D` or `Σ ω_j⁶`.
fn sixth_root_term(ar: f64, x: f64) -> f64 {
    (2.0 * PI * (1.0 - ar).powi(2) / x).powf(1.0 / 6.0)
}

/// Computes `S` and, if `want_omega_mode`, `S_ω`. The mode is `SPlain`
/// unless `want_omega_mode`, in which case σ decides between the two
/// spectrum-based scalings.
pub fn fitting_factors(
    ar: f64,
    dt_vv: f64,
    dim: usize,
    freqs: &FrequencySummary,
    want_omega_mode: bool,
) -> Result<FittingResult> {
    fitting_factors_with(ar, dt_vv, dim, freqs, want_omega_mode, ModeThresholds::default())
}

pub(crate) fn fitting_factors_with(
    ar: f64,
    dt_vv: f64,
    dim: usize,
    freqs: &FrequencySummary,
    want_omega_mode: bool,
    thresholds: ModeThresholds,
) -> Result<FittingResult> {
    let e_dh = expected_energy_error_from_ar(ar)?;
    if !(dt_vv > 0.0 && dt_vv.is_finite()) {
        return Err(Error::InvalidArgument(format!("Δt_VV must be positive, got {dt_vv}")));
    }
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(freqs.omega_max > 0.0) {
        return Err(Error::InvalidArgument("all frequencies are zero".into()));
    }
    let s = (2.0 / (freqs.omega_max * dt_vv) * sixth_root_term(ar, dim as f64)).max(1.0);
    let (s_omega, mode) = if want_omega_mode {
        if !freqs.has_full_spectrum() {
            return Err(Error::InvalidArgument(
                "S_omega needs the full frequency spectrum".into(),
            ));
        }
        let sum6 = freqs.sum_sixth_powers();
        let s_omega = (2.0 / dt_vv * sixth_root_term(ar, sum6)).max(1.0);
        let mode = if freqs.sigma <= thresholds.sigma_max {
            NondimMode::SOmegaPlain
        } else {
            NondimMode::SOmegaSigma
        };
        (Some(s_omega), mode)
    } else {
        (None, NondimMode::SPlain)
    };
    Ok(FittingResult {
        s,
        s_omega,
        mode,
        ar_burnin: ar,
        e_dh,
        dt_vv,
        dim,
        sigma_fallback: mode == NondimMode::SOmegaSigma && freqs.sigma >= freqs.omega_max,
    })
}

impl FittingResult {
    /// The fitting factor used by the selected mode.
    pub fn s_f(&self) -> f64 {
        match self.mode {
            NondimMode::SPlain => self.s,
            _ => self.s_omega.unwrap_or(self.s),
        }
    }

    /// `ω̃`, or `ω̃ - σ` in the σ-corrected mode unless that is not positive.
    pub fn omega_eff(&self, freqs: &FrequencySummary) -> f64 {
        if self.mode == NondimMode::SOmegaSigma && freqs.sigma < freqs.omega_max {
            freqs.omega_max - freqs.sigma
        } else {
            freqs.omega_max
        }
    }

    fn check(&self, freqs: &FrequencySummary) -> Result<()> {
        if self.mode.needs_spectrum() && (self.s_omega.is_none() || !freqs.has_full_spectrum()) {
            return Err(Error::InvalidArgument(format!(
                "mode {} needs S_omega and the full frequency spectrum",
                self.mode.name()
            )));
        }
        Ok(())
    }
}

/// Dimensionless counterpart `h̄` of a step size `dt`.
pub fn nondimensionalize(dt: f64, result: &FittingResult, freqs: &FrequencySummary) -> Result<f64> {
    result.check(freqs)?;
    let ar = result.ar_burnin;
    let h = match result.mode {
        NondimMode::SPlain => {
            if result.s > 1.0 {
                2.0 * dt / result.dt_vv * sixth_root_term(ar, result.dim as f64)
            } else {
                freqs.omega_max * dt
            }
        }
        NondimMode::SOmegaPlain | NondimMode::SOmegaSigma => {
            let w = result.omega_eff(freqs);
            if result.s_omega.unwrap() > 1.0 {
                2.0 * w * dt / result.dt_vv * sixth_root_term(ar, freqs.sum_sixth_powers())
            } else {
                w * dt
            }
        }
    };
    Ok(h)
}

/// Dimensional stability limit `2k / (S_f ω_eff)` of the k-stage family.
pub fn estimate_stability_limit(
    k: usize,
    result: &FittingResult,
    freqs: &FrequencySummary,
) -> Result<f64> {
    result.check(freqs)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    Ok(2.0 * k as f64 / (result.s_f() * result.omega_eff(freqs)))
}

/// Whether the full spectrum has to be computed given `I_ω` and `S`.
pub fn needs_frequencies(i_omega: bool, s: f64, thresholds: ModeThresholds) -> bool {
    i_omega || s > thresholds.s_max
}

/// Branching on `I_ω`, `S` and `σ`. `sigma` is required whenever
/// [`needs_frequencies`] holds.
pub fn select_mode(
    i_omega: bool,
    s: f64,
    sigma: Option<f64>,
    thresholds: ModeThresholds,
) -> Result<NondimMode> {
    if !needs_frequencies(i_omega, s, thresholds) {
        return Ok(NondimMode::SPlain);
    }
    match sigma {
        Some(sg) if sg <= thresholds.sigma_max => Ok(NondimMode::SOmegaPlain),
        Some(_) => Ok(NondimMode::SOmegaSigma),
        None => Err(Error::InvalidArgument(
            "frequency spread σ is required for this branch".into(),
        )),
    }
}
