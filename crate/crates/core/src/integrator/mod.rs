//! Palindromic splitting integrators for Hamiltonian dynamics with identity
//! mass matrix, `H(θ, p) = U(θ) + pᵀp/2`.

pub mod harmonic;
pub mod scheme;

pub use harmonic::{
    compose_propagator, expected_energy_error_harmonic, harmonic_propagator, rho,
    rho_from_propagator, scheme_stability_limit, stability_limit_closed_form,
    stability_limit_dimensionless, HarmonicPropagator,
};
pub use scheme::{
    hyperbola_a, hyperbola_residual, SchemeLabel, SplittingScheme, BCSS2_B, BCSS3_B, ME2_B,
    ME3_B,
};

use crate::error::{Error, Result};
use crate::model::TargetModel;

/// Proposals with `|ΔH|` above this are rejected as divergent.
pub const DEFAULT_DIVERGENCE_CAP: f64 = 1e3;

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub position: Vec<f64>,
    pub momentum: Vec<f64>,
}

impl PhasePoint {
    pub fn new(position: Vec<f64>, momentum: Vec<f64>) -> Self {
        debug_assert_eq!(position.len(), momentum.len());
        PhasePoint { position, momentum }
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().chain(&self.momentum).all(|x| x.is_finite())
    }

    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.momentum.iter().map(|p| p * p).sum::<f64>()
    }

    /// Same position, negated momentum.
    pub fn flipped(&self) -> Self {
        PhasePoint {
            position: self.position.clone(),
            momentum: self.momentum.iter().map(|p| -p).collect(),
        }
    }
}

pub fn hamiltonian<M: TargetModel + ?Sized>(model: &M, state: &PhasePoint) -> f64 {
    model.potential(&state.position) + state.kinetic_energy()
}

/// Result of integrating one HMC leg.
#[derive(Debug, Clone, PartialEq)]
pub struct LegOutcome {
    pub end: PhasePoint,
    /// `H(end) - H(start)`; may be non-finite when `divergent`.
    pub delta_h: f64,
    pub divergent: bool,
    pub grad_evals: usize,
}

/// One step of length `h`. `grad` must hold `∇U` at the current position on
/// entry and holds it at the new position on exit, so consecutive steps cost
/// `k` gradient evaluations each. Returns the number of evaluations made.
fn step_cached<M: TargetModel + ?Sized>(
    scheme: &SplittingScheme,
    model: &M,
    q: &mut [f64],
    p: &mut [f64],
    grad: &mut [f64],
    h: f64,
) -> usize {
    let kick = scheme.kick_weights();
    let drift = scheme.drift_weights();
    for (kw, dw) in kick.iter().zip(drift) {
        let tk = kw * h;
        for (pi, gi) in p.iter_mut().zip(grad.iter()) {
            *pi -= tk * gi;
        }
        let td = dw * h;
        for (qi, pi) in q.iter_mut().zip(p.iter()) {
            *qi += td * pi;
        }
        model.gradient(q, grad);
    }
    let tk = kick[kick.len() - 1] * h;
    for (pi, gi) in p.iter_mut().zip(grad.iter()) {
        *pi -= tk * gi;
    }
    drift.len()
}

/// Applies a single step of the scheme with step size `h`.
pub fn step<M: TargetModel + ?Sized>(
    scheme: &SplittingScheme,
    model: &M,
    state: &PhasePoint,
    h: f64,
) -> PhasePoint {
    let mut q = state.position.clone();
    let mut p = state.momentum.clone();
    let mut g = vec![0.0; q.len()];
    model.gradient(&q, &mut g);
    step_cached(scheme, model, &mut q, &mut p, &mut g, h);
    PhasePoint::new(q, p)
}

/// Integrates `n_steps` steps of size `h` from `start` with the default
/// divergence cap.
pub fn integrate_leg<M: TargetModel + ?Sized>(
    scheme: &SplittingScheme,
    model: &M,
    start: &PhasePoint,
    h: f64,
    n_steps: usize,
) -> Result<LegOutcome> {
    integrate_leg_with_cap(scheme, model, start, h, n_steps, DEFAULT_DIVERGENCE_CAP)
}

/// As [`integrate_leg`], marking the leg divergent when `|ΔH| > cap` or any
/// state becomes non-finite. A non-finite state ends the leg early.
pub fn integrate_leg_with_cap<M: TargetModel + ?Sized>(
    scheme: &SplittingScheme,
    model: &M,
    start: &PhasePoint,
    h: f64,
    n_steps: usize,
    cap: f64,
) -> Result<LegOutcome> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("number of steps must be at least 1".into()));
    }
    if start.dim() != model.dim() || start.momentum.len() != model.dim() {
        return Err(Error::InvalidArgument(format!(
            "phase point has dimension {}, model has {}",
            start.dim(),
            model.dim()
        )));
    }
    let h0 = hamiltonian(model, start);
    let mut q = start.position.clone();
    let mut p = start.momentum.clone();
    let mut g = vec![0.0; q.len()];
    model.gradient(&q, &mut g);
    let mut grad_evals = 1;
    let mut finite = true;
    for _ in 0..n_steps {
        grad_evals += step_cached(scheme, model, &mut q, &mut p, &mut g, h);
        if !q.iter().chain(&p).chain(&g).all(|x| x.is_finite()) {
            finite = false;
            break;
        }
    }
    let end = PhasePoint::new(q, p);
    let delta_h = if finite { hamiltonian(model, &end) - h0 } else { f64::NAN };
    let divergent = !delta_h.is_finite() || delta_h.abs() > cap;
    Ok(LegOutcome {
        end,
        delta_h,
        divergent,
        grad_evals,
    })
}
