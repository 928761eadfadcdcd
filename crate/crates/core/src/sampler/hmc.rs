use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::integrator::{integrate_leg_with_cap, PhasePoint, SplittingScheme};
use crate::model::TargetModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOutcome {
    pub accepted: bool,
    pub delta_h: f64,
    pub divergent: bool,
    pub grad_evals: usize,
}

/// One HMC transition: fresh `N(0, I)` momentum, a leg of `n_steps` steps of
/// size `h`, and a Metropolis test on `ΔH`. `position` is updated in place
/// on acceptance. Divergent legs are rejected.
pub fn hmc_iteration<M: TargetModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    scheme: &SplittingScheme,
    position: &mut Vec<f64>,
    h: f64,
    n_steps: usize,
    divergence_cap: f64,
    rng: &mut R,
) -> Result<IterationOutcome> {
    let momentum: Vec<f64> = (0..position.len()).map(|_| rng.sample(StandardNormal)).collect();
    let start = PhasePoint::new(std::mem::take(position), momentum);
    let leg = integrate_leg_with_cap(scheme, model, &start, h, n_steps, divergence_cap);
    let u: f64 = rng.random();
    let leg = match leg {
        Ok(leg) => leg,
        Err(e) => {
            *position = start.position;
            return Err(e);
        }
    };
    let accepted = !leg.divergent && (leg.delta_h <= 0.0 || u < (-leg.delta_h).exp());
    *position = if accepted { leg.end.position } else { start.position };
    Ok(IterationOutcome {
        accepted,
        delta_h: leg.delta_h,
        divergent: leg.divergent,
        grad_evals: leg.grad_evals,
    })
}
