use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::HmcConfig;
use super::hmc::hmc_iteration;
use super::trace::ChainRecord;
use crate::adapt::{
    estimate_stability_limit, fitting_factors_with, lookup_bopt, needs_frequencies,
    nondimensionalize, tabulate_bopt, BOptTable, FittingResult, ModeThresholds, NondimMode,
};
use crate::diagnostics::{efficiency_summary, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::integrator::SplittingScheme;
use crate::model::{
    frequencies_from_hessians, hessian_or_fd, max_frequency_power_iteration, FrequencySummary,
    TargetModel,
};

/// Integrator used in the production stage.
#[derive(Debug, Clone, PartialEq)]
pub enum IntegratorKind {
    /// A scheme with constant coefficients.
    Fixed(SplittingScheme),
    /// 2-stage coefficient chosen from the largest frequency with factor √2.
    Aia,
    /// k-stage coefficient chosen per iteration from the fitted step-size map.
    SAia { k: usize },
}

impl IntegratorKind {
    pub fn from_label(label: &str) -> Result<Self> {
        let kind = match label {
            "VV" => IntegratorKind::Fixed(SplittingScheme::velocity_verlet()),
            "VV2" => IntegratorKind::Fixed(SplittingScheme::vv2()),
            "VV3" => IntegratorKind::Fixed(SplittingScheme::vv3()),
            "BCSS2" => IntegratorKind::Fixed(SplittingScheme::bcss2()),
            "BCSS3" => IntegratorKind::Fixed(SplittingScheme::bcss3()),
            "ME2" => IntegratorKind::Fixed(SplittingScheme::me2()),
            "ME3" => IntegratorKind::Fixed(SplittingScheme::me3()),
            "AIA2" | "AIA" => IntegratorKind::Aia,
            "sAIA2" => IntegratorKind::SAia { k: 2 },
            "sAIA3" => IntegratorKind::SAia { k: 3 },
            other => {
                return Err(Error::InvalidArgument(format!("unknown integrator {other:?}")))
            }
        };
        Ok(kind)
    }

    pub fn label(&self) -> String {
        match self {
            IntegratorKind::Fixed(s) => s.label().to_string(),
            IntegratorKind::Aia => "AIA2".into(),
            IntegratorKind::SAia { k } => format!("sAIA{k}"),
        }
    }

    pub fn stages(&self) -> usize {
        match self {
            IntegratorKind::Fixed(s) => s.stages(),
            IntegratorKind::Aia => 2,
            IntegratorKind::SAia { k } => *k,
        }
    }

    /// Stage count of the coefficient table this integrator reads, if any.
    pub fn table_stages(&self) -> Option<usize> {
        match self {
            IntegratorKind::Fixed(_) => None,
            IntegratorKind::Aia => Some(2),
            IntegratorKind::SAia { k } => Some(*k),
        }
    }
}

/// ChaCha8 generator for one chain: the master seed with a per-chain stream.
pub fn chain_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub dt_vv: f64,
    /// Chain position after the last tuning iteration.
    pub position: Vec<f64>,
    /// Acceptance rate of the final window run, `None` if no window fit.
    pub ar: Option<f64>,
    pub adjustments: usize,
}

/// Verlet step size giving an acceptance rate near `alpha_target` with L = 1.
///
/// Windows of `n_check` iterations start from `Δt = 1/D`. After each window
/// the rate since the last change decides whether `Δt` moves by `δt`. The
/// increment is halved whenever the direction reverses, and before any move
/// that would make `Δt` nonpositive.
pub fn tune_step_size<M: TargetModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    config: &HmcConfig,
    start: &[f64],
    rng: &mut R,
) -> Result<TuneResult> {
    config.validate()?;
    check_start(model, start)?;
    let vv = SplittingScheme::velocity_verlet();
    let mut dt = 1.0 / model.dim() as f64;
    let mut inc = config.dt_tune.unwrap_or(dt / 10.0);
    let mut x = start.to_vec();
    let (mut n, mut n_acc, mut n_tot) = (0usize, 0usize, 0usize);
    let mut last_dir = 0i8;
    let mut ar = None;
    let mut adjustments = 0;
    while n_tot + config.n_check < config.n_tune {
        for _ in 0..config.n_check {
            let o = hmc_iteration(model, &vv, &mut x, dt, 1, config.divergence_cap, rng)?;
            n_acc += o.accepted as usize;
        }
        n += config.n_check;
        let rate = n_acc as f64 / n as f64;
        ar = Some(rate);
        let dir = if rate < config.alpha_target - config.epsilon {
            -1
        } else if rate > config.alpha_target + config.epsilon {
            1
        } else {
            0
        };
        if dir != 0 {
            if last_dir != 0 && dir != last_dir {
                inc /= 2.0;
            }
            if dir < 0 {
                while dt - inc <= 0.0 {
                    inc /= 2.0;
                }
            }
            dt += f64::from(dir) * inc;
            last_dir = dir;
            adjustments += 1;
            n = 0;
            n_acc = 0;
        }
        n_tot += config.n_check;
    }
    Ok(TuneResult { dt_vv: dt, position: x, ar, adjustments })
}

/// Statistics gathered during burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct BurnIn {
    pub ar: f64,
    pub end: Vec<f64>,
    /// Largest frequency averaged over power iterations at burn-in states.
    pub omega_power: f64,
    pub power_converged: bool,
    pub freqs: FrequencySummary,
    pub fitting: FittingResult,
    /// Averaged Hessian spectrum, when computed.
    pub spectrum: Option<FrequencySummary>,
    /// `S_ω` from `spectrum`, whether or not the selected mode uses it.
    pub s_omega: Option<f64>,
    /// Hessians used for the spectrum (0 when only `ω̃` was needed).
    pub n_hessians: usize,
}

/// `n_burnin` Verlet iterations with L = 1 at `dt_vv`, then fitting factors.
///
/// `ω̃` comes from power iteration at up to `power_states` evenly spaced
/// stored states. The full spectrum, from Hessians at every stored state, is
/// used when `I_ω` is set or `S` exceeds the threshold, and computed for
/// reporting only when `report_spectrum` is set.
pub fn burn_in<M: TargetModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    dt_vv: f64,
    start: &[f64],
    config: &HmcConfig,
    rng: &mut R,
) -> Result<BurnIn> {
    config.validate()?;
    check_start(model, start)?;
    if !(dt_vv > 0.0 && dt_vv.is_finite()) {
        return Err(Error::InvalidArgument(format!("Δt_VV must be positive, got {dt_vv}")));
    }
    let dim = model.dim();
    let stride = config.hessian_stride_for(dim);
    let vv = SplittingScheme::velocity_verlet();
    let mut x = start.to_vec();
    let mut n_acc = 0usize;
    let mut stored: Vec<Vec<f64>> = Vec::with_capacity(config.n_burnin / stride + 1);
    for i in 0..config.n_burnin {
        let o = hmc_iteration(model, &vv, &mut x, dt_vv, 1, config.divergence_cap, rng)?;
        n_acc += o.accepted as usize;
        if (i + 1) % stride == 0 {
            stored.push(x.clone());
        }
    }
    if n_acc == 0 {
        return Err(Error::NoAcceptance);
    }
    if stored.is_empty() {
        stored.push(x.clone());
    }
    let ar = n_acc as f64 / config.n_burnin as f64;

    let n_power = config.power_states.min(stored.len());
    let mut omega_sum = 0.0;
    let mut power_converged = true;
    for j in 0..n_power {
        let idx = (j * stored.len()) / n_power;
        let p = max_frequency_power_iteration(
            model,
            &stored[idx],
            config.power_tol,
            config.power_max_iters,
        )?;
        omega_sum += p.omega_max;
        power_converged &= p.converged;
    }
    let omega_power = omega_sum / n_power as f64;
    let thresholds =
        ModeThresholds { s_max: config.s_threshold, sigma_max: config.sigma_threshold };
    let max_only = FrequencySummary::max_only(omega_power);
    let plain = fitting_factors_with(ar, dt_vv, dim, &max_only, false, thresholds)?;
    let needed = needs_frequencies(config.i_omega, plain.s, thresholds);
    if !needed && !config.report_spectrum {
        return Ok(BurnIn {
            ar,
            end: x,
            omega_power,
            power_converged,
            freqs: max_only,
            fitting: plain,
            spectrum: None,
            s_omega: None,
            n_hessians: 0,
        });
    }
    let hessians: Vec<_> = stored.iter().map(|t| hessian_or_fd(model, t)).collect();
    let spectrum = frequencies_from_hessians(&hessians)?;
    let full = fitting_factors_with(ar, dt_vv, dim, &spectrum, true, thresholds)?;
    let s_omega = full.s_omega;
    let (freqs, fitting) = if needed { (spectrum.clone(), full) } else { (max_only, plain) };
    Ok(BurnIn {
        ar,
        end: x,
        omega_power,
        power_converged,
        freqs,
        fitting,
        spectrum: Some(spectrum),
        s_omega,
        n_hessians: hessians.len(),
    })
}

/// Everything production needs from tuning and burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineState {
    pub dt_vv: f64,
    pub ar_tune: Option<f64>,
    pub ar_burnin: f64,
    pub omega_power: f64,
    pub freqs: FrequencySummary,
    pub fitting: FittingResult,
    pub mode: NondimMode,
    /// Dimensional 1-stage stability limit; the k-stage limit is `k` times it.
    pub dt_sl: f64,
    pub burnin_end: Vec<f64>,
    pub spectrum: Option<FrequencySummary>,
    pub s_omega: Option<f64>,
    pub n_hessians: usize,
}

/// Tuning followed by burn-in and stability-limit estimation.
pub fn prepare<M: TargetModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    config: &HmcConfig,
    start: &[f64],
    rng: &mut R,
) -> Result<PipelineState> {
    let tune = tune_step_size(model, config, start, rng)?;
    let burn = burn_in(model, tune.dt_vv, &tune.position, config, rng)?;
    let dt_sl = estimate_stability_limit(1, &burn.fitting, &burn.freqs)?;
    Ok(PipelineState {
        dt_vv: tune.dt_vv,
        ar_tune: tune.ar,
        ar_burnin: burn.ar,
        omega_power: burn.omega_power,
        mode: burn.fitting.mode,
        freqs: burn.freqs,
        fitting: burn.fitting,
        dt_sl,
        burnin_end: burn.end,
        spectrum: burn.spectrum,
        s_omega: burn.s_omega,
        n_hessians: burn.n_hessians,
    })
}

/// Step sizes and leg lengths of one production chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductionPlan {
    pub integrator: IntegratorKind,
    /// Centre `kΔt_i` of the step-size interval.
    pub center_dt: f64,
    /// Signed width of the randomization interval; negative extends below the centre.
    pub delta: f64,
    pub l_bar: usize,
    pub n_iter: usize,
    pub start: Vec<f64>,
}

impl ProductionPlan {
    /// Plan centred at `fraction` of the k-stage stability limit.
    pub fn at_fraction(
        integrator: IntegratorKind,
        state: &PipelineState,
        config: &HmcConfig,
        fraction: f64,
    ) -> Self {
        let k = integrator.stages() as f64;
        let dim = state.burnin_end.len();
        ProductionPlan {
            l_bar: config.l_bar(dim, integrator.stages()),
            center_dt: fraction * k * state.dt_sl,
            delta: config.randomization.dt_frac * k * state.dt_sl,
            n_iter: config.n_pr,
            start: state.burnin_end.clone(),
            integrator,
        }
    }

    /// Plan for grid point `i` in `1..=grid_points`: centre `i kΔt_SL / grid_points`.
    pub fn for_grid_point(
        integrator: IntegratorKind,
        state: &PipelineState,
        config: &HmcConfig,
        i: usize,
    ) -> Self {
        let g = config.randomization.grid_points as f64;
        Self::at_fraction(integrator, state, config, i as f64 / g)
    }

    fn draw_dt<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.delta == 0.0 {
            return self.center_dt;
        }
        let u: f64 = rng.random();
        let width = self.delta.abs();
        if self.delta < 0.0 {
            self.center_dt - u * width
        } else {
            self.center_dt + u * width
        }
    }

    fn draw_l<R: Rng + ?Sized>(&self, per_iteration: bool, rng: &mut R) -> usize {
        if per_iteration && self.l_bar > 1 {
            rng.random_range(1..=2 * self.l_bar - 1)
        } else {
            self.l_bar
        }
    }
}

/// Production chain of `plan.n_iter` iterations.
///
/// Each iteration draws `Δt` from the randomization interval and `L` from
/// `{1, ..., 2L̄ - 1}`; adaptive integrators then map `Δt` to its
/// dimensionless value and read the coefficient from `table`.
pub fn production<M: TargetModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    state: &PipelineState,
    table: Option<&BOptTable>,
    plan: &ProductionPlan,
    config: &HmcConfig,
    rng: &mut R,
) -> Result<ChainRecord> {
    check_start(model, &plan.start)?;
    if plan.n_iter == 0 || plan.l_bar == 0 {
        return Err(Error::InvalidArgument("production needs n_iter >= 1 and L̄ >= 1".into()));
    }
    if !(plan.center_dt > 0.0) || plan.center_dt + plan.delta.min(0.0) < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "step-size interval around {} with width {} leaves (0, ∞)",
            plan.center_dt, plan.delta
        )));
    }
    let table = match plan.integrator.table_stages() {
        None => None,
        Some(k) => {
            let t = table.ok_or_else(|| {
                Error::InvalidArgument(format!("{} needs a coefficient table", plan.integrator.label()))
            })?;
            if t.k != k {
                return Err(Error::InvalidArgument(format!(
                    "{} needs a {k}-stage table, got k = {}",
                    plan.integrator.label(),
                    t.k
                )));
            }
            Some(t)
        }
    };
    let dim = model.dim();
    let k = plan.integrator.stages();
    let mut rec = ChainRecord::new(plan.integrator.label(), dim, k, plan.l_bar as f64);
    rec.samples.reserve(plan.n_iter * dim);
    let mut x = plan.start.clone();
    for _ in 0..plan.n_iter {
        let dt = plan.draw_dt(rng);
        let n_steps = plan.draw_l(config.randomization.per_iteration_l, rng);
        let scheme = match (&plan.integrator, table) {
            (IntegratorKind::Fixed(s), _) => s.clone(),
            (IntegratorKind::Aia, Some(t)) => {
                let h_bar = std::f64::consts::SQRT_2 * state.freqs.omega_max * dt;
                if h_bar >= 4.0 {
                    return Err(Error::AiaAbort { h_bar });
                }
                let lk = lookup_bopt(t, h_bar)?;
                rec.clamped_lookups += lk.clamped as usize;
                SplittingScheme::from_family(2, lk.b)?
            }
            (IntegratorKind::SAia { k }, Some(t)) => {
                let h_bar = nondimensionalize(dt, &state.fitting, &state.freqs)?;
                let lk = lookup_bopt(t, h_bar)?;
                rec.clamped_lookups += lk.clamped as usize;
                SplittingScheme::from_family(*k, lk.b)?
            }
            _ => unreachable!("table presence checked above"),
        };
        let o = hmc_iteration(model, &scheme, &mut x, dt, n_steps, config.divergence_cap, rng)?;
        rec.samples.extend_from_slice(&x);
        rec.accepted.push(o.accepted);
        rec.delta_h.push(o.delta_h);
        rec.dt.push(dt);
        rec.n_steps.push(n_steps);
        rec.b.push(if k == 1 { f64::NAN } else { scheme.b() });
        rec.grad_evals += o.grad_evals as u64;
        rec.divergences += o.divergent as usize;
    }
    Ok(rec)
}

/// Full run from `start`: tuning, burn-in, fitting, then one production chain
/// centred at half the k-stage stability limit. The table is computed when
/// the integrator needs one and none is given.
pub fn run_pipeline<M: TargetModel + ?Sized>(
    model: &M,
    config: &HmcConfig,
    integrator: IntegratorKind,
    start: &[f64],
    table: Option<&BOptTable>,
) -> Result<(PipelineState, ChainRecord, DiagnosticsReport)> {
    let mut rng = chain_rng(config.seed, 0);
    let state = prepare(model, config, start, &mut rng)?;
    let owned;
    let table = match (integrator.table_stages(), table) {
        (Some(k), None) => {
            owned = tabulate_bopt(k, config.n_grid)?;
            Some(&owned)
        }
        (_, t) => t,
    };
    let plan = ProductionPlan::at_fraction(integrator, &state, config, 0.5);
    let mut rng = chain_rng(config.seed, 1);
    let record = production(model, &state, table, &plan, config, &mut rng)?;
    let report = efficiency_summary(&record, None)?;
    Ok((state, record, report))
}

fn check_start<M: TargetModel + ?Sized>(model: &M, start: &[f64]) -> Result<()> {
    if start.len() != model.dim() {
        return Err(Error::InvalidArgument(format!(
            "start has length {}, model dimension is {}",
            start.len(),
            model.dim()
        )));
    }
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("start position is not finite".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GaussianModel, Precision};
    use nalgebra::DVector;

    fn quick_config() -> HmcConfig {
        HmcConfig {
            n_tune: 2000,
            n_burnin: 1000,
            n_pr: 500,
            n_grid: 200,
            ..HmcConfig::default()
        }
    }

    #[test]
    fn labels_round_trip() {
        for l in ["VV", "VV2", "VV3", "BCSS2", "BCSS3", "ME2", "ME3", "AIA2", "sAIA2", "sAIA3"] {
            assert_eq!(IntegratorKind::from_label(l).unwrap().label(), l);
        }
        assert!(IntegratorKind::from_label("sAIA4").is_err());
    }

    #[test]
    fn tuning_one_dimensional_gaussian_lands_near_unit_step() {
        let m = GaussianModel::standard(1);
        let cfg = HmcConfig { n_tune: 20_000, ..HmcConfig::default() };
        let mut rng = chain_rng(5, 0);
        let t = tune_step_size(&m, &cfg, &[0.0], &mut rng).unwrap();
        // AR(h) = 1 - (2/π) atan(h³/8): 0.91 at h ≈ 1.04, 0.93 at h ≈ 0.96
        assert!((t.dt_vv - 1.0).abs() < 0.15, "{}", t.dt_vv);
    }

    #[test]
    fn tuning_leaves_step_alone_inside_the_band() {
        // target where any step is accepted: AR = 1, band covers it
        struct Flat;
        impl TargetModel for Flat {
            fn dim(&self) -> usize {
                4
            }
            fn potential(&self, _: &[f64]) -> f64 {
                0.0
            }
            fn gradient(&self, _: &[f64], g: &mut [f64]) {
                g.fill(0.0);
            }
        }
        let cfg = HmcConfig { alpha_target: 0.995, epsilon: 0.01, ..quick_config() };
        let t = tune_step_size(&Flat, &cfg, &[0.0; 4], &mut chain_rng(1, 0)).unwrap();
        assert_eq!(t.dt_vv, 0.25);
        assert_eq!(t.adjustments, 0);
    }

    #[test]
    fn burn_in_on_gaussian_recovers_frequencies() {
        let p = Precision::Diagonal(DVector::from_vec(vec![1.0, 4.0, 9.0]));
        let m = GaussianModel::centered(p).unwrap();
        let cfg = HmcConfig { i_omega: true, ..quick_config() };
        let b = burn_in(&m, 0.3, &[0.0; 3], &cfg, &mut chain_rng(2, 0)).unwrap();
        assert!((b.omega_power - 3.0).abs() < 1e-4);
        for (w, e) in b.freqs.omegas.iter().zip([1.0, 2.0, 3.0]) {
            assert!((w - e).abs() < 1e-9);
        }
        assert!(b.fitting.s_omega.is_some());
        assert!(b.ar > 0.0 && b.ar <= 1.0);
    }

    #[test]
    fn burn_in_without_acceptance_aborts() {
        let m = GaussianModel::standard(2);
        let cfg = quick_config();
        let r = burn_in(&m, 50.0, &[0.0; 2], &cfg, &mut chain_rng(3, 0));
        assert!(matches!(r, Err(Error::NoAcceptance)));
    }

    fn toy_state(dim: usize) -> PipelineState {
        let freqs = FrequencySummary::max_only(1.0);
        let fitting = crate::adapt::fitting_factors(0.92, 0.9, dim, &freqs, false).unwrap();
        let dt_sl = estimate_stability_limit(1, &fitting, &freqs).unwrap();
        PipelineState {
            dt_vv: 0.9,
            ar_tune: Some(0.92),
            ar_burnin: 0.92,
            omega_power: 1.0,
            mode: fitting.mode,
            freqs,
            fitting,
            dt_sl,
            burnin_end: vec![0.0; dim],
            spectrum: None,
            s_omega: None,
            n_hessians: 0,
        }
    }

    #[test]
    fn degenerate_randomization_uses_the_centre() {
        let m = GaussianModel::standard(2);
        let mut cfg = quick_config();
        cfg.randomization.dt_frac = 0.0;
        cfg.tau = 0.5;
        let state = toy_state(2);
        let plan = ProductionPlan::for_grid_point(
            IntegratorKind::Fixed(SplittingScheme::bcss3()),
            &state,
            &cfg,
            5,
        );
        assert_eq!(plan.l_bar, 1);
        let rec = production(&m, &state, None, &plan, &cfg, &mut chain_rng(4, 1)).unwrap();
        let centre = 5.0 * 3.0 * state.dt_sl / 20.0;
        assert!(rec.dt.iter().all(|&d| d == centre));
        assert!(rec.n_steps.iter().all(|&l| l == 1));
        assert_eq!(rec.grad_evals, 500 * 4);
    }

    #[test]
    fn randomized_steps_stay_in_the_interval() {
        let m = GaussianModel::standard(2);
        let cfg = HmcConfig { tau: 3.0, ..quick_config() };
        let state = toy_state(2);
        let plan =
            ProductionPlan::for_grid_point(IntegratorKind::SAia { k: 2 }, &state, &cfg, 1);
        let table = tabulate_bopt(2, 200).unwrap();
        let rec =
            production(&m, &state, Some(&table), &plan, &cfg, &mut chain_rng(4, 2)).unwrap();
        let hi = 2.0 * state.dt_sl / 20.0;
        assert!(rec.dt.iter().all(|&d| d > 0.0 && d <= hi));
        assert!(rec.n_steps.iter().all(|&l| (1..=5).contains(&l)));
        let expected: u64 = rec.n_steps.iter().map(|&l| 2 * l as u64 + 1).sum();
        assert_eq!(rec.grad_evals, expected);
        assert!(rec.b.iter().all(|&b| b > 0.18 && b <= 0.25));
    }

    #[test]
    fn adaptive_integrators_require_a_matching_table() {
        let m = GaussianModel::standard(2);
        let cfg = quick_config();
        let state = toy_state(2);
        let plan = ProductionPlan::at_fraction(IntegratorKind::SAia { k: 3 }, &state, &cfg, 0.5);
        assert!(production(&m, &state, None, &plan, &cfg, &mut chain_rng(0, 0)).is_err());
        let t2 = tabulate_bopt(2, 50).unwrap();
        assert!(production(&m, &state, Some(&t2), &plan, &cfg, &mut chain_rng(0, 0)).is_err());
    }

    #[test]
    fn aia_aborts_beyond_its_range() {
        let m = GaussianModel::standard(2);
        let cfg = quick_config();
        let state = toy_state(2);
        // centre at the full 2-stage limit 4/S: √2 ω̃ Δt exceeds 4
        let mut plan = ProductionPlan::at_fraction(IntegratorKind::Aia, &state, &cfg, 1.0);
        plan.delta = 0.0;
        let t2 = tabulate_bopt(2, 50).unwrap();
        let r = production(&m, &state, Some(&t2), &plan, &cfg, &mut chain_rng(0, 0));
        assert!(matches!(r, Err(Error::AiaAbort { .. })));
    }

    #[test]
    fn pipeline_is_deterministic() {
        let m = GaussianModel::standard(3);
        let cfg = HmcConfig { seed: 11, ..quick_config() };
        let table = tabulate_bopt(3, 200).unwrap();
        let run = || {
            run_pipeline(&m, &cfg, IntegratorKind::SAia { k: 3 }, &[0.0; 3], Some(&table)).unwrap()
        };
        let (s1, r1, _) = run();
        let (s2, r2, _) = run();
        assert_eq!(s1, s2);
        assert_eq!(r1.samples, r2.samples);
        assert_eq!(r1.accepted, r2.accepted);
    }

    #[test]
    fn i_omega_forces_the_spectrum() {
        let m = GaussianModel::standard(3);
        let cfg = HmcConfig { i_omega: true, ..quick_config() };
        let s = prepare(&m, &cfg, &[0.0; 3], &mut chain_rng(1, 0)).unwrap();
        assert!(s.freqs.has_full_spectrum());
        assert!(s.mode.needs_spectrum());
        let cfg = HmcConfig { i_omega: false, ..quick_config() };
        let s = prepare(&m, &cfg, &[0.0; 3], &mut chain_rng(1, 0)).unwrap();
        assert_eq!(s.mode, NondimMode::SPlain);
        assert_eq!(s.n_hessians, 0);
    }
}
