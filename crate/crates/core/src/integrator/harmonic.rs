//! Exact analysis of splitting schemes on the unit harmonic oscillator
//! `H = (θ² + p²)/2`, where one step is a linear map of `(θ, p)`.

use super::scheme::{hyperbola_a, SplittingScheme};
use crate::error::{Error, Result};

/// One-step matrix `[[A, B], [C, D]]` acting on `(θ, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicPropagator {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl HarmonicPropagator {
    pub const IDENTITY: HarmonicPropagator = HarmonicPropagator {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn kick(t: f64) -> Self {
        HarmonicPropagator { a: 1.0, b: 0.0, c: -t, d: 1.0 }
    }

    pub fn drift(t: f64) -> Self {
        HarmonicPropagator { a: 1.0, b: t, c: 0.0, d: 1.0 }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn after(&self, first: &Self) -> Self {
        HarmonicPropagator {
            a: self.a * first.a + self.b * first.c,
            b: self.a * first.b + self.b * first.d,
            c: self.c * first.a + self.d * first.c,
            d: self.c * first.b + self.d * first.d,
        }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn apply(&self, theta: f64, p: f64) -> (f64, f64) {
        (self.a * theta + self.b * p, self.c * theta + self.d * p)
    }

    /// `n`-fold composition by repeated squaring.
    pub fn pow(&self, mut n: usize) -> Self {
        let mut acc = Self::IDENTITY;
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                acc = base.after(&acc);
            }
            base = base.after(&base);
            n >>= 1;
        }
        acc
    }

    /// Rotation angle `Θ = arccos A`, with `A` clipped to `[-1, 1]`.
    pub fn theta(&self) -> f64 {
        self.a.clamp(-1.0, 1.0).acos()
    }

    pub fn is_stable(&self) -> bool {
        self.a.abs() < 1.0
    }
}

/// Propagator by explicit 2x2 composition of the scheme's kicks and drifts.
pub fn compose_propagator(scheme: &SplittingScheme, h: f64) -> HarmonicPropagator {
    let kick = scheme.kick_weights();
    let drift = scheme.drift_weights();
    let mut m = HarmonicPropagator::kick(kick[0] * h);
    for (dw, kw) in drift.iter().zip(&kick[1..]) {
        m = HarmonicPropagator::drift(dw * h).after(&m);
        m = HarmonicPropagator::kick(kw * h).after(&m);
    }
    m
}

/// Propagator of `scheme` for step `h`: polynomial closed forms for 1 and 3
/// stages, composition for 2 stages.
pub fn harmonic_propagator(scheme: &SplittingScheme, h: f64) -> HarmonicPropagator {
    match scheme.stages() {
        1 => {
            let a = 1.0 - h * h / 2.0;
            HarmonicPropagator { a, b: h, c: -h + h.powi(3) / 4.0, d: a }
        }
        3 => three_stage_closed_form(scheme.b(), scheme.a(), h),
        _ => compose_propagator(scheme, h),
    }
}

fn three_stage_closed_form(b: f64, a: f64, h: f64) -> HarmonicPropagator {
    let h2 = h * h;
    let h3 = h2 * h;
    let h4 = h2 * h2;
    let hb = 0.5 - b;
    let ha = 0.5 - a;
    let big_a = 1.0 - h2 / 2.0 + a * hb * (0.5 - a + b) * h4
        - 2.0 * a * a * b * ha * hb * hb * h4 * h2;
    let big_b = h - 2.0 * a * (1.0 - a) * hb * h3 + 2.0 * a * a * ha * hb * hb * h4 * h;
    let big_c = -h
        + (2.0 * a * b * (1.0 - b) - a / 2.0 + 0.25) * h3
        + 2.0 * a * b * hb * (a * (1.0 - b) - 0.5) * h4 * h
        + 2.0 * a * a * b * b * ha * hb * hb * h4 * h3;
    HarmonicPropagator { a: big_a, b: big_b, c: big_c, d: big_a }
}

/// Energy-error bound `(B + C)² / (2 (1 - A²))` of a propagator.
///
/// Only meaningful for stable propagators; returns `+∞` when `|A| ≥ 1` and
/// `B + C ≠ 0`.
pub fn rho_from_propagator(m: &HarmonicPropagator) -> f64 {
    let num = (m.b + m.c).powi(2);
    let den = 2.0 * (1.0 - m.a * m.a);
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Numerator and denominator of the closed-form `ρ_k(h, b)` (k = 3 on the
/// hyperbola), before the removable-singularity handling in [`RhoCurve`].
fn rho_parts(k: usize, h: f64, b: f64) -> (f64, f64) {
    let h2 = h * h;
    let h4 = h2 * h2;
    match k {
        1 => (h4, 8.0 * (4.0 - h2)),
        2 => {
            let hb = 0.5 - b;
            let inner = 2.0 * b * b * hb * h2 + 4.0 * b * b - 6.0 * b + 1.0;
            let den = 8.0 * (2.0 - b * h2) * (2.0 - hb * h2) * (1.0 - b * hb * h2);
            (h4 * inner * inner, den)
        }
        3 => {
            let c = three_stage_c(b);
            let b2 = b * b;
            let inner = -3.0 * b2 * b2 + 8.0 * b2 * b - 4.75 * b2 + b + b2 * h2 * c - 0.0625;
            let den = 2.0
                * (3.0 * b - b * h2 * (b - 0.25) - 1.0)
                * (1.0 - 3.0 * b - b * h2 * (b - 0.5).powi(2))
                * (-9.0 * b2 + 6.0 * b - h2 * c - 1.0);
            (h4 * inner * inner, den)
        }
        _ => unreachable!("stage count checked by callers"),
    }
}

fn three_stage_c(b: f64) -> f64 {
    b * b * b - 1.25 * b * b + 0.5 * b - 0.0625
}

/// Positive roots, in `h²`, of the linear factors of the closed-form `ρ_k`
/// denominator, ascending.
fn denominator_roots(k: usize, b: f64) -> Vec<f64> {
    let mut roots: Vec<f64> = match k {
        1 => vec![4.0],
        2 => {
            let hb = 0.5 - b;
            vec![2.0 / b, 2.0 / hb, 1.0 / (b * hb)]
        }
        3 => {
            let c = three_stage_c(b);
            vec![
                (3.0 * b - 1.0) / (b * (b - 0.25)),
                (1.0 - 3.0 * b) / (b * (b - 0.5).powi(2)),
                -(3.0 * b - 1.0).powi(2) / c,
            ]
        }
        _ => unreachable!("stage count checked by callers"),
    };
    roots.retain(|x| x.is_finite() && *x > 0.0);
    roots.sort_by(f64::total_cmp);
    roots
}

fn check_family(k: usize, b: f64) -> Result<()> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "number of stages must be 1, 2 or 3, got {k}"
        )));
    }
    if k > 1 && !(b > 0.0 && b < 0.5) {
        return Err(Error::InvalidArgument(format!("b = {b} must lie in (0, 0.5)")));
    }
    if k == 3 {
        let a = hyperbola_a(b);
        if !(a > 0.0 && a < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "b = {b} has no admissible hyperbola partner a (got {a})"
            )));
        }
    }
    Ok(())
}

fn family_scheme(k: usize, b: f64) -> Result<SplittingScheme> {
    check_family(k, b)?;
    SplittingScheme::from_family(k, b)
}

/// Closed-form `ρ_k(h, ·)` for one member of the k-stage family, with its
/// stability limit precomputed.
#[derive(Debug, Clone)]
pub struct RhoCurve {
    k: usize,
    b: f64,
    roots: Vec<f64>,
    limit: f64,
}

impl RhoCurve {
    pub fn new(k: usize, b: f64) -> Result<Self> {
        let scheme = family_scheme(k, b)?;
        let roots = denominator_roots(k, b);
        let limit = limit_from_roots(&scheme, &roots);
        Ok(RhoCurve { k, b, roots, limit })
    }

    pub fn stability_limit(&self) -> f64 {
        self.limit
    }

    /// `ρ_k(h, b)` for `0 < h < stability_limit`; `+∞` at or beyond the limit.
    pub fn eval(&self, h: f64) -> f64 {
        if h >= self.limit {
            return f64::INFINITY;
        }
        let h2 = h * h;
        // Double roots inside the interval give 0/0; take the symmetric limit.
        if let Some(&r) = self.roots.iter().find(|&&r| (h2 - r).abs() <= 1e-9 * r) {
            let d = 1e-6 * r;
            let lo = self.ratio((r - d).sqrt());
            let hi = self.ratio((r + d).sqrt());
            return 0.5 * (lo + hi);
        }
        self.ratio(h)
    }

    fn ratio(&self, h: f64) -> f64 {
        let (num, den) = rho_parts(self.k, h, self.b);
        if num == 0.0 {
            0.0
        } else {
            num / den
        }
    }
}

/// Closed-form energy-error bound `ρ_k(h, b)`: k = 2 two-stage family, k = 3
/// three-stage family with `a` on the hyperbola (k = 1 ignores `b`).
pub fn rho(k: usize, h: f64, b: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    let curve = RhoCurve::new(k, b)?;
    if h >= curve.limit {
        return Err(Error::OutOfStability { h });
    }
    Ok(curve.eval(h))
}

/// The limit is the first denominator root beyond which `|A| > 1`; roots
/// where `|A|` only touches 1 are skipped.
fn limit_from_roots(scheme: &SplittingScheme, roots: &[f64]) -> f64 {
    for (i, &r) in roots.iter().enumerate() {
        let next = roots.get(i + 1).copied().unwrap_or(r * 1.5 + 1.0);
        let mid = 0.5 * (r + next);
        if harmonic_propagator(scheme, mid.sqrt()).a.abs() > 1.0 {
            return r.sqrt();
        }
    }
    f64::INFINITY
}

/// Stability limit of a k-stage family member from the factored `ρ_k`
/// denominator; an independent route to [`stability_limit_dimensionless`].
pub fn stability_limit_closed_form(k: usize, b: f64) -> Result<f64> {
    Ok(RhoCurve::new(k, b)?.limit)
}

const SCAN_STEP: f64 = 1e-3;
const UNSTABLE_TOL: f64 = 1e-12;

/// Largest `h` with `|A| ≤ 1` on all of `(0, h)`, by a scan of step 1e-3
/// followed by bisection.
pub fn scheme_stability_limit(scheme: &SplittingScheme) -> f64 {
    let unstable = |h: f64| harmonic_propagator(scheme, h).a.abs() > 1.0 + UNSTABLE_TOL;
    let h_end = 4.0 * scheme.stages() as f64 + 1.0;
    let mut i = 1;
    loop {
        let h = i as f64 * SCAN_STEP;
        if h > h_end {
            return f64::INFINITY;
        }
        if unstable(h) {
            let mut lo = (i - 1) as f64 * SCAN_STEP;
            let mut hi = h;
            while hi - lo > 1e-13 {
                let mid = 0.5 * (lo + hi);
                if unstable(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        i += 1;
    }
}

/// Dimensionless stability limit of the k-stage family member with kick
/// coefficient `b` (k = 3 pairs `a` via the hyperbola; k = 1 ignores `b`).
pub fn stability_limit_dimensionless(k: usize, b: f64) -> Result<f64> {
    Ok(scheme_stability_limit(&family_scheme(k, b)?))
}

/// `E[ΔH] = sin²(LΘ) ρ` for a leg of `n_steps` steps on the harmonic
/// oscillator started from its stationary distribution.
pub fn expected_energy_error_harmonic(
    scheme: &SplittingScheme,
    h: f64,
    n_steps: usize,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("h must be positive, got {h}")));
    }
    // the bisected limit can sit a hair above the true boundary
    if h >= scheme_stability_limit(scheme) * (1.0 - 1e-10) {
        return Err(Error::OutOfStability { h });
    }
    let m = harmonic_propagator(scheme, h);
    let rho = if 1.0 - m.a * m.a < 1e-12 {
        let d = 1e-6 * h;
        0.5 * (rho_from_propagator(&harmonic_propagator(scheme, h - d))
            + rho_from_propagator(&harmonic_propagator(scheme, h + d)))
    } else {
        rho_from_propagator(&m)
    };
    let s = (n_steps as f64 * m.theta()).sin();
    Ok(s * s * rho)
}
