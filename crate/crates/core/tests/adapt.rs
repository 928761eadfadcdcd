use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splitting_hmc::adapt::{
    fitting_factors, lookup_bopt, nondimensionalize, tabulate_bopt, BOptTable, NondimMode,
};
use splitting_hmc::integrator::{hyperbola_residual, rho, stability_limit_dimensionless};
use splitting_hmc::model::FrequencySummary;

fn table(k: usize) -> &'static BOptTable {
    static T2: OnceLock<BOptTable> = OnceLock::new();
    static T3: OnceLock<BOptTable> = OnceLock::new();
    let cell = if k == 2 { &T2 } else { &T3 };
    cell.get_or_init(|| tabulate_bopt(k, 400).unwrap())
}

/// `max_{0<h≤h̄} ρ_k(h, b)` by a fine scan with a local ternary refinement,
/// `+∞` when `b` is unstable somewhere in `(0, h̄]`.
fn max_rho_oracle(k: usize, b: f64, h_bar: f64) -> f64 {
    if stability_limit_dimensionless(k, b).unwrap() <= h_bar {
        return f64::INFINITY;
    }
    let n = 4000;
    let dh = h_bar / n as f64;
    let (mut best_i, mut best) = (n, rho(k, h_bar, b).unwrap());
    for i in 1..n {
        let v = rho(k, i as f64 * dh, b).unwrap();
        if v > best {
            (best_i, best) = (i, v);
        }
    }
    let (mut lo, mut hi) = ((best_i as f64 - 1.0) * dh, ((best_i + 1) as f64 * dh).min(h_bar));
    for _ in 0..100 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if rho(k, m1, b).unwrap() < rho(k, m2, b).unwrap() {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best.max(rho(k, 0.5 * (lo + hi), b).unwrap())
}

#[test]
fn two_stage_table_is_monotone_and_bounded() {
    let t = table(2);
    let lower = (3.0 - 5f64.sqrt()) / 4.0;
    for w in t.b.windows(2) {
        assert!(w[1] >= w[0] - 1e-4, "{} then {}", w[0], w[1]);
    }
    for &b in &t.b {
        assert!(b >= lower - 1e-3 && b <= 0.25 + 1e-6, "{b}");
    }
    assert!((t.b.last().unwrap() - 0.25).abs() < 1e-3);
}

#[test]
fn three_stage_table_is_monotone_and_ends_at_verlet() {
    let t = table(3);
    for w in t.b.windows(2) {
        assert!(w[1] >= w[0] - 1e-4, "{} then {}", w[0], w[1]);
    }
    assert!((t.b.last().unwrap() - 1.0 / 6.0).abs() < 1e-3);
}

#[test]
fn minimax_certificate() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for k in [2usize, 3] {
        let t = table(k);
        let (lo, hi) = if k == 2 { (0.15, 0.3) } else { (0.08, 0.2) };
        for idx in (5..t.h.len()).step_by(t.h.len() / 8) {
            let (h_bar, b_opt) = (t.h[idx], t.b[idx]);
            let own = max_rho_oracle(k, b_opt, h_bar);
            for _ in 0..20 {
                let b = rng.random_range(lo..hi);
                let other = max_rho_oracle(k, b, h_bar);
                assert!(own <= other + 1e-8, "k={k} h̄={h_bar}: b_opt {b_opt} gives {own}, b {b} gives {other}");
            }
        }
    }
}

fn spectrum() -> FrequencySummary {
    FrequencySummary::from_omegas(vec![0.3, 1.1, 2.0, 2.4, 3.5, 4.0]).unwrap()
}

proptest! {
    #[test]
    fn three_stage_lookups_lie_on_the_hyperbola(h in 0.01f64..6.0) {
        let l = lookup_bopt(table(3), h).unwrap();
        prop_assert!(hyperbola_residual(l.b, l.a.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sigma_corrected_step_never_exceeds_plain(ar in 0.5f64..0.99, dt_vv in 0.01f64..0.5, dt in 0.01f64..1.0) {
        let freqs = spectrum();
        let mut plain = fitting_factors(ar, dt_vv, 6, &freqs, true).unwrap();
        plain.mode = NondimMode::SOmegaPlain;
        let mut sigma = plain.clone();
        sigma.mode = NondimMode::SOmegaSigma;
        let hp = nondimensionalize(dt, &plain, &freqs).unwrap();
        let hs = nondimensionalize(dt, &sigma, &freqs).unwrap();
        prop_assert!(hs <= hp, "{hs} > {hp}");
    }

    #[test]
    fn fitting_is_scale_consistent(
        ar in 0.5f64..0.99,
        dt_vv in 0.01f64..0.5,
        frac in 0.1f64..2.0,
        c in 0.1f64..10.0,
        sigma_mode in any::<bool>(),
    ) {
        let freqs = spectrum();
        let scaled = FrequencySummary::from_omegas(freqs.omegas.iter().map(|w| w * c).collect()).unwrap();
        let mut a = fitting_factors(ar, dt_vv, 6, &freqs, true).unwrap();
        let mut b = fitting_factors(ar, dt_vv / c, 6, &scaled, true).unwrap();
        // the σ threshold is absolute, so compare within one mode
        let mode = if sigma_mode { NondimMode::SOmegaSigma } else { NondimMode::SOmegaPlain };
        a.mode = mode;
        b.mode = mode;
        prop_assert!((a.s_omega.unwrap() - b.s_omega.unwrap()).abs() < 1e-10 * a.s_omega.unwrap());
        prop_assert!((a.s - b.s).abs() < 1e-10 * a.s);
        let dt = frac * dt_vv;
        let ha = nondimensionalize(dt, &a, &freqs).unwrap();
        let hb = nondimensionalize(dt / c, &b, &scaled).unwrap();
        prop_assert!((ha - hb).abs() < 1e-10 * ha, "{ha} vs {hb}");
    }
}
