//! Acceptance criteria AC1-AC9. Prints one PASS/FAIL line per criterion.
//!
//! The process exits 0 after reporting so that a red criterion is visible
//! without breaking the rest of the test suite; set `ACCEPTANCE_STRICT=1` to
//! turn any FAIL into a nonzero exit. `ACCEPTANCE_ONLY=AC1,AC4` restricts the
//! run to the listed criteria.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use splitting_hmc::adapt::{lookup_bopt, tabulate_bopt};
use splitting_hmc::cli::{cmd_run, Benchmark, ExperimentSpec};
use splitting_hmc::diagnostics::{ess_1d, mcse, psrf, ChainMoments};
use splitting_hmc::integrator::{
    compose_propagator, expected_energy_error_harmonic, hamiltonian, integrate_leg, rho,
    rho_from_propagator, stability_limit_dimensionless, PhasePoint, SplittingScheme,
};
use splitting_hmc::model::{
    load_dataset, make_blr_model, make_gaussian_wishart, GaussianModel, LabelPosition,
    LoadOptions, Precision, TargetModel,
};
use splitting_hmc::sampler::{
    chain_rng, prepare, production, HmcConfig, IntegratorKind, ProductionPlan,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let el = t.elapsed();
    if el > limit {
        o.pass = false;
    }
    o.detail = format!("{} [{:.1} s, limit {} s]", o.detail, el.as_secs_f64(), limit.as_secs());
    o
}

fn ac1() -> Outcome {
    let cases: [(&str, usize, f64, f64); 7] = [
        ("VV", 1, 0.5, 2.000),
        ("VV2", 2, 0.25, 4.000),
        ("BCSS2", 2, 0.211781, 2.634),
        ("ME2", 2, 0.193183, 2.533),
        ("VV3", 3, 1.0 / 6.0, 6.000),
        ("BCSS3", 3, 0.118880, 4.662),
        ("ME3", 3, 0.108991, 4.584),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, k, b, expected) in cases {
        let got = stability_limit_dimensionless(k, b).unwrap_or(f64::NAN);
        let ok = within(got, expected, 1e-3);
        pass &= ok;
        parts.push(format!("{name}={got:.4}{}", if ok { "" } else { "(!)" }));
    }
    Outcome { pass, detail: parts.join(" ") }
}

fn ac2() -> Outcome {
    let t2 = tabulate_bopt(2, 2000).unwrap();
    let t3 = tabulate_bopt(3, 2000).unwrap();
    let b2 = lookup_bopt(&t2, 2.0).unwrap().b;
    let l3 = lookup_bopt(&t3, 3.0).unwrap();
    let a3 = l3.a.unwrap_or(f64::NAN);
    // h̄ → 0: root of the leading ρ₂ coefficient 4b² - 6b + 1 in (0, 1/2)
    let root = (6.0 - (36.0f64 - 16.0).sqrt()) / 8.0;
    let b0 = t2.b[0];
    let ok = [
        within(b2, 0.211781, 1e-4),
        within(l3.b, 0.118880, 1e-4),
        within(a3, 0.296195, 1e-4),
        within(b0, root, 1e-4),
    ];
    Outcome {
        pass: ok.iter().all(|&o| o),
        detail: format!(
            "b2(2)={b2:.6} b3(3)={:.6} a3(3)={a3:.6} b2(h={:.4})={b0:.6} vs root {root:.6}",
            l3.b, t2.h[0]
        ),
    }
}

/// `(B+C)²/(2(1-A²))` from the k-stage family map composed in exact rational
/// arithmetic, kick and drift weights built from `b` (hyperbola for k = 3).
fn rho_exact(k: usize, h: f64, b: f64) -> f64 {
    let q = |x: f64| BigRational::from_float(x).unwrap();
    let int = |n: i64| BigRational::from_integer(n.into());
    let (b, h) = (q(b), q(h));
    let half = int(1) / int(2);
    let (kicks, drifts) = match k {
        2 => (vec![b.clone(), int(1) - int(2) * &b, b.clone()], vec![half.clone(), half]),
        3 => {
            let a = (int(2) * &b - int(1)) / (int(12) * &b - int(4));
            let mid = &half - &b;
            (vec![b.clone(), mid.clone(), mid, b], vec![a.clone(), int(1) - int(2) * &a, a])
        }
        _ => unreachable!(),
    };
    // state (θ, p); kick p -= w h θ, drift θ += w h p
    let mut m = [[BigRational::one(), BigRational::zero()], [BigRational::zero(), BigRational::one()]];
    for (i, w) in kicks.iter().enumerate() {
        let c = w * &h;
        for col in 0..2 {
            m[1][col] = &m[1][col] - &c * &m[0][col];
        }
        if let Some(d) = drifts.get(i) {
            let c = d * &h;
            for col in 0..2 {
                m[0][col] = &m[0][col] + &c * &m[1][col];
            }
        }
    }
    let (a, bb, cc) = (&m[0][0], &m[0][1], &m[1][0]);
    let num = (bb + cc) * (bb + cc);
    let den = int(2) * (int(1) - a * a);
    (num / den).to_f64().unwrap()
}

fn ac3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_f64: f64 = 0.0;
    let mut where_ = String::new();
    for k in [2usize, 3] {
        let (b_lo, b_hi) = if k == 2 { (0.02, 0.48) } else { (0.02, 0.24) };
        for i in 0..100 {
            let b = b_lo + (b_hi - b_lo) * i as f64 / 99.0;
            let limit = stability_limit_dimensionless(k, b).unwrap();
            let scheme = SplittingScheme::from_family(k, b).unwrap();
            for j in 1..=100 {
                let h = limit * j as f64 / 101.0;
                let closed = rho(k, h, b).unwrap();
                let exact = rho_exact(k, h, b);
                let rel = (closed - exact).abs() / exact;
                if rel > worst {
                    worst = rel;
                    where_ = format!("k={k} b={b:.4} h={h:.4}");
                }
                let composed = rho_from_propagator(&compose_propagator(&scheme, h));
                worst_f64 = worst_f64.max((closed - composed).abs() / composed);
            }
        }
    }
    Outcome {
        pass: worst < 1e-10,
        detail: format!(
            "max rel err vs exact composed map {worst:.2e} at {where_}; vs f64 composed map {worst_f64:.2e}"
        ),
    }
}

fn ac4() -> Outcome {
    let vv = SplittingScheme::velocity_verlet();
    let mut worst: f64 = 0.0;
    for h in [0.1f64, 0.5, 1.0, 1.9] {
        let e = expected_energy_error_harmonic(&vv, h, 1).unwrap();
        worst = worst.max((e - h.powi(6) / 32.0).abs());
    }
    let alpha = 1.0 - 2.0 / PI * (1.0f64 / 64.0).sqrt().atan();
    Outcome {
        pass: worst <= 1e-12 && within(alpha, 0.9208, 1e-4),
        detail: format!("max |E - h^6/32| = {worst:.2e}, alpha = {alpha:.6}"),
    }
}

fn ac5() -> Outcome {
    let schemes = [
        SplittingScheme::velocity_verlet(),
        SplittingScheme::vv2(),
        SplittingScheme::bcss2(),
        SplittingScheme::me2(),
        SplittingScheme::vv3(),
        SplittingScheme::bcss3(),
        SplittingScheme::me3(),
    ];
    let model = GaussianModel::standard(1);
    let mut rng = ChaCha8Rng::seed_from_u64(20_251_016);
    let mut pass = true;
    let mut parts = Vec::new();
    for _ in 0..5 {
        let s = &schemes[rng.random_range(0..schemes.len())];
        let limit = stability_limit_dimensionless(s.stages(), s.b()).unwrap();
        let h = limit * rng.random_range(0.1..0.95);
        let l = rng.random_range(1..=10usize);
        let expected = expected_energy_error_harmonic(s, h, l).unwrap();
        let n = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let start = PhasePoint::new(vec![rng.sample(StandardNormal)], vec![rng.sample(StandardNormal)]);
            let leg = integrate_leg(s, &model, &start, h, l).unwrap();
            let dh = hamiltonian(&model, &leg.end) - hamiltonian(&model, &start);
            sum += dh;
            sum2 += dh * dh;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        let z = (mean - expected) / se;
        pass &= z.abs() < 3.0;
        parts.push(format!("{}(h={h:.3},L={l}) z={z:+.2}", s.label()));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn ac6() -> Outcome {
    // covariance [[1, 0.6], [0.6, 2]]
    let cov = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
    let prec = cov.clone().try_inverse().unwrap();
    let mean = [0.5, -1.0];
    let model = GaussianModel::new(Precision::Dense(prec), mean.to_vec()).unwrap();
    let cfg = HmcConfig { n_pr: 20_000, n_grid: 2000, ..HmcConfig::default() };
    let t2 = tabulate_bopt(2, cfg.n_grid).unwrap();
    let t3 = tabulate_bopt(3, cfg.n_grid).unwrap();
    let labels = ["VV", "VV2", "VV3", "BCSS2", "BCSS3", "ME2", "ME3", "AIA2", "sAIA2", "sAIA3"];
    let mut pass = true;
    let mut parts = Vec::new();
    for (li, label) in labels.iter().enumerate() {
        let integ = IntegratorKind::from_label(label).unwrap();
        let table = match integ.table_stages() {
            Some(2) => Some(&t2),
            Some(3) => Some(&t3),
            _ => None,
        };
        let mut chains = Vec::new();
        for c in 0..4u64 {
            let seed = 100 + c;
            let mut rng = chain_rng(seed, li as u64 * 10);
            let start: Vec<f64> = (0..2).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let state = prepare(&model, &cfg, &start, &mut rng).unwrap();
            let plan = ProductionPlan::at_fraction(integ.clone(), &state, &cfg, 0.5);
            let mut rng = chain_rng(seed, li as u64 * 10 + 1);
            chains.push(production(&model, &state, table, &plan, &cfg, &mut rng).unwrap());
        }
        let mut ok = true;
        let mut worst_z: f64 = 0.0;
        let mut worst_var: f64 = 0.0;
        for j in 0..2 {
            let n_tot: usize = chains.iter().map(|r| r.len()).sum();
            let m: f64 = chains.iter().map(|r| (0..r.len()).map(|i| r.sample(i)[j]).sum::<f64>()).sum::<f64>()
                / n_tot as f64;
            let var: f64 = chains
                .iter()
                .map(|r| (0..r.len()).map(|i| (r.sample(i)[j] - m).powi(2)).sum::<f64>())
                .sum::<f64>()
                / (n_tot as f64 - 1.0);
            // pooled MCSE of the mean of four equal-length chains
            let se = chains
                .iter()
                .map(|r| mcse(&r.samples, 2).unwrap()[j].powi(2))
                .sum::<f64>()
                .sqrt()
                / 4.0;
            let z = (m - mean[j]) / se;
            let rel_var = var / cov[(j, j)] - 1.0;
            worst_z = worst_z.max(z.abs());
            worst_var = worst_var.max(rel_var.abs());
            ok &= z.abs() < 3.0 && rel_var.abs() < 0.05;
        }
        let refs: Vec<&[f64]> = chains.iter().map(|r| r.samples.as_slice()).collect();
        let max_psrf = psrf(&refs, 2).unwrap().into_iter().fold(0.0, f64::max);
        ok &= max_psrf < 1.01;
        pass &= ok;
        parts.push(format!(
            "{label}{} |z|<={worst_z:.2} var{:+.1}% psrf={max_psrf:.4}",
            if ok { "" } else { "(!)" },
            100.0 * worst_var
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn ac7() -> Outcome {
    let cfg = HmcConfig::default();
    let mut floored = 0;
    let mut s_values = Vec::new();
    for seed in 0..10u64 {
        let model = make_gaussian_wishart(100, seed).unwrap();
        let mut rng = chain_rng(seed, 0);
        let start: Vec<f64> = (0..100).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let state = prepare(&model, &cfg, &start, &mut rng).unwrap();
        s_values.push(state.fitting.s);
        floored += (state.fitting.s == 1.0) as usize;
    }
    let opts = LoadOptions {
        label_position: LabelPosition::Last,
        standardize: true,
        intercept: true,
        ..LoadOptions::default()
    };
    let german = make_blr_model(load_dataset(data_path("german.csv"), &opts).unwrap()).unwrap();
    let gcfg = HmcConfig { report_spectrum: true, seed: 1, ..HmcConfig::default() };
    let mut rng = chain_rng(1, 0);
    let start: Vec<f64> = (0..german.dim()).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let g = prepare(&german, &gcfg, &start, &mut rng).unwrap();
    let s = g.fitting.s;
    let s_omega = g.s_omega.unwrap_or(f64::NAN);
    let ok_wishart = floored >= 8;
    let ok_s = (1.1..=1.6).contains(&s);
    let ok_sw = (1.2..=1.7).contains(&s_omega);
    Outcome {
        pass: ok_wishart && ok_s && ok_sw,
        detail: format!(
            "Wishart D=100: S=1 in {floored}/10 (max S {:.3}){}; German: S={s:.4}{} S_omega={s_omega:.4}{} (sigma {:.3}, omega_max {:.3})",
            s_values.iter().copied().fold(0.0, f64::max),
            if ok_wishart { "" } else { "(!)" },
            if ok_s { "" } else { "(!)" },
            if ok_sw { "" } else { "(!)" },
            g.spectrum.as_ref().map_or(f64::NAN, |f| f.sigma),
            g.freqs.omega_max,
        ),
    }
}

fn ac8() -> Outcome {
    let out = std::env::temp_dir().join(format!("splitting-hmc-ac8-{}", std::process::id()));
    let mut config = HmcConfig { seed: 8, n_pr: 2000, ..HmcConfig::default() };
    config.randomization.grid_points = 20;
    let spec = ExperimentSpec {
        benchmark: Benchmark::Blr(data_path("german.csv")),
        dim: 25,
        model_seed: 8,
        integrators: ["sAIA3", "VV3", "BCSS3", "ME3"]
            .iter()
            .map(|l| IntegratorKind::from_label(l).unwrap())
            .collect(),
        reps: 5,
        out_dir: out.clone(),
        config,
        traces: false,
        table_dir: out.clone(),
        label_position: LabelPosition::Last,
        init_sd: 2.0,
    };
    let summary = cmd_run(&spec).unwrap();
    let _ = std::fs::remove_dir_all(&out);
    let rows = &summary.rows;
    let saia: Vec<_> = rows.iter().filter(|r| r.integrator == "sAIA3").collect();
    // grid point i has centre i kΔt_SL / 20, so SL/2 is i = 10
    let mid = saia.iter().find(|r| r.grid == 10).unwrap();
    let max_psrf = saia.iter().map(|r| r.max_psrf).fold(0.0, f64::max);
    let mut pass = max_psrf < 1.01 && summary.failures.is_empty();
    let high: Vec<String> = saia
        .iter()
        .filter(|r| !(r.max_psrf < 1.01))
        .map(|r| format!("g{}={:.4}", r.grid, r.max_psrf))
        .collect();
    let mut parts = vec![format!(
        "sAIA3@SL/2 ESS_norm={:.2}±{:.2}, sweep max PSRF={max_psrf:.4} (>=1.01: {})",
        mid.min_ess_norm,
        mid.min_ess_norm_sd,
        if high.is_empty() { "none".to_string() } else { high.join(" ") }
    )];
    for other in ["VV3", "BCSS3", "ME3"] {
        let best = rows
            .iter()
            .filter(|r| r.integrator == other)
            .max_by(|a, b| a.min_ess_norm.total_cmp(&b.min_ess_norm))
            .unwrap();
        let pooled = ((mid.min_ess_norm_sd.powi(2) + best.min_ess_norm_sd.powi(2)) / 2.0).sqrt();
        let ok = mid.min_ess_norm >= best.min_ess_norm - pooled;
        pass &= ok;
        parts.push(format!(
            "{other} best g{}={:.2} (sd {pooled:.2}){}",
            best.grid,
            best.min_ess_norm,
            if ok { "" } else { "(!)" }
        ));
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn ac9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 100_000;
    let mut x = 0.0;
    let chain: Vec<f64> = (0..n)
        .map(|_| {
            x = 0.9 * x + rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect();
    let ess = ess_1d(&chain).unwrap().ess;
    let ratio = ess / (n as f64 / 19.0);
    let iid: Vec<f64> = (0..5000).map(|_| rng.sample(StandardNormal)).collect();
    let p = psrf(&[&iid, &iid, &iid, &iid], 1).unwrap()[0];
    let short = &chain[..5000];
    let m = mcse(short, 1).unwrap()[0];
    let e = ess_1d(short).unwrap().ess;
    let mom = ChainMoments::from_samples(short, 1).unwrap();
    let identity = (m * m * e - mom.vars[0]).abs();
    Outcome {
        pass: (ratio - 1.0).abs() < 0.2 && (p - 1.0).abs() < 1e-10 && identity < 1e-12,
        detail: format!(
            "AR(1) ESS/(N/19)={ratio:.3}; identical-chain PSRF-1={:.1e}; |MCSE^2 ESS - var|={identity:.1e}",
            p - 1.0
        ),
    }
}

fn main() {
    let only: Option<Vec<String>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').map(|t| t.trim().to_string()).collect());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(&str, u64, fn() -> Outcome); 9] = [
        ("AC1", 1, ac1),
        ("AC2", 120, ac2),
        ("AC3", 60, ac3),
        ("AC4", 60, ac4),
        ("AC5", 60, ac5),
        ("AC6", 300, ac6),
        ("AC7", 600, ac7),
        ("AC8", 1800, ac8),
        ("AC9", 60, ac9),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == name)) {
            continue;
        }
        let o = timed(Duration::from_secs(limit), f);
        failed += (!o.pass) as usize;
        println!("{name} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {failed} failing criteria");
    if strict && failed > 0 {
        std::process::exit(1);
    }
}
