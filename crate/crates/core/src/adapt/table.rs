use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::harmonic::RhoCurve;
use crate::integrator::hyperbola_a;

pub const DEFAULT_N_GRID: usize = 2000;

const INNER_SCAN: usize = 512;
const OUTER_SCAN: usize = 64;
const B_TOL: f64 = 1e-7;
const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Kick coefficient of the k-stage Verlet scheme, the family member with the
/// longest stability interval.
pub fn b_vv(k: usize) -> f64 {
    match k {
        2 => 0.25,
        3 => 1.0 / 6.0,
        _ => f64::NAN,
    }
}

/// Small-step optimum: the root in `(0, b_vv)` of the `h⁴` coefficient of
/// the `ρ_k` numerator.
pub fn b_lower_bound(k: usize) -> f64 {
    match k {
        2 => (3.0 - 5f64.sqrt()) / 4.0,
        3 => {
            let f = |b: f64| -3.0 * b.powi(4) + 8.0 * b.powi(3) - 4.75 * b * b + b - 0.0625;
            let (mut lo, mut hi) = (0.05, 1.0 / 6.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
        _ => f64::NAN,
    }
}

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// `sup_{0 < h ≤ h_bar} ρ(h)`: dense scan, then golden-section refinement
/// around the best scan point.
fn max_rho_up_to(curve: &RhoCurve, h_bar: f64) -> f64 {
    if h_bar >= curve.stability_limit() {
        return f64::INFINITY;
    }
    let dh = h_bar / INNER_SCAN as f64;
    let mut best_j = 1;
    let mut best = f64::NEG_INFINITY;
    for j in 1..=INNER_SCAN {
        let v = curve.eval(j as f64 * dh);
        if v > best {
            best = v;
            best_j = j;
        }
    }
    let lo = (best_j - 1) as f64 * dh;
    let hi = ((best_j + 1) as f64 * dh).min(h_bar);
    let (_, neg) = golden_min(|h| -curve.eval(h), lo.max(1e-3 * dh), hi, 1e-10 * h_bar);
    best.max(-neg)
}

fn objective(k: usize, b: f64, h_bar: f64) -> f64 {
    match RhoCurve::new(k, b) {
        Ok(curve) => max_rho_up_to(&curve, h_bar),
        Err(_) => f64::INFINITY,
    }
}

/// `argmin_{b ∈ [lo, hi]} max_{0 < h ≤ h_bar} ρ_k(h, b)`, or `None` when every
/// candidate is unstable somewhere in `(0, h_bar]`.
pub fn minimax_b(k: usize, h_bar: f64, lo: f64, hi: f64) -> Option<f64> {
    let db = (hi - lo) / (OUTER_SCAN - 1) as f64;
    let values: Vec<f64> = (0..OUTER_SCAN)
        .map(|i| objective(k, lo + i as f64 * db, h_bar))
        .collect();
    let (best_i, best) = values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if !best.is_finite() {
        return None;
    }
    let a = lo + best_i.saturating_sub(1) as f64 * db;
    let b = (lo + (best_i + 1) as f64 * db).min(hi);
    let (x, fx) = golden_min(|b| objective(k, b, h_bar), a, b, B_TOL);
    // The golden section never evaluates the bracket ends; the VV end of the
    // family can be the only stable choice.
    if fx <= best {
        Some(x)
    } else {
        Some(lo + best_i as f64 * db)
    }
}

/// Tabulation grid on `(0, 2k]`: three quarters of the points uniform on
/// `(0, 1.8k]`, the rest geometrically clustered towards `2k`.
pub fn tabulation_grid(k: usize, n_grid: usize) -> Vec<f64> {
    let top = 2.0 * k as f64;
    let n_uniform = (3 * n_grid) / 4;
    let n_geo = n_grid - n_uniform;
    let mut grid: Vec<f64> = (1..=n_uniform)
        .map(|i| i as f64 * 0.9 * top / n_uniform as f64)
        .collect();
    for j in 1..n_geo {
        let t = j as f64 / (n_geo - 1) as f64;
        grid.push(top - 0.1 * top * 1e-5f64.powf(t));
    }
    grid.push(top);
    grid
}

/// Pre-tabulated map `h̄ → b_opt` for the k-stage family.
#[derive(Debug, Clone, PartialEq)]
pub struct BOptTable {
    pub k: usize,
    pub n_grid: usize,
    pub h: Vec<f64>,
    pub b: Vec<f64>,
}

/// Minimax coefficients on [`tabulation_grid`]. Grid points where no family
/// member is stable end the table.
pub fn tabulate_bopt(k: usize, n_grid: usize) -> Result<BOptTable> {
    if k != 2 && k != 3 {
        return Err(Error::InvalidArgument(format!("tabulation needs k = 2 or 3, got {k}")));
    }
    if n_grid < 10 {
        return Err(Error::InvalidArgument(format!("N_grid must be at least 10, got {n_grid}")));
    }
    let grid = tabulation_grid(k, n_grid);
    let lo = b_lower_bound(k);
    let hi = b_vv(k);
    let values: Vec<Option<f64>> = grid.par_iter().map(|&h| minimax_b(k, h, lo, hi)).collect();
    let n_ok = values.iter().take_while(|v| v.is_some()).count();
    if n_ok == 0 {
        return Err(Error::Numerical("no stable grid point in the table".into()));
    }
    Ok(BOptTable {
        k,
        n_grid,
        h: grid[..n_ok].to_vec(),
        b: values[..n_ok].iter().map(|v| v.unwrap()).collect(),
    })
}

/// Coefficients returned by [`lookup_bopt`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BOptLookup {
    pub b: f64,
    /// Hyperbola partner for k = 3.
    pub a: Option<f64>,
    /// `h̄` was beyond the table and the Verlet coefficient was used.
    pub clamped: bool,
}

/// Linear interpolation in the table; beyond its end the k-stage Verlet
/// coefficient is returned with `clamped` set.
pub fn lookup_bopt(table: &BOptTable, h_bar: f64) -> Result<BOptLookup> {
    if !(h_bar > 0.0) || h_bar.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "dimensionless step must be positive, got {h_bar}"
        )));
    }
    let with_a = |b: f64, clamped| BOptLookup {
        b,
        a: (table.k == 3).then(|| hyperbola_a(b)),
        clamped,
    };
    let last = table.h.len() - 1;
    if h_bar > table.h[last] {
        return Ok(with_a(b_vv(table.k), true));
    }
    let i = table.h.partition_point(|&x| x < h_bar);
    if i == 0 {
        return Ok(with_a(table.b[0], false));
    }
    if table.h[i] == h_bar {
        return Ok(with_a(table.b[i], false));
    }
    let t = (h_bar - table.h[i - 1]) / (table.h[i] - table.h[i - 1]);
    Ok(with_a(table.b[i - 1] + t * (table.b[i] - table.b[i - 1]), false))
}

impl BOptTable {
    pub fn max_h(&self) -> f64 {
        *self.h.last().unwrap()
    }

    /// Writes `h,b,a` rows with 9 decimals; `a` is empty for k = 2.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("h,b,a\n");
        for (&h, &b) in self.h.iter().zip(&self.b) {
            if self.k == 3 {
                out.push_str(&format!("{h:.9},{b:.9},{:.9}\n", hyperbola_a(b)));
            } else {
                out.push_str(&format!("{h:.9},{b:.9},\n"));
            }
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads a table written by [`BOptTable::write_csv`].
    pub fn read_csv(path: impl AsRef<Path>, k: usize, n_grid: usize) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::Parse { row: 0, column: 0, message: format!("{other:?}") },
        })?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse { row: 1, column: 0, message: e.to_string() })?;
        if headers.iter().collect::<Vec<_>>() != ["h", "b", "a"] {
            return Err(Error::Parse {
                row: 1,
                column: 1,
                message: "expected header h,b,a".into(),
            });
        }
        let (mut h, mut b) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| Error::Parse { row, column: 0, message: e.to_string() })?;
            let field = |c: usize| -> Result<f64> {
                rec.get(c).and_then(|s| s.parse().ok()).ok_or_else(|| Error::Parse {
                    row,
                    column: c + 1,
                    message: "expected a number".into(),
                })
            };
            h.push(field(0)?);
            b.push(field(1)?);
        }
        if h.is_empty() {
            return Err(Error::Parse { row: 2, column: 0, message: "empty table".into() });
        }
        Ok(BOptTable { k, n_grid, h, b })
    }

    /// Loads `path` if it holds a table for this `(k, n_grid)`, otherwise
    /// tabulates and writes it.
    pub fn load_or_tabulate(path: impl AsRef<Path>, k: usize, n_grid: usize) -> Result<Self> {
        let path = path.as_ref();
        if path.exists() {
            if let Ok(t) = Self::read_csv(path, k, n_grid) {
                let grid = tabulation_grid(k, n_grid);
                let matches = t.h.len() <= grid.len()
                    && t.h.iter().zip(&grid).all(|(a, b)| (a - b).abs() < 1e-8)
                    && (k == 3) == Self::has_a_column(path)?;
                if matches {
                    return Ok(t);
                }
            }
        }
        let t = tabulate_bopt(k, n_grid)?;
        t.write_csv(path)?;
        Ok(t)
    }

    fn has_a_column(path: &Path) -> Result<bool> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(text.lines().nth(1).is_some_and(|l| !l.ends_with(',')))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::rho;

    #[test]
    fn lower_bounds_are_leading_coefficient_roots() {
        let b2 = b_lower_bound(2);
        assert!((4.0 * b2 * b2 - 6.0 * b2 + 1.0).abs() < 1e-15);
        let b3 = b_lower_bound(3);
        assert!((b3 - 0.108991).abs() < 1e-6);
    }

    #[test]
    fn grid_shape() {
        let g = tabulation_grid(2, 100);
        assert_eq!(g.len(), 100);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*g.last().unwrap(), 4.0);
        assert!(g[0] > 0.0);
    }

    #[test]
    fn bcss_coefficients_are_minimax_points() {
        let b2 = minimax_b(2, 2.0, b_lower_bound(2), 0.25).unwrap();
        assert!((b2 - 0.211781).abs() < 1e-4, "{b2}");
        let b3 = minimax_b(3, 3.0, b_lower_bound(3), 1.0 / 6.0).unwrap();
        assert!((b3 - 0.118880).abs() < 1e-4, "{b3}");
    }

    #[test]
    fn only_verlet_is_stable_near_the_top() {
        assert_eq!(minimax_b(2, 3.5, b_lower_bound(2), 0.25), Some(0.25));
        assert_eq!(minimax_b(2, 4.0, b_lower_bound(2), 0.25), None);
    }

    #[test]
    fn minimax_beats_competitors() {
        let h_bar = 1.7;
        let b = minimax_b(2, h_bar, b_lower_bound(2), 0.25).unwrap();
        let curve = |b| RhoCurve::new(2, b).unwrap();
        let best = max_rho_up_to(&curve(b), h_bar);
        for i in 0..20 {
            let c = 0.191 + 0.003 * i as f64;
            assert!(best <= max_rho_up_to(&curve(c), h_bar) + 1e-8);
        }
        assert!(rho(2, h_bar, b).unwrap() <= best + 1e-15);
    }

    #[test]
    fn lookup_interpolates_and_clamps() {
        let t = BOptTable { k: 3, n_grid: 3, h: vec![1.0, 2.0, 3.0], b: vec![0.11, 0.12, 0.14] };
        let l = lookup_bopt(&t, 2.0).unwrap();
        assert_eq!(l.b, 0.12);
        assert!((l.a.unwrap() - hyperbola_a(0.12)).abs() < 1e-15);
        assert!((lookup_bopt(&t, 2.5).unwrap().b - 0.13).abs() < 1e-15);
        assert_eq!(lookup_bopt(&t, 0.5).unwrap().b, 0.11);
        let c = lookup_bopt(&t, 3.5).unwrap();
        assert!(c.clamped && c.b == 1.0 / 6.0);
        assert!(lookup_bopt(&t, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = tabulate_bopt(2, 40).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b2.csv");
        t.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("h,b,a\n"));
        let r = BOptTable::read_csv(&p, 2, 40).unwrap();
        assert_eq!(r.h.len(), t.h.len());
        for (x, y) in r.b.iter().zip(&t.b) {
            assert!((x - y).abs() < 1e-9);
        }
        let again = BOptTable::load_or_tabulate(&p, 2, 40).unwrap();
        assert_eq!(again.h, r.h);
    }
}
