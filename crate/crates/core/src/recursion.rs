//! Truncated linear system for the tail probabilities `a_n` and the
//! common-ancestor probability `h(x)`.
//!
//! Row `n ≥ 1` of the infinite system reads
//!
//! ```text
//! (λ_{n+1}/n + σ + θ) a_n = σ a_{n-1} + θν1 a_{n+1} + Σ_{c ≥ n+2} w_{n,c} a_{c-1},
//! w_{n,c} = C(c-1, c-n) λ_{c,c-n} / n,
//! ```
//!
//! with `a_0 = 1`. The jump to ∞ (weight `Λ({1})/n`) is already part of the
//! diagonal, since `Σ_c w_{n,c} + Λ({1})/n = λ_{n+1}/n`. Truncation keeps
//! `a_1 .. a_{N-1}` and sets `a_k = 0` for `k ≥ N`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Values in `[-ZERO_CLAMP, 0)` are float noise and become 0 silently.
pub const ZERO_CLAMP: f64 = 1e-12;
/// Deviations beyond this signal truncation failure.
pub const HARD_TOLERANCE: f64 = 1e-9;
/// Solutions at `N` and `2N` must agree this well on `n ≤ N/2`.
pub const STABILITY_TOL: f64 = 1e-8;
pub const MAX_AUTO_N: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DirectSolve,
    FixedPoint,
}

#[derive(Debug, Clone)]
pub struct Row {
    /// Coefficient of `a_n`.
    pub diag: f64,
    /// `w_{n,c}` for `c = n+2, n+3, …`, cut at the last column kept.
    pub weights: Vec<f64>,
    /// `Λ({1})/n`.
    pub w_inf: f64,
    /// `Σ_{c > c_max} w_{n,c}`.
    pub tail_mass: f64,
}

#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub n_max: usize,
    pub c_max: usize,
    pub sigma: f64,
    pub theta: f64,
    pub theta_nu1: f64,
    /// Rows for `n = 1 .. n_max-1`, stored at index `n - 1`.
    pub rows: Vec<Row>,
}

impl LinearSystem {
    pub fn row(&self, n: usize) -> &Row {
        &self.rows[n - 1]
    }

    /// Positive coefficient of `a_k` on the right-hand side of row `n`.
    pub fn off_diagonal(&self, n: usize, k: usize) -> f64 {
        let row = self.row(n);
        if k + 1 == n {
            self.sigma
        } else if k == n + 1 {
            self.theta_nu1 + row.weights.first().copied().unwrap_or(0.0)
        } else if k >= n + 2 {
            row.weights.get(k - n - 1).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }

    pub fn max_tail_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.tail_mass).fold(0.0, f64::max)
    }

    /// `diag·a_n - Σ_k off(n,k)·a_k` for `n = 1 .. n_max-1`, with `a` indexed from 0.
    pub fn residuals(&self, a: &[f64]) -> Vec<f64> {
        let get = |k: usize| a.get(k).copied().unwrap_or(0.0);
        (1..self.n_max)
            .map(|n| {
                let row = self.row(n);
                let mut rhs = self.sigma * get(n - 1) + self.theta_nu1 * get(n + 1);
                for (i, w) in row.weights.iter().enumerate() {
                    rhs += w * get(n + 1 + i);
                }
                row.diag * get(n) - rhs
            })
            .collect()
    }
}

/// Assemble the truncated system over `a_1 .. a_{n_max-1}`.
pub fn build_system(params: &ModelParams, n_max: usize, c_max: usize) -> Result<LinearSystem> {
    params.require_recurrent()?;
    if n_max < 2 {
        return Err(Error::InvalidArgument(format!("n_max must be at least 2, got {n_max}")));
    }
    if c_max < n_max {
        return Err(Error::Truncation(format!(
            "c_max = {c_max} is below n_max = {n_max}; merger columns inside the state window would be lost"
        )));
    }
    let lambda = &params.lambda;
    let pair = lambda.pair_rates(n_max);
    // totals[b] = λ_b = Σ_{k=2}^{b} (k-1) λ_{k,2}
    let mut totals = vec![0.0; n_max + 1];
    for b in 2..=n_max {
        totals[b] = totals[b - 1] + (b - 1) as f64 * pair[b];
    }
    let star = lambda.star_mass();
    let rows = (1..n_max)
        .into_par_iter()
        .map(|n| {
            let nf = n as f64;
            let up = lambda.dual_merger_rates(n + 1, c_max);
            let kept: f64 = up.iter().sum();
            let total = totals[n + 1];
            // columns a_{c-1} with c - 1 < n_max, i.e. c ≤ n_max
            let keep = n_max.saturating_sub(n + 1).min(up.len());
            let mut weights: Vec<f64> = up[..keep].iter().map(|v| v / nf).collect();
            while weights.last() == Some(&0.0) {
                weights.pop();
            }
            Row {
                diag: total / nf + params.sigma + params.theta,
                weights,
                w_inf: star / nf,
                tail_mass: ((total - star - kept) / nf).max(0.0),
            }
        })
        .collect();
    Ok(LinearSystem {
        n_max,
        c_max,
        sigma: params.sigma,
        theta: params.theta,
        theta_nu1: params.theta_nu1(),
        rows,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientVector {
    /// `a_0 ..= a_N`, with `a_N = 0` by truncation.
    pub values: Vec<f64>,
    pub n_max: usize,
    pub c_max: usize,
    pub method: Method,
    /// `sup_n |a_n^{(N)} - a_n^{(2N)}|` when a refinement was run.
    pub truncation_error_estimate: Option<f64>,
    pub max_tail_mass: f64,
    pub iterations: Option<usize>,
    /// Smallest ratio of elimination pivot to original diagonal.
    pub min_pivot_ratio: Option<f64>,
}

impl CoefficientVector {
    /// `a_n`, zero beyond the truncation.
    pub fn a(&self, n: usize) -> f64 {
        self.values.get(n).copied().unwrap_or(0.0)
    }

    /// CSV with header `n,a_n` for `n < n_max`; the boundary zero is omitted.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,a_n")?;
        for (n, v) in self.values.iter().take(self.n_max).enumerate() {
            writeln!(out, "{n},{v:.17e}")?;
        }
        Ok(())
    }
}

/// Apply the clamp policy and check range and monotonicity.
fn finalize(mut values: Vec<f64>) -> Result<Vec<f64>> {
    for (n, v) in values.iter_mut().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidCoefficients { n, message: format!("non-finite value {v}") });
        }
        if *v < 0.0 {
            if *v < -HARD_TOLERANCE {
                return Err(Error::InvalidCoefficients { n, message: format!("negative value {v:e}") });
            }
            if *v < -ZERO_CLAMP {
                log::warn!("a_{n} = {v:e} clamped to 0");
            }
            *v = 0.0;
        }
        if *v > 1.0 {
            if *v > 1.0 + HARD_TOLERANCE {
                return Err(Error::InvalidCoefficients { n, message: format!("value {v} above 1") });
            }
            *v = 1.0;
        }
    }
    for n in 1..values.len() {
        if values[n] > values[n - 1] + HARD_TOLERANCE {
            return Err(Error::InvalidCoefficients {
                n,
                message: format!(
                    "a_{n} = {:e} exceeds a_{} = {:e}; n_max or c_max too small",
                    values[n],
                    n - 1,
                    values[n - 1]
                ),
            });
        }
    }
    Ok(values)
}

/// Gaussian elimination exploiting the single subdiagonal, `O(N²)`.
///
/// The matrix is a row diagonally dominant M-matrix, so no pivoting is needed.
pub fn solve_direct(system: &LinearSystem) -> Result<CoefficientVector> {
    let m = system.n_max - 1;
    // upper[r] holds columns r..m of (eliminated) row r+1.
    let mut upper: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs = vec![0.0; m];
    let mut min_ratio = f64::INFINITY;
    let mut carry: Option<(Vec<f64>, f64)> = None;
    for r in 0..m {
        let n = r + 1;
        let row = system.row(n);
        let mut coeffs = vec![0.0; m - r];
        coeffs[0] = row.diag;
        for (k, slot) in coeffs.iter_mut().enumerate().skip(1) {
            *slot = -system.off_diagonal(n, n + k);
        }
        let mut b = if n == 1 { system.sigma } else { 0.0 };
        if let Some((prev, prev_b)) = carry.take() {
            // eliminate the subdiagonal entry -σ using the previous pivot row
            let factor = -system.sigma / prev[0];
            for (slot, p) in coeffs.iter_mut().zip(prev.iter().skip(1)) {
                *slot -= factor * p;
            }
            b -= factor * prev_b;
        }
        let ratio = coeffs[0] / row.diag;
        min_ratio = min_ratio.min(ratio);
        if !(coeffs[0].is_finite() && ratio > 1e-14) {
            return Err(Error::Singular { row: n, condition_estimate: ratio });
        }
        rhs[r] = b;
        carry = Some((coeffs.clone(), b));
        upper.push(coeffs);
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let row = &upper[r];
        let mut acc = rhs[r];
        for (k, c) in row.iter().enumerate().skip(1) {
            acc -= c * x[r + k];
        }
        x[r] = acc / row[0];
    }
    let mut values = Vec::with_capacity(m + 2);
    values.push(1.0);
    values.extend(x);
    values.push(0.0);
    Ok(CoefficientVector {
        values: finalize(values)?,
        n_max: system.n_max,
        c_max: system.c_max,
        method: Method::DirectSolve,
        truncation_error_estimate: None,
        max_tail_mass: system.max_tail_mass(),
        iterations: None,
        min_pivot_ratio: Some(min_ratio),
    })
}

/// Jacobi iteration from `a ≡ 0` (with `a_0 = 1`). The iterates increase
/// monotonically to the solution, so the change `δ_k` and the observed
/// contraction `ρ_k = δ_k / δ_{k-1}` bound the remaining error by
/// `δ_k ρ_k / (1 - ρ_k)`; iteration stops once `δ_k / (1 - ρ_k) < tol`.
pub fn solve_fixed_point(system: &LinearSystem, tol: f64, max_iter: usize) -> Result<CoefficientVector> {
    let n_max = system.n_max;
    let mut a = vec![0.0; n_max + 1];
    a[0] = 1.0;
    let mut next = a.clone();
    let mut prev_delta = f64::INFINITY;
    for iter in 1..=max_iter {
        let mut delta: f64 = 0.0;
        for n in 1..n_max {
            let row = system.row(n);
            let mut rhs = system.sigma * a[n - 1] + system.theta_nu1 * a[n + 1];
            for (i, w) in row.weights.iter().enumerate() {
                rhs += w * a[n + 1 + i];
            }
            let v = rhs / row.diag;
            delta = delta.max((v - a[n]).abs());
            next[n] = v;
        }
        std::mem::swap(&mut a, &mut next);
        let rho = delta / prev_delta;
        let bound = if delta == 0.0 {
            0.0
        } else if rho < 1.0 {
            delta / (1.0 - rho)
        } else {
            f64::INFINITY
        };
        if bound < tol {
            return Ok(CoefficientVector {
                values: finalize(a)?,
                n_max,
                c_max: system.c_max,
                method: Method::FixedPoint,
                truncation_error_estimate: None,
                max_tail_mass: system.max_tail_mass(),
                iterations: Some(iter),
                min_pivot_ratio: None,
            });
        }
        prev_delta = delta;
        if iter == max_iter {
            return Err(Error::NotConverged { iterations: iter, last_change: delta });
        }
    }
    Err(Error::NotConverged { iterations: max_iter, last_change: prev_delta })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverOptions {
    pub n_max: usize,
    /// Defaults to `n_max`; kept in the same ratio when refining.
    pub c_max: Option<usize>,
    pub method: Method,
    pub tol: f64,
    pub max_iter: usize,
    /// Double `N` until the stability check passes.
    pub refine: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { n_max: 64, c_max: None, method: Method::DirectSolve, tol: 1e-12, max_iter: 1_000_000, refine: true }
    }
}

fn solve_once(params: &ModelParams, n_max: usize, c_max: usize, opts: &SolverOptions) -> Result<CoefficientVector> {
    let system = build_system(params, n_max, c_max)?;
    match opts.method {
        Method::DirectSolve => solve_direct(&system),
        Method::FixedPoint => solve_fixed_point(&system, opts.tol, opts.max_iter),
    }
}

/// Solve at `n_max`, and with `refine` keep doubling until the solutions at
/// `N` and `2N` agree within [`STABILITY_TOL`] on `n ≤ N/2`. The finer
/// solution is returned together with the observed difference.
pub fn solve(params: &ModelParams, opts: &SolverOptions) -> Result<CoefficientVector> {
    let c_ratio = opts.c_max.map_or(1.0, |c| c as f64 / opts.n_max as f64);
    let c_for = |n: usize| ((n as f64 * c_ratio).ceil() as usize).max(n);
    let mut n = opts.n_max;
    let mut coarse = solve_once(params, n, c_for(n), opts)?;
    if !opts.refine {
        return Ok(coarse);
    }
    loop {
        let fine = solve_once(params, 2 * n, c_for(2 * n), opts)?;
        let diff = |upto: usize| (0..=upto).map(|k| (coarse.a(k) - fine.a(k)).abs()).fold(0.0, f64::max);
        let stable = diff(n / 2);
        if stable <= STABILITY_TOL {
            return Ok(CoefficientVector { truncation_error_estimate: Some(diff(n)), ..fine });
        }
        if 2 * n >= MAX_AUTO_N {
            return Err(Error::Truncation(format!(
                "solutions at N = {n} and N = {} still differ by {stable:e} on n <= {}",
                2 * n,
                n / 2
            )));
        }
        log::debug!("refining truncation from {n} to {}: difference {stable:e}", 2 * n);
        n *= 2;
        coarse = fine;
    }
}

fn check_x(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("x must lie in [0, 1], got {x}")))
    }
}

/// `h(x) = Σ_n (a_n - a_{n+1}) (1 - (1-x)^{n+1})`, clamped to `[x, 1]`.
pub fn eval_h(coeffs: &CoefficientVector, x: f64) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_rest = (-x).ln_1p();
    let a = &coeffs.values;
    let mut h = (a[0] - coeffs.a(1)) * x;
    for n in 1..a.len() {
        let gap = a[n] - coeffs.a(n + 1);
        if gap != 0.0 {
            h += gap * -(((n + 1) as f64) * ln_rest).exp_m1();
        }
    }
    Ok(h.clamp(x, 1.0))
}

/// The plain series `Σ_n x (1-x)^n a_n`, for cross-checking.
pub fn eval_h_series(coeffs: &CoefficientVector, x: f64) -> Result<f64> {
    check_x(x)?;
    let mut h = 0.0;
    let mut weight = x;
    for &a in &coeffs.values {
        h += weight * a;
        weight *= 1.0 - x;
    }
    Ok(h)
}

#[derive(Debug, Clone, Serialize)]
pub struct HCurve {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub form: &'static str,
}

impl HCurve {
    pub fn evaluate(coeffs: &CoefficientVector, grid: &[f64]) -> Result<Self> {
        let h = grid.iter().map(|&x| eval_h(coeffs, x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { x: grid.to_vec(), h, form: "abel" })
    }

    /// Violations of `h(0)=0`, `h(1)=1`, `x ≤ h ≤ 1` and monotonicity.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, (&x, &h)) in self.x.iter().zip(&self.h).enumerate() {
            if x == 0.0 && h != 0.0 {
                out.push(format!("h(0) = {h}"));
            }
            if x == 1.0 && h != 1.0 {
                out.push(format!("h(1) = {h}"));
            }
            if h < x || h > 1.0 {
                out.push(format!("h({x}) = {h} outside [x, 1]"));
            }
            if i > 0 && self.x[i - 1] <= x && self.h[i - 1] > h {
                out.push(format!("h decreases between x = {} and x = {x}", self.x[i - 1]));
            }
        }
        out
    }

    /// CSV with header `x,h`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,h")?;
        for (x, h) in self.x.iter().zip(&self.h) {
            writeln!(out, "{x},{h:.17e}")?;
        }
        Ok(())
    }
}

/// Uniform grid of `points` values on `[0, 1]`.
pub fn unit_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::{parse_lambda, LambdaMeasure};

    fn params(spec: &str, sigma: f64, theta: f64, nu0: f64) -> ModelParams {
        ModelParams::new(parse_lambda(spec).unwrap(), sigma, theta, nu0).unwrap()
    }

    #[test]
    fn kingman_rows_are_fearnhead_exactly() {
        let p = params("kingman", 0.7, 1.3, 0.4);
        let sys = build_system(&p, 60, 60).unwrap();
        for n in 1..59 {
            let half = (n + 1) as f64 / 2.0;
            assert_eq!(sys.row(n).diag, half + 0.7 + 1.3);
            assert_eq!(sys.off_diagonal(n, n + 1), half + p.theta_nu1());
            assert_eq!(sys.off_diagonal(n, n - 1), 0.7);
            for k in n + 2..60 {
                assert_eq!(sys.off_diagonal(n, k), 0.0);
            }
        }
    }

    #[test]
    fn bolthausen_sznitman_weights() {
        let p = params("uniform", 1.0, 0.0, 0.5);
        let sys = build_system(&p, 300, 301).unwrap();
        for n in 1..299 {
            for (i, w) in sys.row(n).weights.iter().enumerate() {
                let c = n + 2 + i;
                let exact = 1.0 / ((c - n - 1) as f64 * (c - n) as f64);
                assert!((w - exact).abs() < 1e-10, "n={n} c={c}");
            }
        }
    }

    #[test]
    fn star_rows_have_only_the_infinity_term() {
        let p = params("star", 1.0, 0.5, 0.5);
        let sys = build_system(&p, 20, 20).unwrap();
        for n in 1..19 {
            let row = sys.row(n);
            assert!(row.weights.is_empty());
            assert!((row.diag - (1.0 / n as f64 + 1.0 + 0.5)).abs() < 1e-15);
            assert_eq!(row.w_inf, 1.0 / n as f64);
        }
    }

    #[test]
    fn neutral_solution_is_trivial() {
        for spec in ["kingman", "uniform", "point:0.5", "star"] {
            let p = params(spec, 0.0, 1.5, 0.3);
            let sys = build_system(&p, 50, 50).unwrap();
            let direct = solve_direct(&sys).unwrap();
            assert_eq!(direct.values[0], 1.0);
            assert!(direct.values[1..].iter().all(|&v| v == 0.0));
            let fp = solve_fixed_point(&sys, 1e-12, 10).unwrap();
            assert_eq!(fp.iterations, Some(1));
            for x in unit_grid(11) {
                assert_eq!(eval_h(&direct, x).unwrap(), x);
            }
        }
    }

    #[test]
    fn star_closed_form() {
        let p = params("point:1", 1.0, 0.0, 0.5);
        let sys = build_system(&p, 600, 600).unwrap();
        let direct = solve_direct(&sys).unwrap();
        for n in 0..=500 {
            assert!((direct.a(n) - 1.0 / (n + 1) as f64).abs() < 1e-10, "n={n}");
        }
        assert!((eval_h(&direct, 0.5).unwrap() - 2f64.ln()).abs() < 1e-9);
        let fp = solve_fixed_point(&sys, 1e-12, 1_000_000).unwrap();
        for n in 0..=500 {
            assert!((fp.a(n) - direct.a(n)).abs() < 1e-11, "n={n}");
        }
    }

    #[test]
    fn direct_and_fixed_point_agree() {
        for (spec, sigma, theta, nu0) in [
            ("kingman", 1.0, 0.0, 0.5),
            ("kingman", 1.0, 1.0, 0.5),
            ("uniform", 1.0, 0.0, 0.5),
            ("point:0.5", 1.0, 0.0, 0.5),
            ("0.5*kingman + 0.5*beta:2,2", 2.0, 0.5, 0.2),
        ] {
            let p = params(spec, sigma, theta, nu0);
            let sys = build_system(&p, 200, 200).unwrap();
            let d = solve_direct(&sys).unwrap();
            let f = solve_fixed_point(&sys, 1e-12, 1_000_000).unwrap();
            let worst = (0..200).map(|n| (d.a(n) - f.a(n)).abs()).fold(0.0, f64::max);
            assert!(worst <= 1e-11, "{spec}: {worst}");
            let res = sys.residuals(&d.values).into_iter().map(f64::abs).fold(0.0, f64::max);
            assert!(res < 1e-12, "{spec}: residual {res}");
        }
    }

    #[test]
    fn kingman_reference_values() {
        // independent oracle: Fearnhead's recursion solved backwards from a
        // far truncation with exact rational-free arithmetic in f64
        let p = params("kingman", 1.0, 0.0, 0.5);
        let c = solve(&p, &SolverOptions::default()).unwrap();
        let n_far = 120;
        let mut b = vec![0.0; n_far + 2];
        // ratios r_n = a_n / a_{n-1}, from r_{n_far} ≈ 0 downward
        for n in (1..=n_far).rev() {
            let half = (n + 1) as f64 / 2.0;
            b[n] = 1.0 / (half + 1.0 - half * b[n + 1]);
        }
        let mut a = 1.0;
        for n in 1..30 {
            a *= b[n];
            assert!((c.a(n) - a).abs() <= 1e-12 * a.max(1e-300) + 1e-15, "n={n}: {} vs {a}", c.a(n));
        }
    }

    #[test]
    fn refinement_reports_stability() {
        let p = params("point:0.5", 1.0, 0.0, 0.5);
        let c = solve(&p, &SolverOptions::default()).unwrap();
        assert!(c.truncation_error_estimate.unwrap() <= 1e-7);
        assert!(c.n_max >= 128);
        assert!((1..c.n_max).all(|n| c.a(n) > 0.0));
    }

    #[test]
    fn abel_and_series_forms_agree() {
        for spec in ["kingman", "uniform", "point:0.5", "star"] {
            let p = params(spec, 1.0, 0.5, 0.5);
            let c = solve(&p, &SolverOptions::default()).unwrap();
            for x in unit_grid(101) {
                let abel = eval_h(&c, x).unwrap();
                let series = eval_h_series(&c, x).unwrap();
                assert!((abel - series).abs() < 1e-12, "{spec} x={x}: {abel} vs {series}");
            }
            let curve = HCurve::evaluate(&c, &unit_grid(101)).unwrap();
            assert!(curve.violations().is_empty(), "{:?}", curve.violations());
            for (&x, &h) in curve.x.iter().zip(&curve.h) {
                if x > 0.0 && x < 1.0 {
                    assert!(h > x);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params("kingman", 1.0, 0.0, 0.5);
        assert!(matches!(build_system(&p, 50, 40), Err(Error::Truncation(_))));
        assert!(build_system(&p, 1, 10).is_err());
        let bad = ModelParams::unchecked(LambdaMeasure::point(0.5).unwrap(), 5.0, 0.0, 0.5).unwrap();
        let strict = ModelParams { unchecked: false, ..bad };
        assert!(matches!(build_system(&strict, 50, 50), Err(Error::AssumptionViolated { .. })));
        let c = solve(&p, &SolverOptions::default()).unwrap();
        assert!(eval_h(&c, 1.5).is_err());
        assert_eq!(eval_h(&c, 0.0).unwrap(), 0.0);
        assert_eq!(eval_h(&c, 1.0).unwrap(), 1.0);
    }
}
