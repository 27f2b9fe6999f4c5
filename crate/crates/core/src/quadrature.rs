//! Adaptive Gauss-Kronrod (7/15) quadrature with global bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut values = [(0.0, 0.0); 7];
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_sum = WGK[7] * fc.abs();
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let (lo, hi) = (f(centre - dx), f(centre + dx));
        values[i] = (lo, hi);
        kronrod += w * (lo + hi);
        abs_sum += w * (lo.abs() + hi.abs());
        if i % 2 == 1 {
            gauss += WG[i / 2] * (lo + hi);
        }
    }
    // QUADPACK error scaling: the raw Kronrod-Gauss gap grossly overstates
    // the Kronrod error for smooth integrands.
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (i, &(lo, hi)) in values.iter().enumerate() {
        asc += WGK[i] * ((lo - mean).abs() + (hi - mean).abs());
    }
    let (asc, abs_sum) = (asc * half.abs(), abs_sum * half.abs());
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Segment { a, b, value: kronrod * half, error }
}

/// Integrates `f` over `[a, b]` until the summed error estimate drops below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, intervals: 0 });
    }
    let first = gk15(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::from(vec![first]);
    while error > abs_tol.max(rel_tol * value.abs()) {
        if heap.len() >= max_intervals {
            return Err(Error::InvalidArgument(format!(
                "quadrature did not reach tolerance with {max_intervals} intervals (error {error:e})"
            )));
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval exhausted at machine resolution
            heap.push(Segment { error: 0.0, ..worst });
            error -= worst.error;
            continue;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if !value.is_finite() {
            return Err(Error::InvalidArgument("quadrature produced a non-finite value".into()));
        }
    }
    // Re-sum to remove drift from the incremental updates.
    let value = heap.iter().map(|s| s.value).sum();
    let error_estimate = heap.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error_estimate, intervals: heap.len() })
}

/// Integrates over `(0, 1)` a function whose magnitude behaves like
/// `x^left_exp` at 0 and `(1-x)^right_exp` at 1 (both exponents `> -1`,
/// logarithmic factors allowed). Power substitutions at each end remove the
/// algebraic singularity before the adaptive rule sees it. The integrand
/// receives both `x` and `1 - x`, each computed without cancellation.
pub fn integrate_unit<F: Fn(f64, f64) -> f64>(
    f: F,
    left_exp: f64,
    right_exp: f64,
    rel_tol: f64,
) -> Result<QuadResult> {
    if left_exp <= -1.0 || right_exp <= -1.0 {
        return Err(Error::InvalidArgument(format!(
            "non-integrable endpoint exponents ({left_exp}, {right_exp})"
        )));
    }
    let p = if left_exp < 1.0 { 2.0 / (1.0 + left_exp) } else { 1.0 };
    let q = if right_exp < 1.0 { 2.0 / (1.0 + right_exp) } else { 1.0 };
    let left = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let x = t.powf(p);
        let v = f(x, 1.0 - x) * p * t.powf(p - 1.0);
        if v.is_finite() { v } else { 0.0 }
    };
    let right = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let y = s.powf(q);
        let v = f(1.0 - y, y) * q * s.powf(q - 1.0);
        if v.is_finite() { v } else { 0.0 }
    };
    let tiny = 1e-300;
    let l = integrate(left, 0.0, 0.5f64.powf(1.0 / p), rel_tol, tiny, 20_000)?;
    let r = integrate(right, 0.0, 0.5f64.powf(1.0 / q), rel_tol, tiny, 20_000)?;
    Ok(QuadResult {
        value: l.value + r.value,
        error_estimate: l.error_estimate + r.error_estimate,
        intervals: l.intervals + r.intervals,
    })
}
