//! The reproduction measure Λ and the merger rates it induces.
//!
//! Λ is a probability measure on `[0, 1]` built from an atom at 0 (Kingman
//! part), an atom at 1 (star-shaped part) and a finite mixture of Beta
//! densities and point atoms on `(0, 1)`. Every rate used elsewhere in the
//! crate is derived from
//!
//! ```text
//! λ_{b,j} = ∫ z^{j-2} (1-z)^{b-j} Λ(dz),   2 ≤ j ≤ b,
//! ```
//!
//! with the atom at 0 contributing only to `j = 2` and the atom at 1 only to
//! `j = b`. Beta components are evaluated through integer-shifted Beta
//! function ratios, which reduce to finite products.

mod parse;
mod table;

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quadrature::integrate_unit;

pub use parse::parse_lambda;
pub use table::RateTable;

/// Relative tolerance for any quadrature behind a rate or σ*.
pub const QUAD_REL_TOL: f64 = 1e-12;

/// Tolerance on `Σ masses = 1` before the parser rescales.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Component {
    /// Beta(a, b) density on (0, 1).
    Beta { a: f64, b: f64 },
    /// Point mass at `z ∈ (0, 1)`.
    Point { z: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedComponent {
    pub weight: f64,
    pub component: Component,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaMeasure {
    kingman_mass: f64,
    star_mass: f64,
    components: Vec<WeightedComponent>,
}

pub(crate) fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub(crate) fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `ln(1 - x)` given both `x` and `y = 1 - x`, whichever is more accurate.
fn ln_complement(x: f64, y: f64) -> f64 {
    if x < 0.5 {
        (-x).ln_1p()
    } else {
        y.ln()
    }
}

/// `B(a + m, b + k) / B(a, b)` for integer shifts, as a finite product.
fn beta_shift_ratio(a: f64, b: f64, m: usize, k: usize) -> f64 {
    let mut acc = 1.0;
    for i in 0..m {
        acc *= (a + i as f64) / (a + b + i as f64);
    }
    for i in 0..k {
        acc *= (b + i as f64) / (a + b + (m + i) as f64);
    }
    acc
}

impl Component {
    fn validate(&self) -> Result<()> {
        match *self {
            Component::Beta { a, b } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "Beta shapes must be positive and finite, got ({a}, {b})"
                    )));
                }
            }
            Component::Point { z } => {
                if !(z > 0.0 && z < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "point atom must lie in (0, 1), got {z}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `∫ z^{j-2} (1-z)^{b-j} dν` for this normalised component.
    fn rate(&self, b: usize, j: usize) -> f64 {
        match *self {
            Component::Beta { a, b: beta } => beta_shift_ratio(a, beta, j - 2, b - j),
            Component::Point { z } => z.powi((j - 2) as i32) * (1.0 - z).powi((b - j) as i32),
        }
    }

    fn ln_rate(&self, b: usize, j: usize) -> f64 {
        match *self {
            Component::Beta { a, b: beta } => {
                let m = (j - 2) as f64;
                let k = (b - j) as f64;
                ln_gamma(a + m) - ln_gamma(a) + ln_gamma(beta + k) - ln_gamma(beta)
                    + ln_gamma(a + beta)
                    - ln_gamma(a + beta + m + k)
            }
            Component::Point { z } => (j - 2) as f64 * z.ln() + (b - j) as f64 * (-z).ln_1p(),
        }
    }

    /// σ* contribution `-∫ log(1-x) x^{-2} ν(dx)`.
    fn sigma_star(&self) -> f64 {
        match *self {
            Component::Point { z } => -(-z).ln_1p() / (z * z),
            Component::Beta { a, b } => {
                if a <= 1.0 {
                    return f64::INFINITY;
                }
                let ln_norm = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
                let integrand = |x: f64, y: f64| {
                    if x <= 0.0 || y <= 0.0 {
                        return 0.0;
                    }
                    let ln_y = ln_complement(x, y);
                    -ln_y * ((a - 3.0) * x.ln() + (b - 1.0) * ln_y - ln_norm).exp()
                };
                match integrate_unit(integrand, a - 2.0, b - 1.0, QUAD_REL_TOL) {
                    Ok(r) => r.value,
                    Err(e) => {
                        log::warn!("sigma* quadrature for Beta({a}, {b}) failed: {e}");
                        f64::NAN
                    }
                }
            }
        }
    }
}

impl LambdaMeasure {
    pub fn new(kingman_mass: f64, star_mass: f64, components: Vec<WeightedComponent>) -> Result<Self> {
        let measure = Self { kingman_mass, star_mass, components };
        measure.validate()?;
        Ok(measure)
    }

    pub fn kingman() -> Self {
        Self { kingman_mass: 1.0, star_mass: 0.0, components: Vec::new() }
    }

    pub fn star() -> Self {
        Self { kingman_mass: 0.0, star_mass: 1.0, components: Vec::new() }
    }

    /// Lebesgue measure on `[0, 1]`, the Bolthausen-Sznitman case.
    pub fn uniform() -> Self {
        Self::beta(1.0, 1.0).expect("valid shapes")
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(0.0, 0.0, vec![WeightedComponent { weight: 1.0, component: Component::Beta { a, b } }])
    }

    /// Point mass at `z ∈ [0, 1]`; the endpoints map to the Kingman and star atoms.
    pub fn point(z: f64) -> Result<Self> {
        if z == 0.0 {
            Ok(Self::kingman())
        } else if z == 1.0 {
            Ok(Self::star())
        } else {
            Self::new(0.0, 0.0, vec![WeightedComponent { weight: 1.0, component: Component::Point { z } }])
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.kingman_mass >= 0.0 && self.star_mass >= 0.0) {
            return Err(Error::InvalidParameter("atom masses must be nonnegative".into()));
        }
        for c in &self.components {
            if !(c.weight >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative weight {}", c.weight)));
            }
            c.component.validate()?;
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("Λ must be a probability measure, total mass {total}")));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.kingman_mass + self.star_mass + self.components.iter().map(|c| c.weight).sum::<f64>()
    }

    /// `Λ({0})`.
    pub fn kingman_mass(&self) -> f64 {
        self.kingman_mass
    }

    /// `Λ({1})`.
    pub fn star_mass(&self) -> f64 {
        self.star_mass
    }

    pub fn components(&self) -> &[WeightedComponent] {
        &self.components
    }

    /// True when Λ puts all its mass on the atom at 0.
    pub fn is_pure_kingman(&self) -> bool {
        self.kingman_mass == 1.0 && self.star_mass == 0.0 && self.components.iter().all(|c| c.weight == 0.0)
    }

    /// Rate `λ_{b,j}` at which a given `j`-tuple out of `b` blocks merges.
    pub fn lambda_rate(&self, b: usize, j: usize) -> Result<f64> {
        if j < 2 || j > b {
            return Err(Error::InvalidArgument(format!("lambda_rate needs 2 <= j <= b, got b={b}, j={j}")));
        }
        Ok(self.rate_unchecked(b, j))
    }

    fn rate_unchecked(&self, b: usize, j: usize) -> f64 {
        let mut rate = 0.0;
        if j == 2 {
            rate += self.kingman_mass;
        }
        if j == b {
            rate += self.star_mass;
        }
        for c in &self.components {
            if c.weight > 0.0 {
                rate += c.weight * c.component.rate(b, j);
            }
        }
        rate
    }

    /// Per-size merger rates out of `b` blocks: entry `j` holds
    /// `C(b,j) λ_{b,j}` for `2 ≤ j ≤ b` (entries 0 and 1 are zero).
    pub fn merger_size_rates(&self, b: usize) -> Vec<f64> {
        let mut out = vec![0.0; b + 1];
        if b < 2 {
            return out;
        }
        out[2] += choose(b as u64, 2) * self.kingman_mass;
        out[b] += self.star_mass;
        for c in self.components.iter().filter(|c| c.weight > 0.0) {
            for (j, slot) in out.iter_mut().enumerate().skip(2) {
                let ln = ln_choose(b as u64, j as u64) + c.component.ln_rate(b, j);
                *slot += c.weight * ln.exp();
            }
        }
        out
    }

    /// `λ_{k,2} = ∫ (1-z)^{k-2} Λ(dz)` for `k = 0..=b_max` (entries below 2 are zero).
    pub fn pair_rates(&self, b_max: usize) -> Vec<f64> {
        let mut out = vec![0.0; b_max + 1];
        if b_max < 2 {
            return out;
        }
        for k in 2..=b_max {
            out[k] += self.kingman_mass;
        }
        out[2] += self.star_mass;
        for c in self.components.iter().filter(|c| c.weight > 0.0) {
            match c.component {
                Component::Point { z } => {
                    let mut v = c.weight;
                    for slot in out.iter_mut().skip(2) {
                        *slot += v;
                        v *= 1.0 - z;
                    }
                }
                Component::Beta { a, b } => {
                    let mut v = c.weight;
                    for (k, slot) in out.iter_mut().enumerate().skip(2) {
                        *slot += v;
                        v *= (b + (k - 2) as f64) / (a + b + (k - 2) as f64);
                    }
                }
            }
        }
        out
    }

    /// Total merger rate out of `b` blocks, `Σ_j C(b,j) λ_{b,j}`.
    ///
    /// Evaluated as `Σ_{k=2}^{b} (k-1) λ_{k,2}`: the events that affect at
    /// least two of the first `b` levels, split by their second-smallest
    /// level `k`.
    pub fn total_merger_rate(&self, b: usize) -> f64 {
        if b < 2 {
            return 0.0;
        }
        self.pair_rates(b)
            .iter()
            .enumerate()
            .skip(2)
            .map(|(k, r)| (k - 1) as f64 * r)
            .sum()
    }

    /// Upward merger jump rates of the dual process from state `d`:
    /// entry `c - d - 1` holds `C(c-1, c-d+1) λ_{c, c-d+1}` for
    /// `c = d+1 ..= c_hi`. The jump to ∞ caused by the atom at 1 is not
    /// included.
    pub fn dual_merger_rates(&self, d: usize, c_hi: usize) -> Vec<f64> {
        if d < 2 || c_hi <= d {
            return Vec::new();
        }
        // n = d - 1 lines keep their identity; j = c - n is the merger size.
        let n = d - 1;
        let len = c_hi - d;
        let mut out = vec![0.0; len];
        out[0] += self.kingman_mass * choose(d as u64, 2);
        for wc in self.components.iter().filter(|c| c.weight > 0.0) {
            match wc.component {
                Component::Beta { a, b } => {
                    // c = n + 2: C(n+1, 2) B(a, b+n)/B(a, b)
                    let mut v = wc.weight * choose(d as u64, 2) * beta_shift_ratio(a, b, 0, n);
                    for (offset, slot) in out.iter_mut().enumerate() {
                        let c = d + 1 + offset;
                        *slot += v;
                        v *= c as f64 / (c + 1 - n) as f64 * (a + (c - n - 2) as f64) / (a + b + (c - 2) as f64);
                        if v == 0.0 {
                            break;
                        }
                    }
                }
                Component::Point { z } => {
                    let (lz, l1z) = (z.ln(), (-z).ln_1p());
                    for (offset, slot) in out.iter_mut().enumerate() {
                        let c = d + 1 + offset;
                        let j = c - n;
                        let ln = ln_choose(c as u64 - 1, j as u64) + (j - 2) as f64 * lz + n as f64 * l1z;
                        *slot += wc.weight * ln.exp();
                    }
                }
            }
        }
        out
    }

    /// `σ* = -∫ log(1-x) x^{-2} Λ(dx)`; infinite whenever an atom at 0 or 1,
    /// or a Beta component with first shape `≤ 1`, is present.
    pub fn sigma_star(&self) -> f64 {
        if self.kingman_mass > 0.0 || self.star_mass > 0.0 {
            return f64::INFINITY;
        }
        self.components
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| c.weight * c.component.sigma_star())
            .sum()
    }

    /// Quadrature route to `λ_{b,j}`, independent of the closed forms.
    pub fn lambda_rate_by_quadrature(&self, b: usize, j: usize) -> Result<f64> {
        if j < 2 || j > b {
            return Err(Error::InvalidArgument(format!("need 2 <= j <= b, got b={b}, j={j}")));
        }
        let mut rate = 0.0;
        if j == 2 {
            rate += self.kingman_mass;
        }
        if j == b {
            rate += self.star_mass;
        }
        for wc in self.components.iter().filter(|c| c.weight > 0.0) {
            match wc.component {
                Component::Point { .. } => rate += wc.weight * wc.component.rate(b, j),
                Component::Beta { a, b: beta } => {
                    let ln_norm = ln_gamma(a) + ln_gamma(beta) - ln_gamma(a + beta);
                    let (p, q) = ((j - 2) as f64 + a - 1.0, (b - j) as f64 + beta - 1.0);
                    let f = |x: f64, y: f64| (p * x.ln() + q * ln_complement(x, y) - ln_norm).exp();
                    rate += wc.weight * integrate_unit(f, p, q, QUAD_REL_TOL)?.value;
                }
            }
        }
        Ok(rate)
    }
}

impl fmt::Display for LambdaMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(f64, String)> = Vec::new();
        if self.kingman_mass > 0.0 {
            terms.push((self.kingman_mass, "kingman".into()));
        }
        if self.star_mass > 0.0 {
            terms.push((self.star_mass, "star".into()));
        }
        for c in self.components.iter().filter(|c| c.weight > 0.0) {
            let name = match c.component {
                Component::Beta { a, b } if a == 1.0 && b == 1.0 => "uniform".to_string(),
                Component::Beta { a, b } => format!("beta:{a},{b}"),
                Component::Point { z } => format!("point:{z}"),
            };
            terms.push((c.weight, name));
        }
        if terms.len() == 1 && terms[0].0 == 1.0 {
            return write!(f, "{}", terms[0].1);
        }
        let rendered: Vec<String> = terms.iter().map(|(w, t)| format!("{w}*{t}")).collect();
        write!(f, "{}", rendered.join(" + "))
    }
}
