//! Generator rows of the chains K, L and D as explicit jump tables.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Target {
    State(usize),
    Infinity,
    /// Lumped mass of D's merger jumps beyond the truncation.
    Censor,
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpDistribution {
    pub from: usize,
    /// Jumps ordered by target, rates combined per target, zero rates dropped.
    pub jumps: Vec<(Target, f64)>,
    pub total: f64,
}

impl JumpDistribution {
    fn from_map(from: usize, map: BTreeMap<Target, f64>) -> Self {
        let jumps: Vec<(Target, f64)> = map.into_iter().filter(|&(_, r)| r > 0.0).collect();
        let total = jumps.iter().map(|&(_, r)| r).sum();
        Self { from, jumps, total }
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn rate_to(&self, target: Target) -> f64 {
        self.jumps.iter().find(|&&(t, _)| t == target).map_or(0.0, |&(_, r)| r)
    }

    /// Categorical draw proportional to the rates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Target {
        let mut u = rng.random::<f64>() * self.total;
        for &(t, r) in &self.jumps {
            if u < r {
                return t;
            }
            u -= r;
        }
        self.jumps.last().expect("sampling from an empty distribution").0
    }
}

fn add(map: &mut BTreeMap<Target, f64>, target: Target, rate: f64) {
    if rate > 0.0 {
        *map.entry(target).or_insert(0.0) += rate;
    }
}

fn merger_down_jumps(params: &ModelParams, b: usize, map: &mut BTreeMap<Target, f64>) {
    for (j, &r) in params.lambda.merger_size_rates(b).iter().enumerate().skip(2) {
        add(map, Target::State(b - j + 1), r);
    }
}

/// Λ-ASG line count: `b → c` at `C(b, b-c+1) λ_{b,b-c+1}`, `b → b+1` at `bσ`.
pub fn rates_k(params: &ModelParams, b: usize) -> JumpDistribution {
    let mut map = BTreeMap::new();
    if b >= 1 {
        merger_down_jumps(params, b, &mut map);
        add(&mut map, Target::State(b + 1), b as f64 * params.sigma);
    }
    JumpDistribution::from_map(b, map)
}

/// Pruned lookdown line count: the K jumps plus deleterious crosses on
/// non-immune lines and beneficial circles at each level below the top.
pub fn rates_l(params: &ModelParams, l: usize) -> JumpDistribution {
    let mut map = BTreeMap::new();
    if l >= 1 {
        merger_down_jumps(params, l, &mut map);
        add(&mut map, Target::State(l + 1), l as f64 * params.sigma);
        if l >= 2 {
            add(&mut map, Target::State(l - 1), (l - 1) as f64 * params.theta_nu1());
            for k in 1..l {
                add(&mut map, Target::State(l - k), params.theta_nu0());
            }
        }
    }
    JumpDistribution::from_map(l, map)
}

/// Siegmund dual: merger jumps up to `c_max` are explicit, the rest of the
/// merger mass goes to [`Target::Censor`].
pub fn rates_d(params: &ModelParams, d: usize, c_max: usize) -> JumpDistribution {
    let mut map = BTreeMap::new();
    if d >= 2 {
        let m = (d - 1) as f64;
        add(&mut map, Target::State(d - 1), m * params.sigma);
        add(&mut map, Target::State(d + 1), m * params.theta_nu1());
        add(&mut map, Target::Infinity, m * params.theta_nu0() + params.lambda.star_mass());
        let up = params.lambda.dual_merger_rates(d, c_max);
        let kept: f64 = up.iter().sum();
        for (offset, &r) in up.iter().enumerate() {
            add(&mut map, Target::State(d + 1 + offset), r);
        }
        let total = params.lambda.total_merger_rate(d);
        let rest = total - params.lambda.star_mass() - kept;
        if rest > 1e-14 * total {
            add(&mut map, Target::Censor, rest);
        }
    }
    JumpDistribution::from_map(d, map)
}

/// Total jump rate of K at `b` from the generator.
pub fn generator_total_k(params: &ModelParams, b: usize) -> f64 {
    params.lambda.total_merger_rate(b) + b as f64 * params.sigma
}

pub fn generator_total_l(params: &ModelParams, l: usize) -> f64 {
    if l == 0 {
        return 0.0;
    }
    params.lambda.total_merger_rate(l) + l as f64 * params.sigma + (l - 1) as f64 * params.theta
}

pub fn generator_total_d(params: &ModelParams, d: usize) -> f64 {
    if d < 2 {
        return 0.0;
    }
    params.lambda.total_merger_rate(d) + (d - 1) as f64 * (params.sigma + params.theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::parse_lambda;

    fn params(spec: &str, sigma: f64, theta: f64, nu0: f64) -> ModelParams {
        ModelParams::unchecked(parse_lambda(spec).unwrap(), sigma, theta, nu0).unwrap()
    }

    #[test]
    fn k_examples() {
        let p = params("kingman", 0.5, 0.0, 0.5);
        let r = rates_k(&p, 3);
        assert_eq!(r.jumps, vec![(Target::State(2), 3.0), (Target::State(4), 1.5)]);
        let p = params("point:0.5", 0.5, 0.0, 0.5);
        let r = rates_k(&p, 2);
        assert_eq!(r.jumps, vec![(Target::State(1), 1.0), (Target::State(3), 1.0)]);
        let p = params("kingman", 0.0, 0.0, 0.5);
        assert!(rates_k(&p, 1).is_empty());
    }

    #[test]
    fn l_examples() {
        let p = params("uniform", 0.8, 1.0, 0.5);
        let r = rates_l(&p, 1);
        assert_eq!(r.jumps, vec![(Target::State(2), 0.8)]);
        let p = params("kingman", 0.8, 1.0, 0.0);
        let r = rates_l(&p, 3);
        assert_eq!(r.jumps.len(), 2);
        assert_eq!(r.rate_to(Target::State(2)), 5.0);
        assert!((r.rate_to(Target::State(4)) - 2.4).abs() < 1e-15);
        let p = params("point:0.3", 0.0, 1.0, 1.0);
        let r = rates_l(&p, 4);
        let merger = p.lambda.merger_size_rates(4);
        assert!((r.rate_to(Target::State(3)) - (merger[2] + 1.0)).abs() < 1e-15);
        assert!((r.rate_to(Target::State(2)) - (merger[3] + 1.0)).abs() < 1e-15);
        assert!((r.rate_to(Target::State(1)) - (merger[4] + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn d_examples() {
        let p = params("kingman", 1.0, 1.0, 0.5);
        assert!(rates_d(&p, 1, 100).is_empty());
        let r = rates_d(&p, 2, 100);
        assert_eq!(r.jumps, vec![(Target::State(1), 1.0), (Target::State(3), 1.5), (Target::Infinity, 0.5)]);
        let p = params("star", 1.0, 0.0, 0.5);
        let r = rates_d(&p, 3, 100);
        assert_eq!(r.jumps, vec![(Target::State(2), 2.0), (Target::Infinity, 1.0)]);
    }

    #[test]
    fn row_sums_match_generator() {
        for spec in ["kingman", "uniform", "point:0.5", "star", "0.3*kingman + 0.2*star + 0.5*beta:1.5,2"] {
            let p = params(spec, 1.3, 0.7, 0.4);
            for s in 1..150 {
                let k = rates_k(&p, s);
                assert!((k.total - generator_total_k(&p, s)).abs() <= 1e-10 * k.total.max(1.0), "{spec} K {s}");
                let l = rates_l(&p, s);
                assert!((l.total - generator_total_l(&p, s)).abs() <= 1e-10 * l.total.max(1.0), "{spec} L {s}");
                let d = rates_d(&p, s, s + 400);
                assert!((d.total - generator_total_d(&p, s)).abs() <= 1e-10 * d.total.max(1.0), "{spec} D {s}");
            }
        }
    }

    #[test]
    fn censor_shrinks_with_truncation() {
        let p = params("uniform", 1.0, 0.0, 0.5);
        let coarse = rates_d(&p, 5, 20).rate_to(Target::Censor);
        let fine = rates_d(&p, 5, 2000).rate_to(Target::Censor);
        assert!(coarse > fine && fine > 0.0);
    }
}
