//! Exact event-level samplers for the three chains.
//!
//! A merger event touches at least two of the first `b` levels exactly when
//! its second-smallest participating level `j` is at most `b`. Such events
//! arrive at rate `r_j = (j-1) λ_{j,2}` per `j`, so `Σ_{j≤b} r_j = λ_b`.
//! Given `j`, the reproduction fraction `z` has law `(1-z)^{j-2} Λ(dz)/λ_{j,2}`
//! and levels above `j` join independently with probability `z`. This gives
//! O(1) jump sampling without the `O(b)` generator tables.

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Exp1, Gamma, Poisson};

use crate::lambda::{Component, LambdaMeasure};
use crate::params::ModelParams;

/// Reproduction fraction of a sampled merger event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fraction {
    /// Binary merger (the atom at 0).
    Pair,
    /// Every level participates (the atom at 1).
    All,
    /// Levels above `j` participate with probability `z`.
    Bernoulli(f64),
}

#[derive(Debug, Clone)]
enum Source {
    Kingman(f64),
    Star(f64),
    Beta { weight: f64, a: f64, b: f64 },
    Point { weight: f64, z: f64 },
}

/// Tables of `r_j` for `2 ≤ j ≤ j_max`, split by component of Λ.
#[derive(Debug, Clone)]
pub struct MergerEvents {
    j_max: usize,
    sources: Vec<Source>,
    /// per source, `(j-1) · weight · λ^{source}_{j,2}`
    parts: Vec<Vec<f64>>,
    /// `prefix[b] = Σ_{j ≤ b} r_j = λ_b`
    prefix: Vec<f64>,
}

impl MergerEvents {
    pub fn new(lambda: &LambdaMeasure, j_max: usize) -> Self {
        let j_max = j_max.max(2);
        let mut sources = Vec::new();
        if lambda.kingman_mass() > 0.0 {
            sources.push(Source::Kingman(lambda.kingman_mass()));
        }
        if lambda.star_mass() > 0.0 {
            sources.push(Source::Star(lambda.star_mass()));
        }
        for c in lambda.components().iter().filter(|c| c.weight > 0.0) {
            sources.push(match c.component {
                Component::Beta { a, b } => Source::Beta { weight: c.weight, a, b },
                Component::Point { z } => Source::Point { weight: c.weight, z },
            });
        }
        let parts: Vec<Vec<f64>> = sources
            .iter()
            .map(|s| {
                let mut v = vec![0.0; j_max + 1];
                match *s {
                    Source::Kingman(m) => {
                        for (j, slot) in v.iter_mut().enumerate().skip(2) {
                            *slot = (j - 1) as f64 * m;
                        }
                    }
                    Source::Star(m) => v[2] = m,
                    Source::Beta { weight, a, b } => {
                        let mut pair = weight;
                        for (j, slot) in v.iter_mut().enumerate().skip(2) {
                            *slot = (j - 1) as f64 * pair;
                            pair *= (b + (j - 2) as f64) / (a + b + (j - 2) as f64);
                        }
                    }
                    Source::Point { weight, z } => {
                        let mut pair = weight;
                        for (j, slot) in v.iter_mut().enumerate().skip(2) {
                            *slot = (j - 1) as f64 * pair;
                            pair *= 1.0 - z;
                        }
                    }
                }
                v
            })
            .collect();
        let mut prefix = vec![0.0; j_max + 1];
        for j in 2..=j_max {
            prefix[j] = prefix[j - 1] + parts.iter().map(|p| p[j]).sum::<f64>();
        }
        Self { j_max, sources, parts, prefix }
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    /// `λ_b`, the rate of mergers that touch at least two of `b` levels.
    pub fn total(&self, b: usize) -> f64 {
        self.prefix[b.min(self.j_max)]
    }

    /// `r_j`, the rate of events whose second-smallest level is `j`.
    pub fn rate_at(&self, j: usize) -> f64 {
        if j < 2 || j > self.j_max {
            return 0.0;
        }
        self.prefix[j] - self.prefix[j - 1]
    }

    /// Draw `(j, fraction)` for an event touching `b ≤ j_max` levels.
    pub fn sample<R: Rng + ?Sized>(&self, b: usize, rng: &mut R) -> (usize, Fraction) {
        assert!(b >= 2 && b <= self.j_max, "state {b} outside merger table (max {})", self.j_max);
        let u = rng.random::<f64>() * self.prefix[b];
        // first j with prefix[j] > u
        let j = (2 + self.prefix[2..=b].partition_point(|&p| p <= u)).min(b);
        (j, self.sample_fraction_at(j, rng))
    }

    /// Reproduction fraction of an event with second-smallest level `j`.
    pub fn sample_fraction_at<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Fraction {
        let mut v = rng.random::<f64>() * self.rate_at(j);
        let mut chosen = self.sources.len() - 1;
        for (i, part) in self.parts.iter().enumerate() {
            if v < part[j] {
                chosen = i;
                break;
            }
            v -= part[j];
        }
        match self.sources[chosen] {
            Source::Kingman(_) => Fraction::Pair,
            Source::Star(_) => Fraction::All,
            Source::Point { z, .. } => Fraction::Bernoulli(z),
            Source::Beta { a, b, .. } => {
                let z: f64 = Beta::new(a, b + (j - 2) as f64).expect("valid shapes").sample(rng);
                Fraction::Bernoulli(z)
            }
        }
    }
}

/// Number of the `n` levels above `j` that join the merger.
pub fn joiners<R: Rng + ?Sized>(fraction: Fraction, n: usize, rng: &mut R) -> usize {
    match fraction {
        Fraction::Pair => 0,
        Fraction::All => n,
        Fraction::Bernoulli(z) => {
            if n == 0 || z <= 0.0 {
                0
            } else if z >= 1.0 {
                n
            } else {
                Binomial::new(n as u64, z).expect("valid binomial").sample(rng) as usize
            }
        }
    }
}

/// Levels skipped before `kept` further non-participating levels are seen,
/// i.e. a negative binomial count, or `None` when it is infinite.
pub fn skipped_levels<R: Rng + ?Sized>(fraction: Fraction, kept: usize, rng: &mut R) -> Option<u64> {
    match fraction {
        Fraction::Pair => Some(0),
        Fraction::All => None,
        Fraction::Bernoulli(z) => {
            if z <= 0.0 || kept == 0 {
                return Some(0);
            }
            if z >= 1.0 {
                return None;
            }
            // Gamma-Poisson mixture
            let scale = z / (1.0 - z);
            let mean: f64 = Gamma::new(kept as f64, scale).expect("valid gamma").sample(rng);
            if mean <= 0.0 {
                Some(0)
            } else if mean > 1e15 {
                None
            } else {
                Some(Poisson::new(mean).expect("valid poisson").sample(rng) as u64)
            }
        }
    }
}

/// Next state of a chain, or how it left the finite states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    To(usize),
    Infinity,
    /// The state would exceed the sampler's table.
    Beyond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chain {
    K,
    L,
    D,
}

/// Exact holding-time and jump sampler for one chain.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub chain: Chain,
    sigma: f64,
    theta_nu0: f64,
    theta_nu1: f64,
    events: MergerEvents,
}

impl Stepper {
    /// `state_cap` bounds the states the sampler can represent.
    pub fn new(chain: Chain, params: &ModelParams, state_cap: usize) -> Self {
        Self {
            chain,
            sigma: params.sigma,
            theta_nu0: params.theta_nu0(),
            theta_nu1: params.theta_nu1(),
            events: MergerEvents::new(&params.lambda, state_cap),
        }
    }

    pub fn state_cap(&self) -> usize {
        self.events.j_max()
    }

    pub fn total_rate(&self, s: usize) -> f64 {
        let m = s.saturating_sub(1) as f64;
        match self.chain {
            Chain::K => self.events.total(s) + s as f64 * self.sigma,
            Chain::L => self.events.total(s) + s as f64 * self.sigma + m * (self.theta_nu0 + self.theta_nu1),
            Chain::D => {
                if s < 2 {
                    0.0
                } else {
                    self.events.total(s) + m * (self.sigma + self.theta_nu0 + self.theta_nu1)
                }
            }
        }
    }

    /// Holding time and next state from `s`; `None` when `s` is absorbing.
    pub fn step<R: Rng + ?Sized>(&self, s: usize, rng: &mut R) -> Option<(f64, Step)> {
        if s > self.state_cap() {
            return Some((0.0, Step::Beyond));
        }
        let total = self.total_rate(s);
        if total <= 0.0 {
            return None;
        }
        let e: f64 = Exp1.sample(rng);
        let hold = e / total;
        let m = s.saturating_sub(1) as f64;
        let mut u = rng.random::<f64>() * total;
        let merger = self.events.total(s);
        if u < merger {
            let (j, fraction) = self.events.sample(s, rng);
            return Some((hold, self.merger_step(s, j, fraction, rng)));
        }
        u -= merger;
        let next = match self.chain {
            Chain::K => Step::To(s + 1),
            Chain::L => {
                let sel = s as f64 * self.sigma;
                let cross = m * self.theta_nu1;
                if u < sel {
                    Step::To(s + 1)
                } else if u < sel + cross {
                    Step::To(s - 1)
                } else {
                    // circle at a uniform level below the top
                    Step::To(rng.random_range(1..s))
                }
            }
            Chain::D => {
                if u < m * self.sigma {
                    Step::To(s - 1)
                } else if u < m * (self.sigma + self.theta_nu1) {
                    Step::To(s + 1)
                } else {
                    Step::Infinity
                }
            }
        };
        Some((hold, self.check(next)))
    }

    fn check(&self, step: Step) -> Step {
        match step {
            Step::To(s) if s > self.state_cap() => Step::Beyond,
            other => other,
        }
    }

    fn merger_step<R: Rng + ?Sized>(&self, s: usize, j: usize, fraction: Fraction, rng: &mut R) -> Step {
        match self.chain {
            // the two lowest participants plus the joiners among s - j upper levels merge into one
            Chain::K | Chain::L => Step::To(s - 1 - joiners(fraction, s - j, rng)),
            // smallest level holding s - 1 survivors: the lowest j - 1 levels stay,
            // level j merges, then s - j + 1 more survivors are needed above j
            Chain::D => match skipped_levels(fraction, s - j + 1, rng) {
                None => Step::Infinity,
                Some(r) => {
                    let next = (s as u64 + 1).saturating_add(r);
                    if next > self.state_cap() as u64 {
                        Step::Beyond
                    } else {
                        Step::To(next as usize)
                    }
                }
            },
        }
    }
}
