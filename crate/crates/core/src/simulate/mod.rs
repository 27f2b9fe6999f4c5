//! Continuous-time simulation of the line-counting chains K and L, the dual
//! D, and the Monte Carlo estimators built on them.

mod estimate;
pub mod events;
pub mod rates;

pub use estimate::{
    estimate_alpha, estimate_omega, estimate_t1, explosion_fraction, AlphaOptions, OmegaEstimate, OmegaOptions,
    T1Estimate,
};
pub use events::{Chain, Step, Stepper};
pub use rates::{rates_d, rates_k, rates_l, JumpDistribution, Target};

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Which chain to run and how its state space is truncated.
#[derive(Debug, Clone)]
pub struct ChainSpec {
    pub chain: Chain,
    pub params: ModelParams,
    /// Largest explicit merger target of D.
    pub c_max: usize,
    /// States above this end the path as censored.
    pub state_cap: usize,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StopRule {
    pub hit: Option<usize>,
    pub horizon: Option<f64>,
    pub max_events: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathEnd {
    Hit,
    Horizon,
    Absorbed,
    Infinity,
    /// D took the lumped jump beyond `c_max`.
    Censored,
    StateCap,
    Budget,
}

/// Jump times and visited states; `times[0] = 0` and `states[0]` is the start.
#[derive(Debug, Clone, Serialize)]
pub struct ChainPath {
    pub times: Vec<f64>,
    pub states: Vec<usize>,
    pub end: PathEnd,
    /// Time at which the path stopped.
    pub end_time: f64,
}

impl ChainPath {
    pub fn final_state(&self) -> usize {
        *self.states.last().expect("paths are non-empty")
    }
}

/// Event-driven simulation from the explicit generator rows.
pub fn simulate_path<R: Rng + ?Sized>(spec: &ChainSpec, start: usize, stop: &StopRule, rng: &mut R) -> Result<ChainPath> {
    if start == 0 {
        return Err(Error::InvalidArgument("chains start at a state >= 1".into()));
    }
    let mut cache: HashMap<usize, JumpDistribution> = HashMap::new();
    let mut path = ChainPath { times: vec![0.0], states: vec![start], end: PathEnd::Absorbed, end_time: 0.0 };
    let mut t = 0.0;
    let mut s = start;
    let mut events = 0u64;
    loop {
        if stop.hit == Some(s) {
            path.end = PathEnd::Hit;
            break;
        }
        if s > spec.state_cap {
            path.end = PathEnd::StateCap;
            break;
        }
        if stop.max_events.is_some_and(|m| events >= m) {
            path.end = PathEnd::Budget;
            break;
        }
        let dist = cache.entry(s).or_insert_with(|| match spec.chain {
            Chain::K => rates_k(&spec.params, s),
            Chain::L => rates_l(&spec.params, s),
            Chain::D => rates_d(&spec.params, s, spec.c_max),
        });
        if dist.is_empty() {
            path.end = PathEnd::Absorbed;
            if let Some(h) = stop.horizon {
                t = h;
            }
            break;
        }
        let e: f64 = Exp1.sample(rng);
        let next_t = t + e / dist.total;
        if stop.horizon.is_some_and(|h| next_t > h) {
            t = stop.horizon.unwrap_or(t);
            path.end = PathEnd::Horizon;
            break;
        }
        t = next_t;
        events += 1;
        match dist.sample(rng) {
            Target::State(c) => {
                s = c;
                path.times.push(t);
                path.states.push(c);
            }
            Target::Infinity => {
                path.end = PathEnd::Infinity;
                break;
            }
            Target::Censor => {
                path.end = PathEnd::Censored;
                break;
            }
        }
    }
    path.end_time = t;
    Ok(path)
}
