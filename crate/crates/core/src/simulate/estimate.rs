//! Regenerative, hitting-probability and absorption-time estimators.

use rayon::prelude::*;
use serde::Serialize;

use super::events::{Chain, Step, Stepper};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{domain, substream};
use crate::stats::{mean_and_stderr, ratio_estimate, EstimateWithError};

#[derive(Debug, Clone, Serialize)]
pub struct AlphaOptions {
    pub cycles: u64,
    pub seed: u64,
    /// Largest representable state of L; reaching it is an error.
    pub state_cap: usize,
    pub max_events_per_cycle: u64,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        Self { cycles: 100_000, seed: 1, state_cap: 1_000_000, max_events_per_cycle: 100_000_000 }
    }
}

/// `α_n = P(L_eq > n)` by renewal-reward over excursions of L from state 1:
/// the ratio of expected time above `n` per cycle to expected cycle length.
pub fn estimate_alpha(params: &ModelParams, n_list: &[usize], opts: &AlphaOptions) -> Result<Vec<EstimateWithError>> {
    params.require_recurrent()?;
    if params.sigma == 0.0 {
        // L never leaves 1
        return Ok(n_list.iter().map(|&n| EstimateWithError::exact(n, if n == 0 { 1.0 } else { 0.0 })).collect());
    }
    if opts.cycles < 2 {
        return Err(Error::InvalidArgument("at least two regeneration cycles are needed".into()));
    }
    let stepper = Stepper::new(Chain::L, params, opts.state_cap);
    let cycles: Vec<(Vec<f64>, f64)> = (0..opts.cycles)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(opts.seed, domain::CHAIN_L, i);
            let mut above = vec![0.0; n_list.len()];
            let mut length = 0.0;
            let mut s = 1usize;
            for _ in 0..opts.max_events_per_cycle {
                let (hold, step) = stepper.step(s, &mut rng).expect("L with sigma > 0 never absorbs");
                length += hold;
                for (acc, &n) in above.iter_mut().zip(n_list) {
                    if s > n {
                        *acc += hold;
                    }
                }
                s = match step {
                    Step::To(c) => c,
                    Step::Infinity | Step::Beyond => {
                        return Err(Error::Truncation(format!("L exceeded state cap {}", opts.state_cap)))
                    }
                };
                if s == 1 {
                    return Ok((above, length));
                }
            }
            Err(Error::BudgetExhausted(opts.max_events_per_cycle))
        })
        .collect::<Result<_>>()?;
    let lengths: Vec<f64> = cycles.iter().map(|c| c.1).collect();
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let rewards: Vec<f64> = cycles.iter().map(|c| c.0[k]).collect();
            let (est, se) = ratio_estimate(&rewards, &lengths);
            EstimateWithError { n, estimate: est, stderr: se, lower: est, upper: est, cycles: opts.cycles, censored: 0 }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaOptions {
    pub replicates: u64,
    pub seed: u64,
    /// D reaching a state above this is counted as escaped.
    pub state_cap: usize,
    /// Paths still running after this many events are censored.
    pub max_events: u64,
}

impl Default for OmegaOptions {
    fn default() -> Self {
        Self { replicates: 10_000, seed: 1, state_cap: 100_000, max_events: 10_000_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OmegaEstimate {
    pub estimate: EstimateWithError,
    pub hits: u64,
    pub escaped_infinity: u64,
    pub escaped_cap: u64,
    pub censored: u64,
}

#[derive(Clone, Copy)]
enum DOutcome {
    Hit,
    Infinity,
    Cap,
    Censored,
}

/// `ω(n) = P_n(D hits 1)`. Paths that jump to ∞ or above the state cap are
/// misses; paths that exhaust the event budget are censored and bracket the
/// estimate as `[hits/R, (hits+censored)/R]`.
pub fn estimate_omega(params: &ModelParams, n_list: &[usize], opts: &OmegaOptions) -> Result<Vec<OmegaEstimate>> {
    if n_list.contains(&0) {
        return Err(Error::InvalidArgument("D starts at a state >= 1".into()));
    }
    if opts.replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    let stepper = Stepper::new(Chain::D, params, opts.state_cap);
    n_list
        .iter()
        .map(|&n| {
            let outcomes: Vec<DOutcome> = (0..opts.replicates)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream(opts.seed, domain::CHAIN_D, ((n as u64) << 40) | i);
                    let mut s = n;
                    for _ in 0..opts.max_events {
                        if s == 1 {
                            return DOutcome::Hit;
                        }
                        match stepper.step(s, &mut rng) {
                            None => unreachable!("only state 1 absorbs D"),
                            Some((_, Step::To(c))) => s = c,
                            Some((_, Step::Infinity)) => return DOutcome::Infinity,
                            Some((_, Step::Beyond)) => return DOutcome::Cap,
                        }
                    }
                    if s == 1 {
                        DOutcome::Hit
                    } else {
                        DOutcome::Censored
                    }
                })
                .collect();
            let count = |f: fn(&DOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;
            let hits = count(|o| matches!(o, DOutcome::Hit));
            let inf = count(|o| matches!(o, DOutcome::Infinity));
            let cap = count(|o| matches!(o, DOutcome::Cap));
            let censored = count(|o| matches!(o, DOutcome::Censored));
            let r = opts.replicates as f64;
            let decided = (opts.replicates - censored) as f64;
            let p = if decided > 0.0 { hits as f64 / decided } else { f64::NAN };
            let se = if decided > 0.0 { (p * (1.0 - p) / decided).sqrt() } else { f64::INFINITY };
            Ok(OmegaEstimate {
                estimate: EstimateWithError {
                    n,
                    estimate: p,
                    stderr: se,
                    lower: hits as f64 / r,
                    upper: (hits + censored) as f64 / r,
                    cycles: opts.replicates,
                    censored,
                },
                hits,
                escaped_infinity: inf,
                escaped_cap: cap,
                censored,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct T1Estimate {
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
    /// `ln k / E_k[T_1]`
    pub ratio: f64,
    pub replicates: u64,
}

/// `E_k[T_1]` for the block-counting process of the Λ-coalescent (σ = 0).
pub fn estimate_t1(params: &ModelParams, k_list: &[usize], replicates: u64, seed: u64) -> Result<Vec<T1Estimate>> {
    if params.sigma != 0.0 {
        return Err(Error::InvalidParameter("absorption times need sigma = 0".into()));
    }
    if k_list.contains(&0) || replicates < 2 {
        return Err(Error::InvalidArgument("need k >= 1 and at least two replicates".into()));
    }
    let k_max = k_list.iter().copied().max().unwrap_or(1).max(2);
    let stepper = Stepper::new(Chain::K, params, k_max);
    Ok(k_list
        .iter()
        .map(|&k| {
            if k == 1 {
                return T1Estimate { k, mean: 0.0, stderr: 0.0, ratio: f64::NAN, replicates };
            }
            let times: Vec<f64> = (0..replicates)
                .into_par_iter()
                .map(|i| {
                    let mut rng = substream(seed, domain::T1, ((k as u64) << 40) | i);
                    let (mut s, mut t) = (k, 0.0);
                    while s > 1 {
                        let (hold, step) = stepper.step(s, &mut rng).expect("blocks above 1 always merge");
                        t += hold;
                        s = match step {
                            Step::To(c) => c,
                            _ => unreachable!("pure-death chain stays finite"),
                        };
                    }
                    t
                })
                .collect();
            let (mean, stderr) = mean_and_stderr(&times);
            T1Estimate { k, mean, stderr, ratio: (k as f64).ln() / mean, replicates }
        })
        .collect())
}

/// Fraction of K-paths from `start` that exceed `cap` by each horizon.
pub fn explosion_fraction(
    params: &ModelParams,
    start: usize,
    cap: usize,
    horizons: &[f64],
    replicates: u64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let stepper = Stepper::new(Chain::K, params, cap);
    let horizon = horizons.iter().copied().fold(0.0, f64::max);
    let hit_times: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::CHAIN_K, i);
            let (mut s, mut t) = (start, 0.0);
            while t <= horizon {
                match stepper.step(s, &mut rng) {
                    None => return f64::INFINITY,
                    Some((hold, step)) => {
                        t += hold;
                        match step {
                            Step::To(c) => s = c,
                            Step::Infinity | Step::Beyond => return t,
                        }
                    }
                }
            }
            f64::INFINITY
        })
        .collect();
    horizons
        .iter()
        .map(|&h| (h, hit_times.iter().filter(|&&t| t <= h).count() as f64 / replicates as f64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::parse_lambda;
    use crate::recursion::{solve, SolverOptions};

    fn params(spec: &str, sigma: f64, theta: f64, nu0: f64) -> ModelParams {
        ModelParams::new(parse_lambda(spec).unwrap(), sigma, theta, nu0).unwrap()
    }

    #[test]
    fn neutral_alpha_is_analytic() {
        let p = params("uniform", 0.0, 1.0, 0.5);
        let est = estimate_alpha(&p, &[0, 1, 5], &AlphaOptions::default()).unwrap();
        assert_eq!(est[0].estimate, 1.0);
        assert_eq!(est[1].estimate, 0.0);
        assert_eq!(est[2].stderr, 0.0);
    }

    #[test]
    fn star_alpha_and_omega_match_closed_form() {
        let p = params("star", 1.0, 0.0, 0.5);
        let opts = AlphaOptions { cycles: 20_000, seed: 5, ..Default::default() };
        let alpha = estimate_alpha(&p, &[0, 1, 2, 3, 4], &opts).unwrap();
        assert_eq!(alpha[0].estimate, 1.0);
        for e in &alpha[1..] {
            assert!(e.z_score(1.0 / (e.n + 1) as f64) < 3.5, "{e:?}");
        }
        let omega = estimate_omega(&p, &[1, 2, 3, 5], &OmegaOptions { replicates: 20_000, seed: 6, ..Default::default() })
            .unwrap();
        assert_eq!(omega[0].estimate.estimate, 1.0);
        for o in &omega[1..] {
            let e = &o.estimate;
            assert!(e.z_score(1.0 / e.n as f64) < 3.5, "{e:?}");
            assert_eq!(o.censored, 0);
        }
    }

    #[test]
    fn alpha_is_deterministic_across_thread_counts() {
        let p = params("point:0.5", 1.0, 0.0, 0.5);
        let opts = AlphaOptions { cycles: 2_000, seed: 11, ..Default::default() };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_alpha(&p, &[1, 2, 3], &opts).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn omega_cap_is_immaterial() {
        // reaching the cap counts as an escape; doubling the cap must not move the estimate
        let p = params("point:0.5", 1.0, 0.0, 0.5);
        let small = OmegaOptions { replicates: 20_000, seed: 9, state_cap: 200, ..Default::default() };
        let large = OmegaOptions { state_cap: 400, ..small.clone() };
        let a = estimate_omega(&p, &[3], &small).unwrap();
        let b = estimate_omega(&p, &[3], &large).unwrap();
        let coeffs = solve(&p, &SolverOptions::default()).unwrap();
        for o in [&a[0], &b[0]] {
            assert!(o.estimate.z_score(coeffs.a(2)) < 3.5, "{:?} vs {}", o.estimate, coeffs.a(2));
        }
        assert!(a[0].escaped_cap > 0);
    }

    #[test]
    fn t1_kingman_and_requires_neutrality() {
        let p = params("kingman", 0.0, 0.0, 0.5);
        let est = estimate_t1(&p, &[1, 5], 20_000, 3).unwrap();
        assert_eq!(est[0].mean, 0.0);
        assert!((est[1].mean - 1.6).abs() < 3.0 * est[1].stderr);
        assert!(estimate_t1(&params("kingman", 1.0, 0.0, 0.5), &[5], 10, 3).is_err());
    }

    #[test]
    fn explosion_fraction_grows_with_horizon() {
        let p = ModelParams::unchecked(parse_lambda("point:0.5").unwrap(), 5.0, 0.0, 0.5).unwrap();
        let f = explosion_fraction(&p, 2, 10_000, &[1.0, 2.0, 4.0], 400, 1);
        assert!(f.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!(f[2].1 > 0.0);
    }
}
