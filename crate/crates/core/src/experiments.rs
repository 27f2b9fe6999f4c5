//! The named validation experiments, each reported as pass/fail checks.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::asg::{verify_prop1, Prop1Options};
use crate::error::Result;
use crate::flights::{dual_apply, dual_by_search, apply, sample_flight, verify_pathwise_duality, DualityReport, FlightConfig, INF};
use crate::lambda::{choose, parse_lambda};
use crate::params::ModelParams;
use crate::recursion::{build_system, eval_h, eval_h_series, solve, solve_direct, unit_grid, CoefficientVector, HCurve, SolverOptions};
use crate::rng::{domain, substream};
use crate::simulate::events::MergerEvents;
use crate::simulate::{estimate_alpha, estimate_omega, estimate_t1, AlphaOptions, OmegaOptions};

pub const PRESET_NAMES: [&str; 9] = [
    "fearnhead",
    "bolthausen-sznitman",
    "star-closed-form",
    "alpha-vs-recursion",
    "omega-vs-alpha",
    "duality",
    "prop1",
    "h-properties",
    "t1-trend",
];

/// The four parameter sets compared against simulation: `(Λ, σ, θ, ν0)`.
pub const SIMULATION_PRESETS: [(&str, f64, f64, f64); 4] =
    [("kingman", 1.0, 0.0, 0.5), ("kingman", 1.0, 1.0, 0.5), ("uniform", 1.0, 0.0, 0.5), ("point:0.5", 1.0, 0.0, 0.5)];

/// Parameter sets of the coupled flight configurations, with their horizons.
/// Pure Kingman duals climb quadratically, hence the short horizon there.
pub const DUALITY_PRESETS: [(&str, f64, f64, f64, f64); 5] = [
    ("point:0.5", 1.0, 1.0, 0.5, 2.0),
    ("uniform", 1.0, 0.5, 0.5, 1.0),
    ("beta:1.5,0.8", 1.5, 0.4, 0.2, 1.0),
    ("0.5*kingman + 0.5*star", 1.0, 1.0, 0.5, 0.05),
    ("kingman", 1.0, 1.0, 0.5, 0.02),
];

/// Strong selection against moderate mutation keeps far ends up to the cap.
pub const PROP1_PRESETS: [(&str, f64, f64, f64); 4] = [
    ("kingman", 2.0, 0.5, 0.5),
    ("point:0.6", 1.5, 0.6, 0.3),
    ("uniform", 2.0, 0.8, 0.5),
    ("0.5*kingman + 0.3*beta:1.2,0.9 + 0.2*star", 1.5, 0.6, 0.4),
];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PresetReport {
    pub preset: String,
    pub checks: Vec<Check>,
}

impl PresetReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOptions {
    pub seed: u64,
    pub cycles: u64,
    pub replicates: u64,
    pub omega_replicates: u64,
    pub omega_state_cap: usize,
    pub configs: u64,
    pub flights_per_variant: u64,
    pub realizations: u64,
    pub t1_replicates: u64,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            seed: 20240611,
            cycles: 100_000,
            replicates: 100_000,
            omega_replicates: 10_000,
            omega_state_cap: 1000,
            configs: 10_000,
            flights_per_variant: 1000,
            realizations: 500,
            t1_replicates: 100_000,
        }
    }
}

fn params(spec: &str, sigma: f64, theta: f64, nu0: f64) -> Result<ModelParams> {
    ModelParams::new(parse_lambda(spec)?, sigma, theta, nu0)
}

fn label(spec: &str, sigma: f64, theta: f64, nu0: f64) -> String {
    format!("{spec} sigma={sigma} theta={theta} nu1={}", 1.0 - nu0)
}

fn timed(criterion: u8, name: String, run: impl FnOnce() -> Result<(bool, String)>) -> Check {
    let start = Instant::now();
    let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
    Check { criterion, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn coefficients(p: &ModelParams) -> Result<CoefficientVector> {
    solve(p, &SolverOptions { n_max: 256, ..Default::default() })
}

pub fn run_preset(name: &str, opts: &ExperimentOptions) -> Option<PresetReport> {
    let checks = match name {
        "fearnhead" => fearnhead(),
        "bolthausen-sznitman" => bolthausen_sznitman(),
        "star-closed-form" => star_closed_form(),
        "alpha-vs-recursion" => alpha_vs_recursion(opts),
        "omega-vs-alpha" => omega_vs_alpha(opts),
        "duality" => duality(opts),
        "prop1" => prop1(opts),
        "h-properties" => h_properties(),
        "t1-trend" => t1_trend(opts),
        _ => return None,
    };
    Some(PresetReport { preset: name.to_string(), checks })
}

/// Kingman rows are the `(n+1)/2` recursion term for term, and the solution
/// satisfies it to 1e-10 for `n ≤ 100`.
pub fn fearnhead() -> Vec<Check> {
    [(1.0, 0.0, 0.5), (1.0, 1.0, 0.5)]
        .into_iter()
        .map(|(sigma, theta, nu0)| {
            timed(1, format!("fearnhead {}", label("kingman", sigma, theta, nu0)), || {
                let p = params("kingman", sigma, theta, nu0)?;
                let sys = build_system(&p, 256, 256)?;
                let mut exact = true;
                // the last row loses its a_N column to the truncation
                for n in 1..255 {
                    let half = (n + 1) as f64 / 2.0;
                    exact &= sys.row(n).diag == half + sigma + theta;
                    exact &= sys.off_diagonal(n, n + 1) == half + p.theta_nu1();
                    exact &= sys.off_diagonal(n, n - 1) == sigma;
                    exact &= (n + 2..=256).all(|k| sys.off_diagonal(n, k) == 0.0);
                }
                let a = coefficients(&p)?;
                let worst = (1..=100)
                    .map(|n| {
                        let half = (n + 1) as f64 / 2.0;
                        ((half + sigma + theta) * a.a(n) - (half + p.theta_nu1()) * a.a(n + 1) - sigma * a.a(n - 1)).abs()
                    })
                    .fold(0.0, f64::max);
                Ok((exact && worst < 1e-10, format!("rows exact: {exact}; max residual {worst:.2e}")))
            })
        })
        .collect()
}

/// `(1/n) C(c-1, c-n) λ_{c,c-n} = 1/((c-n-1)(c-n))` for the uniform measure,
/// both from the rate formula and from the assembled system.
pub fn bolthausen_sznitman() -> Vec<Check> {
    vec![timed(2, "bolthausen-sznitman weights, c <= 301".into(), || {
        let lambda = parse_lambda("uniform")?;
        let mut worst: f64 = 0.0;
        for c in 3..=301usize {
            for n in 1..c - 1 {
                let w = choose((c - 1) as u64, (c - n) as u64) * lambda.lambda_rate(c, c - n)? / n as f64;
                let exact = 1.0 / ((c - n - 1) * (c - n)) as f64;
                worst = worst.max((w - exact).abs());
            }
        }
        let p = ModelParams::new(lambda, 1.0, 0.0, 0.5)?;
        let sys = build_system(&p, 300, 301)?;
        for n in 1..299 {
            for (i, w) in sys.row(n).weights.iter().enumerate() {
                let c = n + 2 + i;
                worst = worst.max((w - 1.0 / ((c - n - 1) * (c - n)) as f64).abs());
            }
        }
        Ok((worst < 1e-10, format!("max deviation {worst:.2e}")))
    })]
}

/// Λ = δ₁, σ = 1, θ = 0: `a_n = 1/(n+1)` and `h(1/2) = ln 2`.
pub fn star_closed_form() -> Vec<Check> {
    vec![timed(3, "star closed form, n <= 500".into(), || {
        let p = params("point:1", 1.0, 0.0, 0.5)?;
        let a = solve_direct(&build_system(&p, 1024, 1024)?)?;
        let worst = (0..=500).map(|n| (a.a(n) - 1.0 / (n + 1) as f64).abs()).fold(0.0, f64::max);
        let h = eval_h(&a, 0.5)?;
        let gap = (h - 2f64.ln()).abs();
        Ok((worst < 1e-10 && gap < 1e-9, format!("max |a_n - 1/(n+1)| {worst:.2e}; |h(0.5) - ln 2| {gap:.2e}")))
    })]
}

/// Regenerative estimates of `P(L_eq > n)` against the solver, `n ≤ 10`.
pub fn alpha_vs_recursion(opts: &ExperimentOptions) -> Vec<Check> {
    SIMULATION_PRESETS
        .iter()
        .map(|&(spec, sigma, theta, nu0)| {
            timed(4, format!("alpha vs a_n, {}", label(spec, sigma, theta, nu0)), || {
                let p = params(spec, sigma, theta, nu0)?;
                let a = coefficients(&p)?;
                let ns: Vec<usize> = (1..=10).collect();
                let est = estimate_alpha(&p, &ns, &AlphaOptions { cycles: opts.cycles, seed: opts.seed, ..Default::default() })?;
                let worst = est.iter().map(|e| e.z_score(a.a(e.n))).fold(0.0, f64::max);
                let e1 = &est[0];
                Ok((
                    worst <= 3.0,
                    format!("max z {worst:.2} over n=1..10; a_1 {:.5} vs {:.5} +- {:.1e}", a.a(1), e1.estimate, e1.stderr),
                ))
            })
        })
        .collect()
}

/// Dual hitting probabilities `ω(n+1)` against `a_n`, `n ≤ 10`.
///
/// The binomial error is taken at the larger of `ω̂` and `a_n`, so that a
/// run with no hits on a tiny tail is scored against the hypothesised rate.
pub fn omega_vs_alpha(opts: &ExperimentOptions) -> Vec<Check> {
    let mut sets: Vec<(&str, f64, f64, f64)> = SIMULATION_PRESETS.to_vec();
    sets.push(("star", 1.0, 0.0, 0.5));
    sets.iter()
        .map(|&(spec, sigma, theta, nu0)| {
            timed(5, format!("omega(n+1) vs a_n, {}", label(spec, sigma, theta, nu0)), || {
                let p = params(spec, sigma, theta, nu0)?;
                let a = coefficients(&p)?;
                let ns: Vec<usize> = (2..=11).collect();
                let o = OmegaOptions {
                    replicates: opts.omega_replicates,
                    seed: opts.seed,
                    state_cap: opts.omega_state_cap,
                    ..Default::default()
                };
                let est = estimate_omega(&p, &ns, &o)?;
                let r = opts.omega_replicates as f64;
                let mut worst_z: f64 = 0.0;
                let mut widest: f64 = 0.0;
                let mut star_gap: f64 = 0.0;
                for (e, &n) in est.iter().zip(&ns) {
                    let target = a.a(n - 1);
                    let q = e.estimate.estimate.max(target);
                    let se = (q * (1.0 - q) / r).sqrt() + a.truncation_error_estimate.unwrap_or(0.0);
                    worst_z = worst_z.max(crate::stats::z_score(e.estimate.estimate, target, se));
                    widest = widest.max(e.estimate.upper - e.estimate.lower);
                    if spec == "star" {
                        let s = ((1.0 / n as f64) * (1.0 - 1.0 / n as f64) / r).sqrt();
                        star_gap = star_gap.max((e.estimate.estimate - 1.0 / n as f64).abs() / s);
                    }
                }
                let passed = worst_z <= 3.0 && widest < 0.01 && star_gap <= 3.0;
                let mut detail = format!("max z {worst_z:.2}; widest censored bracket {widest:.1e}");
                if spec == "star" {
                    detail += &format!("; max z vs 1/n {star_gap:.2}");
                }
                Ok((passed, detail))
            })
        })
        .collect()
}

/// Coupled forward and dual passes over random flight configurations, and
/// the per-flight identity for every flight variant.
pub fn duality(opts: &ExperimentOptions) -> Vec<Check> {
    let pathwise = timed(6, format!("pathwise duality, {} configurations, (l,d) in [1,20]^2", opts.configs), || {
        let levels: Vec<u64> = (1..=20).collect();
        let sets = DUALITY_PRESETS.len() as u64;
        let models = DUALITY_PRESETS
            .iter()
            .map(|&(spec, sigma, theta, nu0, _)| ModelParams::unchecked(parse_lambda(spec)?, sigma, theta, nu0))
            .collect::<Result<Vec<_>>>()?;
        let report = (0..opts.configs)
            .into_par_iter()
            .map(|i| {
                let k = (i % sets) as usize;
                let horizon = DUALITY_PRESETS[k].4;
                let mut config = FlightConfig::sample(&models[k], 32, horizon, opts.seed, i, 1 << 16);
                verify_pathwise_duality(&mut config, &levels, &levels)
            })
            .reduce(DualityReport::default, |mut a, b| {
                a.merge(b);
                a
            });
        Ok((
            report.violations == 0 && report.comparisons == opts.configs * 400,
            format!(
                "{} violations in {} comparisons; {} exploded dual passes; {} events",
                report.violations, report.comparisons, report.exploded, report.events
            ),
        ))
    });
    let per_flight = timed(7, format!("per-flight identity, {} flights per variant, j,k <= 50", opts.flights_per_variant), || {
        let lambda = parse_lambda("0.25*kingman + 0.25*star + 0.25*point:0.6 + 0.25*beta:0.8,1.5")?;
        let mergers = MergerEvents::new(&lambda, 64);
        let bad: u64 = ["merger", "star", "cross", "circle"]
            .par_iter()
            .enumerate()
            .map(|(v, kind)| {
                let mut rng = substream(opts.seed, domain::FLIGHT_SAMPLE, v as u64);
                let mut bad = 0;
                for _ in 0..opts.flights_per_variant {
                    let f = sample_flight(kind, &mergers, 50, &mut rng);
                    for k in 1..=50 {
                        let fd = dual_apply(&f, k);
                        let searched = dual_by_search(&f, k, 4000);
                        if searched != if fd <= 4000 { fd } else { INF } {
                            bad += 1;
                        }
                        bad += (1..=50).filter(|&j| (apply(&f, j) >= k) != (fd <= j)).count() as u64;
                    }
                }
                bad
            })
            .sum();
        Ok((bad == 0, format!("{bad} mismatches over {} flights", 4 * opts.flights_per_variant)))
    });
    vec![pathwise, per_flight]
}

/// Immortal-line rule against unpruned-graph resolution, exhaustively over
/// far-end type assignments.
pub fn prop1(opts: &ExperimentOptions) -> Vec<Check> {
    PROP1_PRESETS
        .iter()
        .map(|&(spec, sigma, theta, nu0)| {
            timed(8, format!("immortal line rule, {} realizations, {}", opts.realizations, label(spec, sigma, theta, nu0)), || {
                let p = params(spec, sigma, theta, nu0)?;
                let r = verify_prop1(&p, &Prop1Options { realizations: opts.realizations, seed: opts.seed, ..Default::default() })?;
                Ok((
                    r.mismatches == 0 && r.realizations == opts.realizations,
                    format!(
                        "{} mismatches in {} assignments; largest far end {}; {} skipped",
                        r.mismatches, r.assignments, r.max_final_count, r.skipped
                    ),
                ))
            })
        })
        .collect()
}

/// Shape of `h` on a 101-point grid for every parameter set.
pub fn h_properties() -> Vec<Check> {
    let mut sets: Vec<(&str, f64, f64, f64)> = SIMULATION_PRESETS.to_vec();
    sets.extend([("point:1", 1.0, 0.0, 0.5), ("kingman", 0.0, 1.0, 0.5), ("uniform", 0.0, 0.0, 0.5)]);
    sets.iter()
        .map(|&(spec, sigma, theta, nu0)| {
            timed(9, format!("h properties, {}", label(spec, sigma, theta, nu0)), || {
                let p = params(spec, sigma, theta, nu0)?;
                let a = coefficients(&p)?;
                let grid = unit_grid(101);
                let curve = HCurve::evaluate(&a, &grid)?;
                let violations = curve.violations();
                let mut gap: f64 = 0.0;
                for &x in &grid {
                    gap = gap.max((eval_h(&a, x)? - eval_h_series(&a, x)?).abs());
                }
                let neutral_ok = sigma > 0.0 || curve.x.iter().zip(&curve.h).all(|(x, h)| x == h);
                Ok((
                    violations.is_empty() && gap < 1e-12 && neutral_ok,
                    format!("{} shape violations; max |abel - series| {gap:.1e}; neutral exact: {neutral_ok}", violations.len()),
                ))
            })
        })
        .collect()
}

/// Kingman `E_5[T_1] = Σ_{b=2}^{5} 1/C(b,2) = 1.6`, and the ratio
/// `ln k / E_k[T_1]` for δ_{1/2} (reported only).
pub fn t1_trend(opts: &ExperimentOptions) -> Vec<Check> {
    let kingman = timed(10, format!("Kingman E_5[T_1] = 1.6, {} replicates", opts.t1_replicates), || {
        let p = params("kingman", 0.0, 0.0, 0.5)?;
        let est = &estimate_t1(&p, &[5], opts.t1_replicates, opts.seed)?[0];
        let exact: f64 = (2..=5).map(|b| 1.0 / choose(b as u64, 2)).sum();
        let z = crate::stats::z_score(est.mean, exact, est.stderr);
        Ok((z <= 3.0, format!("{:.4} +- {:.4} vs {exact}; z {z:.2}", est.mean, est.stderr)))
    });
    let trend = timed(10, "point:0.5 ratio ln k / E_k[T_1] (reported)".into(), || {
        let p = params("point:0.5", 0.0, 0.0, 0.5)?;
        let ks = [4usize, 16, 64, 256, 1024, 4096];
        let est = estimate_t1(&p, &ks, opts.t1_replicates / 10, opts.seed)?;
        let ratios: Vec<String> = est.iter().map(|e| format!("k={}: {:.3}", e.k, e.ratio)).collect();
        Ok((true, format!("{}; limit 4 ln 2 = {:.4}", ratios.join(", "), 4.0 * 2f64.ln())))
    });
    vec![kingman, trend]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset_is_none() {
        assert!(run_preset("nope", &ExperimentOptions::default()).is_none());
    }

    #[test]
    fn exact_presets_pass() {
        for name in ["fearnhead", "bolthausen-sznitman", "star-closed-form", "h-properties"] {
            let report = run_preset(name, &ExperimentOptions::default()).unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }
}
