use lookdown_core::asg::h_by_graph;
use lookdown_core::experiments::SIMULATION_PRESETS;
use lookdown_core::flights::{Flight, FlightConfig, Membership};
use lookdown_core::recursion::{eval_h, solve, SolverOptions};
use lookdown_core::simulate::{estimate_alpha, estimate_omega, AlphaOptions, OmegaOptions};
use lookdown_core::{parse_lambda, ModelParams};

fn params(spec: &str, sigma: f64, theta: f64, nu0: f64) -> ModelParams {
    ModelParams::new(parse_lambda(spec).unwrap(), sigma, theta, nu0).unwrap()
}

#[test]
fn graph_h_matches_solver_on_presets() {
    let grid = [0.1, 0.3, 0.5, 0.7, 0.9];
    for (k, &(spec, sigma, theta, nu0)) in SIMULATION_PRESETS.iter().enumerate() {
        let p = params(spec, sigma, theta, nu0);
        let a = solve(&p, &SolverOptions::default()).unwrap();
        let est = h_by_graph(&p, &grid, 20_000, 40 + k as u64).unwrap();
        for e in est {
            let exact = eval_h(&a, e.x).unwrap();
            assert!((e.estimate - exact).abs() <= 3.0 * e.stderr, "{spec} x={}: {} +- {} vs {exact}", e.x, e.estimate, e.stderr);
        }
    }
}

#[test]
fn omega_and_alpha_agree_as_estimates() {
    let p = params("point:0.5", 1.0, 0.0, 0.5);
    let ns = [1usize, 2, 3, 4];
    let alpha = estimate_alpha(&p, &ns, &AlphaOptions { cycles: 50_000, seed: 3, ..Default::default() }).unwrap();
    let plus_one: Vec<usize> = ns.iter().map(|n| n + 1).collect();
    let omega = estimate_omega(&p, &plus_one, &OmegaOptions { replicates: 20_000, seed: 3, state_cap: 2000, ..Default::default() }).unwrap();
    for (a, o) in alpha.iter().zip(&omega) {
        let se = (a.stderr.powi(2) + o.estimate.stderr.powi(2)).sqrt();
        assert!((a.estimate - o.estimate.estimate).abs() <= 3.0 * se, "n={}", a.n);
    }
    // tails decrease up to noise
    for w in alpha.windows(2) {
        assert!(w[1].estimate <= w[0].estimate + 3.0 * (w[0].stderr + w[1].stderr));
    }
}

#[test]
fn thread_count_does_not_change_estimates() {
    let p = params("uniform", 1.0, 0.5, 0.5);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let a = estimate_alpha(&p, &[1, 2, 3], &AlphaOptions { cycles: 2000, seed: 9, ..Default::default() }).unwrap();
            let h = h_by_graph(&p, &[0.5], 500, 9).unwrap();
            (a.iter().map(|e| e.estimate.to_bits()).collect::<Vec<_>>(), h[0].estimate.to_bits())
        })
    };
    assert_eq!(run(1), run(3));
}

fn event_rate(p: &ModelParams, window: u64, horizon: f64, configs: u64, keep: impl Fn(&Flight) -> bool) -> (f64, bool) {
    let mut count = 0usize;
    let mut all_kept = true;
    for i in 0..configs {
        let cfg = FlightConfig::sample(p, window, horizon, 5, i, window);
        count += cfg.events().len();
        all_kept &= cfg.events().iter().all(|e| keep(&e.flight));
    }
    (count as f64 / (configs as f64 * horizon), all_kept)
}

#[test]
fn configuration_examples() {
    let configs = 4000;
    let se = |rate: f64| (rate / configs as f64).sqrt();

    let kingman = ModelParams::new(parse_lambda("kingman").unwrap(), 0.0, 0.0, 0.5).unwrap();
    let pair = |f: &Flight| matches!(f, Flight::Merger(Membership::Explicit(s)) if s.iter().copied().eq([1, 2]));
    let (rate, only_pairs) = event_rate(&kingman, 2, 1.0, configs, pair);
    assert!(only_pairs);
    assert!((rate - 1.0).abs() < 4.0 * se(1.0), "{rate}");

    let branching = ModelParams::new(parse_lambda("kingman").unwrap(), 1.0, 0.0, 0.5).unwrap();
    let (rate, only_stars) = event_rate(&branching, 1, 1.0, configs, |f| *f == Flight::Star(1));
    assert!(only_stars);
    assert!((rate - 1.0).abs() < 4.0 * se(1.0), "{rate}");

    let uniform = ModelParams::new(parse_lambda("uniform").unwrap(), 0.0, 0.0, 0.5).unwrap();
    let lambda3 = uniform.lambda.total_merger_rate(3);
    assert!(lambda3 <= 3.0);
    let (rate, _) = event_rate(&uniform, 3, 1.0, configs, |_| true);
    assert!((rate - lambda3).abs() < 4.0 * se(lambda3), "{rate} vs {lambda3}");
}
