//! `lookdown`: solver, simulators and verifiers for the common-ancestor
//! type distribution of Λ-Wright-Fisher processes.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 a verification found
//! a violation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lookdown_core::asg::{verify_prop1, Prop1Options};
use lookdown_core::experiments::{run_preset, ExperimentOptions, DUALITY_PRESETS, PRESET_NAMES, PROP1_PRESETS};
use lookdown_core::flights::{verify_pathwise_duality, DualityReport, FlightConfig};
use lookdown_core::lambda::RateTable;
use lookdown_core::recursion::{eval_h, solve, unit_grid, HCurve, Method, SolverOptions};
use lookdown_core::simulate::{estimate_alpha, estimate_omega, estimate_t1, AlphaOptions, OmegaOptions};
use lookdown_core::stats::write_estimates_csv;
use lookdown_core::{parse_lambda, AssumptionCheck, ModelParams};
use rayon::prelude::*;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "lookdown", version, about = "Common-ancestor type distribution of Λ-Wright-Fisher processes")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write CSV output and a JSON manifest into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Λ, e.g. `kingman`, `uniform`, `beta:2,1`, `0.5*kingman + 0.5*point:0.3`.
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, default_value_t = 0.5)]
    nu0: f64,
    /// Accept σ ≥ σ* (results then carry no recurrence guarantee).
    #[arg(long)]
    unchecked: bool,
}

impl ModelArgs {
    fn build(&self) -> Result<ModelParams, String> {
        let (Some(spec), Some(sigma)) = (&self.lambda, self.sigma) else {
            return Err("--lambda and --sigma are required".into());
        };
        let lambda = parse_lambda(spec).map_err(|e| e.to_string())?;
        let make = if self.unchecked { ModelParams::unchecked } else { ModelParams::new };
        make(lambda, sigma, self.theta, self.nu0).map_err(|e| e.to_string())
    }

    /// The model from the command line, or the built-in sets when neither
    /// `--lambda` nor `--sigma` is given.
    fn build_or(&self, builtin: &[(&str, f64, f64, f64)]) -> Result<Vec<ModelParams>, String> {
        if self.lambda.is_some() || self.sigma.is_some() {
            return Ok(vec![self.build()?]);
        }
        builtin
            .iter()
            .map(|&(spec, sigma, theta, nu0)| {
                ModelParams::unchecked(parse_lambda(spec).map_err(|e| e.to_string())?, sigma, theta, nu0).map_err(|e| e.to_string())
            })
            .collect()
    }

    fn echo(&self) -> Value {
        json!({ "lambda": self.lambda, "sigma": self.sigma, "theta": self.theta, "nu0": self.nu0, "unchecked": self.unchecked })
    }
}

#[derive(Args, Debug, Clone)]
struct Truncation {
    /// Truncation level N of the coefficient system.
    #[arg(long, default_value_t = 64)]
    nmax: usize,
    /// Largest merger column kept (default N).
    #[arg(long)]
    cmax: Option<usize>,
    /// Use Jacobi iteration instead of elimination.
    #[arg(long)]
    fixed_point: bool,
    /// Solve at exactly N without doubling.
    #[arg(long)]
    no_refine: bool,
}

impl Truncation {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            n_max: self.nmax,
            c_max: self.cmax,
            method: if self.fixed_point { Method::FixedPoint } else { Method::DirectSolve },
            refine: !self.no_refine,
            ..Default::default()
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of λ_{b,j} for b ≤ --nmax (CSV `b,j,lambda`).
    Rates {
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 20)]
        nmax: usize,
    },
    /// σ* of Λ, and whether --sigma satisfies σ < σ*.
    SigmaStar {
        #[arg(long)]
        lambda: String,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Coefficients a_n (CSV `n,a_n`).
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        truncation: Truncation,
    },
    /// h(x) at --x, or on a grid (CSV `x,h`).
    H {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        truncation: Truncation,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Regenerative estimates of P(L_eq > n), n = 1..=--n (CSV).
    SimL {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        cycles: u64,
    },
    /// Probabilities that D started at n hits 1, n = 2..=--n (CSV).
    SimD {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 11)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        replicates: u64,
        /// States above this count as escaped.
        #[arg(long, default_value_t = 100_000)]
        cap: usize,
    },
    /// E_k[T_1] for the block-counting process, σ = 0 (CSV).
    SimK {
        #[command(flatten)]
        model: ModelArgs,
        /// Comma-separated starting states.
        #[arg(long, value_delimiter = ',', default_value = "2,5,10,100")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
    },
    /// Pathwise duality of forward and dual flight passes on random configurations.
    VerifyDuality {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 10_000)]
        configs: u64,
        /// Time horizon of each configuration (default 1, or per built-in set).
        #[arg(long)]
        horizon: Option<f64>,
        /// Largest ℓ and d compared.
        #[arg(long, default_value_t = 20)]
        levels: u64,
        /// Optional JSON-lines trace of the first configuration.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Immortal-line rule against the unpruned graph, every type assignment.
    VerifyAsg {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 500)]
        realizations: u64,
        /// Largest pruned far end enumerated.
        #[arg(long, default_value_t = 8)]
        cap: usize,
        /// Event budget per realization.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 3.0)]
        max_horizon: f64,
    },
    /// Run a named acceptance experiment and print its checks.
    Preset {
        name: String,
        #[arg(long)]
        cycles: Option<u64>,
        #[arg(long)]
        replicates: Option<u64>,
    },
}

enum Failure {
    Usage(String),
    Violation(String),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn usage<E: ToString>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

/// Where tabular output goes, and what the manifest records.
struct Sink {
    dir: Option<PathBuf>,
    artifacts: Vec<String>,
}

impl Sink {
    fn table(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                let mut file = io::BufWriter::new(fs::File::create(&path)?);
                write(&mut file)?;
                file.flush()?;
                self.artifacts.push(path.display().to_string());
                Ok(())
            }
            None => write(&mut io::stdout().lock()),
        }
    }

    fn manifest(&self, dir: &Path, mut body: Value) -> io::Result<()> {
        body["artifacts"] = json!(self.artifacts);
        body["version"] = json!(env!("CARGO_PKG_VERSION"));
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&body)? + "\n")
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if let Some(dir) = &cli.out {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("error: cannot create {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let mut sink = Sink { dir: cli.out.clone(), artifacts: Vec::new() };
    let mut echo = json!({ "subcommand": subcommand_name(&cli.command), "seed": cli.seed, "threads": cli.threads });
    let outcome = run(&cli, &mut sink, &mut echo);
    if let (Some(dir), Ok(()) | Err(Failure::Violation(_))) = (&cli.out, &outcome) {
        echo["wall_clock_seconds"] = json!(start.elapsed().as_secs_f64());
        if let Err(e) = sink.manifest(dir, echo) {
            eprintln!("error: writing manifest: {e}");
            return ExitCode::from(1);
        }
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn subcommand_name(command: &Command) -> &'static str {
    match command {
        Command::Rates { .. } => "rates",
        Command::SigmaStar { .. } => "sigma-star",
        Command::Solve { .. } => "solve",
        Command::H { .. } => "h",
        Command::SimL { .. } => "sim-l",
        Command::SimD { .. } => "sim-d",
        Command::SimK { .. } => "sim-k",
        Command::VerifyDuality { .. } => "verify-duality",
        Command::VerifyAsg { .. } => "verify-asg",
        Command::Preset { .. } => "preset",
    }
}

fn run(cli: &Cli, sink: &mut Sink, echo: &mut Value) -> Outcome {
    let seed = cli.seed;
    match &cli.command {
        Command::Rates { lambda, nmax } => {
            let measure = parse_lambda(lambda).map_err(usage)?;
            echo["lambda"] = json!(measure.to_string());
            echo["nmax"] = json!(nmax);
            let table = RateTable::new(&measure, *nmax).map_err(usage)?;
            sink.table("rates.csv", |w| table.write_csv(w))?;
        }
        Command::SigmaStar { lambda, sigma } => {
            let measure = parse_lambda(lambda).map_err(usage)?;
            let star = measure.sigma_star();
            println!("sigma_star,{star}");
            if let Some(s) = sigma {
                let params = ModelParams::unchecked(measure, *s, 0.0, 0.5).map_err(usage)?;
                let verdict = match params.check_assumption() {
                    AssumptionCheck::Ok => "recurrent",
                    AssumptionCheck::Violated { .. } => "violated",
                };
                println!("sigma,{s}\nassumption,{verdict}");
            }
        }
        Command::Solve { model, truncation } => {
            let params = model.build().map_err(Failure::Usage)?;
            echo["model"] = model.echo();
            let coeffs = solve(&params, &truncation.options()).map_err(usage)?;
            echo["truncation"] = json!({
                "n_max": coeffs.n_max, "c_max": coeffs.c_max, "method": coeffs.method,
                "truncation_error_estimate": coeffs.truncation_error_estimate, "max_tail_mass": coeffs.max_tail_mass,
            });
            sink.table("coefficients.csv", |w| coeffs.write_csv(w))?;
        }
        Command::H { model, truncation, x, points } => {
            let params = model.build().map_err(Failure::Usage)?;
            echo["model"] = model.echo();
            let coeffs = solve(&params, &truncation.options()).map_err(usage)?;
            echo["truncation"] = json!({ "n_max": coeffs.n_max, "c_max": coeffs.c_max });
            match x {
                Some(x) => {
                    let h = eval_h(&coeffs, *x).map_err(usage)?;
                    sink.table("h.csv", |w| writeln!(w, "x,h\n{x},{h:.17e}"))?;
                }
                None => {
                    if *points < 2 {
                        return Err(usage("--points must be at least 2"));
                    }
                    let curve = HCurve::evaluate(&coeffs, &unit_grid(*points)).map_err(usage)?;
                    sink.table("h.csv", |w| curve.write_csv(w))?;
                }
            }
        }
        Command::SimL { model, n, cycles } => {
            let params = model.build().map_err(Failure::Usage)?;
            echo["model"] = model.echo();
            echo["cycles"] = json!(cycles);
            let ns: Vec<usize> = (1..=*n).collect();
            let est = estimate_alpha(&params, &ns, &AlphaOptions { cycles: *cycles, seed, ..Default::default() }).map_err(usage)?;
            sink.table("alpha.csv", |w| write_estimates_csv(&est, w))?;
        }
        Command::SimD { model, n, replicates, cap } => {
            let params = model.build().map_err(Failure::Usage)?;
            echo["model"] = model.echo();
            echo["replicates"] = json!(replicates);
            echo["state_cap"] = json!(cap);
            if *n < 2 {
                return Err(usage("--n must be at least 2"));
            }
            let ns: Vec<usize> = (2..=*n).collect();
            let opts = OmegaOptions { replicates: *replicates, seed, state_cap: *cap, ..Default::default() };
            let est = estimate_omega(&params, &ns, &opts).map_err(usage)?;
            sink.table("omega.csv", |w| {
                writeln!(w, "n,estimate,stderr,lower,upper,hits,escaped_infinity,escaped_cap,censored")?;
                for e in &est {
                    let s = &e.estimate;
                    writeln!(
                        w,
                        "{},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{},{}",
                        s.n, s.estimate, s.stderr, s.lower, s.upper, e.hits, e.escaped_infinity, e.escaped_cap, e.censored
                    )?;
                }
                Ok(())
            })?;
        }
        Command::SimK { model, k, replicates } => {
            let params = model.build().map_err(Failure::Usage)?;
            echo["model"] = model.echo();
            echo["replicates"] = json!(replicates);
            let est = estimate_t1(&params, k, *replicates, seed).map_err(usage)?;
            sink.table("t1.csv", |w| {
                writeln!(w, "k,mean,stderr,ratio,replicates")?;
                for e in &est {
                    writeln!(w, "{},{:.17e},{:.17e},{:.17e},{}", e.k, e.mean, e.stderr, e.ratio, e.replicates)?;
                }
                Ok(())
            })?;
        }
        Command::VerifyDuality { model, configs, horizon, levels, trace } => {
            let builtin: Vec<_> = DUALITY_PRESETS.iter().map(|&(l, s, t, n, _)| (l, s, t, n)).collect();
            let models = model.build_or(&builtin).map_err(Failure::Usage)?;
            let horizons: Vec<f64> = if models.len() > 1 && horizon.is_none() {
                DUALITY_PRESETS.iter().map(|p| p.4).collect()
            } else {
                vec![horizon.unwrap_or(1.0); models.len()]
            };
            echo["model"] = if models.len() > 1 { json!("built-in duality sets") } else { model.echo() };
            echo["configs"] = json!(configs);
            echo["horizons"] = json!(horizons);
            if horizons.iter().any(|h| !(*h > 0.0)) || *levels == 0 {
                return Err(usage("--horizon must be positive and --levels at least 1"));
            }
            let ls: Vec<u64> = (1..=*levels).collect();
            let pick = |i: u64| {
                let k = (i % models.len() as u64) as usize;
                (&models[k], horizons[k])
            };
            if let Some(path) = trace {
                let (p, h) = pick(0);
                let config = FlightConfig::sample(p, 32, h, seed, 0, 1 << 16);
                config.write_trace(io::BufWriter::new(fs::File::create(path)?))?;
            }
            let report = (0..*configs)
                .into_par_iter()
                .map(|i| {
                    let (p, h) = pick(i);
                    let mut config = FlightConfig::sample(p, 32, h, seed, i, 1 << 16);
                    verify_pathwise_duality(&mut config, &ls, &ls)
                })
                .reduce(DualityReport::default, |mut a, b| {
                    a.merge(b);
                    a
                });
            echo["report"] = json!(report);
            println!(
                "{} violations in {} comparisons over {} configurations ({} exploded dual passes)",
                report.violations, report.comparisons, report.configs, report.exploded
            );
            if report.violations > 0 {
                return Err(Failure::Violation(format!("first violations (config, l, d, F(l), F^(d)): {:?}", report.examples)));
            }
        }
        Command::VerifyAsg { model, realizations, cap, budget, max_horizon } => {
            let models = model.build_or(&PROP1_PRESETS).map_err(Failure::Usage)?;
            echo["model"] = if models.len() > 1 { json!("built-in immortal-line sets") } else { model.echo() };
            let opts = Prop1Options { realizations: *realizations, cap: *cap, seed, max_horizon: *max_horizon, max_events: *budget };
            let mut reports = Vec::new();
            for p in &models {
                let report = verify_prop1(p, &opts).map_err(usage)?;
                println!(
                    "{}: {} mismatches in {} assignments over {} realizations (largest far end {}, {} skipped)",
                    p.lambda, report.mismatches, report.assignments, report.realizations, report.max_final_count, report.skipped
                );
                reports.push(report);
            }
            echo["reports"] = json!(reports);
            let failing: Vec<_> = reports.iter().filter(|r| r.mismatches > 0).map(|r| &r.failing).collect();
            if !failing.is_empty() {
                return Err(Failure::Violation(format!("failing realizations: {failing:?}")));
            }
        }
        Command::Preset { name, cycles, replicates } => {
            let mut opts = ExperimentOptions { seed, ..Default::default() };
            if let Some(c) = cycles {
                opts.cycles = *c;
            }
            if let Some(r) = replicates {
                opts.omega_replicates = *r;
                opts.t1_replicates = *r;
            }
            let report = run_preset(name, &opts)
                .ok_or_else(|| usage(format!("unknown preset {name}; known: {}", PRESET_NAMES.join(", "))))?;
            echo["options"] = json!(opts);
            echo["report"] = json!(report);
            println!("{:<4} {:<9} {:<72} {:>9}  detail", "crit", "result", "check", "seconds");
            for c in &report.checks {
                println!(
                    "{:<4} {:<9} {:<72} {:>9.2}  {}",
                    c.criterion,
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.seconds,
                    c.detail
                );
            }
            println!("preset {name}: {}", if report.passed() { "pass" } else { "FAIL" });
            if !report.passed() {
                return Err(Failure::Violation(format!("preset {name} failed")));
            }
        }
    }
    Ok(())
}
