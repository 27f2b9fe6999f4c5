//! Flights, their duals and coupled Poisson flight configurations.
//!
//! A flight is an order-preserving map of `ℕ ∪ {∞}` that leaves ∞ fixed;
//! its dual is `f̂(d) = min f⁻¹({d, d+1, …})`. Composing sampled flights in
//! time order moves the pruned line count L, composing their duals in the
//! reverse order moves D, and `F(ℓ) ≥ d ⇔ F̂(d) ≤ ℓ` holds path by path.

use std::collections::BTreeSet;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::params::ModelParams;
use crate::rng::{domain, mix, substream, unit_from_key};
use crate::simulate::events::{Fraction, MergerEvents};

/// The state ∞.
pub const INF: u64 = u64::MAX;

/// Dual merger scans give up (and report ∞) beyond this many levels.
pub const SCAN_LIMIT: u64 = 1 << 24;

/// The participating set η of a merger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Membership {
    Explicit(BTreeSet<u64>),
    /// `{first, second}` plus every level `ℓ > second` with
    /// `unit_from_key(mix(key, ℓ)) < z`.
    Lazy { first: u64, second: u64, z: f64, key: u64 },
    /// η = ℕ.
    All,
}

impl Membership {
    pub fn contains(&self, level: u64) -> bool {
        match self {
            Membership::Explicit(set) => set.contains(&level),
            Membership::Lazy { first, second, z, key } => {
                level == *first || level == *second || (level > *second && unit_from_key(mix(&[*key, level])) < *z)
            }
            Membership::All => level >= 1,
        }
    }

    pub fn min(&self) -> u64 {
        match self {
            Membership::Explicit(set) => set.first().copied().unwrap_or(INF),
            Membership::Lazy { first, .. } => *first,
            Membership::All => 1,
        }
    }

    /// Second-smallest member: the lowest level η̃ = η \ {min η} touches.
    pub fn second(&self) -> u64 {
        match self {
            Membership::Explicit(set) => set.iter().nth(1).copied().unwrap_or(INF),
            Membership::Lazy { second, .. } => *second,
            Membership::All => 2,
        }
    }

    /// `|[ℓ] ∩ η̃|`
    pub fn removed_upto(&self, l: u64) -> u64 {
        let second = self.second();
        if l < second {
            return 0;
        }
        match self {
            Membership::Explicit(set) => set.range(second..=l).count() as u64,
            Membership::All => l - 1,
            Membership::Lazy { .. } => 1 + (second + 1..=l).filter(|&k| self.contains(k)).count() as u64,
        }
    }

    /// Members up to `limit`, for trace dumps.
    pub fn members_upto(&self, limit: u64) -> Vec<u64> {
        match self {
            Membership::Explicit(set) => set.range(..=limit).copied().collect(),
            _ => (1..=limit).filter(|&k| self.contains(k)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Flight {
    Merger(Membership),
    Star(u64),
    Cross(u64),
    Circle(u64),
}

impl Flight {
    /// Lowest state the flight can move, forward or dual.
    pub fn reach(&self) -> u64 {
        match self {
            Flight::Merger(m) => m.second(),
            Flight::Star(i) => *i,
            Flight::Cross(i) | Flight::Circle(i) => i + 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Flight::Merger(_) => "merger",
            Flight::Star(_) => "star",
            Flight::Cross(_) => "cross",
            Flight::Circle(_) => "circle",
        }
    }
}

/// Forward action on the line count.
pub fn apply(f: &Flight, l: u64) -> u64 {
    if l == INF {
        return INF;
    }
    match f {
        Flight::Merger(m) => l - m.removed_upto(l),
        Flight::Star(i) => {
            if l >= *i {
                l + 1
            } else {
                l
            }
        }
        Flight::Cross(i) => {
            if l > *i {
                l - 1
            } else {
                l
            }
        }
        Flight::Circle(i) => {
            if l > *i {
                *i
            } else {
                l
            }
        }
    }
}

/// Dual action `f̂(d) = min f⁻¹({d, d+1, …})`.
pub fn dual_apply(f: &Flight, d: u64) -> u64 {
    if d == INF {
        return INF;
    }
    match f {
        Flight::Star(i) => {
            if d > *i {
                d - 1
            } else {
                d
            }
        }
        Flight::Cross(i) => {
            if d > *i {
                d + 1
            } else {
                d
            }
        }
        Flight::Circle(i) => {
            if d > *i {
                INF
            } else {
                d
            }
        }
        Flight::Merger(m) => dual_merger(m, d),
    }
}

/// Smallest `ℓ` with `|[ℓ] \ η̃| = d`, scanning levels upward.
fn dual_merger(m: &Membership, d: u64) -> u64 {
    let second = m.second();
    if d < second {
        return d;
    }
    match m {
        Membership::All => {
            if d == 1 {
                1
            } else {
                INF
            }
        }
        Membership::Explicit(set) => {
            // every member of η̃ below the answer shifts it up by one
            let mut l = d;
            for &k in set.range(second..) {
                if k <= l {
                    l += 1;
                } else {
                    break;
                }
            }
            l
        }
        Membership::Lazy { .. } => {
            // levels 1..second-1 are kept, `second` is removed
            let mut kept = second - 1;
            let mut l = second;
            while kept < d {
                l += 1;
                if l > SCAN_LIMIT {
                    log::warn!("dual merger scan passed {SCAN_LIMIT} levels; reporting infinity");
                    return INF;
                }
                if !m.contains(l) {
                    kept += 1;
                }
            }
            l
        }
    }
}

/// Dual by brute-force preimage search over `ℓ ≤ limit` (∞ if none).
pub fn dual_by_search(f: &Flight, d: u64, limit: u64) -> u64 {
    if d == INF {
        return INF;
    }
    (1..=limit).find(|&l| apply(f, l) >= d).unwrap_or(INF)
}

#[derive(Debug, Clone, Serialize)]
pub struct TimedFlight {
    /// In `[-horizon, 0]`.
    pub time: f64,
    /// `kind << 60 | level << 28 | index`, the tie-break for equal times.
    pub id: u64,
    pub flight: Flight,
}

const KIND_MERGER: u64 = 0;
const KIND_STAR: u64 = 1;
const KIND_CROSS: u64 = 2;
const KIND_CIRCLE: u64 = 3;

/// Outcome of a pass that needed more levels than the window cap allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Exploded {
    pub window: u64,
}

/// Poisson flight configuration on `[-horizon, 0]`.
///
/// Each level carries independent streams: stars, crosses and circles at
/// rates σ, θν1, θν0, and mergers whose second-smallest member is that level
/// at rate `r_j`. Levels are sampled from per-level substreams, so the window
/// grows lazily and its contents do not depend on the growth order.
#[derive(Debug, Clone)]
pub struct FlightConfig {
    pub horizon: f64,
    seed: u64,
    index: u64,
    sigma: f64,
    theta_nu0: f64,
    theta_nu1: f64,
    mergers: MergerEvents,
    window: u64,
    cap: u64,
    /// Sorted by `(time, id)`.
    events: Vec<TimedFlight>,
}

impl FlightConfig {
    pub fn sample(params: &ModelParams, window: u64, horizon: f64, seed: u64, index: u64, cap: u64) -> Self {
        assert!(window >= 1 && horizon > 0.0 && cap >= window);
        let mut config = Self {
            horizon,
            seed,
            index,
            sigma: params.sigma,
            theta_nu0: params.theta_nu0(),
            theta_nu1: params.theta_nu1(),
            mergers: MergerEvents::new(&params.lambda, cap as usize),
            window: 0,
            cap,
            events: Vec::new(),
        };
        config.extend_to(window);
        config
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn events(&self) -> &[TimedFlight] {
        &self.events
    }

    fn stream_times(&self, level: u64, kind: u64, rate: f64) -> (rand_chacha::ChaCha8Rng, Vec<f64>) {
        let mut rng = substream(self.seed, domain::FLIGHT_CONFIG, mix(&[self.index, level, kind]));
        let mean = rate * self.horizon;
        let count = if mean > 0.0 { Poisson::new(mean).expect("finite mean").sample(&mut rng) as usize } else { 0 };
        let times = (0..count).map(|_| -self.horizon * rng.random::<f64>()).collect();
        (rng, times)
    }

    fn extend_to(&mut self, window: u64) {
        let window = window.min(self.cap);
        let mut fresh = Vec::new();
        for level in self.window + 1..=window {
            let id = |kind: u64, k: usize| (kind << 60) | (level << 28) | k as u64;
            for (kind, rate) in [(KIND_STAR, self.sigma), (KIND_CROSS, self.theta_nu1), (KIND_CIRCLE, self.theta_nu0)] {
                let (_, times) = self.stream_times(level, kind, rate);
                for (k, time) in times.into_iter().enumerate() {
                    let flight = match kind {
                        KIND_STAR => Flight::Star(level),
                        KIND_CROSS => Flight::Cross(level),
                        _ => Flight::Circle(level),
                    };
                    fresh.push(TimedFlight { time, id: id(kind, k), flight });
                }
            }
            if level >= 2 {
                let j = level as usize;
                let (mut rng, times) = self.stream_times(level, KIND_MERGER, self.mergers.rate_at(j));
                for (k, time) in times.into_iter().enumerate() {
                    let first = rng.random_range(1..level);
                    let membership = match self.mergers.sample_fraction_at(j, &mut rng) {
                        Fraction::Pair => Membership::Explicit([first, level].into_iter().collect()),
                        Fraction::All => Membership::All,
                        Fraction::Bernoulli(z) => Membership::Lazy {
                            first,
                            second: level,
                            z,
                            key: mix(&[self.seed, self.index, id(KIND_MERGER, k)]),
                        },
                    };
                    fresh.push(TimedFlight { time, id: id(KIND_MERGER, k), flight: Flight::Merger(membership) });
                }
            }
        }
        self.window = self.window.max(window);
        self.events.extend(fresh);
        self.events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.id.cmp(&b.id)));
    }

    /// Grow the window to cover `state`; `Err` when that passes the cap.
    fn cover(&mut self, state: u64) -> Result<(), Exploded> {
        if state == INF || state <= self.window {
            return Ok(());
        }
        if state > self.cap {
            return Err(Exploded { window: self.window });
        }
        self.extend_to(state.max(2 * self.window));
        Ok(())
    }

    /// `F_{-s,0}(ℓ)`: flights applied in increasing time order.
    pub fn forward(&mut self, l: u64) -> Result<u64, Exploded> {
        'restart: loop {
            self.cover(l)?;
            let mut state = l;
            for e in &self.events {
                if state != INF && e.flight.reach() <= state {
                    state = apply(&e.flight, state);
                    if state != INF && state > self.window {
                        self.cover(state)?;
                        continue 'restart;
                    }
                }
            }
            return Ok(state);
        }
    }

    /// `F̂_{0,s}(d)`: dual flights applied in decreasing time order.
    pub fn dual(&mut self, d: u64) -> Result<u64, Exploded> {
        'restart: loop {
            self.cover(d)?;
            let mut state = d;
            for e in self.events.iter().rev() {
                if state == INF {
                    break;
                }
                // a flight moves neither pass below its reach
                if e.flight.reach() <= state {
                    state = dual_apply(&e.flight, state);
                    if state != INF && state > self.window {
                        self.cover(state)?;
                        continue 'restart;
                    }
                }
            }
            return Ok(state);
        }
    }

    /// JSON lines: time, id, kind, level, and members of η up to the window.
    pub fn write_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for e in &self.events {
            let (level, members) = match &e.flight {
                Flight::Merger(m) => (m.second(), Some(m.members_upto(self.window))),
                Flight::Star(i) | Flight::Cross(i) | Flight::Circle(i) => (*i, None),
            };
            let line = serde_json::json!({
                "time": e.time,
                "id": e.id,
                "kind": e.flight.kind(),
                "level": level,
                "members": members,
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct DualityReport {
    pub configs: u64,
    pub comparisons: u64,
    pub violations: u64,
    /// Passes that outgrew the window cap; counted with `F̂ = ∞`.
    pub exploded: u64,
    pub events: u64,
    /// First few violations as `(config index, ℓ, d, F(ℓ), F̂(d))`.
    pub examples: Vec<(u64, u64, u64, u64, u64)>,
}

impl DualityReport {
    pub fn merge(&mut self, other: DualityReport) {
        self.configs += other.configs;
        self.comparisons += other.comparisons;
        self.violations += other.violations;
        self.exploded += other.exploded;
        self.events += other.events;
        for e in other.examples {
            if self.examples.len() < 10 {
                self.examples.push(e);
            }
        }
    }
}

/// Check `1{F(ℓ) ≥ d} = 1{F̂(d) ≤ ℓ}` for every pair in the two lists.
pub fn verify_pathwise_duality(config: &mut FlightConfig, ls: &[u64], ds: &[u64]) -> DualityReport {
    let mut report = DualityReport { configs: 1, ..Default::default() };
    // an exploded forward pass cannot happen for the recurrent L at desk
    // scale; treat it like the dual case
    let forward: Vec<u64> = ls.iter().map(|&l| config.forward(l).unwrap_or(INF)).collect();
    let dual: Vec<u64> = ds
        .iter()
        .map(|&d| {
            config.dual(d).unwrap_or_else(|_| {
                report.exploded += 1;
                INF
            })
        })
        .collect();
    for (&l, &fl) in ls.iter().zip(&forward) {
        for (&d, &fd) in ds.iter().zip(&dual) {
            report.comparisons += 1;
            if (fl >= d) != (fd <= l) {
                report.violations += 1;
                if report.examples.len() < 10 {
                    report.examples.push((config.index, l, d, fl, fd));
                }
            }
        }
    }
    report.events = config.events.len() as u64;
    report
}

/// Draw a random flight of the given kind with all relevant levels `≤ max_level`.
pub fn sample_flight<R: Rng + ?Sized>(kind: &str, mergers: &MergerEvents, max_level: u64, rng: &mut R) -> Flight {
    match kind {
        "star" => Flight::Star(rng.random_range(1..=max_level)),
        "cross" => Flight::Cross(rng.random_range(1..=max_level)),
        "circle" => Flight::Circle(rng.random_range(1..=max_level)),
        _ => {
            let j = rng.random_range(2..=max_level.min(mergers.j_max() as u64));
            let first = rng.random_range(1..j);
            match mergers.sample_fraction_at(j as usize, rng) {
                Fraction::Pair => Flight::Merger(Membership::Explicit([first, j].into_iter().collect())),
                Fraction::All => Flight::Merger(Membership::All),
                Fraction::Bernoulli(z) => Flight::Merger(Membership::Lazy { first, second: j, z, key: rng.random() }),
            }
        }
    }
}

/// One jump of D from `d ≥ 2` built from an explicitly sampled flight:
/// the flight is drawn from the events that move `d` and its dual applied.
pub fn sample_dual_jump<R: Rng + ?Sized>(params: &ModelParams, mergers: &MergerEvents, d: u64, rng: &mut R) -> u64 {
    assert!(d >= 2 && d as usize <= mergers.j_max());
    let m = (d - 1) as f64;
    let (s, c1, c0) = (m * params.sigma, m * params.theta_nu1(), m * params.theta_nu0());
    let merger = mergers.total(d as usize);
    let mut u = rng.random::<f64>() * (s + c1 + c0 + merger);
    let level = rng.random_range(1..d);
    let flight = if u < s {
        Flight::Star(level)
    } else if {
        u -= s;
        u < c1
    } {
        Flight::Cross(level)
    } else if {
        u -= c1;
        u < c0
    } {
        Flight::Circle(level)
    } else {
        let (j, fraction) = mergers.sample(d as usize, rng);
        let j = j as u64;
        let first = rng.random_range(1..j);
        Flight::Merger(match fraction {
            Fraction::Pair => Membership::Explicit([first, j].into_iter().collect()),
            Fraction::All => Membership::All,
            Fraction::Bernoulli(z) => Membership::Lazy { first, second: j, z, key: rng.random() },
        })
    };
    dual_apply(&flight, d)
}
