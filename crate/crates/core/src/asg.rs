//! Ordered lookdown Λ-ASG with mutation marks, its pruning to the
//! p-LD-Λ-ASG, forward type resolution, and the immortal-line rule.
//!
//! Orientation: backward time `u` runs from the single sampled line at
//! `u = 0` to the far end, where types are assigned and then resolved
//! forward toward `u = 0`.

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::{domain, substream};
use crate::simulate::events::{Fraction, MergerEvents};
use crate::stats::ratio_estimate;

pub type LineId = u64;

/// A transition element, in levels of the graph it acts on (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Element {
    /// Sorted participating levels.
    Merger(Vec<usize>),
    Star(usize),
    Cross(usize),
    Circle(usize),
}

/// Line-level record used by type resolution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum GraphEvent {
    /// `lines[0]` is the parent; the others end here (backward).
    Merger { lines: Vec<LineId> },
    /// `continuing` branches; `incoming` starts here (backward).
    Star { continuing: LineId, incoming: LineId },
    /// The line takes type `ty` toward `u = 0`.
    Mark { line: LineId, ty: u8 },
    /// A pruned line ends (backward); forward it appears with type `ty`.
    Kill { line: LineId, ty: u8 },
}

#[derive(Debug, Clone, Serialize)]
pub struct Graph {
    /// In increasing backward time.
    pub events: Vec<(f64, GraphEvent)>,
    pub root: LineId,
    /// Lines alive at the far end, in level order.
    pub far_end: Vec<LineId>,
}

/// Forward resolution: `(sampled type, far-end ancestor)`. The ancestor is
/// `None` when the traced line was created by a `Kill`.
pub fn resolve_types(graph: &Graph, types: &HashMap<LineId, u8>) -> Result<(u8, Option<LineId>)> {
    let mut state: HashMap<LineId, (u8, Option<LineId>)> = HashMap::new();
    for &line in &graph.far_end {
        let ty = *types
            .get(&line)
            .ok_or_else(|| Error::Inconsistent(format!("no far-end type for line {line}")))?;
        state.insert(line, (ty, Some(line)));
    }
    let missing = |line: LineId| Error::Inconsistent(format!("line {line} used before it exists"));
    for (_, event) in graph.events.iter().rev() {
        match event {
            GraphEvent::Mark { line, ty } => {
                state.get_mut(line).ok_or_else(|| missing(*line))?.0 = *ty;
            }
            GraphEvent::Kill { line, ty } => {
                state.insert(*line, (*ty, None));
            }
            GraphEvent::Merger { lines } => {
                let parent = *state.get(&lines[0]).ok_or_else(|| missing(lines[0]))?;
                for &child in &lines[1..] {
                    state.insert(child, parent);
                }
            }
            GraphEvent::Star { continuing, incoming } => {
                let inc = state.remove(incoming).ok_or_else(|| missing(*incoming))?;
                let cont = state.get_mut(continuing).ok_or_else(|| missing(*continuing))?;
                if inc.0 == 0 {
                    *cont = inc;
                }
            }
        }
    }
    state.get(&graph.root).copied().ok_or_else(|| missing(graph.root))
}

/// Lines of the pruned graph by level, plus the immune level `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrunedState {
    pub lines: Vec<LineId>,
    pub m: usize,
}

impl PrunedState {
    pub fn start(root: LineId) -> Self {
        Self { lines: vec![root], m: 1 }
    }

    pub fn count(&self) -> usize {
        self.lines.len()
    }

    pub fn immune_line(&self) -> LineId {
        self.lines[self.m - 1]
    }

    /// Apply one element; `fresh` names the incoming branch of a star.
    /// Returns the induced graph events (empty for a no-op).
    pub fn step(&mut self, element: &Element, fresh: LineId) -> Vec<GraphEvent> {
        let count = self.count();
        match element {
            Element::Merger(levels) => {
                let hit: Vec<usize> = levels.iter().copied().filter(|&k| k <= count).collect();
                if hit.len() < 2 {
                    return vec![];
                }
                let immune = self.immune_line();
                let ids: Vec<LineId> = hit.iter().map(|&k| self.lines[k - 1]).collect();
                let follows = if ids[1..].contains(&immune) { ids[0] } else { immune };
                self.lines.retain(|l| !ids[1..].contains(l));
                self.m = self.position(follows);
                vec![GraphEvent::Merger { lines: ids }]
            }
            &Element::Star(i) => {
                if i > count {
                    return vec![];
                }
                let continuing = self.lines[i - 1];
                self.lines.insert(i - 1, fresh);
                if self.m >= i {
                    self.m += 1;
                }
                vec![GraphEvent::Star { continuing, incoming: fresh }]
            }
            &Element::Cross(i) => {
                if i > count {
                    return vec![];
                }
                let line = self.lines.remove(i - 1);
                if i == self.m {
                    self.lines.push(line);
                    self.m = count;
                    vec![GraphEvent::Mark { line, ty: 1 }]
                } else {
                    if self.m > i {
                        self.m -= 1;
                    }
                    vec![GraphEvent::Kill { line, ty: 1 }]
                }
            }
            &Element::Circle(i) => {
                if i > count {
                    return vec![];
                }
                let mut out = vec![GraphEvent::Mark { line: self.lines[i - 1], ty: 0 }];
                // the type of a line cut above a circle never matters
                out.extend(self.lines.drain(i..).map(|line| GraphEvent::Kill { line, ty: 1 }));
                self.m = i;
                out
            }
        }
    }

    fn position(&self, line: LineId) -> usize {
        1 + self.lines.iter().position(|&l| l == line).expect("line present")
    }

    /// `1 ≤ M ≤ L` and no line twice.
    pub fn is_consistent(&self) -> bool {
        let mut ids = self.lines.clone();
        ids.sort_unstable();
        ids.dedup();
        self.m >= 1 && self.m <= self.count() && ids.len() == self.count()
    }
}

/// Functional form of [`PrunedState::step`].
pub fn step_pruned(state: &PrunedState, element: &Element, fresh: LineId) -> PrunedState {
    let mut next = state.clone();
    next.step(element, fresh);
    next
}

/// Draw the next element acting on `count` levels, with its waiting time.
/// `None` when nothing can happen.
fn next_element<R: Rng + ?Sized>(
    params: &ModelParams,
    mergers: &MergerEvents,
    count: usize,
    rng: &mut R,
) -> Option<(f64, Element)> {
    let n = count as f64;
    let merge = mergers.total(count);
    let (star, cross, circle) = (n * params.sigma, n * params.theta_nu1(), n * params.theta_nu0());
    let total = merge + star + cross + circle;
    if total <= 0.0 {
        return None;
    }
    let hold = Exp::new(total).expect("positive rate").sample(rng);
    let mut u = rng.random::<f64>() * total;
    if u < merge {
        let (j, fraction) = mergers.sample(count, rng);
        let first = rng.random_range(1..j);
        let levels = match fraction {
            Fraction::Pair => vec![first, j],
            Fraction::All => (1..=count).collect(),
            Fraction::Bernoulli(z) => {
                let mut v = vec![first, j];
                v.extend((j + 1..=count).filter(|_| rng.random::<f64>() < z));
                v
            }
        };
        return Some((hold, Element::Merger(levels)));
    }
    u -= merge;
    let level = rng.random_range(1..=count);
    let element = if u < star {
        Element::Star(level)
    } else if u < star + cross {
        Element::Cross(level)
    } else {
        Element::Circle(level)
    };
    Some((hold, element))
}

#[derive(Debug, Clone, Serialize)]
pub struct PrunedRun {
    /// Effective elements with their times.
    pub elements: Vec<(f64, Element)>,
    pub graph: Graph,
    pub state: PrunedState,
    /// Time spent in each visited count: `(count, holding time)`.
    pub holds: Vec<(usize, f64)>,
    pub time: f64,
    pub exhausted: bool,
}

/// The pruned graph as a Markov chain from `(L, M) = (1, 1)` until it is
/// back at one line or `max_events` elements have been drawn.
pub fn simulate_pruned_until<R: Rng + ?Sized>(
    params: &ModelParams,
    mergers: &MergerEvents,
    max_events: u64,
    rng: &mut R,
) -> PrunedRun {
    let mut state = PrunedState::start(0);
    let mut next_id = 1;
    let mut run = PrunedRun {
        elements: vec![],
        graph: Graph { events: vec![], root: 0, far_end: vec![] },
        state: state.clone(),
        holds: vec![],
        time: 0.0,
        exhausted: false,
    };
    for _ in 0..max_events {
        let count = state.count();
        if count >= mergers.j_max() {
            run.exhausted = true;
            break;
        }
        let Some((hold, element)) = next_element(params, mergers, count, rng) else {
            break;
        };
        run.time += hold;
        run.holds.push((count, hold));
        let events = state.step(&element, next_id);
        next_id += 1;
        if !events.is_empty() {
            run.graph.events.extend(events.into_iter().map(|e| (run.time, e)));
            run.elements.push((run.time, element));
        }
        if state.count() == 1 {
            run.graph.far_end = state.lines.clone();
            run.state = state;
            return run;
        }
    }
    run.exhausted = true;
    run.graph.far_end = state.lines.clone();
    run.state = state;
    run
}

#[derive(Debug, Clone, Serialize)]
pub struct AsgRealization {
    pub elements: Vec<(f64, Element)>,
    pub graph: Graph,
    pub horizon: f64,
    pub exhausted: bool,
}

impl AsgRealization {
    pub fn final_count(&self) -> usize {
        self.graph.far_end.len()
    }

    /// JSON lines: time, kind, levels, line ids.
    pub fn write_dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for ((time, element), (_, event)) in self.elements.iter().zip(&self.graph.events) {
            let line = serde_json::json!({ "time": time, "element": element, "lines": event });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Unpruned ordered lookdown Λ-ASG from one line up to backward time
/// `horizon`, or until `max_events` or `max_lines` is reached.
pub fn build_unpruned<R: Rng + ?Sized>(
    params: &ModelParams,
    mergers: &MergerEvents,
    horizon: f64,
    max_events: u64,
    rng: &mut R,
) -> AsgRealization {
    let mut lines: Vec<LineId> = vec![0];
    let mut next_id = 1;
    let mut real = AsgRealization {
        elements: vec![],
        graph: Graph { events: vec![], root: 0, far_end: vec![] },
        horizon,
        exhausted: false,
    };
    let mut time = 0.0;
    let mut drawn = 0;
    loop {
        if lines.len() >= mergers.j_max() || drawn >= max_events {
            real.exhausted = true;
            break;
        }
        let Some((hold, element)) = next_element(params, mergers, lines.len(), rng) else {
            break;
        };
        drawn += 1;
        time += hold;
        if time > horizon {
            break;
        }
        let event = match &element {
            Element::Merger(levels) => {
                let ids: Vec<LineId> = levels.iter().map(|&k| lines[k - 1]).collect();
                lines.retain(|l| !ids[1..].contains(l));
                GraphEvent::Merger { lines: ids }
            }
            &Element::Star(i) => {
                let continuing = lines[i - 1];
                lines.insert(i - 1, next_id);
                next_id += 1;
                GraphEvent::Star { continuing, incoming: next_id - 1 }
            }
            &Element::Cross(i) => GraphEvent::Mark { line: lines[i - 1], ty: 1 },
            &Element::Circle(i) => GraphEvent::Mark { line: lines[i - 1], ty: 0 },
        };
        real.elements.push((time, element));
        real.graph.events.push((time, event));
    }
    real.graph.far_end = lines;
    real
}

#[derive(Debug, Clone, Serialize)]
pub struct Pruned {
    pub graph: Graph,
    pub state: PrunedState,
    /// Unpruned far-end line behind each pruned far-end line.
    pub origin: HashMap<LineId, LineId>,
}

/// Replay an unpruned realization from `u = 0` outward with the pruning
/// rules. Pruned lines keep the id of the unpruned line that created them;
/// `origin` follows them through mergers whose parent was pruned away.
pub fn prune(real: &AsgRealization) -> Pruned {
    let root = real.graph.root;
    let mut state = PrunedState::start(root);
    // unpruned id -> pruned id, and back
    let mut current: HashMap<LineId, LineId> = HashMap::from([(root, root)]);
    let mut origin: HashMap<LineId, LineId> = HashMap::from([(root, root)]);
    let mut graph = Graph { events: vec![], root, far_end: vec![] };
    let level_of = |state: &PrunedState, p: LineId| state.position(p);
    for (time, event) in &real.graph.events {
        let induced = match event {
            GraphEvent::Merger { lines } => {
                let mut present: Vec<LineId> = lines.iter().filter_map(|u| current.remove(u)).collect();
                if present.is_empty() {
                    continue;
                }
                present.sort_by_key(|&p| level_of(&state, p));
                let survivor = present[0];
                current.insert(lines[0], survivor);
                origin.insert(survivor, lines[0]);
                for p in &present[1..] {
                    origin.remove(p);
                }
                if present.len() < 2 {
                    continue;
                }
                let levels = present.iter().map(|&p| level_of(&state, p)).collect();
                state.step(&Element::Merger(levels), 0)
            }
            GraphEvent::Star { continuing, incoming } => {
                let Some(&p) = current.get(continuing) else { continue };
                current.insert(*incoming, *incoming);
                origin.insert(*incoming, *incoming);
                state.step(&Element::Star(level_of(&state, p)), *incoming)
            }
            GraphEvent::Mark { line, ty } => {
                let Some(&p) = current.get(line) else { continue };
                let level = level_of(&state, p);
                let element = if *ty == 0 { Element::Circle(level) } else { Element::Cross(level) };
                state.step(&element, 0)
            }
            GraphEvent::Kill { .. } => unreachable!("unpruned graphs carry no kills"),
        };
        for e in &induced {
            if let GraphEvent::Kill { line, .. } = e {
                if let Some(u) = origin.remove(line) {
                    current.remove(&u);
                }
            }
        }
        graph.events.extend(induced.into_iter().map(|e| (*time, e)));
    }
    graph.far_end = state.lines.clone();
    origin.retain(|p, _| state.lines.contains(p));
    Pruned { graph, state, origin }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Prop1Report {
    pub realizations: u64,
    /// Type assignments checked (each against both graphs).
    pub assignments: u64,
    pub mismatches: u64,
    /// Realizations drawn but skipped for exceeding the line cap or budget.
    pub skipped: u64,
    pub max_final_count: usize,
    /// Seeds of mismatching realizations.
    pub failing: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop1Options {
    pub realizations: u64,
    /// Largest pruned far-end count to enumerate.
    pub cap: usize,
    pub seed: u64,
    /// Horizons are uniform on `(0, max_horizon)`.
    pub max_horizon: f64,
    pub max_events: u64,
}

impl Default for Prop1Options {
    fn default() -> Self {
        Self { realizations: 500, cap: 8, seed: 1, max_horizon: 3.0, max_events: 100_000 }
    }
}

/// Check one realization against every type assignment of its pruned
/// far end. Returns `(assignments, mismatches)`.
pub fn check_realization<R: Rng + ?Sized>(real: &AsgRealization, pruned: &Pruned, rng: &mut R) -> Result<(u64, u64)> {
    let far = &pruned.graph.far_end;
    let l = far.len();
    let kept: Vec<LineId> = far.iter().map(|p| pruned.origin[p]).collect();
    let others: Vec<LineId> = real.graph.far_end.iter().copied().filter(|u| !kept.contains(u)).collect();
    let mut mismatches = 0;
    for mask in 0u64..(1 << l) {
        let ty = |k: usize| ((mask >> k) & 1) as u8;
        let level = (0..l).find(|&k| ty(k) == 0).unwrap_or(pruned.state.m - 1);
        let predicted = far[level];
        let pruned_types: HashMap<LineId, u8> = (0..l).map(|k| (far[k], ty(k))).collect();
        let (_, ancestor) = resolve_types(&pruned.graph, &pruned_types)?;
        let mut ok = ancestor == Some(predicted);
        for fill in 0..3u8 {
            let mut types: HashMap<LineId, u8> = (0..l).map(|k| (kept[k], ty(k))).collect();
            for &u in &others {
                types.insert(u, if fill < 2 { fill } else { rng.random_range(0..2) });
            }
            let (_, ancestor) = resolve_types(&real.graph, &types)?;
            ok &= ancestor == Some(pruned.origin[&predicted]);
        }
        if !ok {
            mismatches += 1;
        }
    }
    Ok((1 << l, mismatches))
}

/// The immortal line sits at the lowest type-0 far-end level of the pruned
/// graph, or at the immune level when every line has type 1. Checked
/// exhaustively against resolution on both the pruned and unpruned graphs.
pub fn verify_prop1(params: &ModelParams, opts: &Prop1Options) -> Result<Prop1Report> {
    params.require_recurrent()?;
    let mergers = MergerEvents::new(&params.lambda, 4096);
    let mut report = Prop1Report::default();
    let mut next = 0u64;
    let batch = 256u64;
    while report.realizations < opts.realizations {
        if next > 200 * opts.realizations.max(1) {
            return Err(Error::BudgetExhausted(next));
        }
        let outcomes: Vec<Option<(u64, usize, u64, u64)>> = (next..next + batch)
            .into_par_iter()
            .map(|i| -> Result<Option<(u64, usize, u64, u64)>> {
                let mut rng = substream(opts.seed, domain::ASG_UNPRUNED, i);
                let horizon = opts.max_horizon * rng.random::<f64>();
                let real = build_unpruned(params, &mergers, horizon, opts.max_events, &mut rng);
                let pruned = prune(&real);
                if real.exhausted || pruned.state.count() > opts.cap {
                    return Ok(None);
                }
                let mut types_rng = substream(opts.seed, domain::ASG_TYPES, i);
                let (n, bad) = check_realization(&real, &pruned, &mut types_rng)?;
                Ok(Some((i, pruned.state.count(), n, bad)))
            })
            .collect::<Result<_>>()?;
        next += batch;
        for outcome in outcomes {
            if report.realizations >= opts.realizations {
                break;
            }
            match outcome {
                None => report.skipped += 1,
                Some((i, count, n, bad)) => {
                    report.realizations += 1;
                    report.assignments += n;
                    report.mismatches += bad;
                    report.max_final_count = report.max_final_count.max(count);
                    if bad > 0 {
                        log::error!("immortal-line mismatch in realization {i} (seed {})", opts.seed);
                        report.failing.push(i);
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HPoint {
    pub x: f64,
    pub estimate: f64,
    pub stderr: f64,
}

/// `h(x) = E[1 - (1-x)^{L_eq}]` with `L_eq` sampled by regeneration cycles
/// of the pruned graph.
pub fn h_by_graph(params: &ModelParams, grid: &[f64], cycles: u64, seed: u64) -> Result<Vec<HPoint>> {
    params.require_recurrent()?;
    if params.sigma == 0.0 {
        return Ok(grid.iter().map(|&x| HPoint { x, estimate: x, stderr: 0.0 }).collect());
    }
    let mergers = MergerEvents::new(&params.lambda, 1 << 16);
    let runs: Vec<(Vec<f64>, f64)> = (0..cycles)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, domain::ASG_PRUNED, i);
            let run = simulate_pruned_until(params, &mergers, 100_000_000, &mut rng);
            if run.exhausted {
                return Err(Error::BudgetExhausted(run.holds.len() as u64));
            }
            let rewards = grid
                .iter()
                .map(|&x| run.holds.iter().map(|&(l, t)| t * (1.0 - (1.0 - x).powi(l as i32))).sum())
                .collect();
            Ok((rewards, run.time))
        })
        .collect::<Result<_>>()?;
    let lengths: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(grid
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let rewards: Vec<f64> = runs.iter().map(|r| r.0[k]).collect();
            let (estimate, stderr) = ratio_estimate(&rewards, &lengths);
            HPoint { x, estimate, stderr }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambda::parse_lambda;
    use crate::simulate::{estimate_alpha, AlphaOptions};

    fn params(spec: &str, sigma: f64, theta: f64, nu0: f64) -> ModelParams {
        ModelParams::new(parse_lambda(spec).unwrap(), sigma, theta, nu0).unwrap()
    }

    fn state(lines: &[LineId], m: usize) -> PrunedState {
        PrunedState { lines: lines.to_vec(), m }
    }

    #[test]
    fn transition_elements_by_hand() {
        let six = [10, 11, 12, 13, 14, 15];
        let s = step_pruned(&state(&six, 2), &Element::Merger(vec![1, 3, 5]), 0);
        assert_eq!(s, state(&[10, 11, 13, 15], 2));
        let s = step_pruned(&state(&six, 3), &Element::Cross(3), 0);
        assert_eq!(s, state(&[10, 11, 13, 14, 15, 12], 6));
        let s = step_pruned(&state(&six, 5), &Element::Circle(3), 0);
        assert_eq!(s, state(&[10, 11, 12], 3));
        let s = step_pruned(&state(&six, 5), &Element::Cross(3), 0);
        assert_eq!(s, state(&[10, 11, 13, 14, 15], 4));
        let s = step_pruned(&state(&six, 3), &Element::Star(3), 99);
        assert_eq!(s, state(&[10, 11, 99, 12, 13, 14, 15], 4));
        // immune line merged away follows its parent
        let s = step_pruned(&state(&six, 5), &Element::Merger(vec![2, 5]), 0);
        assert_eq!(s, state(&[10, 11, 12, 13, 15], 2));
        // out-of-range elements do nothing
        for e in [Element::Star(7), Element::Cross(7), Element::Circle(7), Element::Merger(vec![6, 8])] {
            assert_eq!(step_pruned(&state(&six, 5), &e, 0), state(&six, 5));
        }
    }

    #[test]
    fn random_streams_keep_levels_consistent() {
        let p = params("0.5*kingman + 0.5*beta:1.2,0.9", 1.0, 1.0, 0.4);
        let mergers = MergerEvents::new(&p.lambda, 512);
        let mut rng = substream(3, domain::ASG_PRUNED, 99);
        let mut s = PrunedState::start(0);
        for id in 1..20_000 {
            let (_, e) = next_element(&p, &mergers, s.count() + 2, &mut rng).unwrap();
            s.step(&e, id);
            assert!(s.is_consistent());
        }
    }

    fn star_graph(incoming_ty: u8, continuing_ty: u8) -> (Graph, HashMap<LineId, u8>) {
        let graph = Graph { events: vec![(0.5, GraphEvent::Star { continuing: 0, incoming: 1 })], root: 0, far_end: vec![1, 0] };
        (graph, HashMap::from([(1, incoming_ty), (0, continuing_ty)]))
    }

    #[test]
    fn resolution_by_hand() {
        let (g, t) = star_graph(1, 0);
        assert_eq!(resolve_types(&g, &t).unwrap(), (0, Some(0)));
        let (g, t) = star_graph(0, 1);
        assert_eq!(resolve_types(&g, &t).unwrap(), (0, Some(1)));
        let (g, t) = star_graph(1, 1);
        assert_eq!(resolve_types(&g, &t).unwrap(), (1, Some(0)));
        let g = Graph { events: vec![], root: 0, far_end: vec![0] };
        assert_eq!(resolve_types(&g, &HashMap::from([(0, 0)])).unwrap(), (0, Some(0)));
        let g = Graph { events: vec![(0.1, GraphEvent::Mark { line: 0, ty: 1 })], root: 0, far_end: vec![0] };
        assert_eq!(resolve_types(&g, &HashMap::from([(0, 0)])).unwrap(), (1, Some(0)));
    }

    #[test]
    fn neutral_graph_is_empty() {
        let p = params("kingman", 0.0, 0.0, 0.5);
        let mergers = MergerEvents::new(&p.lambda, 64);
        let mut rng = substream(1, domain::ASG_UNPRUNED, 0);
        let real = build_unpruned(&p, &mergers, 100.0, 1000, &mut rng);
        assert!(real.elements.is_empty() && !real.exhausted);
        let run = simulate_pruned_until(&p, &mergers, 1000, &mut rng);
        assert!(run.elements.is_empty());
        assert_eq!(run.state.count(), 1);
    }

    #[test]
    fn pruning_without_mutations_is_identity() {
        let p = params("point:0.5", 1.0, 0.0, 0.5);
        let mergers = MergerEvents::new(&p.lambda, 512);
        for i in 0..50 {
            let mut rng = substream(2, domain::ASG_UNPRUNED, i);
            let real = build_unpruned(&p, &mergers, 2.0, 10_000, &mut rng);
            let pruned = prune(&real);
            assert_eq!(pruned.graph.far_end, real.graph.far_end);
            assert_eq!(pruned.graph.events.len(), real.graph.events.len());
        }
    }

    #[test]
    fn pruning_only_removes_lines() {
        let p = params("uniform", 1.0, 2.0, 0.5);
        let mergers = MergerEvents::new(&p.lambda, 512);
        for i in 0..200 {
            let mut rng = substream(5, domain::ASG_UNPRUNED, i);
            let mut real = build_unpruned(&p, &mergers, 3.0, 10_000, &mut rng);
            let pruned = prune(&real);
            assert!(pruned.state.count() <= real.final_count());
            assert!(pruned.state.is_consistent());
            // a final circle on the line at pruned level 1 collapses the pruned graph
            let line = pruned.origin[&pruned.graph.far_end[0]];
            let level = 1 + real.graph.far_end.iter().position(|&u| u == line).unwrap();
            real.elements.push((4.0, Element::Circle(level)));
            real.graph.events.push((4.0, GraphEvent::Mark { line, ty: 0 }));
            let collapsed = prune(&real);
            assert_eq!((collapsed.state.count(), collapsed.state.m), (1, 1));
        }
    }

    #[test]
    fn immortal_line_rule_small_run() {
        for (spec, sigma, theta, nu0) in [("kingman", 1.0, 1.0, 0.5), ("point:0.6", 1.5, 1.0, 0.3)] {
            let p = params(spec, sigma, theta, nu0);
            let report = verify_prop1(&p, &Prop1Options { realizations: 60, ..Default::default() }).unwrap();
            assert_eq!(report.mismatches, 0, "{spec}: {report:?}");
            assert!(report.max_final_count >= 3);
        }
    }

    #[test]
    fn ancestor_survives_pruning() {
        let p = params("0.5*kingman + 0.5*point:0.5", 1.0, 1.5, 0.5);
        let mergers = MergerEvents::new(&p.lambda, 512);
        for i in 0..100 {
            let mut rng = substream(11, domain::ASG_UNPRUNED, i);
            let real = build_unpruned(&p, &mergers, 2.0, 10_000, &mut rng);
            let pruned = prune(&real);
            let kept: Vec<LineId> = pruned.origin.values().copied().collect();
            for _ in 0..20 {
                let types: HashMap<LineId, u8> = real.graph.far_end.iter().map(|&u| (u, rng.random_range(0..2))).collect();
                let (_, ancestor) = resolve_types(&real.graph, &types).unwrap();
                assert!(kept.contains(&ancestor.unwrap()));
            }
        }
    }

    #[test]
    fn unpruned_count_grows_like_branching() {
        let p = params("kingman", 1.0, 0.0, 0.5);
        let mergers = MergerEvents::new(&p.lambda, 64);
        let u = 0.05;
        let reps = 40_000;
        let counts: Vec<f64> = (0..reps)
            .map(|i| {
                let mut rng = substream(6, domain::ASG_UNPRUNED, i);
                build_unpruned(&p, &mergers, u, 1000, &mut rng).final_count() as f64
            })
            .collect();
        let (mean, se) = crate::stats::mean_and_stderr(&counts);
        // the u² coefficient (σ² - σ)/2 vanishes at σ = 1
        let expected = 1.0 + u;
        assert!((mean - expected).abs() < 4.0 * se + u * u, "{mean} vs {expected}");
    }

    #[test]
    fn pruned_laws_agree() {
        // far-end pruned count after a fixed horizon: pruning an unpruned
        // realization versus running the pruned chain directly
        let p = params("point:0.5", 1.0, 1.0, 0.5);
        let mergers = MergerEvents::new(&p.lambda, 512);
        let horizon = 1.5;
        let reps = 20_000u64;
        let mut a = vec![0.0; 6];
        let mut b = vec![0.0; 6];
        for i in 0..reps {
            let mut rng = substream(7, domain::ASG_UNPRUNED, i);
            let real = build_unpruned(&p, &mergers, horizon, 100_000, &mut rng);
            a[prune(&real).state.count().min(5)] += 1.0;
            let mut rng = substream(7, domain::ASG_PRUNED, i);
            let mut s = PrunedState::start(0);
            let mut t = 0.0;
            let mut id = 1;
            while let Some((hold, e)) = next_element(&p, &mergers, s.count(), &mut rng) {
                t += hold;
                if t > horizon {
                    break;
                }
                s.step(&e, id);
                id += 1;
            }
            b[s.count().min(5)] += 1.0;
        }
        for k in 1..6 {
            let (pa, pb) = (a[k] / reps as f64, b[k] / reps as f64);
            let se = ((pa * (1.0 - pa) + pb * (1.0 - pb)) / reps as f64).sqrt();
            assert!((pa - pb).abs() < 4.0 * se + 1e-12, "count {k}: {pa} vs {pb}");
        }
    }

    #[test]
    fn pruned_occupation_matches_alpha() {
        let p = params("uniform", 1.0, 0.5, 0.5);
        let mergers = MergerEvents::new(&p.lambda, 4096);
        let cycles = 20_000;
        let ns = [1usize, 2, 3];
        let mut rewards = vec![Vec::new(); ns.len()];
        let mut lengths = Vec::new();
        for i in 0..cycles {
            let mut rng = substream(8, domain::ASG_PRUNED, i);
            let run = simulate_pruned_until(&p, &mergers, 1_000_000, &mut rng);
            assert!(!run.exhausted);
            for (k, &n) in ns.iter().enumerate() {
                rewards[k].push(run.holds.iter().filter(|h| h.0 > n).map(|h| h.1).sum());
            }
            lengths.push(run.time);
        }
        let alpha = estimate_alpha(&p, &ns, &AlphaOptions { cycles, seed: 8, ..Default::default() }).unwrap();
        for (k, a) in alpha.iter().enumerate() {
            let (est, se) = ratio_estimate(&rewards[k], &lengths);
            assert!((est - a.estimate).abs() < 4.0 * (se * se + a.stderr * a.stderr).sqrt(), "n={}", a.n);
        }
    }

    #[test]
    fn graph_h_edges_and_neutral() {
        let p = params("kingman", 1.0, 1.0, 0.5);
        let h = h_by_graph(&p, &[0.0, 1.0], 200, 1).unwrap();
        assert_eq!((h[0].estimate, h[1].estimate), (0.0, 1.0));
        let p = params("kingman", 0.0, 1.0, 0.5);
        let h = h_by_graph(&p, &[0.3], 10, 1).unwrap();
        assert_eq!(h[0].estimate, 0.3);
    }

    #[test]
    fn graph_h_star_is_ln2() {
        let p = params("star", 1.0, 0.0, 0.5);
        let h = h_by_graph(&p, &[0.5], 40_000, 2).unwrap();
        assert!((h[0].estimate - 2f64.ln()).abs() < 4.0 * h[0].stderr, "{:?}", h[0]);
    }
}
