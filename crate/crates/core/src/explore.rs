//! Bounded breadth-first exploration of all interleavings of a scenario.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::lang::Scenario;
use crate::monitor::ViolationKind;
use crate::properties::Status;
use crate::semantics::{Config, CorruptionMode, Program, SemError, Semantics, StepOptions};
use crate::term::Term;
use crate::trace::{is_prefix, render_event, Event, EventKind, Trace};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error(transparent)]
    Semantics(#[from] SemError),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub initiators: usize,
    pub responders: usize,
    /// Maximum number of global transitions on any path.
    pub depth: usize,
    pub synth_depth: usize,
    pub corruption: CorruptionMode,
    pub workers: usize,
    pub drops: bool,
    pub atomic_local: bool,
    pub prune_dead_receives: bool,
    pub corrupt_after: Vec<EventKind>,
    /// Check the secrecy lemma at every monitor-accepted state.
    pub check_lemma: bool,
    /// Keep every terminal trace in the result.
    pub collect_terminal: bool,
    /// Stop after this many distinct states.
    pub max_states: Option<usize>,
    /// Honest runs only: the attacker observes but never acts.
    pub passive: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            initiators: 1,
            responders: 1,
            depth: 40,
            synth_depth: 3,
            corruption: CorruptionMode::None,
            workers: 1,
            drops: false,
            atomic_local: true,
            prune_dead_receives: true,
            corrupt_after: Vec::new(),
            check_lemma: false,
            collect_terminal: false,
            max_states: None,
            passive: false,
        }
    }
}

impl Budget {
    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            synth_depth: self.synth_depth,
            corruption: self.corruption,
            drops: self.drops,
            atomic_local: self.atomic_local,
            prune_dead_receives: self.prune_dead_receives,
            corrupt_after: self.corrupt_after.clone(),
            passive: self.passive,
            ..StepOptions::default()
        }
    }
}

#[derive(Clone, Debug)]
pub struct PropertyOutcome {
    pub name: String,
    pub status: Status,
    /// Shortest violating trace found.
    pub counterexample: Option<Trace>,
    pub index: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ViolationRecord {
    /// `PROPERTY_VIOLATED` or a monitor violation kind.
    pub kind: String,
    pub trace_index: usize,
    pub event: String,
    pub reason: String,
    pub trace: Trace,
}

/// Failure counts of the per-transition sanity invariants.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InvariantStats {
    pub checked: u64,
    pub trace_prefix: u64,
    pub snapshot_prefix: u64,
    pub knowledge_monotone: u64,
    pub nonce_unique: u64,
}

impl InvariantStats {
    pub fn failures(&self) -> u64 {
        self.trace_prefix + self.snapshot_prefix + self.knowledge_monotone + self.nonce_unique
    }

    fn add(&mut self, o: &InvariantStats) {
        self.checked += o.checked;
        self.trace_prefix += o.trace_prefix;
        self.snapshot_prefix += o.snapshot_prefix;
        self.knowledge_monotone += o.knowledge_monotone;
        self.nonce_unique += o.nonce_unique;
    }
}

#[derive(Clone, Debug, Default)]
pub struct LemmaStats {
    pub checked: u64,
    pub failed: u64,
    /// First few failures: the trace and an attacker term that is neither
    /// public nor excused.
    pub examples: Vec<(Trace, Term)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    BoundedPass,
    Violation,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::BoundedPass => "BOUNDED-PASS",
            Outcome::Violation => "VIOLATION",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub scenario: String,
    pub budget: Budget,
    pub states_explored: usize,
    pub transitions: u64,
    pub traces_terminal: usize,
    pub properties: Vec<PropertyOutcome>,
    pub violations: Vec<ViolationRecord>,
    pub invariants: InvariantStats,
    pub lemma: LemmaStats,
    /// Some path was cut by the depth or state bound.
    pub bound_reached: bool,
    pub terminal: Vec<Trace>,
    pub wall_time: Duration,
}

impl Exploration {
    pub fn outcome(&self) -> Outcome {
        if !self.violations.is_empty() {
            Outcome::Violation
        } else if self.bound_reached {
            Outcome::BoundedPass
        } else {
            Outcome::Pass
        }
    }

    pub fn property(&self, name: &str) -> Option<&PropertyOutcome> {
        self.properties.iter().find(|p| p.name == name)
    }
}

struct Expanded {
    succs: Vec<Config>,
    inv: InvariantStats,
}

fn check_transition(parent: &Config, child: &Config, inv: &mut InvariantStats) {
    inv.checked += 1;
    if !is_prefix(&parent.trace, &child.trace) {
        inv.trace_prefix += 1;
    }
    if child
        .comps
        .iter()
        .any(|c| !is_prefix(&c.snap, &child.trace))
    {
        inv.snapshot_prefix += 1;
    }
    if !parent.knowledge.base().is_subset(child.knowledge.base()) {
        inv.knowledge_monotone += 1;
    }
    let fresh = &child.trace.events()[parent.trace.len()..];
    let old: BTreeSet<&Term> = parent.trace.nonces_created().into_iter().collect();
    let mut new = BTreeSet::new();
    for e in fresh {
        if let Event::CreateNonce { nonce, .. } = e {
            if old.contains(nonce) || !new.insert(nonce) {
                inv.nonce_unique += 1;
            }
        }
    }
}

struct Checked {
    props: Vec<Option<(Trace, usize)>>,
    lemma: Option<Result<(), Term>>,
}

/// Explores every interleaving of `scenario` within `budget`.
pub fn explore(scenario: &Scenario, budget: &Budget) -> Result<Exploration, ExploreError> {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(budget.workers.max(1))
        .build()
        .map_err(|e| ExploreError::Pool(e.to_string()))?;
    let program = Program::compile(&scenario.instantiate(budget.initiators, budget.responders))?;
    let opts = budget.step_options();
    let spec = &*scenario.spec;
    let sem = Semantics::new(&program, spec, &opts);

    let mut result = Exploration {
        scenario: scenario.name.clone(),
        budget: budget.clone(),
        states_explored: 0,
        transitions: 0,
        traces_terminal: 0,
        properties: scenario
            .properties
            .iter()
            .map(|p| PropertyOutcome {
                name: p.name.clone(),
                status: Status::HoldsUpToBound,
                counterexample: None,
                index: None,
            })
            .collect(),
        violations: Vec::new(),
        invariants: InvariantStats::default(),
        lemma: LemmaStats::default(),
        bound_reached: false,
        terminal: Vec::new(),
        wall_time: Duration::ZERO,
    };
    let mut monitor_seen: BTreeMap<ViolationKind, ViolationRecord> = BTreeMap::new();

    let check_state = |cfg: &Config, open: &[bool]| -> Checked {
        let props = scenario
            .properties
            .iter()
            .zip(open)
            .map(|(p, &open)| {
                if !open {
                    return None;
                }
                let v = p.decl.evaluate_with(&cfg.trace, spec, &cfg.knowledge);
                v.is_violated()
                    .then(|| (cfg.trace.clone(), v.index.unwrap_or(cfg.trace.len() - 1)))
            })
            .collect();
        let lemma = (budget.check_lemma && cfg.monitor.is_none())
            .then(|| crate::monitor::secrecy_lemma_holds(&cfg.trace, &cfg.knowledge, &spec.labels));
        Checked { props, lemma }
    };

    let absorb = |result: &mut Exploration,
                  monitor_seen: &mut BTreeMap<_, _>,
                  cfg: &Config,
                  parent_ok: bool,
                  ch: Checked| {
        for (out, hit) in result.properties.iter_mut().zip(ch.props) {
            if let (Some((tr, idx)), None) = (hit, &out.counterexample) {
                out.status = Status::Violated;
                out.index = Some(idx);
                out.counterexample = Some(tr);
            }
        }
        if let Some(r) = ch.lemma {
            result.lemma.checked += 1;
            if let Err(t) = r {
                result.lemma.failed += 1;
                if result.lemma.examples.len() < 8 {
                    result.lemma.examples.push((cfg.trace.clone(), t));
                }
            }
        }
        if let (Some(v), true) = (&cfg.monitor, parent_ok) {
            monitor_seen
                .entry(v.kind)
                .or_insert_with(|| ViolationRecord {
                    kind: v.kind.as_str().to_string(),
                    trace_index: v.index,
                    event: v.event.clone(),
                    reason: v.reason.clone(),
                    trace: cfg.trace.prefix(v.index + 1),
                });
        }
    };

    let init = sem.initial();
    let mut seen: HashSet<u128> = HashSet::new();
    seen.insert(init.fingerprint());
    result.states_explored = 1;
    let open: Vec<bool> = vec![true; scenario.properties.len()];
    let ch = check_state(&init, &open);
    absorb(&mut result, &mut monitor_seen, &init, true, ch);

    let mut frontier = vec![init];
    let mut level = 0usize;
    'levels: while !frontier.is_empty() {
        if level >= budget.depth {
            result.bound_reached = true;
            break;
        }
        let expanded: Vec<Result<Expanded, SemError>> = pool.install(|| {
            frontier
                .par_iter()
                .map(|cfg| {
                    let succs: Vec<Config> =
                        sem.successors(cfg)?.into_iter().map(|(_, c)| c).collect();
                    let mut inv = InvariantStats::default();
                    for s in &succs {
                        check_transition(cfg, s, &mut inv);
                    }
                    Ok(Expanded { succs, inv })
                })
                .collect()
        });
        let mut next: Vec<(Config, bool)> = Vec::new();
        for (parent, exp) in frontier.iter().zip(expanded) {
            let exp = exp?;
            result.invariants.add(&exp.inv);
            result.transitions += exp.succs.len() as u64;
            if exp.succs.is_empty() {
                result.traces_terminal += 1;
                if budget.collect_terminal {
                    result.terminal.push(parent.trace.clone());
                }
            }
            for s in exp.succs {
                if seen.insert(s.fingerprint()) {
                    next.push((s, parent.monitor.is_none()));
                    if budget.max_states.is_some_and(|m| seen.len() >= m) {
                        result.bound_reached = true;
                        result.states_explored = seen.len();
                        let open: Vec<bool> = result
                            .properties
                            .iter()
                            .map(|p| p.counterexample.is_none())
                            .collect();
                        for (cfg, ok) in &next {
                            let ch = check_state(cfg, &open);
                            absorb(&mut result, &mut monitor_seen, cfg, *ok, ch);
                        }
                        break 'levels;
                    }
                }
            }
        }
        result.states_explored = seen.len();
        let open: Vec<bool> = result
            .properties
            .iter()
            .map(|p| p.counterexample.is_none())
            .collect();
        let checked: Vec<Checked> = pool.install(|| {
            next.par_iter()
                .map(|(cfg, _)| check_state(cfg, &open))
                .collect()
        });
        for ((cfg, ok), ch) in next.iter().zip(checked) {
            absorb(&mut result, &mut monitor_seen, cfg, *ok, ch);
        }
        frontier = next.into_iter().map(|(c, _)| c).collect();
        level += 1;
    }

    for p in &result.properties {
        if let (Some(tr), Some(idx)) = (&p.counterexample, p.index) {
            result.violations.push(ViolationRecord {
                kind: "PROPERTY_VIOLATED".into(),
                trace_index: idx,
                event: tr.get(idx).map(render_event).unwrap_or_default(),
                reason: format!("{} violated", p.name),
                trace: tr.clone(),
            });
        }
    }
    result.violations.extend(monitor_seen.into_values());
    result.wall_time = start.elapsed();
    Ok(result)
}

/// Whether `target` is the trace of some configuration reachable within
/// `budget`. Only paths whose traces stay prefixes of `target` are followed.
pub fn is_reachable(
    scenario: &Scenario,
    budget: &Budget,
    target: &Trace,
) -> Result<bool, ExploreError> {
    let program = Program::compile(&scenario.instantiate(budget.initiators, budget.responders))?;
    let opts = budget.step_options();
    let sem = Semantics::new(&program, &scenario.spec, &opts);
    let init = sem.initial();
    if !is_prefix(&init.trace, target) {
        return Ok(false);
    }
    let mut seen = HashSet::new();
    let mut stack = vec![(init, 0usize)];
    while let Some((cfg, depth)) = stack.pop() {
        if cfg.trace == *target {
            return Ok(true);
        }
        if depth >= budget.depth || !seen.insert(cfg.fingerprint()) {
            continue;
        }
        for (_, s) in sem.successors(&cfg)?.into_iter().rev() {
            if is_prefix(&s.trace, target) {
                stack.push((s, depth + 1));
            }
        }
    }
    Ok(false)
}
