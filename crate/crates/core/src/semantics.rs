//! Operational semantics: programs compiled to flat code, executed over
//! global configurations that own the trace, the components and the
//! attacker's knowledge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::attacker::{fill_shape, leaked_terms, synthesize_bounded, Knowledge, SynthLimits};
use crate::ids::{ParticipantId, SessionRef};
use crate::label::Label;
use crate::lang::ast::{Cmd, Expr, ForkTarget, LabelExpr, Var};
use crate::monitor::{on_append, ProtocolSpec, Violation, WitnessLedger};
use crate::term::{terms_equal, Term};
use crate::trace::{Event, EventKind, ProtoEvent, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SemError {
    #[error("{0}")]
    Compile(String),
    #[error("component {comp}: {msg}")]
    Runtime { comp: usize, msg: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CorruptionMode {
    #[default]
    None,
    /// The attacker may corrupt any participant's long-term state.
    Participant,
    /// Participant corruption, plus corruption of single sessions.
    Session,
}

impl CorruptionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CorruptionMode::None => "none",
            CorruptionMode::Participant => "participant",
            CorruptionMode::Session => "session",
        }
    }
}

impl fmt::Display for CorruptionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CorruptionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(CorruptionMode::None),
            "participant" => Ok(CorruptionMode::Participant),
            "session" => Ok(CorruptionMode::Session),
            _ => Err(format!(
                "unknown corruption mode '{s}' (expected none, participant or session)"
            )),
        }
    }
}

/// Knobs of the transition relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepOptions {
    pub synth_depth: usize,
    pub corruption: CorruptionMode,
    /// Lets the attacker drop receivable messages.
    pub drops: bool,
    /// Run a component from one receive to the next in a single transition.
    pub atomic_local: bool,
    /// Discard deliveries after which the receiver ends without appending
    /// anything. Only applies with `atomic_local`.
    pub prune_dead_receives: bool,
    /// Corruption becomes available only once every listed kind occurred.
    pub corrupt_after: Vec<EventKind>,
    /// Instruction budget of a single transition.
    pub fuel: usize,
    /// Maximum number of injected messages per configuration.
    pub inject_cap: usize,
    /// The `attacker` command has no effect, so messages are only delivered
    /// as sent.
    pub passive: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            synth_depth: 3,
            corruption: CorruptionMode::None,
            drops: false,
            atomic_local: false,
            prune_dead_receives: false,
            corrupt_after: Vec::new(),
            fuel: 100_000,
            inject_cap: 4096,
            passive: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Owner {
    /// The bootstrap program.
    System,
    Attacker,
    Participant(ParticipantId),
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::System => f.write_str("system"),
            Owner::Attacker => f.write_str("attacker"),
            Owner::Participant(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Ins {
    Do(Cmd),
    /// Jump to the target unless the condition is true.
    Unless(Expr, usize),
    Jump(usize),
    Fork(ForkTarget, Arc<[Var]>, usize),
}

/// A program compiled to flat code blocks; block 0 is the entry point.
#[derive(Clone, Debug)]
pub struct Program {
    blocks: Vec<Vec<Ins>>,
}

impl Program {
    pub fn compile(c: &Cmd) -> Result<Program, SemError> {
        let mut p = Program { blocks: Vec::new() };
        p.block(c)?;
        Ok(p)
    }

    fn block(&mut self, c: &Cmd) -> Result<usize, SemError> {
        let id = self.blocks.len();
        self.blocks.push(Vec::new());
        let mut code = Vec::new();
        self.emit(c, &mut code)?;
        self.blocks[id] = code;
        Ok(id)
    }

    fn emit(&mut self, c: &Cmd, code: &mut Vec<Ins>) -> Result<(), SemError> {
        match c {
            Cmd::Seq(cs) => {
                for c in cs {
                    self.emit(c, code)?;
                }
            }
            Cmd::If(e, a, b) => {
                let test = code.len();
                code.push(Ins::Jump(0));
                self.emit(a, code)?;
                let skip = code.len();
                code.push(Ins::Jump(0));
                code[test] = Ins::Unless(e.clone(), code.len());
                self.emit(b, code)?;
                code[skip] = Ins::Jump(code.len());
            }
            Cmd::While(e, b) => {
                let test = code.len();
                code.push(Ins::Jump(0));
                self.emit(b, code)?;
                code.push(Ins::Jump(test));
                code[test] = Ins::Unless(e.clone(), code.len());
            }
            Cmd::Fork { target, vars, body } => {
                let id = self.block(body)?;
                code.push(Ins::Fork(target.clone(), vars.clone().into(), id));
            }
            Cmd::Repeat(..) | Cmd::Run(_) => {
                return Err(SemError::Compile(
                    "repeat and run must be expanded before execution".into(),
                ))
            }
            c => code.push(Ins::Do(c.clone())),
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Ready,
    Waiting(Var),
    Choosing(Var),
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub owner: Owner,
    pub sid: u32,
    block: usize,
    pc: usize,
    pub vars: Arc<BTreeMap<Var, Term>>,
    /// Variables handed over at fork time: the long-term state revealed by
    /// participant corruption.
    pub long_term: Arc<[Var]>,
    pub snap: Trace,
    pub status: Status,
}

impl Hash for Component {
    fn hash<H: Hasher>(&self, h: &mut H) {
        // A snapshot is identified by its length as a prefix of the trace.
        (
            &self.owner,
            self.sid,
            self.block,
            self.pc,
            &self.vars,
            &self.long_term,
            self.snap.len(),
            &self.status,
        )
            .hash(h);
    }
}

impl Component {
    pub fn session(&self) -> Option<SessionRef> {
        match &self.owner {
            Owner::Participant(p) => Some(SessionRef::new(p.clone(), self.sid)),
            _ => None,
        }
    }

    pub fn get(&self, x: &str) -> Term {
        self.vars.get(x).cloned().unwrap_or(Term::Undef)
    }

    fn set(&mut self, x: &Var, v: Term) {
        Arc::make_mut(&mut self.vars).insert(x.clone(), v);
    }

    /// Value of `e` in this component's state. Total: anything ill-typed
    /// evaluates to `Undef`.
    pub fn eval(&self, e: &Expr) -> Term {
        match e {
            Expr::Var(x) => self.get(x),
            Expr::Lit(t) => t.clone(),
            Expr::Tuple(es) => Term::tuple(es.iter().map(|e| self.eval(e)).collect()),
            Expr::Proj(e, i) => self.eval(e).project(*i),
            Expr::Eq(a, b) => {
                let (a, b) = (self.eval(a), self.eval(b));
                Term::Bool(a != Term::Undef && b != Term::Undef && terms_equal(&a, &b))
            }
            Expr::Not(e) => Term::Bool(!truthy(&self.eval(e))),
            Expr::And(a, b) => Term::Bool(truthy(&self.eval(a)) && truthy(&self.eval(b))),
            Expr::PkOf(e) => Term::pk(self.eval(e)),
            Expr::SelfName => match &self.owner {
                Owner::Participant(p) => Term::Name(p.clone()),
                _ => Term::Undef,
            },
            Expr::Sid => Term::Int(i64::from(self.sid)),
        }
    }
}

pub fn truthy(t: &Term) -> bool {
    *t == Term::Bool(true)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CorruptTarget {
    Participant(ParticipantId),
    Session(SessionRef),
}

/// A global system configuration.
#[derive(Clone, Debug)]
pub struct Config {
    pub trace: Trace,
    pub comps: Vec<Arc<Component>>,
    pub knowledge: Knowledge,
    pub ledger: WitnessLedger,
    pub attacker_active: bool,
    pub corrupted: BTreeSet<CorruptTarget>,
    sessions: BTreeMap<ParticipantId, u32>,
    next_nonce: u32,
    /// First monitor violation on the path to this configuration.
    pub monitor: Option<Violation>,
}

impl Config {
    /// 128-bit fingerprint of the configuration's observable state.
    pub fn fingerprint(&self) -> u128 {
        let half = |salt: u64| {
            let mut h = std::collections::hash_map::DefaultHasher::new();
            salt.hash(&mut h);
            self.trace.hash(&mut h);
            self.comps.hash(&mut h);
            self.attacker_active.hash(&mut h);
            self.corrupted.hash(&mut h);
            h.finish()
        };
        (u128::from(half(0x9e37_79b9)) << 64) | u128::from(half(0x7f4a_7c15))
    }
}

/// What a transition did, for diagnostics and replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Step(usize),
    Deliver {
        comp: usize,
        msg: Term,
        injected: bool,
    },
    Choose {
        comp: usize,
        term: Term,
    },
    Corrupt(CorruptTarget),
    Drop(Term),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Step(i) => write!(f, "step {i}"),
            Action::Deliver {
                comp,
                msg,
                injected,
            } => {
                write!(
                    f,
                    "{} {msg} to {comp}",
                    if *injected { "inject" } else { "deliver" }
                )
            }
            Action::Choose { comp, term } => write!(f, "choose {term} in {comp}"),
            Action::Corrupt(CorruptTarget::Participant(p)) => write!(f, "corrupt {p}"),
            Action::Corrupt(CorruptTarget::Session(s)) => write!(f, "corrupt {s}"),
            Action::Drop(m) => write!(f, "drop {m}"),
        }
    }
}

type ShapeCache = Mutex<HashMap<Arc<BTreeSet<Term>>, Arc<Vec<Term>>>>;

pub struct Semantics<'a> {
    pub program: &'a Program,
    pub spec: &'a ProtocolSpec,
    pub opts: &'a StepOptions,
    /// Shape instances by analyzed attacker knowledge.
    shapes: ShapeCache,
}

impl<'a> Semantics<'a> {
    pub fn new(program: &'a Program, spec: &'a ProtocolSpec, opts: &'a StepOptions) -> Self {
        Semantics {
            program,
            spec,
            opts,
            shapes: Mutex::default(),
        }
    }

    /// The bootstrap component alone, on a trace rooted at the public
    /// alphabet.
    pub fn initial(&self) -> Config {
        let trace = Trace::new(self.spec.alphabet.iter().cloned());
        let mut boot = Component {
            owner: Owner::System,
            sid: 0,
            block: 0,
            pc: 0,
            vars: Arc::default(),
            long_term: Arc::from(Vec::new()),
            snap: trace.clone(),
            status: Status::Ready,
        };
        self.settle(&mut boot);
        Config {
            knowledge: Knowledge::from_trace(&trace),
            trace,
            comps: vec![Arc::new(boot)],
            ledger: WitnessLedger::default(),
            attacker_active: false,
            corrupted: BTreeSet::new(),
            sessions: BTreeMap::new(),
            next_nonce: 1,
            monitor: None,
        }
    }

    fn code(&self, c: &Component) -> &[Ins] {
        &self.program.blocks[c.block]
    }

    fn settle(&self, c: &mut Component) {
        c.status = match self.code(c).get(c.pc) {
            None => Status::Done,
            Some(Ins::Do(Cmd::Recv(x))) => Status::Waiting(x.clone()),
            Some(Ins::Do(Cmd::Choose(x))) => Status::Choosing(x.clone()),
            Some(_) => Status::Ready,
        };
    }

    /// Every successor of `cfg`, in a canonical order.
    pub fn successors(&self, cfg: &Config) -> Result<Vec<(Action, Config)>, SemError> {
        let mut out = Vec::new();
        let receivable = cfg.trace.receivable();
        let mut injectable: Option<Vec<Term>> = None;
        for (i, c) in cfg.comps.iter().enumerate() {
            match &c.status {
                Status::Done => {}
                Status::Ready => {
                    let mut next = cfg.clone();
                    self.run(&mut next, i, None)?;
                    out.push((Action::Step(i), next));
                }
                Status::Waiting(_) => {
                    for m in &receivable {
                        if let Some(next) = self.deliver(cfg, i, m, false)? {
                            out.push((
                                Action::Deliver {
                                    comp: i,
                                    msg: m.clone(),
                                    injected: false,
                                },
                                next,
                            ));
                        }
                    }
                    if cfg.attacker_active && c.owner != Owner::Attacker {
                        let cands =
                            injectable.get_or_insert_with(|| self.injectable(cfg, &receivable));
                        for m in cands.iter() {
                            if let Some(next) = self.deliver(cfg, i, m, true)? {
                                out.push((
                                    Action::Deliver {
                                        comp: i,
                                        msg: m.clone(),
                                        injected: true,
                                    },
                                    next,
                                ));
                            }
                        }
                    }
                }
                Status::Choosing(x) => {
                    for t in self.choice_pool(cfg) {
                        let mut next = cfg.clone();
                        self.run(&mut next, i, Some((x.clone(), t.clone())))?;
                        out.push((Action::Choose { comp: i, term: t }, next));
                    }
                }
            }
        }
        if cfg.attacker_active {
            for target in self.corruptible(cfg) {
                let mut next = cfg.clone();
                self.corrupt(&mut next, target.clone(), None)?;
                out.push((Action::Corrupt(target), next));
            }
            if self.opts.drops {
                for m in &receivable {
                    let mut next = cfg.clone();
                    self.append(&mut next, Event::Drop(m.clone()), None)?;
                    out.push((Action::Drop(m.clone()), next));
                }
            }
        }
        Ok(out)
    }

    /// Messages the built-in attacker may inject: instances of the declared
    /// shapes up to the synthesis depth that are not already on the network.
    pub fn injectable(&self, cfg: &Config, receivable: &[Term]) -> Vec<Term> {
        let key = cfg.knowledge.analyzed_arc();
        let cached = self.shapes.lock().unwrap().get(&key).cloned();
        let all = match cached {
            Some(v) => v,
            None => {
                let mut all = BTreeSet::new();
                for shape in &self.spec.shapes {
                    all.extend(fill_shape(
                        shape,
                        &cfg.knowledge,
                        &self.spec.alphabet,
                        self.opts.synth_depth,
                        self.opts.inject_cap,
                    ));
                }
                let v = Arc::new(all.into_iter().collect::<Vec<_>>());
                self.shapes.lock().unwrap().insert(key, v.clone());
                v
            }
        };
        let on_net: BTreeSet<&Term> = receivable.iter().collect();
        all.iter()
            .filter(|m| !on_net.contains(m))
            .take(self.opts.inject_cap)
            .cloned()
            .collect()
    }

    fn choice_pool(&self, cfg: &Config) -> Vec<Term> {
        let atoms: BTreeSet<Term> = self.spec.alphabet.iter().cloned().collect();
        synthesize_bounded(&cfg.knowledge, 1, &atoms, SynthLimits::default())
            .into_iter()
            .collect()
    }

    fn corruptible(&self, cfg: &Config) -> Vec<CorruptTarget> {
        if self.opts.corruption == CorruptionMode::None {
            return Vec::new();
        }
        let gated = self.opts.corrupt_after.iter().any(|k| {
            !cfg.trace
                .iter_rev()
                .any(|e| e.as_proto().is_some_and(|pe| &pe.kind == k))
        });
        if gated {
            return Vec::new();
        }
        let mut out = Vec::new();
        for c in &cfg.comps {
            if let Owner::Participant(p) = &c.owner {
                let t = CorruptTarget::Participant(p.clone());
                if !cfg.corrupted.contains(&t) && !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        if self.opts.corruption == CorruptionMode::Session {
            for s in cfg.comps.iter().filter_map(|c| c.session()) {
                let t = CorruptTarget::Session(s);
                if !cfg.corrupted.contains(&t) && !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out
    }

    /// Appends the corruption event for `target`; a no-op if it was
    /// corrupted before.
    fn corrupt(
        &self,
        cfg: &mut Config,
        target: CorruptTarget,
        by: Option<usize>,
    ) -> Result<(), SemError> {
        if !cfg.corrupted.insert(target.clone()) {
            return Ok(());
        }
        let e = match &target {
            CorruptTarget::Participant(p) => {
                let vals: Vec<Term> = cfg
                    .comps
                    .iter()
                    .filter(|c| c.owner == Owner::Participant(p.clone()))
                    .flat_map(|c| c.long_term.iter().map(|x| c.get(x)).collect::<Vec<_>>())
                    .filter(|t| *t != Term::Undef)
                    .collect();
                Event::corrupt_participant(p.clone(), leaked_terms(&vals))
            }
            CorruptTarget::Session(s) => {
                let vals: Vec<Term> = cfg
                    .comps
                    .iter()
                    .filter(|c| c.session().as_ref() == Some(s))
                    .flat_map(|c| c.vars.values().cloned().collect::<Vec<_>>())
                    .filter(|t| *t != Term::Undef)
                    .collect();
                Event::corrupt_session(s.clone(), leaked_terms(&vals))
            }
        };
        self.append(cfg, e, by)
    }

    fn deliver(
        &self,
        cfg: &Config,
        i: usize,
        m: &Term,
        injected: bool,
    ) -> Result<Option<Config>, SemError> {
        let Status::Waiting(x) = &cfg.comps[i].status else {
            return Ok(None);
        };
        let pruning = self.opts.atomic_local && self.opts.prune_dead_receives;
        if injected && pruning {
            // Dry-run the receiver without the injected send first.
            let mut probe = cfg.clone();
            let before = probe.trace.len();
            self.run(&mut probe, i, Some((x.clone(), m.clone())))?;
            if probe.comps[i].status == Status::Done && probe.trace.len() == before {
                return Ok(None);
            }
        }
        let mut next = cfg.clone();
        if injected {
            self.append(&mut next, Event::Send(m.clone()), None)?;
        }
        let before = next.trace.len();
        self.run(&mut next, i, Some((x.clone(), m.clone())))?;
        let prune = pruning && next.comps[i].status == Status::Done && next.trace.len() == before;
        Ok((!prune).then_some(next))
    }

    /// Appends `e` after running it past the monitor. A monitor violation is
    /// recorded on the configuration and execution continues.
    fn append(&self, cfg: &mut Config, e: Event, by: Option<usize>) -> Result<(), SemError> {
        let (verdict, ledger) = on_append(&e, &cfg.trace, self.spec, &cfg.ledger);
        if let Err(v) = verdict {
            cfg.monitor.get_or_insert(v);
        }
        cfg.ledger = ledger;
        let leaked = e.attacker_terms();
        if !leaked.is_empty() {
            cfg.knowledge = cfg.knowledge.extend(leaked);
        }
        cfg.trace = cfg.trace.append(e).map_err(|err| SemError::Runtime {
            comp: by.unwrap_or(0),
            msg: err.to_string(),
        })?;
        if let Some(i) = by {
            Arc::make_mut(&mut cfg.comps[i]).snap = cfg.trace.clone();
        }
        Ok(())
    }

    /// Runs component `i`, first binding a received or chosen value when
    /// `input` is given. Executes one instruction, or with `atomic_local`
    /// everything up to the next blocking point.
    fn run(&self, cfg: &mut Config, i: usize, input: Option<(Var, Term)>) -> Result<(), SemError> {
        let err = |msg: String| SemError::Runtime { comp: i, msg };
        let mut executed = 0usize;
        if let Some((x, v)) = input {
            let c = Arc::make_mut(&mut cfg.comps[i]);
            c.set(&x, v);
            c.pc += 1;
            c.snap = cfg.trace.clone();
            executed = 1;
        }
        loop {
            {
                let c = Arc::make_mut(&mut cfg.comps[i]);
                self.settle(c);
                if c.status != Status::Ready || (executed > 0 && !self.opts.atomic_local) {
                    return Ok(());
                }
            }
            if executed > self.opts.fuel {
                return Err(err("instruction budget exhausted without blocking".into()));
            }
            executed += 1;
            let c = cfg.comps[i].clone();
            match &self.code(&c)[c.pc] {
                Ins::Jump(l) => Arc::make_mut(&mut cfg.comps[i]).pc = *l,
                Ins::Unless(e, l) => {
                    let target = if truthy(&c.eval(e)) { c.pc + 1 } else { *l };
                    Arc::make_mut(&mut cfg.comps[i]).pc = target;
                }
                Ins::Fork(target, vars, block) => {
                    let owner = match target {
                        ForkTarget::Attacker => Owner::Attacker,
                        ForkTarget::Participant(e) => match c.eval(e) {
                            Term::Name(p) => Owner::Participant(p),
                            t => return Err(err(format!("cannot fork as {t}"))),
                        },
                    };
                    let sid = match &owner {
                        Owner::Participant(p) => {
                            let n = cfg.sessions.entry(p.clone()).or_insert(0);
                            *n += 1;
                            *n
                        }
                        _ => 0,
                    };
                    let mut child = Component {
                        owner,
                        sid,
                        block: *block,
                        pc: 0,
                        vars: Arc::new(vars.iter().map(|x| (x.clone(), c.get(x))).collect()),
                        long_term: vars.clone(),
                        snap: c.snap.clone(),
                        status: Status::Ready,
                    };
                    self.settle(&mut child);
                    cfg.comps.push(Arc::new(child));
                    Arc::make_mut(&mut cfg.comps[i]).pc += 1;
                }
                Ins::Do(cmd) => {
                    self.exec(cfg, i, &c, cmd)?;
                    Arc::make_mut(&mut cfg.comps[i]).pc += 1;
                }
            }
        }
    }

    fn exec(&self, cfg: &mut Config, i: usize, c: &Component, cmd: &Cmd) -> Result<(), SemError> {
        let err = |msg: String| SemError::Runtime { comp: i, msg };
        let set = |cfg: &mut Config, x: &Var, v: Term| Arc::make_mut(&mut cfg.comps[i]).set(x, v);
        match cmd {
            Cmd::Skip => {}
            Cmd::Assign(x, e) => set(cfg, x, c.eval(e)),
            Cmd::Send(e) => self.append(cfg, Event::Send(c.eval(e)), Some(i))?,
            Cmd::Nonce {
                var,
                label,
                unique_for,
            } => {
                let l = self.nonce_label(c, label.as_ref()).map_err(err)?;
                let n = Term::nonce(cfg.next_nonce, l);
                cfg.next_nonce += 1;
                if !cfg.trace.fresh(&n).unwrap_or(false) {
                    return Err(err(format!("nonce {n} is not fresh")));
                }
                set(cfg, var, n.clone());
                self.append(cfg, Event::create_nonce(n, unique_for.clone()), Some(i))?;
            }
            Cmd::Hash(x, e) => set(cfg, x, Term::hash(c.eval(e))),
            Cmd::Pk(x, e) => set(cfg, x, Term::pk(c.eval(e))),
            Cmd::Enc(x, k, m) => set(cfg, x, Term::aenc(c.eval(k), c.eval(m))),
            Cmd::Sign(x, k, m) => set(cfg, x, Term::sig(c.eval(k), c.eval(m))),
            Cmd::Exp(x, b, e) => {
                let v = Term::exp(&c.eval(b), c.eval(e)).unwrap_or(Term::Undef);
                set(cfg, x, v);
            }
            Cmd::Kdf(x, k, es) => set(
                cfg,
                x,
                Term::kdf(*k, es.iter().map(|e| c.eval(e)).collect()),
            ),
            Cmd::Dec { out, ok, sk, ct } => {
                let sk = c.eval(sk);
                let plain = match c.eval(ct) {
                    Term::AEnc(key, m) => match &*key {
                        Term::Pk(k) if sk != Term::Undef && terms_equal(k, &sk) => {
                            Some((*m).clone())
                        }
                        _ => None,
                    },
                    _ => None,
                };
                set(cfg, ok, Term::Bool(plain.is_some()));
                set(cfg, out, plain.unwrap_or(Term::Undef));
            }
            Cmd::Verify { out, ok, pk, sig } => {
                let pk = c.eval(pk);
                let payload = match c.eval(sig) {
                    Term::Sig(k, m) if terms_equal(&Term::pk((*k).clone()), &pk) => {
                        Some((*m).clone())
                    }
                    _ => None,
                };
                set(cfg, ok, Term::Bool(payload.is_some()));
                set(cfg, out, payload.unwrap_or(Term::Undef));
            }
            Cmd::Drop(e) => self.append(cfg, Event::Drop(c.eval(e)), Some(i))?,
            Cmd::Learn(e) => self.append(cfg, Event::Extend(c.eval(e)), Some(i))?,
            Cmd::Corrupt(p, s) => {
                let Term::Name(pid) = c.eval(p) else {
                    return Err(err(format!("cannot corrupt {}", c.eval(p))));
                };
                let target = match s.as_ref().map(|s| c.eval(s)) {
                    None => CorruptTarget::Participant(pid),
                    Some(Term::Int(n)) if n >= 0 => {
                        CorruptTarget::Session(SessionRef::new(pid, n as u32))
                    }
                    Some(t) => return Err(err(format!("{t} is not a session number"))),
                };
                self.corrupt(cfg, target, Some(i))?;
            }
            Cmd::Emit(k, args) => {
                let Owner::Participant(p) = &c.owner else {
                    return Err(err(format!("only participants may emit {k}")));
                };
                let pe = ProtoEvent {
                    kind: k.clone(),
                    args: args.iter().map(|e| c.eval(e)).collect(),
                    actor: p.clone(),
                    session: crate::ids::SessionId(c.sid),
                };
                self.append(cfg, Event::Proto(pe), Some(i))?;
            }
            Cmd::Attacker => cfg.attacker_active = !self.opts.passive,
            Cmd::Recv(_) | Cmd::Choose(_) => {
                unreachable!("blocking commands are handled by settle")
            }
            Cmd::Seq(_)
            | Cmd::If(..)
            | Cmd::While(..)
            | Cmd::Fork { .. }
            | Cmd::Repeat(..)
            | Cmd::Run(_) => {
                unreachable!("control flow is compiled away")
            }
        }
        Ok(())
    }

    fn nonce_label(&self, c: &Component, l: Option<&LabelExpr>) -> Result<Label, String> {
        let name = |e: &Expr| match c.eval(e) {
            Term::Name(p) => Ok(p),
            t => Err(format!("{t} is not a participant name")),
        };
        Ok(match (l, &c.owner) {
            (None, Owner::Participant(p)) => Label::readers([p.clone()]),
            (None, _) | (Some(LabelExpr::Public), _) => Label::Public,
            (Some(LabelExpr::Readers(es)), _) => {
                Label::readers(es.iter().map(name).collect::<Result<Vec<_>, _>>()?)
            }
            (Some(LabelExpr::Sessions(ps)), _) => Label::sessions(
                ps.iter()
                    .map(|(p, s)| match c.eval(s) {
                        Term::Int(n) if n >= 0 => Ok(SessionRef::new(name(p)?, n as u32)),
                        t => Err(format!("{t} is not a session number")),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            (Some(LabelExpr::OwnSession), _) => match c.session() {
                Some(s) => Label::sessions([s]),
                None => return Err("only participants own sessions".into()),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_program;

    fn setup(src: &str) -> (Program, ProtocolSpec) {
        (
            Program::compile(&parse_program(src).unwrap()).unwrap(),
            ProtocolSpec::default(),
        )
    }

    #[test]
    fn send_updates_trace_and_snapshot() {
        let (p, spec) = setup("fork as A () { send(1) }");
        let opts = StepOptions::default();
        let sem = Semantics::new(&p, &spec, &opts);
        let c0 = sem.initial();
        let s = sem.successors(&c0).unwrap();
        assert_eq!(s.len(), 1);
        let c1 = &s[0].1;
        assert_eq!(c1.comps.len(), 2);
        let s = sem.successors(c1).unwrap();
        assert_eq!(s.len(), 1);
        let c2 = &s[0].1;
        assert_eq!(c2.trace.len(), 2);
        assert_eq!(c2.trace.last(), &Event::Send(Term::int(1)));
        assert_eq!(c2.comps[1].snap, c2.trace);
        assert!(sem.successors(c2).unwrap().is_empty());
    }

    #[test]
    fn recv_on_empty_network_blocks() {
        let (p, spec) = setup("fork as A () { recv(x) }");
        let opts = StepOptions::default();
        let sem = Semantics::new(&p, &spec, &opts);
        let c1 = sem.successors(&sem.initial()).unwrap().remove(0).1;
        assert!(matches!(c1.comps[1].status, Status::Waiting(_)));
        assert!(sem.successors(&c1).unwrap().is_empty());
    }

    #[test]
    fn dec_success_and_failure() {
        let opts = StepOptions {
            atomic_local: true,
            ..StepOptions::default()
        };
        for (key, ok) in [("\"k\"", true), ("\"j\"", false)] {
            let src = format!("c := enc(pk(\"k\"), 7); dec(m, ok, {key}, c)");
            let (p, spec) = setup(&src);
            let sem = Semantics::new(&p, &spec, &opts);
            let c = sem.successors(&sem.initial()).unwrap().remove(0).1;
            assert_eq!(c.comps[0].get("ok"), Term::Bool(ok));
            assert_eq!(
                c.comps[0].get("m"),
                if ok { Term::int(7) } else { Term::Undef }
            );
        }
    }

    #[test]
    fn eval_is_total() {
        let (p, spec) = setup("x := <1, 2>.5; y := undef == undef; z := 1 == 1");
        let opts = StepOptions {
            atomic_local: true,
            ..StepOptions::default()
        };
        let sem = Semantics::new(&p, &spec, &opts);
        let c = sem.successors(&sem.initial()).unwrap().remove(0).1;
        assert_eq!(c.comps[0].get("x"), Term::Undef);
        assert_eq!(c.comps[0].get("y"), Term::Bool(false));
        assert_eq!(c.comps[0].get("z"), Term::Bool(true));
    }
}
