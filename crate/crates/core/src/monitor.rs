//! Runtime enforcement of the protocol's trace invariant and of linear
//! uniqueness witnesses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::attacker::{fill_shape, Knowledge};
use crate::ids::{NonceId, ParticipantId};
use crate::label::{flows_to, label_of, Label, LabelEnv};
use crate::pattern::{Bindings, Pattern};
use crate::term::Term;
use crate::trace::{render_event, Event, EventKind, ProtoEvent, Trace};

/// Condition over a trace prefix, evaluated under pattern bindings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cond {
    True,
    /// Some protocol event of this kind whose arguments match occurs.
    Occurs(EventKind, Vec<Pattern>),
    /// Some of the named participants is corrupted.
    Corrupted(Vec<Pattern>),
    Publishable(Pattern),
    And(Vec<Cond>),
    Or(Vec<Cond>),
}

impl Cond {
    pub fn holds(&self, b: &Bindings, pre: &Trace, spec: &ProtocolSpec) -> bool {
        match self {
            Cond::True => true,
            Cond::Occurs(kind, pats) => pre.iter_rev().any(|e| match e {
                Event::Proto(pe) if &pe.kind == kind && pe.args.len() == pats.len() => {
                    let mut trial = b.clone();
                    pats.iter()
                        .zip(pe.args.iter())
                        .all(|(p, t)| p.matches(t, &mut trial))
                }
                _ => false,
            }),
            Cond::Corrupted(pats) => {
                let parts: BTreeSet<ParticipantId> = pats
                    .iter()
                    .filter_map(|p| p.instantiate(b))
                    .filter_map(|t| t.as_name().cloned())
                    .collect();
                pre.is_corrupted(&parts)
            }
            Cond::Publishable(p) => p.instantiate(b).is_some_and(|t| publishable(&t, pre, spec)),
            Cond::And(cs) => cs.iter().all(|c| c.holds(b, pre, spec)),
            Cond::Or(cs) => cs.iter().any(|c| c.holds(b, pre, spec)),
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn args(f: &mut fmt::Formatter<'_>, ps: &[Pattern]) -> fmt::Result {
            let s: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", s.join(", "))
        }
        fn joined(f: &mut fmt::Formatter<'_>, cs: &[Cond], sep: &str) -> fmt::Result {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                if matches!(c, Cond::And(_) | Cond::Or(_)) {
                    write!(f, "({c})")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Ok(())
        }
        match self {
            Cond::True => f.write_str("true"),
            Cond::Occurs(k, ps) => {
                write!(f, "{k}")?;
                args(f, ps)
            }
            Cond::Corrupted(ps) => {
                f.write_str("corrupted")?;
                args(f, ps)
            }
            Cond::Publishable(p) => write!(f, "publishable({p})"),
            Cond::And(cs) => joined(f, cs, " and "),
            Cond::Or(cs) => joined(f, cs, " or "),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventDecl {
    pub kind: EventKind,
    pub params: Vec<Arc<str>>,
    /// Parameter holding the emitting participant's name.
    pub actor: Option<usize>,
    /// Parameter holding the nonce whose witness the event consumes.
    pub unique: Option<usize>,
    pub requires: Cond,
}

/// Every sent message's sub-terms matching `pattern` must satisfy `requires`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageRule {
    pub pattern: Pattern,
    pub requires: Cond,
}

/// Protocol-specific part of the trace invariant, plus the attacker's
/// message shapes and public alphabet.
#[derive(Clone, Debug, Default)]
pub struct ProtocolSpec {
    pub events: BTreeMap<EventKind, EventDecl>,
    pub messages: Vec<MessageRule>,
    pub shapes: Vec<Pattern>,
    pub alphabet: Vec<Term>,
    pub labels: LabelEnv,
}

impl ProtocolSpec {
    /// Kinds that consume a uniqueness witness, with the tying argument.
    pub fn uniqueness(&self) -> BTreeMap<EventKind, usize> {
        self.events
            .values()
            .filter_map(|d| d.unique.map(|u| (d.kind.clone(), u)))
            .collect()
    }

    pub fn msg_inv(&self, m: &Term, pre: &Trace) -> Result<(), String> {
        for s in m.subterms() {
            for rule in &self.messages {
                let mut b = Bindings::new();
                if rule.pattern.matches(s, &mut b) && !rule.requires.holds(&b, pre, self) {
                    return Err(format!(
                        "{s} matches {} but {} fails",
                        rule.pattern, rule.requires
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn proto_event_inv(&self, pe: &ProtoEvent, pre: &Trace) -> Result<(), String> {
        let decl = self
            .events
            .get(&pe.kind)
            .ok_or_else(|| format!("undeclared event kind {}", pe.kind))?;
        if decl.params.len() != pe.args.len() {
            return Err(format!(
                "{} takes {} arguments, got {}",
                pe.kind,
                decl.params.len(),
                pe.args.len()
            ));
        }
        if let Some(a) = decl.actor {
            if pe.args[a].as_name() != Some(&pe.actor) {
                return Err(format!(
                    "{} emitted by {} but names {} as actor",
                    pe.kind, pe.actor, pe.args[a]
                ));
            }
        }
        let b: Bindings = decl
            .params
            .iter()
            .cloned()
            .zip(pe.args.iter().cloned())
            .collect();
        if decl.requires.holds(&b, pre, self) {
            Ok(())
        } else {
            Err(format!("requirement {} fails", decl.requires))
        }
    }
}

/// Whether sending `m` after `pre` leaks nothing beyond what corruption in
/// `pre` already entitles the attacker to.
pub fn publishable(m: &Term, pre: &Trace, spec: &ProtocolSpec) -> bool {
    publishable_with(m, pre, &spec.labels)
}

pub fn publishable_with(m: &Term, pre: &Trace, env: &LabelEnv) -> bool {
    let excused = |t: &Term| label_of(t, env).is_ok_and(|l| pre.label_excused(&l));
    if env.get(m).is_some() {
        return excused(m);
    }
    match m {
        t if t.is_public_atom() => true,
        Term::Hash(_) | Term::Pk(_) => true,
        Term::Tuple(items) => items.iter().all(|t| publishable_with(t, pre, env)),
        Term::AEnc(key, p) => match &**key {
            Term::Pk(sk) => {
                let protected = match (label_of(p, env), label_of(sk, env)) {
                    (Ok(lp), Ok(lk)) => flows_to(&lp, &lk),
                    _ => false,
                };
                protected || publishable_with(p, pre, env)
            }
            _ => true,
        },
        Term::Sig(_, p) => publishable_with(p, pre, env),
        Term::Aead(parts) => {
            let protected = match (label_of(&parts[2], env), label_of(&parts[0], env)) {
                (Ok(lp), Ok(lk)) => flows_to(&lp, &lk),
                _ => false,
            };
            publishable_with(&parts[3], pre, env)
                && (protected || publishable_with(&parts[2], pre, env))
        }
        Term::Nonce(_, l) => pre.label_excused(l),
        Term::Exp(_, es) if es.len() == 1 => true,
        Term::Exp(..) | Term::Kdf(..) => excused(m),
        _ => excused(m),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationKind {
    InvariantBroken,
    WitnessMissing,
    WitnessDoubleSpend,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::InvariantBroken => "INVARIANT_BROKEN",
            ViolationKind::WitnessMissing => "WITNESS_MISSING",
            ViolationKind::WitnessDoubleSpend => "WITNESS_DOUBLE_SPEND",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub index: usize,
    pub event: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at {}: {} ({})",
            self.kind, self.index, self.event, self.reason
        )
    }
}

/// Minted and consumed uniqueness witnesses.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct WitnessLedger {
    minted: Arc<BTreeSet<(EventKind, NonceId)>>,
    consumed: Arc<BTreeSet<(EventKind, NonceId)>>,
}

impl WitnessLedger {
    pub fn minted(&self) -> &BTreeSet<(EventKind, NonceId)> {
        &self.minted
    }

    pub fn consumed(&self) -> &BTreeSet<(EventKind, NonceId)> {
        &self.consumed
    }
}

fn broken(index: usize, e: &Event, reason: String) -> Violation {
    Violation {
        kind: ViolationKind::InvariantBroken,
        index,
        event: render_event(e),
        reason,
    }
}

/// Checks one entry against its strict prefix, ignoring witnesses.
fn check_entry(e: &Event, pre: &Trace, spec: &ProtocolSpec) -> Result<(), Violation> {
    let idx = pre.len();
    match e {
        Event::Root(_) => Err(broken(idx, e, "Root after index 0".into())),
        Event::CreateNonce { nonce, label, .. } => match nonce {
            Term::Nonce(_, l) if l == label => match pre.fresh(nonce) {
                Ok(true) => Ok(()),
                _ => Err(broken(idx, e, "nonce is not fresh".into())),
            },
            _ => Err(broken(idx, e, "CreateNonce label mismatch".into())),
        },
        Event::Send(m) => {
            spec.msg_inv(m, pre).map_err(|r| broken(idx, e, r))?;
            if publishable(m, pre, spec) {
                Ok(())
            } else {
                Err(broken(idx, e, format!("{m} is not publishable")))
            }
        }
        Event::Drop(m) => {
            if pre.receivable().contains(m) {
                Ok(())
            } else {
                Err(broken(
                    idx,
                    e,
                    "dropped message is not on the network".into(),
                ))
            }
        }
        Event::Extend(t) => {
            if Knowledge::from_trace(pre).can_derive(t) {
                Ok(())
            } else {
                Err(broken(idx, e, format!("{t} is not derivable")))
            }
        }
        Event::CorruptParticipant { .. } | Event::CorruptSession { .. } => Ok(()),
        Event::Proto(pe) => spec.proto_event_inv(pe, pre).map_err(|r| broken(idx, e, r)),
    }
}

fn witness_key(pe: &ProtoEvent, arg: usize) -> Option<(EventKind, NonceId)> {
    pe.args
        .get(arg)
        .and_then(Term::nonce_id)
        .map(|n| (pe.kind.clone(), n))
}

/// Incremental check of `e` appended to `pre`, updating the ledger. The
/// returned ledger reflects every effect that could be applied, even when
/// the verdict is a violation.
pub fn on_append(
    e: &Event,
    pre: &Trace,
    spec: &ProtocolSpec,
    ledger: &WitnessLedger,
) -> (Result<(), Violation>, WitnessLedger) {
    let mut next = ledger.clone();
    let verdict = check_entry(e, pre, spec);
    match e {
        Event::CreateNonce {
            nonce, unique_for, ..
        } if !unique_for.is_empty() => {
            if let Some(id) = nonce.nonce_id() {
                let m = Arc::make_mut(&mut next.minted);
                for k in unique_for.iter() {
                    m.insert((k.clone(), id));
                }
            }
        }
        Event::Proto(pe) => {
            if let Some(&arg) = spec.uniqueness().get(&pe.kind) {
                let idx = pre.len();
                let v = |kind, reason: &str| Violation {
                    kind,
                    index: idx,
                    event: render_event(e),
                    reason: reason.to_string(),
                };
                let witness = match witness_key(pe, arg) {
                    None => Err(v(
                        ViolationKind::WitnessMissing,
                        "tying argument is not a nonce",
                    )),
                    Some(key) if ledger.consumed.contains(&key) => Err(v(
                        ViolationKind::WitnessDoubleSpend,
                        "witness already consumed",
                    )),
                    Some(key) if !ledger.minted.contains(&key) => Err(v(
                        ViolationKind::WitnessMissing,
                        "no witness minted for this nonce",
                    )),
                    Some(key) => {
                        Arc::make_mut(&mut next.consumed).insert(key);
                        Ok(())
                    }
                };
                if verdict.is_ok() {
                    return (witness, next);
                }
            }
        }
        _ => {}
    }
    (verdict, next)
}

/// Whole-trace check, independent of any ledger: witnesses are recounted
/// from each prefix.
pub fn check_trace_invariant(tr: &Trace, spec: &ProtocolSpec) -> Result<(), Violation> {
    let events = tr.events();
    if !matches!(events[0], Event::Root(_)) {
        return Err(broken(
            0,
            events[0],
            "trace does not start with Root".into(),
        ));
    }
    let uniq = spec.uniqueness();
    for (i, e) in events.iter().enumerate().skip(1) {
        let pre = tr.prefix(i);
        check_entry(e, &pre, spec)?;
        if let Event::Proto(pe) = e {
            if let Some(&arg) = uniq.get(&pe.kind) {
                let v = |kind, reason: &str| Violation {
                    kind,
                    index: i,
                    event: render_event(e),
                    reason: reason.to_string(),
                };
                let Some(n) = pe.args.get(arg).filter(|t| t.is_nonce()) else {
                    return Err(v(
                        ViolationKind::WitnessMissing,
                        "tying argument is not a nonce",
                    ));
                };
                let minted = events[..i].iter().any(|x| {
                    matches!(x, Event::CreateNonce { nonce, unique_for, .. }
                        if nonce == n && unique_for.contains(&pe.kind))
                });
                if !minted {
                    return Err(v(
                        ViolationKind::WitnessMissing,
                        "no witness minted for this nonce",
                    ));
                }
                let spent = events[..i].iter().any(|x| {
                    matches!(x, Event::Proto(q) if q.kind == pe.kind && q.args.get(arg) == Some(n))
                });
                if spent {
                    return Err(v(
                        ViolationKind::WitnessDoubleSpend,
                        "witness already consumed",
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Whether every term the attacker holds after analysis is public or
/// excused by corruption on `tr`.
pub fn secrecy_lemma_holds(tr: &Trace, k: &Knowledge, env: &LabelEnv) -> Result<(), Term> {
    for t in k.analyzed() {
        let ok = match label_of(t, env) {
            Ok(l) => tr.label_excused(&l),
            Err(_) => false,
        };
        if !ok {
            return Err(t.clone());
        }
    }
    Ok(())
}

/// Outcome of a sampled extensibility check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extensibility {
    /// Every sampled extension accepted `e`; the claim is bounded by the
    /// number of samples.
    BoundedPass { samples: usize },
    Fails {
        extension: Trace,
        violation: Violation,
    },
}

/// Samples attacker extensions of `snap` (breadth first, starting with the
/// empty extension) and checks that `e` is acceptable on each extension that
/// itself satisfies the invariant. Attacker moves are sends of shape
/// instances and the corruptions listed in `corruptible`.
pub fn check_extensibility(
    e: &Event,
    snap: &Trace,
    spec: &ProtocolSpec,
    corruptible: &[(ParticipantId, Vec<Term>)],
    samples: usize,
    synth_depth: usize,
) -> Extensibility {
    let mut frontier = vec![snap.clone()];
    let mut checked = 0;
    while !frontier.is_empty() && checked < samples {
        let mut next = Vec::new();
        for tr in frontier {
            if checked >= samples {
                break;
            }
            checked += 1;
            let (verdict, _) = on_append(e, &tr, spec, &ledger_of(&tr, spec));
            if let Err(violation) = verdict {
                return Extensibility::Fails {
                    extension: tr,
                    violation,
                };
            }
            for step in attacker_steps(&tr, spec, corruptible, synth_depth) {
                if let Ok(t2) = tr.append(step) {
                    if check_entry(t2.last(), &tr, spec).is_ok() {
                        next.push(t2);
                    }
                }
            }
        }
        frontier = next;
    }
    Extensibility::BoundedPass { samples: checked }
}

fn attacker_steps(
    tr: &Trace,
    spec: &ProtocolSpec,
    corruptible: &[(ParticipantId, Vec<Term>)],
    synth_depth: usize,
) -> Vec<Event> {
    let k = Knowledge::from_trace(tr);
    let mut out = Vec::new();
    for (p, leaked) in corruptible {
        let already = tr
            .iter_rev()
            .any(|e| matches!(e, Event::CorruptParticipant { pid, .. } if pid == p));
        if !already {
            out.push(Event::corrupt_participant(
                p.clone(),
                leaked.iter().cloned(),
            ));
        }
    }
    let receivable: BTreeSet<Term> = tr.receivable().into_iter().collect();
    for shape in &spec.shapes {
        for m in fill_shape(shape, &k, &spec.alphabet, synth_depth, 64) {
            if !receivable.contains(&m) {
                out.push(Event::Send(m));
            }
        }
    }
    out
}

/// Ledger reconstructed from a whole trace.
pub fn ledger_of(tr: &Trace, spec: &ProtocolSpec) -> WitnessLedger {
    let mut ledger = WitnessLedger::default();
    let events = tr.events();
    for (i, e) in events.iter().enumerate().skip(1) {
        let (_, l) = on_append(e, &tr.prefix(i), spec, &ledger);
        ledger = l;
    }
    ledger
}

/// Label a term would receive under `spec`, for reports.
pub fn label_in(spec: &ProtocolSpec, t: &Term) -> Option<Label> {
    label_of(t, &spec.labels).ok()
}
