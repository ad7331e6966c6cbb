//! Security properties as predicates over traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::attacker::Knowledge;
use crate::ids::{ParticipantId, SessionRef};
use crate::label::{label_of, Label};
use crate::monitor::ProtocolSpec;
use crate::term::{terms_equal, Term};
use crate::trace::{Event, EventKind, ProtoEvent, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Holds,
    Violated,
    HoldsUpToBound,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "HOLDS",
            Status::Violated => "VIOLATED",
            Status::HoldsUpToBound => "HOLDS-UP-TO-BOUND",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub witness: Option<Trace>,
    pub index: Option<usize>,
}

impl Verdict {
    pub fn holds() -> Verdict {
        Verdict {
            status: Status::Holds,
            witness: None,
            index: None,
        }
    }

    pub fn violated(tr: &Trace, index: usize) -> Verdict {
        Verdict {
            status: Status::Violated,
            witness: Some(tr.clone()),
            index: Some(index),
        }
    }

    pub fn is_violated(&self) -> bool {
        self.status == Status::Violated
    }
}

/// Which corruption excuses a commit without a matching running event.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorruptionScope {
    /// Corruption of the actor or the peer.
    Participants,
    /// Corruption of the peer, or of the actor's own session. Corrupting the
    /// actor's long-term state alone is no excuse.
    PeerOrActorSession,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreementSpec {
    pub commit: EventKind,
    pub running: EventKind,
    /// Commit argument naming the actor.
    pub actor: usize,
    /// Commit argument naming the peer.
    pub peer: usize,
    /// Argument `j` of the running event must equal commit argument `map[j]`.
    pub map: Vec<usize>,
    /// Commit argument that must not repeat across commits.
    pub nonce: Option<usize>,
    pub scope: CorruptionScope,
}

impl AgreementSpec {
    fn matches_running(&self, commit: &ProtoEvent, running: &ProtoEvent) -> bool {
        running.kind == self.running
            && running.args.len() == self.map.len()
            && self.map.iter().enumerate().all(|(j, &i)| {
                commit
                    .args
                    .get(i)
                    .is_some_and(|c| terms_equal(&running.args[j], c))
            })
    }

    fn name_arg(&self, pe: &ProtoEvent, i: usize) -> Option<ParticipantId> {
        pe.args.get(i).and_then(Term::as_name).cloned()
    }

    fn excused(&self, pe: &ProtoEvent, prefix: &Trace) -> bool {
        match self.scope {
            CorruptionScope::Participants => {
                let parts: BTreeSet<ParticipantId> =
                    [self.name_arg(pe, self.actor), self.name_arg(pe, self.peer)]
                        .into_iter()
                        .flatten()
                        .collect();
                prefix.is_corrupted(&parts)
            }
            CorruptionScope::PeerOrActorSession => {
                let peer: BTreeSet<ParticipantId> =
                    self.name_arg(pe, self.peer).into_iter().collect();
                prefix.is_corrupted(&peer)
                    || prefix.is_session_corrupted(&[pe.actor_session()].into())
            }
        }
    }
}

fn commits<'a>(tr: &'a Trace, kind: &EventKind) -> Vec<(usize, &'a ProtoEvent)> {
    tr.proto_events()
        .into_iter()
        .filter(|(_, pe)| &pe.kind == kind)
        .collect()
}

fn agreement(tr: &Trace, s: &AgreementSpec, injective: bool) -> Verdict {
    let all = commits(tr, &s.commit);
    for &(i, pe) in &all {
        let prefix = tr.prefix(i + 1);
        let running = prefix
            .iter_rev()
            .any(|e| e.as_proto().is_some_and(|r| s.matches_running(pe, r)));
        let unique = !injective
            || match s.nonce.and_then(|n| pe.args.get(n)) {
                None => true,
                Some(n) => !all.iter().any(|&(j, other)| {
                    j != i
                        && other
                            .args
                            .get(s.nonce.unwrap_or(0))
                            .is_some_and(|m| terms_equal(m, n))
                }),
            };
        if !((running && unique) || s.excused(pe, &prefix)) {
            return Verdict::violated(tr, i);
        }
    }
    Verdict::holds()
}

/// Every commit is preceded by a matching running event, unless the actor
/// or peer was corrupted first. Evaluated at every commit occurrence.
pub fn check_non_injective_agreement(tr: &Trace, s: &AgreementSpec) -> Verdict {
    agreement(tr, s, false)
}

/// Non-injective agreement, and no two commits share the tying argument.
pub fn check_injective_agreement(tr: &Trace, s: &AgreementSpec) -> Verdict {
    agreement(tr, s, true)
}

/// Injective agreement under actor key compromise: only peer corruption or
/// corruption of the actor's own session excuses a missing running event.
pub fn check_inj_agreement_akc(tr: &Trace, s: &AgreementSpec) -> Verdict {
    let s = AgreementSpec {
        scope: CorruptionScope::PeerOrActorSession,
        ..s.clone()
    };
    agreement(tr, &s, true)
}

/// The attacker cannot derive `t` unless a reader of `l` was corrupted.
pub fn check_secrecy(tr: &Trace, t: &Term, l: &Label) -> Verdict {
    if tr.label_excused(l) {
        return Verdict::holds();
    }
    if Knowledge::from_trace(tr).can_derive(t) {
        Verdict::violated(tr, knowledge_point(tr, t).unwrap_or(tr.len() - 1))
    } else {
        Verdict::holds()
    }
}

/// Index of the first event after which the attacker can derive `t`.
fn knowledge_point(tr: &Trace, t: &Term) -> Option<usize> {
    let mut k = Knowledge::new([]);
    for (i, e) in tr.events().into_iter().enumerate() {
        k = k.extend(e.attacker_terms());
        if k.can_derive(t) {
            return Some(i);
        }
    }
    None
}

/// Inputs of the forward-secrecy predicates.
#[derive(Clone, Debug)]
pub struct FsQuery {
    pub secret: Term,
    pub actor: ParticipantId,
    pub peer: ParticipantId,
    pub actor_sess: SessionRef,
    pub peer_sess: Option<SessionRef>,
    /// Event completing the handshake from the actor's perspective.
    pub mark: Option<Event>,
}

fn forward_secrecy(tr: &Trace, q: &FsQuery, strong: bool) -> Verdict {
    if !Knowledge::from_trace(tr).can_derive(&q.secret) {
        return Verdict::holds();
    }
    let Some(known_at) = knowledge_point(tr, &q.secret) else {
        return Verdict::holds();
    };
    // Without a completed handshake the prefix ends where the attacker first
    // knows the secret.
    let hs = match q.mark.as_ref().and_then(|m| tr.get_prefix(m).ok()) {
        Some((p, _)) => p,
        None => tr.prefix(known_at + 1),
    };
    let mut parts: BTreeSet<ParticipantId> = [q.peer.clone()].into();
    if !strong {
        parts.insert(q.actor.clone());
    }
    let sessions: BTreeSet<SessionRef> = [Some(q.actor_sess.clone()), q.peer_sess.clone()]
        .into_iter()
        .flatten()
        .collect();
    if hs.is_corrupted(&parts) || tr.is_session_corrupted(&sessions) {
        Verdict::holds()
    } else {
        Verdict::violated(tr, known_at)
    }
}

pub fn check_weak_forward_secrecy(tr: &Trace, q: &FsQuery) -> Verdict {
    forward_secrecy(tr, q, false)
}

/// Like weak forward secrecy, but corrupting the actor before the handshake
/// is no excuse.
pub fn check_strong_forward_secrecy(tr: &Trace, q: &FsQuery) -> Verdict {
    forward_secrecy(tr, q, true)
}

/// A property as declared in a scenario.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropertyDecl {
    Secrecy {
        at: EventKind,
        arg: usize,
        /// Arguments naming the intended readers. Empty means the secret's
        /// own label decides who may be corrupted.
        readers: Vec<usize>,
    },
    Agreement {
        spec: AgreementSpec,
        injective: bool,
    },
    ForwardSecrecy {
        strong: bool,
        at: EventKind,
        arg: usize,
        actor: usize,
        peer: usize,
        running: Option<EventKind>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropValue {
    Ident(String),
    Int(i64),
    List(Vec<i64>),
}

impl fmt::Display for PropValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropValue::Ident(s) => f.write_str(s),
            PropValue::Int(v) => write!(f, "{v}"),
            PropValue::List(vs) => {
                let s: Vec<String> = vs.iter().map(i64::to_string).collect();
                write!(f, "[{}]", s.join(", "))
            }
        }
    }
}

fn need<'a>(args: &'a BTreeMap<String, PropValue>, k: &str) -> Result<&'a PropValue, String> {
    args.get(k).ok_or_else(|| format!("missing argument '{k}'"))
}

fn kind(args: &BTreeMap<String, PropValue>, k: &str) -> Result<EventKind, String> {
    match need(args, k)? {
        PropValue::Ident(s) => Ok(EventKind::new(s)),
        v => Err(format!("'{k}' must be an event kind, got {v}")),
    }
}

fn index(args: &BTreeMap<String, PropValue>, k: &str) -> Result<usize, String> {
    match need(args, k)? {
        PropValue::Int(v) if *v >= 0 => Ok(*v as usize),
        v => Err(format!("'{k}' must be a non-negative index, got {v}")),
    }
}

impl PropertyDecl {
    /// Builds a declaration from `name(key=value, ...)`.
    pub fn from_args(
        name: &str,
        args: &BTreeMap<String, PropValue>,
        spec: &ProtocolSpec,
    ) -> Result<PropertyDecl, String> {
        let allowed: &[&str] = match name {
            "secrecy" => &["at", "arg", "actor", "peer"],
            "agreement" | "inj-agreement" | "akc-agreement" => {
                &["commit", "running", "actor", "peer", "map", "nonce"]
            }
            "weak-fs" | "strong-fs" => &["at", "arg", "actor", "peer", "running"],
            _ => return Err(format!("unknown property '{name}'")),
        };
        if let Some(k) = args.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(format!("property '{name}' has no argument '{k}'"));
        }
        let arity = |k: &EventKind| -> Result<usize, String> {
            spec.events
                .get(k)
                .map(|d| d.params.len())
                .ok_or_else(|| format!("property refers to undeclared event {k}"))
        };
        let check = |k: &EventKind, i: usize| -> Result<usize, String> {
            if i < arity(k)? {
                Ok(i)
            } else {
                Err(format!("index {i} out of range for {k}"))
            }
        };
        Ok(match name {
            "secrecy" => {
                let at = kind(args, "at")?;
                let arg = check(&at, index(args, "arg")?)?;
                let readers = ["actor", "peer"]
                    .into_iter()
                    .filter(|k| args.contains_key(*k))
                    .map(|k| check(&at, index(args, k)?))
                    .collect::<Result<_, _>>()?;
                PropertyDecl::Secrecy { at, arg, readers }
            }
            "weak-fs" | "strong-fs" => {
                let at = kind(args, "at")?;
                PropertyDecl::ForwardSecrecy {
                    strong: name == "strong-fs",
                    arg: check(&at, index(args, "arg")?)?,
                    actor: check(&at, index(args, "actor")?)?,
                    peer: check(&at, index(args, "peer")?)?,
                    running: args
                        .get("running")
                        .map(|_| kind(args, "running"))
                        .transpose()?,
                    at,
                }
            }
            _ => {
                let commit = kind(args, "commit")?;
                let running = kind(args, "running")?;
                let map = match args.get("map") {
                    Some(PropValue::List(vs)) => vs
                        .iter()
                        .map(|&v| {
                            check(
                                &commit,
                                usize::try_from(v).map_err(|_| "negative map entry".to_string())?,
                            )
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                    Some(v) => return Err(format!("'map' must be a list, got {v}")),
                    None => (0..arity(&running)?)
                        .map(|i| check(&commit, i))
                        .collect::<Result<_, _>>()?,
                };
                if map.len() != arity(&running)? {
                    return Err(format!(
                        "'map' must have one entry per argument of {running}"
                    ));
                }
                let nonce = match name {
                    "agreement" => None,
                    _ => Some(check(&commit, index(args, "nonce")?)?),
                };
                PropertyDecl::Agreement {
                    spec: AgreementSpec {
                        actor: check(&commit, index(args, "actor")?)?,
                        peer: check(&commit, index(args, "peer")?)?,
                        commit,
                        running,
                        map,
                        nonce,
                        scope: if name == "akc-agreement" {
                            CorruptionScope::PeerOrActorSession
                        } else {
                            CorruptionScope::Participants
                        },
                    },
                    injective: name != "agreement",
                }
            }
        })
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Evaluates the property on one trace.
    pub fn evaluate(&self, tr: &Trace, spec: &ProtocolSpec) -> Verdict {
        self.evaluate_with(tr, spec, &Knowledge::from_trace(tr))
    }

    /// Like [`PropertyDecl::evaluate`], with `k` the attacker knowledge of
    /// `tr`.
    pub fn evaluate_with(&self, tr: &Trace, spec: &ProtocolSpec, k: &Knowledge) -> Verdict {
        match self {
            PropertyDecl::Secrecy { at, arg, readers } => {
                let mut seen = BTreeSet::new();
                for (_, pe) in commits(tr, at) {
                    let t = &pe.args[*arg];
                    if !seen.insert(t.clone()) || !k.can_derive(t) {
                        continue;
                    }
                    let l = if readers.is_empty() {
                        label_of(t, &spec.labels).unwrap_or(Label::Unreadable)
                    } else {
                        match readers
                            .iter()
                            .map(|&i| pe.args[i].as_name().cloned())
                            .collect::<Option<Vec<_>>>()
                        {
                            Some(ps) => Label::readers(ps),
                            None => Label::Public,
                        }
                    };
                    let v = check_secrecy(tr, t, &l);
                    if v.is_violated() {
                        return v;
                    }
                }
                Verdict::holds()
            }
            PropertyDecl::Agreement { spec: s, injective } => match (s.scope, injective) {
                (CorruptionScope::PeerOrActorSession, _) => check_inj_agreement_akc(tr, s),
                (_, true) => check_injective_agreement(tr, s),
                (_, false) => check_non_injective_agreement(tr, s),
            },
            PropertyDecl::ForwardSecrecy {
                strong,
                at,
                arg,
                actor,
                peer,
                running,
            } => {
                for (_, pe) in commits(tr, at) {
                    let (Some(a), Some(p)) = (pe.args[*actor].as_name(), pe.args[*peer].as_name())
                    else {
                        continue;
                    };
                    let secret = pe.args[*arg].clone();
                    let peer_sess = running.as_ref().and_then(|rk| {
                        tr.proto_events()
                            .into_iter()
                            .find(|(_, r)| {
                                &r.kind == rk
                                    && &r.actor == p
                                    && r.args.iter().any(|x| terms_equal(x, &secret))
                            })
                            .map(|(_, r)| r.actor_session())
                    });
                    if !k.can_derive(&secret) {
                        continue;
                    }
                    let q = FsQuery {
                        secret,
                        actor: a.clone(),
                        peer: p.clone(),
                        actor_sess: pe.actor_session(),
                        peer_sess,
                        mark: Some(Event::Proto(pe.clone())),
                    };
                    let v = forward_secrecy(tr, &q, *strong);
                    if v.is_violated() {
                        return v;
                    }
                }
                Verdict::holds()
            }
        }
    }
}

impl fmt::Display for PropertyDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropertyDecl::Secrecy { at, arg, .. } => write!(f, "secrecy(at={at}, arg={arg})"),
            PropertyDecl::Agreement { spec, injective } => {
                let name = match (spec.scope, injective) {
                    (CorruptionScope::PeerOrActorSession, _) => "akc-agreement",
                    (_, true) => "inj-agreement",
                    (_, false) => "agreement",
                };
                write!(
                    f,
                    "{name}(commit={}, running={}, actor={}, peer={}",
                    spec.commit, spec.running, spec.actor, spec.peer
                )?;
                if let Some(n) = spec.nonce {
                    write!(f, ", nonce={n}")?;
                }
                write!(f, ")")
            }
            PropertyDecl::ForwardSecrecy {
                strong,
                at,
                arg,
                actor,
                peer,
                ..
            } => {
                let name = if *strong { "strong-fs" } else { "weak-fs" };
                write!(f, "{name}(at={at}, arg={arg}, actor={actor}, peer={peer})")
            }
        }
    }
}
