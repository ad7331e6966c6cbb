//! The global trace: an append-only event sequence rooted at the attacker's
//! initial knowledge.

mod serial;

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

use crate::ids::{ParticipantId, SessionId, SessionRef};
use crate::label::Label;
use crate::term::Term;

pub use serial::{
    event_to_json, parse_trace_json, render_event, render_trace_text, trace_to_json,
    TraceParseError,
};

/// Interned name of a protocol-specific event kind (`FinishA`, `Commit`, ...).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventKind(Arc<str>);

impl EventKind {
    pub fn new(s: impl AsRef<str>) -> Self {
        EventKind(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ProtoEvent {
    pub kind: EventKind,
    pub args: Arc<[Term]>,
    pub actor: ParticipantId,
    pub session: SessionId,
}

impl ProtoEvent {
    pub fn new(kind: &str, args: Vec<Term>, actor: impl Into<ParticipantId>, session: u32) -> Self {
        ProtoEvent {
            kind: EventKind::new(kind),
            args: args.into(),
            actor: actor.into(),
            session: SessionId(session),
        }
    }

    pub fn actor_session(&self) -> SessionRef {
        SessionRef {
            pid: self.actor.clone(),
            sid: self.session,
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Event {
    Root(Arc<[Term]>),
    /// `unique_for` lists the event kinds whose uniqueness witness was minted
    /// together with this nonce.
    CreateNonce {
        nonce: Term,
        label: Label,
        unique_for: Arc<[EventKind]>,
    },
    Send(Term),
    Drop(Term),
    Extend(Term),
    CorruptParticipant {
        pid: ParticipantId,
        leaked: Arc<[Term]>,
    },
    CorruptSession {
        session: SessionRef,
        leaked: Arc<[Term]>,
    },
    Proto(ProtoEvent),
}

impl Event {
    pub fn root(terms: impl IntoIterator<Item = Term>) -> Event {
        let set: BTreeSet<Term> = terms.into_iter().collect();
        Event::Root(set.into_iter().collect::<Vec<_>>().into())
    }

    pub fn create_nonce(nonce: Term, unique_for: Vec<EventKind>) -> Event {
        let label = match &nonce {
            Term::Nonce(_, l) => l.clone(),
            _ => Label::Public,
        };
        Event::CreateNonce {
            nonce,
            label,
            unique_for: unique_for.into(),
        }
    }

    pub fn corrupt_participant(
        pid: impl Into<ParticipantId>,
        leaked: impl IntoIterator<Item = Term>,
    ) -> Event {
        Event::CorruptParticipant {
            pid: pid.into(),
            leaked: sorted(leaked),
        }
    }

    pub fn corrupt_session(session: SessionRef, leaked: impl IntoIterator<Item = Term>) -> Event {
        Event::CorruptSession {
            session,
            leaked: sorted(leaked),
        }
    }

    pub fn kind_name(&self) -> &str {
        match self {
            Event::Root(_) => "Root",
            Event::CreateNonce { .. } => "CreateNonce",
            Event::Send(_) => "Send",
            Event::Drop(_) => "Drop",
            Event::Extend(_) => "Extend",
            Event::CorruptParticipant { .. } => "CorruptParticipant",
            Event::CorruptSession { .. } => "CorruptSession",
            Event::Proto(pe) => pe.kind.as_str(),
        }
    }

    pub fn as_proto(&self) -> Option<&ProtoEvent> {
        match self {
            Event::Proto(pe) => Some(pe),
            _ => None,
        }
    }

    /// Terms this event adds to the attacker's knowledge.
    pub fn attacker_terms(&self) -> &[Term] {
        match self {
            Event::Root(ts) => ts,
            Event::Send(m) | Event::Extend(m) => std::slice::from_ref(m),
            Event::CorruptParticipant { leaked, .. } | Event::CorruptSession { leaked, .. } => {
                leaked
            }
            _ => &[],
        }
    }
}

fn sorted(ts: impl IntoIterator<Item = Term>) -> Arc<[Term]> {
    let set: BTreeSet<Term> = ts.into_iter().collect();
    set.into_iter().collect::<Vec<_>>().into()
}

/// Names reserved for the built-in event vocabulary.
pub const BUILTIN_EVENT_NAMES: [&str; 7] = [
    "Root",
    "CreateNonce",
    "Send",
    "Drop",
    "Extend",
    "CorruptParticipant",
    "CorruptSession",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("Root may only appear at index 0")]
    RootAppend,
    #[error("event {0} does not occur on the trace")]
    Absent(String),
    #[error("expected a nonce, got {0}")]
    NotANonce(String),
}

struct Node {
    event: Event,
    prev: Option<Arc<Node>>,
    len: usize,
}

/// Persistent event sequence: appending shares the whole prefix.
#[derive(Clone)]
pub struct Trace {
    head: Arc<Node>,
}

impl Trace {
    pub fn new(root: impl IntoIterator<Item = Term>) -> Trace {
        Trace {
            head: Arc::new(Node {
                event: Event::root(root),
                prev: None,
                len: 1,
            }),
        }
    }

    /// Rebuilds a trace from a list of events whose first element is `Root`.
    pub fn from_events(events: Vec<Event>) -> Result<Trace, TraceError> {
        let mut it = events.into_iter();
        let mut tr = match it.next() {
            Some(root @ Event::Root(_)) => Trace {
                head: Arc::new(Node {
                    event: root,
                    prev: None,
                    len: 1,
                }),
            },
            _ => return Err(TraceError::RootAppend),
        };
        for e in it {
            tr = tr.append(e)?;
        }
        Ok(tr)
    }

    pub fn append(&self, e: Event) -> Result<Trace, TraceError> {
        if matches!(e, Event::Root(_)) {
            return Err(TraceError::RootAppend);
        }
        Ok(Trace {
            head: Arc::new(Node {
                event: e,
                len: self.head.len + 1,
                prev: Some(self.head.clone()),
            }),
        })
    }

    pub fn len(&self) -> usize {
        self.head.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> &Event {
        &self.head.event
    }

    /// Events from newest to oldest.
    pub fn iter_rev(&self) -> impl Iterator<Item = &Event> {
        let mut cur = Some(&self.head);
        std::iter::from_fn(move || {
            let n = cur?;
            cur = n.prev.as_ref();
            Some(&n.event)
        })
    }

    /// Events from index 0 on.
    pub fn events(&self) -> Vec<&Event> {
        let mut v: Vec<&Event> = self.iter_rev().collect();
        v.reverse();
        v
    }

    pub fn get(&self, i: usize) -> Option<&Event> {
        if i >= self.len() {
            return None;
        }
        self.iter_rev().nth(self.len() - 1 - i)
    }

    /// The prefix holding the first `n` events (`n >= 1`).
    pub fn prefix(&self, n: usize) -> Trace {
        let n = n.max(1);
        let mut cur = &self.head;
        while cur.len > n {
            cur = cur.prev.as_ref().expect("length bookkeeping");
        }
        Trace { head: cur.clone() }
    }

    pub fn root_terms(&self) -> &[Term] {
        let mut cur = &self.head;
        while let Some(p) = &cur.prev {
            cur = p;
        }
        match &cur.event {
            Event::Root(ts) => ts,
            _ => &[],
        }
    }

    pub fn occurs(&self, e: &Event) -> bool {
        self.iter_rev().any(|x| x == e)
    }

    pub fn occurs_at(&self, e: &Event, i: usize) -> bool {
        self.get(i) == Some(e)
    }

    /// Prefix up to and including the most recent occurrence of `e`, with
    /// that occurrence's index.
    pub fn get_prefix(&self, e: &Event) -> Result<(Trace, usize), TraceError> {
        let mut cur = Some(&self.head);
        while let Some(n) = cur {
            if &n.event == e {
                return Ok((Trace { head: n.clone() }, n.len - 1));
            }
            cur = n.prev.as_ref();
        }
        Err(TraceError::Absent(render_event(e)))
    }

    /// Most recent prefix ending in an event satisfying `pred`.
    pub fn get_prefix_by(&self, pred: impl Fn(&Event) -> bool) -> Option<(Trace, usize)> {
        let mut cur = Some(&self.head);
        while let Some(n) = cur {
            if pred(&n.event) {
                return Some((Trace { head: n.clone() }, n.len - 1));
            }
            cur = n.prev.as_ref();
        }
        None
    }

    /// Messages sent and not dropped, in order of first send.
    pub fn receivable(&self) -> Vec<Term> {
        let events = self.events();
        let dropped: BTreeSet<&Term> = events
            .iter()
            .filter_map(|e| match e {
                Event::Drop(m) => Some(m),
                _ => None,
            })
            .collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for e in events {
            if let Event::Send(m) = e {
                if !dropped.contains(m) && seen.insert(m) {
                    out.push(m.clone());
                }
            }
        }
        out
    }

    pub fn fresh(&self, v: &Term) -> Result<bool, TraceError> {
        if !v.is_nonce() {
            return Err(TraceError::NotANonce(v.to_string()));
        }
        Ok(!self
            .iter_rev()
            .any(|e| matches!(e, Event::CreateNonce { nonce, .. } if nonce == v)))
    }

    /// Root terms, sent messages, extensions and corruption leaks.
    pub fn attacker_knowledge_base(&self) -> BTreeSet<Term> {
        self.iter_rev()
            .flat_map(|e| e.attacker_terms().iter().cloned())
            .collect()
    }

    /// Some listed participant was corrupted, either directly or through one
    /// of its sessions.
    pub fn is_corrupted(&self, parts: &BTreeSet<ParticipantId>) -> bool {
        self.iter_rev().any(|e| match e {
            Event::CorruptParticipant { pid, .. } => parts.contains(pid),
            Event::CorruptSession { session, .. } => parts.contains(&session.pid),
            _ => false,
        })
    }

    pub fn is_session_corrupted(&self, sessions: &BTreeSet<SessionRef>) -> bool {
        self.iter_rev().any(|e| match e {
            Event::CorruptSession { session, .. } => sessions.contains(session),
            _ => false,
        })
    }

    /// Whether corruption on this trace entitles the attacker to terms with
    /// label `l`.
    pub fn label_excused(&self, l: &Label) -> bool {
        match l {
            Label::Public => true,
            Label::Unreadable => false,
            Label::Readers(ps) => self.is_corrupted(ps),
            Label::Sessions(ss) => self.is_session_corrupted(ss),
        }
    }

    pub fn proto_events(&self) -> Vec<(usize, &ProtoEvent)> {
        self.events()
            .into_iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_proto().map(|pe| (i, pe)))
            .collect()
    }

    pub fn nonces_created(&self) -> Vec<&Term> {
        let mut v: Vec<&Term> = self
            .iter_rev()
            .filter_map(|e| match e {
                Event::CreateNonce { nonce, .. } => Some(nonce),
                _ => None,
            })
            .collect();
        v.reverse();
        v
    }
}

pub fn is_prefix(a: &Trace, b: &Trace) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let cut = b.prefix(a.len());
    if Arc::ptr_eq(&cut.head, &a.head) {
        return true;
    }
    cut == *a
}

impl PartialEq for Trace {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut a = Some(&self.head);
        let mut b = Some(&other.head);
        while let (Some(x), Some(y)) = (a, b) {
            if Arc::ptr_eq(x, y) {
                return true;
            }
            if x.event != y.event {
                return false;
            }
            a = x.prev.as_ref();
            b = y.prev.as_ref();
        }
        true
    }
}

impl Eq for Trace {}

impl Hash for Trace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.len().hash(state);
        for e in self.iter_rev() {
            e.hash(state);
        }
    }
}

impl fmt::Debug for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_trace_text(self))
    }
}
