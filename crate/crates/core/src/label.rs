//! Secrecy labels: who may read a term.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ids::{ParticipantId, ReaderRef, SessionRef};
use crate::term::Term;

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Public,
    /// Readable by every session of the listed participants. Never empty.
    Readers(Arc<BTreeSet<ParticipantId>>),
    /// Readable by the listed sessions only. Never empty.
    Sessions(Arc<BTreeSet<SessionRef>>),
    /// Result of joining disjoint labels; nobody may read it.
    Unreadable,
}

impl Label {
    /// `Readers(set)`, or `Unreadable` for an empty set.
    pub fn readers(set: impl IntoIterator<Item = ParticipantId>) -> Label {
        let set: BTreeSet<_> = set.into_iter().collect();
        if set.is_empty() {
            Label::Unreadable
        } else {
            Label::Readers(Arc::new(set))
        }
    }

    pub fn sessions(set: impl IntoIterator<Item = SessionRef>) -> Label {
        let set: BTreeSet<_> = set.into_iter().collect();
        if set.is_empty() {
            Label::Unreadable
        } else {
            Label::Sessions(Arc::new(set))
        }
    }

    pub fn is_public(&self) -> bool {
        matches!(self, Label::Public)
    }

    /// Participants that own a reader of this label (empty for public and
    /// unreadable labels).
    pub fn owners(&self) -> BTreeSet<ParticipantId> {
        match self {
            Label::Readers(ps) => (**ps).clone(),
            Label::Sessions(ss) => ss.iter().map(|s| s.pid.clone()).collect(),
            Label::Public | Label::Unreadable => BTreeSet::new(),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::term::syntax_label(f, self)
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::term::syntax_label(f, self)
    }
}

pub fn can_read(l: &Label, reader: &ReaderRef) -> bool {
    match (l, reader) {
        (Label::Public, _) => true,
        (Label::Unreadable, _) | (_, ReaderRef::Attacker) => false,
        (Label::Readers(ps), ReaderRef::Participant(p)) => ps.contains(p),
        (Label::Readers(ps), ReaderRef::Session(s)) => ps.contains(&s.pid),
        (Label::Sessions(ss), ReaderRef::Participant(p)) => ss.iter().any(|s| &s.pid == p),
        (Label::Sessions(ss), ReaderRef::Session(s)) => ss.contains(s),
    }
}

/// Meet of the reader sets: a reader of the join may read both inputs.
pub fn join_labels(a: &Label, b: &Label) -> Label {
    use Label::*;
    match (a, b) {
        (Public, x) | (x, Public) => x.clone(),
        (Unreadable, _) | (_, Unreadable) => Unreadable,
        (Readers(x), Readers(y)) => Label::readers(x.intersection(y).cloned()),
        (Sessions(x), Sessions(y)) => Label::sessions(x.intersection(y).cloned()),
        (Readers(ps), Sessions(ss)) | (Sessions(ss), Readers(ps)) => {
            Label::sessions(ss.iter().filter(|s| ps.contains(&s.pid)).cloned())
        }
    }
}

/// Union of reader sets, used for Diffie-Hellman shared secrets where holding
/// either exponent suffices. Public absorbs; a participant-level side widens
/// session sets to their owners.
pub fn union_labels(a: &Label, b: &Label) -> Label {
    use Label::*;
    match (a, b) {
        (Public, _) | (_, Public) => Public,
        (Unreadable, x) | (x, Unreadable) => x.clone(),
        (Readers(x), Readers(y)) => Label::readers(x.union(y).cloned()),
        (Sessions(x), Sessions(y)) => Label::sessions(x.union(y).cloned()),
        (Readers(ps), Sessions(ss)) | (Sessions(ss), Readers(ps)) => {
            Label::readers(ps.iter().cloned().chain(ss.iter().map(|s| s.pid.clone())))
        }
    }
}

/// True iff everyone who may read `key` may also read `secret`, so that
/// encrypting `secret` under `key` does not widen its audience.
pub fn flows_to(secret: &Label, key: &Label) -> bool {
    match (secret, key) {
        (Label::Public, _) => true,
        (_, Label::Unreadable) => true,
        (_, Label::Public) => false,
        (s, Label::Readers(ps)) => ps
            .iter()
            .all(|p| can_read(s, &ReaderRef::Participant(p.clone()))),
        (s, Label::Sessions(ss)) => ss
            .iter()
            .all(|x| can_read(s, &ReaderRef::Session(x.clone()))),
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("no label declared for {0}")]
    Unlabeled(String),
}

/// Declared labels for atoms that do not carry their own (string constants
/// standing for long-term secrets), plus overrides for nonce ids.
#[derive(Clone, Debug, Default)]
pub struct LabelEnv {
    labels: BTreeMap<Term, Label>,
    /// When set, undeclared string constants are a configuration error rather
    /// than public.
    pub closed: bool,
}

impl LabelEnv {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, atom: Term, label: Label) {
        self.labels.insert(atom, label);
    }

    pub fn get(&self, atom: &Term) -> Option<&Label> {
        self.labels.get(atom)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Term, &Label)> {
        self.labels.iter()
    }
}

/// Secrecy label of a term, computed structurally.
pub fn label_of(t: &Term, env: &LabelEnv) -> Result<Label, LabelError> {
    if let Some(l) = env.get(t) {
        return Ok(l.clone());
    }
    Ok(match t {
        Term::Str(_) if env.closed => return Err(LabelError::Unlabeled(t.to_string())),
        Term::Int(_)
        | Term::Str(_)
        | Term::Bool(_)
        | Term::Undef
        | Term::Name(_)
        | Term::Generator
        | Term::Pk(_)
        | Term::Hash(_) => Label::Public,
        Term::Nonce(_, l) => l.clone(),
        Term::Tuple(items) | Term::Kdf(_, items) => fold_join(items.iter(), env)?,
        Term::AEnc(key, m) => match &**key {
            Term::Pk(sk) => {
                let lm = label_of(m, env)?;
                if flows_to(&lm, &label_of(sk, env)?) {
                    Label::Public
                } else {
                    lm
                }
            }
            // Nobody can open a ciphertext under a non-key.
            _ => Label::Public,
        },
        Term::Sig(_, m) => label_of(m, env)?,
        Term::Aead(p) => {
            let lm = label_of(&p[2], env)?;
            let outer = join_labels(&label_of(&p[1], env)?, &label_of(&p[3], env)?);
            if flows_to(&lm, &label_of(&p[0], env)?) {
                outer
            } else {
                join_labels(&lm, &outer)
            }
        }
        Term::Exp(base, es) => {
            if !matches!(**base, Term::Generator) {
                return label_of(&crate::term::normalize(t).unwrap_or(Term::Undef), env);
            }
            if es.len() == 1 {
                Label::Public
            } else {
                let mut acc = Label::Unreadable;
                for e in es.iter() {
                    acc = union_labels(&acc, &label_of(e, env)?);
                }
                acc
            }
        }
    })
}

fn fold_join<'a>(
    items: impl Iterator<Item = &'a Term>,
    env: &LabelEnv,
) -> Result<Label, LabelError> {
    let mut acc = Label::Public;
    for t in items {
        acc = join_labels(&acc, &label_of(t, env)?);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(ps: &[&str]) -> Label {
        Label::readers(ps.iter().map(ParticipantId::new))
    }

    fn s(ss: &[(&str, u32)]) -> Label {
        Label::sessions(ss.iter().map(|(p, i)| SessionRef::new(*p, *i)))
    }

    fn p(name: &str) -> ReaderRef {
        ReaderRef::Participant(ParticipantId::new(name))
    }

    #[test]
    fn can_read_examples() {
        assert!(can_read(&Label::Public, &ReaderRef::Attacker));
        assert!(can_read(&r(&["A", "B"]), &p("A")));
        assert!(!can_read(&r(&["A", "B"]), &p("C")));
        assert!(can_read(
            &s(&[("A", 1)]),
            &ReaderRef::Session(SessionRef::new("A", 1))
        ));
        assert!(!can_read(
            &s(&[("A", 1)]),
            &ReaderRef::Session(SessionRef::new("A", 2))
        ));
        assert!(can_read(&s(&[("A", 1)]), &p("A")));
        assert!(!can_read(&Label::Unreadable, &p("A")));
    }

    #[test]
    fn join_examples() {
        assert_eq!(join_labels(&Label::Public, &r(&["A", "B"])), r(&["A", "B"]));
        assert_eq!(join_labels(&r(&["A", "B"]), &r(&["B", "C"])), r(&["B"]));
        assert_eq!(join_labels(&r(&["A"]), &r(&["C"])), Label::Unreadable);
        assert_eq!(
            join_labels(&r(&["A"]), &s(&[("A", 1), ("B", 2)])),
            s(&[("A", 1)])
        );
    }

    #[test]
    fn label_of_examples() {
        let env = LabelEnv::new();
        assert_eq!(label_of(&Term::int(1), &env).unwrap(), Label::Public);
        let x = Term::nonce(1, r(&["A", "B"]));
        let y = Term::nonce(2, Label::Public);
        assert_eq!(
            label_of(&Term::kdf(1, vec![x, y]), &env).unwrap(),
            r(&["A", "B"])
        );

        let x = Term::nonce(1, s(&[("A", 1)]));
        let y = Term::nonce(2, s(&[("B", 2)]));
        let k = Term::exp_g(vec![x.clone(), y]).unwrap();
        assert_eq!(label_of(&k, &env).unwrap(), s(&[("A", 1), ("B", 2)]));
        // A public exponent makes the shared value computable by anyone.
        let k = Term::exp_g(vec![x.clone(), Term::int(3)]).unwrap();
        assert_eq!(label_of(&k, &env).unwrap(), Label::Public);
        assert_eq!(
            label_of(&Term::exp_g(vec![x]).unwrap(), &env).unwrap(),
            Label::Public
        );
    }

    #[test]
    fn encryption_under_a_reader_key_is_public() {
        let env = LabelEnv::new();
        let skb = Term::nonce(1, r(&["B"]));
        let na = Term::nonce(2, r(&["A", "B"]));
        let c = Term::aenc(Term::pk(skb), Term::tuple(vec![Term::int(1), na.clone()]));
        assert_eq!(label_of(&c, &env).unwrap(), Label::Public);
        let ske = Term::nonce(3, r(&["E"]));
        let c = Term::aenc(Term::pk(ske), Term::tuple(vec![Term::int(3), na]));
        assert_eq!(label_of(&c, &env).unwrap(), r(&["A", "B"]));
    }

    #[test]
    fn closed_env_rejects_unknown_strings() {
        let mut env = LabelEnv::new();
        env.closed = true;
        assert!(label_of(&Term::str("psk"), &env).is_err());
        env.declare(Term::str("psk"), r(&["A"]));
        assert_eq!(label_of(&Term::str("psk"), &env).unwrap(), r(&["A"]));
    }
}
