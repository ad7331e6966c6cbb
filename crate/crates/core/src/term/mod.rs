//! Symbolic terms and their canonical forms.
//!
//! Terms are immutable and cheap to clone: every compound node holds its
//! children behind `Arc`. The only equation beyond syntactic identity is the
//! Diffie-Hellman one, `(g^x)^y = (g^y)^x`, which is decided by keeping every
//! exponentiation as a flat, sorted multiset of exponents over the generator.

mod syntax;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ids::{NonceId, ParticipantId};
use crate::label::Label;

pub use syntax::{parse_label, parse_term, NonceTable, SyntaxError};

#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum TermError {
    #[error("exponentiation with an empty exponent multiset")]
    EmptyExp,
    #[error("tuple of arity {0}; tuples need at least two components")]
    ShortTuple(usize),
    #[error("exponentiation base must be the generator or another exponentiation, got {0}")]
    BadExpBase(String),
    #[error("expected a nonce, got {0}")]
    NotANonce(String),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Str(Arc<str>),
    Bool(bool),
    /// Result of an ill-typed operation (projection out of range and the like).
    Undef,
    Name(ParticipantId),
    Generator,
    Nonce(NonceId, Label),
    Tuple(Arc<[Term]>),
    Hash(Arc<Term>),
    Pk(Arc<Term>),
    AEnc(Arc<Term>, Arc<Term>),
    Sig(Arc<Term>, Arc<Term>),
    /// key, nonce, payload, associated data
    Aead(Arc<[Term; 4]>),
    Kdf(u8, Arc<[Term]>),
    /// `base` raised to the product of `exponents`. Canonical iff `base` is
    /// the generator and the exponents are sorted.
    Exp(Arc<Term>, Arc<[Term]>),
}

impl Term {
    pub fn int(v: i64) -> Term {
        Term::Int(v)
    }

    pub fn str(s: &str) -> Term {
        Term::Str(Arc::from(s))
    }

    pub fn name(p: impl Into<ParticipantId>) -> Term {
        Term::Name(p.into())
    }

    pub fn nonce(id: u32, label: Label) -> Term {
        Term::Nonce(NonceId(id), label)
    }

    pub fn bool(b: bool) -> Term {
        Term::Bool(b)
    }

    /// Builds a tuple; arity below two is reported by [`normalize`].
    pub fn tuple(items: Vec<Term>) -> Term {
        Term::Tuple(items.into())
    }

    pub fn hash(t: Term) -> Term {
        Term::Hash(Arc::new(t))
    }

    pub fn pk(sk: Term) -> Term {
        Term::Pk(Arc::new(sk))
    }

    pub fn aenc(pk: Term, payload: Term) -> Term {
        Term::AEnc(Arc::new(pk), Arc::new(payload))
    }

    pub fn sig(sk: Term, payload: Term) -> Term {
        Term::Sig(Arc::new(sk), Arc::new(payload))
    }

    pub fn aead(key: Term, nonce: Term, payload: Term, ad: Term) -> Term {
        Term::Aead(Arc::new([key, nonce, payload, ad]))
    }

    pub fn kdf(index: u8, inputs: Vec<Term>) -> Term {
        Term::Kdf(index, inputs.into())
    }

    /// Raw exponentiation node, not normalized.
    pub fn exp_raw(base: Term, exponents: Vec<Term>) -> Term {
        Term::Exp(Arc::new(base), exponents.into())
    }

    /// `base^e` in canonical form. Fails when `base` is neither the generator
    /// nor an exponentiation.
    pub fn exp(base: &Term, e: Term) -> Result<Term, TermError> {
        normalize(&Term::exp_raw(base.clone(), vec![e]))
    }

    /// `g^(e1 * ... * en)` in canonical form.
    pub fn exp_g(exponents: Vec<Term>) -> Result<Term, TermError> {
        normalize(&Term::exp_raw(Term::Generator, exponents))
    }

    pub fn is_public_atom(&self) -> bool {
        matches!(
            self,
            Term::Int(_)
                | Term::Str(_)
                | Term::Bool(_)
                | Term::Undef
                | Term::Name(_)
                | Term::Generator
        )
    }

    pub fn is_nonce(&self) -> bool {
        matches!(self, Term::Nonce(..))
    }

    pub fn nonce_id(&self) -> Option<NonceId> {
        match self {
            Term::Nonce(id, _) => Some(*id),
            _ => None,
        }
    }

    pub fn as_name(&self) -> Option<&ParticipantId> {
        match self {
            Term::Name(p) => Some(p),
            _ => None,
        }
    }

    /// Constructor nesting depth; atoms have depth zero.
    pub fn depth(&self) -> usize {
        match self {
            Term::Int(_)
            | Term::Str(_)
            | Term::Bool(_)
            | Term::Undef
            | Term::Name(_)
            | Term::Generator
            | Term::Nonce(..) => 0,
            Term::Hash(a) | Term::Pk(a) => 1 + a.depth(),
            Term::AEnc(a, b) | Term::Sig(a, b) => 1 + a.depth().max(b.depth()),
            Term::Aead(parts) => 1 + parts.iter().map(Term::depth).max().unwrap_or(0),
            Term::Tuple(items) | Term::Kdf(_, items) => {
                1 + items.iter().map(Term::depth).max().unwrap_or(0)
            }
            Term::Exp(base, es) => {
                let inner = es.iter().map(Term::depth).max().unwrap_or(0);
                if matches!(**base, Term::Generator) {
                    inner + 1
                } else {
                    1 + inner.max(base.depth())
                }
            }
        }
    }

    /// Immediate sub-terms, in argument order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Int(_)
            | Term::Str(_)
            | Term::Bool(_)
            | Term::Undef
            | Term::Name(_)
            | Term::Generator
            | Term::Nonce(..) => Vec::new(),
            Term::Hash(a) | Term::Pk(a) => vec![a],
            Term::AEnc(a, b) | Term::Sig(a, b) => vec![a, b],
            Term::Aead(parts) => parts.iter().collect(),
            Term::Tuple(items) | Term::Kdf(_, items) => items.iter().collect(),
            Term::Exp(base, es) => std::iter::once(&**base).chain(es.iter()).collect(),
        }
    }

    /// All sub-terms including `self`, pre-order.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            let mut kids = t.children();
            kids.reverse();
            stack.extend(kids);
        }
        out
    }

    /// Projection used by the language: component `i` of a tuple, else `Undef`.
    pub fn project(&self, i: usize) -> Term {
        match self {
            Term::Tuple(items) => items.get(i).cloned().unwrap_or(Term::Undef),
            _ => Term::Undef,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        syntax::write_term(f, self)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        syntax::write_term(f, self)
    }
}

pub(crate) fn syntax_label(f: &mut fmt::Formatter<'_>, l: &Label) -> fmt::Result {
    syntax::write_label(f, l)
}

/// Canonical representative of `t`: exponentiations flattened onto the
/// generator with sorted exponents. Idempotent.
pub fn normalize(t: &Term) -> Result<Term, TermError> {
    Ok(match t {
        Term::Int(_)
        | Term::Str(_)
        | Term::Bool(_)
        | Term::Undef
        | Term::Name(_)
        | Term::Generator
        | Term::Nonce(..) => t.clone(),
        Term::Tuple(items) => {
            if items.len() < 2 {
                return Err(TermError::ShortTuple(items.len()));
            }
            Term::Tuple(
                items
                    .iter()
                    .map(normalize)
                    .collect::<Result<Vec<_>, _>>()?
                    .into(),
            )
        }
        Term::Hash(a) => Term::hash(normalize(a)?),
        Term::Pk(a) => Term::pk(normalize(a)?),
        Term::AEnc(a, b) => Term::aenc(normalize(a)?, normalize(b)?),
        Term::Sig(a, b) => Term::sig(normalize(a)?, normalize(b)?),
        Term::Aead(p) => Term::aead(
            normalize(&p[0])?,
            normalize(&p[1])?,
            normalize(&p[2])?,
            normalize(&p[3])?,
        ),
        Term::Kdf(i, inputs) => Term::Kdf(
            *i,
            inputs
                .iter()
                .map(normalize)
                .collect::<Result<Vec<_>, _>>()?
                .into(),
        ),
        Term::Exp(base, es) => {
            if es.is_empty() {
                return Err(TermError::EmptyExp);
            }
            let mut exps: Vec<Term> = match normalize(base)? {
                Term::Generator => Vec::new(),
                Term::Exp(_, inner) => inner.to_vec(),
                other => return Err(TermError::BadExpBase(other.to_string())),
            };
            for e in es.iter() {
                exps.push(normalize(e)?);
            }
            exps.sort();
            Term::Exp(Arc::new(Term::Generator), exps.into())
        }
    })
}

/// Equality modulo the equational theory.
pub fn terms_equal(a: &Term, b: &Term) -> bool {
    match (normalize(a), normalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}
