//! Term patterns with variables, used by message rules, event requirements
//! and attacker message shapes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::term::{normalize, Term};

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Lit(Term),
    /// `?x`: binds on first use, must agree on later uses.
    Var(Arc<str>),
    /// `_`
    Wild,
    Tuple(Vec<Pattern>),
    Hash(Box<Pattern>),
    Pk(Box<Pattern>),
    AEnc(Box<Pattern>, Box<Pattern>),
    Sig(Box<Pattern>, Box<Pattern>),
    Aead(Box<[Pattern; 4]>),
    Kdf(u8, Vec<Pattern>),
    /// Generator raised to the listed exponents, matched as a multiset.
    Exp(Vec<Pattern>),
}

pub type Bindings = BTreeMap<Arc<str>, Term>;

impl Pattern {
    pub fn var(name: &str) -> Pattern {
        Pattern::Var(Arc::from(name))
    }

    /// Matches `t`, extending `b`. On failure `b` is left unchanged.
    pub fn matches(&self, t: &Term, b: &mut Bindings) -> bool {
        let mut trial = b.clone();
        if self.match_into(t, &mut trial) {
            *b = trial;
            true
        } else {
            false
        }
    }

    fn match_into(&self, t: &Term, b: &mut Bindings) -> bool {
        match (self, t) {
            (Pattern::Wild, _) => true,
            (Pattern::Lit(l), _) => l == t,
            (Pattern::Var(v), _) => match b.get(v) {
                Some(bound) => bound == t,
                None => {
                    b.insert(v.clone(), t.clone());
                    true
                }
            },
            (Pattern::Tuple(ps), Term::Tuple(ts)) => {
                ps.len() == ts.len() && ps.iter().zip(ts.iter()).all(|(p, t)| p.match_into(t, b))
            }
            (Pattern::Hash(p), Term::Hash(a)) | (Pattern::Pk(p), Term::Pk(a)) => p.match_into(a, b),
            (Pattern::AEnc(p, q), Term::AEnc(x, y)) | (Pattern::Sig(p, q), Term::Sig(x, y)) => {
                p.match_into(x, b) && q.match_into(y, b)
            }
            (Pattern::Aead(ps), Term::Aead(ts)) => {
                ps.iter().zip(ts.iter()).all(|(p, t)| p.match_into(t, b))
            }
            (Pattern::Kdf(i, ps), Term::Kdf(j, ts)) => {
                i == j
                    && ps.len() == ts.len()
                    && ps.iter().zip(ts.iter()).all(|(p, t)| p.match_into(t, b))
            }
            (Pattern::Exp(ps), Term::Exp(base, es)) => {
                matches!(**base, Term::Generator)
                    && ps.len() == es.len()
                    && match_multiset(ps, es, b)
            }
            _ => false,
        }
    }

    /// The term obtained by substituting bound variables; `None` if a
    /// variable is unbound or the pattern has a wildcard.
    pub fn instantiate(&self, b: &Bindings) -> Option<Term> {
        Some(match self {
            Pattern::Lit(t) => t.clone(),
            Pattern::Var(v) => b.get(v)?.clone(),
            Pattern::Wild => return None,
            Pattern::Tuple(ps) => Term::tuple(inst_all(ps, b)?),
            Pattern::Hash(p) => Term::hash(p.instantiate(b)?),
            Pattern::Pk(p) => Term::pk(p.instantiate(b)?),
            Pattern::AEnc(p, q) => Term::aenc(p.instantiate(b)?, q.instantiate(b)?),
            Pattern::Sig(p, q) => Term::sig(p.instantiate(b)?, q.instantiate(b)?),
            Pattern::Aead(ps) => Term::aead(
                ps[0].instantiate(b)?,
                ps[1].instantiate(b)?,
                ps[2].instantiate(b)?,
                ps[3].instantiate(b)?,
            ),
            Pattern::Kdf(i, ps) => Term::kdf(*i, inst_all(ps, b)?),
            Pattern::Exp(ps) => {
                return normalize(&Term::exp_raw(Term::Generator, inst_all(ps, b)?)).ok()
            }
        })
    }

    /// Variable names in left-to-right order, without duplicates.
    pub fn vars(&self) -> Vec<Arc<str>> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Arc<str>>) {
        match self {
            Pattern::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Pattern::Lit(_) | Pattern::Wild => {}
            Pattern::Tuple(ps) | Pattern::Kdf(_, ps) | Pattern::Exp(ps) => {
                ps.iter().for_each(|p| p.collect_vars(out))
            }
            Pattern::Hash(p) | Pattern::Pk(p) => p.collect_vars(out),
            Pattern::AEnc(p, q) | Pattern::Sig(p, q) => {
                p.collect_vars(out);
                q.collect_vars(out);
            }
            Pattern::Aead(ps) => ps.iter().for_each(|p| p.collect_vars(out)),
        }
    }
}

fn inst_all(ps: &[Pattern], b: &Bindings) -> Option<Vec<Term>> {
    ps.iter().map(|p| p.instantiate(b)).collect()
}

fn match_multiset(ps: &[Pattern], es: &[Term], b: &mut Bindings) -> bool {
    let Some((p, rest)) = ps.split_first() else {
        return es.is_empty();
    };
    for i in 0..es.len() {
        let mut trial = b.clone();
        if p.match_into(&es[i], &mut trial) {
            let remaining: Vec<Term> = es
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, t)| t.clone())
                .collect();
            if match_multiset(rest, &remaining, &mut trial) {
                *b = trial;
                return true;
            }
        }
    }
    false
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(f: &mut fmt::Formatter<'_>, ps: &[Pattern]) -> fmt::Result {
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{p}")?;
            }
            Ok(())
        }
        match self {
            Pattern::Lit(t) => write!(f, "{t}"),
            Pattern::Var(v) => write!(f, "?{v}"),
            Pattern::Wild => f.write_str("_"),
            Pattern::Tuple(ps) => {
                f.write_str("<")?;
                list(f, ps)?;
                f.write_str(">")
            }
            Pattern::Hash(p) => write!(f, "hash({p})"),
            Pattern::Pk(p) => write!(f, "pk({p})"),
            Pattern::AEnc(p, q) => write!(f, "enc({p}, {q})"),
            Pattern::Sig(p, q) => write!(f, "sig({p}, {q})"),
            Pattern::Aead(ps) => {
                f.write_str("aead(")?;
                list(f, &ps[..])?;
                f.write_str(")")
            }
            Pattern::Kdf(i, ps) => {
                write!(f, "kdf{i}(")?;
                list(f, ps)?;
                f.write_str(")")
            }
            Pattern::Exp(ps) => {
                f.write_str("exp(g; ")?;
                list(f, ps)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;

    #[test]
    fn repeated_vars_must_agree() {
        let p = Pattern::Tuple(vec![Pattern::var("x"), Pattern::var("x")]);
        let mut b = Bindings::new();
        assert!(p.matches(&Term::tuple(vec![Term::int(1), Term::int(1)]), &mut b));
        assert_eq!(b.get("x"), Some(&Term::int(1)));
        let mut b = Bindings::new();
        assert!(!p.matches(&Term::tuple(vec![Term::int(1), Term::int(2)]), &mut b));
        assert!(b.is_empty());
    }

    #[test]
    fn exp_matches_as_multiset() {
        let x = Term::nonce(1, Label::Public);
        let y = Term::nonce(2, Label::Public);
        let t = Term::exp_g(vec![y.clone(), x.clone()]).unwrap();
        let p = Pattern::Exp(vec![Pattern::Lit(y.clone()), Pattern::var("o")]);
        let mut b = Bindings::new();
        assert!(p.matches(&t, &mut b));
        assert_eq!(b.get("o"), Some(&x));
        assert_eq!(p.instantiate(&b), Some(t));
    }

    #[test]
    fn instantiate_needs_bindings() {
        let p = Pattern::Pk(Box::new(Pattern::var("k")));
        assert_eq!(p.instantiate(&Bindings::new()), None);
        let b: Bindings = [(Arc::from("k"), Term::int(3))].into();
        assert_eq!(p.instantiate(&b), Some(Term::pk(Term::int(3))));
        assert_eq!(p.to_string(), "pk(?k)");
    }
}
