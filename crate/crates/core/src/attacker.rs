//! Dolev-Yao derivation: knowledge analysis, derivability, bounded synthesis
//! and message-shape filling for the explorer.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::pattern::{Bindings, Pattern};
use crate::term::{normalize, Term};
use crate::trace::Trace;

/// Attacker knowledge: the raw knowledge base and its analysis closure.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Knowledge {
    base: Arc<BTreeSet<Term>>,
    analyzed: Arc<BTreeSet<Term>>,
}

impl Knowledge {
    pub fn new(base: impl IntoIterator<Item = Term>) -> Knowledge {
        let base: BTreeSet<Term> = base.into_iter().collect();
        let analyzed = analyze(&base);
        Knowledge {
            base: Arc::new(base),
            analyzed: Arc::new(analyzed),
        }
    }

    pub fn from_trace(tr: &Trace) -> Knowledge {
        Knowledge::new(tr.attacker_knowledge_base())
    }

    /// Knowledge after learning `terms`. Analysis restarts from the previous
    /// closure, which gives the same result as analyzing from scratch.
    pub fn extend<'a>(&self, terms: impl IntoIterator<Item = &'a Term>) -> Knowledge {
        let new: Vec<&Term> = terms
            .into_iter()
            .filter(|t| !self.base.contains(*t))
            .collect();
        if new.is_empty() {
            return self.clone();
        }
        let mut base = (*self.base).clone();
        base.extend(new.iter().map(|t| (*t).clone()));
        let mut analyzed = (*self.analyzed).clone();
        analyze_into(&mut analyzed, new.into_iter().cloned());
        Knowledge {
            base: Arc::new(base),
            analyzed: Arc::new(analyzed),
        }
    }

    pub fn base(&self) -> &BTreeSet<Term> {
        &self.base
    }

    pub fn analyzed(&self) -> &BTreeSet<Term> {
        &self.analyzed
    }

    pub fn analyzed_arc(&self) -> Arc<BTreeSet<Term>> {
        self.analyzed.clone()
    }

    pub fn can_derive(&self, t: &Term) -> bool {
        synth_cost(&self.analyzed, t).is_some()
    }

    /// Constructor layers needed on top of analyzed knowledge to build `t`.
    pub fn synth_cost(&self, t: &Term) -> Option<usize> {
        synth_cost(&self.analyzed, t)
    }
}

/// Smallest superset of `base` closed under projection, decryption with a
/// derivable key, and signature payload extraction.
pub fn analyze(base: &BTreeSet<Term>) -> BTreeSet<Term> {
    let mut s = BTreeSet::new();
    analyze_into(&mut s, base.iter().cloned());
    s
}

/// Adds `new` to the analysis-closed set `s` and restores closure.
fn analyze_into(s: &mut BTreeSet<Term>, new: impl IntoIterator<Item = Term>) {
    let mut work: Vec<Term> = new.into_iter().filter(|t| !s.contains(t)).collect();
    while !work.is_empty() {
        while let Some(t) = work.pop() {
            if !s.insert(t.clone()) {
                continue;
            }
            match &t {
                Term::Tuple(items) => {
                    work.extend(items.iter().filter(|i| !s.contains(*i)).cloned())
                }
                Term::Sig(_, m) if !s.contains(&**m) => work.push((**m).clone()),
                _ => {}
            }
        }
        // New knowledge may open ciphertexts that were sealed so far.
        for t in s.iter() {
            match t {
                Term::AEnc(key, m) => {
                    if let Term::Pk(sk) = &**key {
                        if !s.contains(&**m) && synth_cost(s, sk).is_some() {
                            work.push((**m).clone());
                        }
                    }
                }
                Term::Aead(p)
                    if (!s.contains(&p[2]) || !s.contains(&p[3])) && synth_cost(s, &p[0]).is_some()
                    => {
                        work.push(p[2].clone());
                        work.push(p[3].clone());
                    }
                _ => {}
            }
        }
        work.retain(|t| !s.contains(t));
    }
}

/// Number of constructor layers needed to build `t` from `known` and public
/// atoms, or `None` if `t` is not derivable. String constants stand for
/// long-term secrets and must be known; public ones belong in the root.
pub fn synth_cost(known: &BTreeSet<Term>, t: &Term) -> Option<usize> {
    if known.contains(t) || (t.is_public_atom() && !matches!(t, Term::Str(_))) {
        return Some(0);
    }
    let layer = |kids: &[&Term]| -> Option<usize> {
        let mut m = 0;
        for k in kids {
            m = m.max(synth_cost(known, k)?);
        }
        Some(m + 1)
    };
    match t {
        Term::Nonce(..) | Term::Str(_) => None,
        Term::Hash(a) | Term::Pk(a) => layer(&[a]),
        Term::AEnc(a, b) | Term::Sig(a, b) => layer(&[a, b]),
        Term::Aead(p) => layer(&[&p[0], &p[1], &p[2], &p[3]]),
        Term::Tuple(items) | Term::Kdf(_, items) => layer(&items.iter().collect::<Vec<_>>()),
        Term::Exp(base, es) => {
            if !matches!(**base, Term::Generator) {
                return synth_cost(known, &normalize(t).ok()?);
            }
            if es.len() == 1 {
                return Some(synth_cost(known, &es[0])? + 1);
            }
            // Peel one exponent at a time: g^(M+x) from g^M and x.
            let mut best: Option<usize> = None;
            for i in 0..es.len() {
                if i > 0 && es[i] == es[i - 1] {
                    continue;
                }
                let Some(cx) = synth_cost(known, &es[i]) else {
                    continue;
                };
                let rest: Vec<Term> = es
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, e)| e.clone())
                    .collect();
                let inner = Term::Exp(Arc::new(Term::Generator), rest.into());
                if let Some(ci) = synth_cost(known, &inner) {
                    let c = ci.max(cx) + 1;
                    best = Some(best.map_or(c, |b| b.min(c)));
                }
            }
            best
        }
        _ => None,
    }
}

/// Limits on eager enumeration.
#[derive(Clone, Copy, Debug)]
pub struct SynthLimits {
    pub max_arity: usize,
    /// Enumeration stops adding terms once this many are collected.
    pub cap: usize,
}

impl Default for SynthLimits {
    fn default() -> Self {
        SynthLimits {
            max_arity: 3,
            cap: 200_000,
        }
    }
}

/// Every term of at most `depth` constructor layers over
/// `analyze(k) ∪ atoms`, in canonical order. Eager and therefore only
/// practical for small pools; membership alone is [`Knowledge::synth_cost`].
pub fn synthesize_up_to(k: &Knowledge, depth: usize, atoms: &BTreeSet<Term>) -> BTreeSet<Term> {
    synthesize_bounded(k, depth, atoms, SynthLimits::default())
}

pub fn synthesize_bounded(
    k: &Knowledge,
    depth: usize,
    atoms: &BTreeSet<Term>,
    lim: SynthLimits,
) -> BTreeSet<Term> {
    let mut all: BTreeSet<Term> = k.analyzed().iter().chain(atoms.iter()).cloned().collect();
    all.insert(Term::Generator);
    for _ in 0..depth {
        let prev: Vec<Term> = all.iter().cloned().collect();
        let mut next = all.clone();
        let push = |t: Term, next: &mut BTreeSet<Term>| -> bool {
            if let Ok(t) = normalize(&t) {
                next.insert(t);
            }
            next.len() < lim.cap
        };
        'gen: {
            for a in &prev {
                if !push(Term::hash(a.clone()), &mut next) || !push(Term::pk(a.clone()), &mut next)
                {
                    break 'gen;
                }
                if let Term::Exp(..) | Term::Generator = a {
                    for e in &prev {
                        if !push(Term::exp_raw(a.clone(), vec![e.clone()]), &mut next) {
                            break 'gen;
                        }
                    }
                }
                for b in &prev {
                    let pairs = [
                        Term::aenc(a.clone(), b.clone()),
                        Term::sig(a.clone(), b.clone()),
                    ];
                    for t in pairs {
                        if !push(t, &mut next) {
                            break 'gen;
                        }
                    }
                }
            }
            for arity in 1..=lim.max_arity {
                let mut idx = vec![0usize; arity];
                loop {
                    let items: Vec<Term> = idx.iter().map(|&i| prev[i].clone()).collect();
                    if !push(Term::kdf(1, items.clone()), &mut next) {
                        break 'gen;
                    }
                    if arity >= 2 && !push(Term::tuple(items), &mut next) {
                        break 'gen;
                    }
                    if !odometer(&mut idx, prev.len()) {
                        break;
                    }
                }
            }
            let mut idx = vec![0usize; 4];
            loop {
                let t = Term::aead(
                    prev[idx[0]].clone(),
                    prev[idx[1]].clone(),
                    prev[idx[2]].clone(),
                    prev[idx[3]].clone(),
                );
                if !push(t, &mut next) || !odometer(&mut idx, prev.len()) {
                    break;
                }
            }
        }
        let grew = next.len() > all.len();
        all = next;
        if !grew || all.len() >= lim.cap {
            break;
        }
    }
    all
}

fn odometer(idx: &mut [usize], n: usize) -> bool {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < n {
            return true;
        }
        *d = 0;
    }
    false
}

/// Terms revealed by corrupting a component holding `vals`.
pub fn leaked_terms<'a>(vals: impl IntoIterator<Item = &'a Term>) -> BTreeSet<Term> {
    vals.into_iter().cloned().collect()
}

/// Hole category of a shape variable: the name up to its first digit or
/// underscore, so `?nonce2` and `?nonce_b` are both nonce holes.
fn hole_type(var: &str) -> &str {
    let end = var
        .find(|c: char| c.is_ascii_digit() || c == '_')
        .unwrap_or(var.len());
    &var[..end]
}

fn hole_candidates(ty: &str, pool: &BTreeSet<Term>, analyzed: &BTreeSet<Term>) -> Vec<Term> {
    let secrets = || {
        analyzed
            .iter()
            .filter(|t| matches!(t, Term::Nonce(..) | Term::Str(_)))
    };
    let mut out: BTreeSet<Term> = match ty {
        "name" => pool
            .iter()
            .filter(|t| matches!(t, Term::Name(_)))
            .cloned()
            .collect(),
        "nonce" => analyzed.iter().filter(|t| t.is_nonce()).cloned().collect(),
        "int" => pool
            .iter()
            .filter(|t| matches!(t, Term::Int(_)))
            .cloned()
            .collect(),
        "sk" => secrets().cloned().collect(),
        "pk" => pool
            .iter()
            .filter(|t| matches!(t, Term::Pk(_)))
            .cloned()
            .chain(secrets().map(|s| Term::pk(s.clone())))
            .collect(),
        "exp" => pool
            .iter()
            .filter(|t| matches!(t, Term::Exp(..)))
            .cloned()
            .chain(
                pool.iter()
                    .filter(|t| matches!(t, Term::Nonce(..) | Term::Int(_)))
                    .filter_map(|x| Term::exp_g(vec![x.clone()]).ok()),
            )
            .collect(),
        _ => pool.clone(),
    };
    out.remove(&Term::Undef);
    out.into_iter().collect()
}

fn name_wildcards(p: &Pattern, n: &mut usize) -> Pattern {
    let mut go = |q: &Pattern| name_wildcards(q, n);
    match p {
        Pattern::Wild => {
            let v = Pattern::var(&format!("any_{n}"));
            *n += 1;
            v
        }
        Pattern::Lit(_) | Pattern::Var(_) => p.clone(),
        Pattern::Tuple(ps) => Pattern::Tuple(ps.iter().map(go).collect()),
        Pattern::Kdf(i, ps) => Pattern::Kdf(*i, ps.iter().map(go).collect()),
        Pattern::Exp(ps) => Pattern::Exp(ps.iter().map(go).collect()),
        Pattern::Hash(a) => Pattern::Hash(Box::new(go(a))),
        Pattern::Pk(a) => Pattern::Pk(Box::new(go(a))),
        Pattern::AEnc(a, b) => Pattern::AEnc(Box::new(go(a)), Box::new(go(b))),
        Pattern::Sig(a, b) => Pattern::Sig(Box::new(go(a)), Box::new(go(b))),
        Pattern::Aead(ps) => {
            Pattern::Aead(Box::new([go(&ps[0]), go(&ps[1]), go(&ps[2]), go(&ps[3])]))
        }
    }
}

/// Attacker-derivable instances of a message shape whose synthesis cost is
/// at most `depth`, together with known terms that already match it.
/// Output is sorted and holds at most `cap` terms.
pub fn fill_shape(
    shape: &Pattern,
    k: &Knowledge,
    alphabet: &[Term],
    depth: usize,
    cap: usize,
) -> Vec<Term> {
    let shape = name_wildcards(shape, &mut 0);
    let pool: BTreeSet<Term> = k
        .analyzed()
        .iter()
        .chain(alphabet.iter())
        .cloned()
        .collect();
    let vars = shape.vars();
    let cands: Vec<Vec<Term>> = vars
        .iter()
        .map(|v| hole_candidates(hole_type(v), &pool, k.analyzed()))
        .collect();

    let mut out = BTreeSet::new();
    for t in k.analyzed() {
        if shape.matches(t, &mut Bindings::new()) {
            out.insert(t.clone());
        }
    }
    if cands.iter().all(|c| !c.is_empty()) {
        let mut idx = vec![0usize; vars.len()];
        loop {
            let b: Bindings = vars
                .iter()
                .zip(&idx)
                .zip(&cands)
                .map(|((v, &i), c)| (v.clone(), c[i].clone()))
                .collect();
            if let Some(t) = shape.instantiate(&b).and_then(|t| normalize(&t).ok()) {
                if k.synth_cost(&t).is_some_and(|c| c <= depth) {
                    out.insert(t);
                    if out.len() >= cap {
                        break;
                    }
                }
            }
            let mut advanced = false;
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < cands[d].len() {
                    advanced = true;
                    break;
                }
                idx[d] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;

    fn n(i: u32) -> Term {
        Term::nonce(i, Label::Public)
    }

    fn k(ts: &[Term]) -> Knowledge {
        Knowledge::new(ts.iter().cloned())
    }

    #[test]
    fn analysis_rules() {
        let (a, b, sk, m) = (n(1), n(2), n(3), n(4));
        assert!(k(&[Term::tuple(vec![a.clone(), b.clone()])])
            .analyzed()
            .is_superset(&[a.clone(), b].into()));
        let c = Term::aenc(Term::pk(sk.clone()), m.clone());
        assert!(k(&[c.clone(), sk.clone()]).analyzed().contains(&m));
        assert!(!k(std::slice::from_ref(&c)).analyzed().contains(&m));
        assert!(k(&[Term::sig(sk.clone(), m.clone())])
            .analyzed()
            .contains(&m));
        // key learned from a second ciphertext opened later in the fixpoint
        let c2 = Term::aenc(Term::pk(a.clone()), sk.clone());
        assert!(k(&[c, c2, a]).analyzed().contains(&m));
    }

    #[test]
    fn derivability() {
        assert!(k(&[]).can_derive(&Term::int(1)));
        let (x, y, sk) = (n(1), n(2), n(3));
        let gx = Term::exp_g(vec![x.clone()]).unwrap();
        let gxy = Term::exp_g(vec![x.clone(), y.clone()]).unwrap();
        assert!(k(&[gx.clone(), y.clone()]).can_derive(&gxy));
        assert!(!k(&[gx, Term::exp_g(vec![y]).unwrap()]).can_derive(&gxy));
        assert!(!k(&[Term::pk(sk.clone())]).can_derive(&sk));
        assert!(!k(&[]).can_derive(&x));
    }

    #[test]
    fn lowe_replay_is_synthesizable() {
        let (na, skb) = (n(1), n(2));
        let know = k(&[na.clone(), Term::name("A"), Term::pk(skb.clone())]);
        let target = Term::aenc(
            Term::pk(skb),
            Term::tuple(vec![Term::int(1), na, Term::name("A")]),
        );
        assert_eq!(know.synth_cost(&target), Some(2));
    }

    #[test]
    fn enumeration_small() {
        let know = k(&[n(1)]);
        let zero = synthesize_up_to(&know, 0, &BTreeSet::new());
        assert_eq!(zero, [n(1), Term::Generator].into());
        let one = synthesize_up_to(&know, 1, &BTreeSet::new());
        assert!(one.contains(&Term::hash(n(1))));
        assert!(one.contains(&Term::exp_g(vec![n(1)]).unwrap()));
        assert!(one.is_superset(&zero));
    }

    #[test]
    fn shape_filling() {
        let (na, skb) = (n(1), n(2));
        let know = k(&[na.clone(), Term::name("A"), Term::pk(skb.clone())]);
        let shape = Pattern::AEnc(
            Box::new(Pattern::var("pk")),
            Box::new(Pattern::Tuple(vec![
                Pattern::Lit(Term::int(1)),
                Pattern::var("nonce"),
                Pattern::var("name"),
            ])),
        );
        let out = fill_shape(&shape, &know, &[Term::name("B")], 3, 1000);
        let want = Term::aenc(
            Term::pk(skb),
            Term::tuple(vec![Term::int(1), na.clone(), Term::name("A")]),
        );
        assert!(out.contains(&want));
        assert!(out.contains(&Term::aenc(
            Term::pk(na.clone()),
            Term::tuple(vec![Term::int(1), na, Term::name("B")])
        )));
        assert_eq!(out.len(), 4);
    }

    #[test]
    fn leaked_terms_are_state_values() {
        assert!(leaked_terms([]).is_empty());
        assert_eq!(leaked_terms([&n(1)]), [n(1)].into());
    }
}
