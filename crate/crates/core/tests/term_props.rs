mod common;

use common::{exponent, label, nonce, participant, term};
use globtrace::label::{can_read, join_labels};
use globtrace::term::{parse_term, NonceTable};
use globtrace::{normalize, terms_equal, ReaderRef, SessionRef, Term};
use proptest::prelude::*;

fn permutations(xs: &[Term]) -> Vec<Vec<Term>> {
    if xs.len() <= 1 {
        return vec![xs.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..xs.len() {
        let mut rest = xs.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// Every way of building g^(e1...en) from single exponentiations and
/// multi-exponent terms, in every order.
fn associations(es: &[Term]) -> Vec<Term> {
    let mut out = Vec::new();
    for p in permutations(es) {
        let mut t = Term::exp_g(vec![p[0].clone()]).unwrap();
        for e in &p[1..] {
            t = Term::exp(&t, e.clone()).unwrap();
        }
        out.push(t);
        out.push(Term::exp_g(p.clone()).unwrap());
        for split in 1..p.len() {
            let head = Term::exp_g(p[..split].to_vec()).unwrap();
            let mut t = head;
            for e in &p[split..] {
                t = Term::exp(&t, e.clone()).unwrap();
            }
            out.push(t);
        }
    }
    out
}

#[test]
fn exponent_association_is_confluent() {
    let pool = [nonce(1), nonce(2), nonce(4), Term::int(3)];
    for n in 1..=4 {
        for es in pool.to_vec().windows(n) {
            let forms = associations(es);
            let canon = normalize(&forms[0]).unwrap();
            for f in &forms {
                assert_eq!(normalize(f).unwrap(), canon, "{f}");
                assert!(terms_equal(f, &forms[0]));
            }
        }
    }
    let sq = associations(&[nonce(1), nonce(1), nonce(2)]);
    assert!(sq.iter().all(|f| terms_equal(f, &sq[0])));
}

proptest! {
    #[test]
    fn normalize_is_idempotent(t in term()) {
        let n = normalize(&t).unwrap();
        prop_assert_eq!(normalize(&n).unwrap(), n);
    }

    #[test]
    fn canonical_terms_round_trip(t in term()) {
        let n = normalize(&t).unwrap();
        let mut table = NonceTable::new();
        table.learn(&n);
        let back = parse_term(&n.to_string(), &table).unwrap();
        prop_assert_eq!(back, n);
    }

    #[test]
    fn terms_equal_is_an_equivalence(a in term(), b in term(), c in term()) {
        prop_assert!(terms_equal(&a, &a));
        prop_assert_eq!(terms_equal(&a, &b), terms_equal(&b, &a));
        if terms_equal(&a, &b) && terms_equal(&b, &c) {
            prop_assert!(terms_equal(&a, &c));
        }
    }

    #[test]
    fn reordered_exponents_are_equal(es in prop::collection::vec(exponent(), 1..5), seed in any::<u64>()) {
        let mut shuffled = es.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        let a = Term::exp_g(es).unwrap();
        let b = Term::exp_g(shuffled).unwrap();
        prop_assert!(terms_equal(&a, &b));
    }

    #[test]
    fn join_is_a_commutative_idempotent_monoid(a in label(), b in label(), c in label()) {
        prop_assert_eq!(join_labels(&a, &b), join_labels(&b, &a));
        prop_assert_eq!(join_labels(&a, &a), a.clone());
        prop_assert_eq!(join_labels(&a, &globtrace::Label::Public), a.clone());
        prop_assert_eq!(
            join_labels(&join_labels(&a, &b), &c),
            join_labels(&a, &join_labels(&b, &c))
        );
    }

    #[test]
    fn join_is_restrictive(a in label(), b in label(), p in participant(), sid in 1u32..3) {
        let j = join_labels(&a, &b);
        for r in [ReaderRef::Participant(p.clone()), ReaderRef::Session(SessionRef::new(p.clone(), sid))] {
            if can_read(&j, &r) {
                prop_assert!(can_read(&a, &r) && can_read(&b, &r), "{j} readable by {r:?}");
            }
        }
    }
}
