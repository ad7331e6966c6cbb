use std::sync::Arc;

use globtrace::lang::{
    parse_program, print_program, var, Cmd, Expr, ForkTarget, LabelExpr, Scenario,
};
use globtrace::suite;
use globtrace::term::Term;
use globtrace::trace::EventKind;
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = globtrace::lang::Var> {
    prop::sample::select(vec!["x", "y", "m", "ok", "k1"]).prop_map(var)
}

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        ident().prop_map(Expr::Var),
        (0i64..100).prop_map(|i| Expr::Lit(Term::Int(i))),
        prop::sample::select(vec!["A", "B", "E"]).prop_map(|n| Expr::Lit(Term::name(n))),
        "[a-z]{0,4}".prop_map(|s| Expr::Lit(Term::str(&s))),
        any::<bool>().prop_map(|b| Expr::Lit(Term::Bool(b))),
        Just(Expr::Lit(Term::Undef)),
        Just(Expr::Lit(Term::Generator)),
        Just(Expr::SelfName),
        Just(Expr::Sid),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(3, 16, 3, |e| {
        prop_oneof![
            prop::collection::vec(e.clone(), 2..4).prop_map(Expr::Tuple),
            (ident(), 0usize..3).prop_map(|(v, i)| Expr::Proj(Box::new(Expr::Var(v)), i)),
            (e.clone(), e.clone()).prop_map(|(a, b)| Expr::Eq(Box::new(a), Box::new(b))),
            e.clone().prop_map(|a| Expr::Not(Box::new(a))),
            (e.clone(), e.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
            e.prop_map(|a| Expr::PkOf(Box::new(a))),
        ]
    })
}

fn kind() -> impl Strategy<Value = EventKind> {
    prop::sample::select(vec!["Running", "Commit", "FinishA"]).prop_map(EventKind::new)
}

fn label() -> impl Strategy<Value = Option<LabelExpr>> {
    prop_oneof![
        Just(None),
        Just(Some(LabelExpr::Public)),
        Just(Some(LabelExpr::OwnSession)),
        prop::collection::vec(leaf(), 1..3).prop_map(|es| Some(LabelExpr::Readers(es))),
        prop::collection::vec((leaf(), leaf()), 1..3).prop_map(|ps| Some(LabelExpr::Sessions(ps))),
    ]
}

fn simple() -> impl Strategy<Value = Cmd> {
    prop_oneof![
        (ident(), expr()).prop_map(|(x, e)| Cmd::Assign(x, e)),
        expr().prop_map(Cmd::Send),
        ident().prop_map(Cmd::Recv),
        (ident(), label(), prop::collection::vec(kind(), 0..3)).prop_map(
            |(v, label, unique_for)| Cmd::Nonce {
                var: v,
                label,
                unique_for
            }
        ),
        (ident(), expr()).prop_map(|(x, e)| Cmd::Hash(x, e)),
        (ident(), expr()).prop_map(|(x, e)| Cmd::Pk(x, e)),
        (ident(), expr(), expr()).prop_map(|(x, a, b)| Cmd::Enc(x, a, b)),
        (ident(), expr(), expr()).prop_map(|(x, a, b)| Cmd::Sign(x, a, b)),
        (ident(), expr(), expr()).prop_map(|(x, a, b)| Cmd::Exp(x, a, b)),
        (ident(), 1u8..4, prop::collection::vec(expr(), 1..3))
            .prop_map(|(x, i, es)| Cmd::Kdf(x, i, es)),
        (ident(), ident(), expr(), expr()).prop_map(|(out, ok, sk, ct)| Cmd::Dec {
            out,
            ok,
            sk,
            ct
        }),
        (ident(), ident(), expr(), expr()).prop_map(|(out, ok, pk, sig)| Cmd::Verify {
            out,
            ok,
            pk,
            sig
        }),
        (kind(), prop::collection::vec(expr(), 0..3)).prop_map(|(k, es)| Cmd::Emit(k, es)),
    ]
}

fn program() -> impl Strategy<Value = Cmd> {
    simple().prop_recursive(3, 24, 4, |c| {
        prop_oneof![
            prop::collection::vec(c.clone(), 2..4).prop_map(Cmd::seq),
            (expr(), c.clone(), c.clone()).prop_map(|(e, a, b)| Cmd::If(
                e,
                Box::new(a),
                Box::new(b)
            )),
            (expr(), c.clone()).prop_map(|(e, b)| Cmd::While(e, Box::new(b))),
            (leaf(), prop::collection::vec(ident(), 0..3), c).prop_map(|(e, vars, body)| {
                Cmd::Fork {
                    target: ForkTarget::Participant(e),
                    vars,
                    body: Arc::new(body),
                }
            }),
        ]
    })
}

proptest! {
    #[test]
    fn printed_programs_parse_back(c in program()) {
        let src = print_program(&c);
        let back = parse_program(&src).map_err(|e| TestCaseError::fail(format!("{e}\n{src}")))?;
        prop_assert_eq!(back, c, "{}", src);
    }
}

#[test]
fn builtin_scenarios_parse() {
    for name in suite::NAMES {
        let src = suite::source(name).unwrap();
        let s = Scenario::parse(src).unwrap();
        assert_eq!(s.name, name);
        assert!(!s.properties.is_empty(), "{name}");
        assert!(!s.spec.events.is_empty(), "{name}");
    }
}
