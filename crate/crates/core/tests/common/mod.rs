#![allow(dead_code)]

use globtrace::{Label, ParticipantId, SessionRef, Term};
use proptest::prelude::*;

pub fn nonce(id: u32) -> Term {
    // Labels are a function of the id, as they are in explored traces.
    let label = match id % 3 {
        0 => Label::Public,
        1 => Label::readers([ParticipantId::from("A"), ParticipantId::from("B")]),
        _ => Label::sessions([SessionRef::new("A", 1)]),
    };
    Term::nonce(id, label)
}

pub fn atom() -> impl Strategy<Value = Term> {
    prop_oneof![
        (0i64..4).prop_map(Term::int),
        prop::sample::select(vec!["A", "B", "C"]).prop_map(Term::name),
        prop::sample::select(vec!["skA", "skB", "k"]).prop_map(Term::str),
        (1u32..5).prop_map(nonce),
    ]
}

pub fn exponent() -> impl Strategy<Value = Term> {
    prop_oneof![(1u32..5).prop_map(nonce), (2i64..5).prop_map(Term::int)]
}

pub fn term() -> impl Strategy<Value = Term> {
    atom().prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Term::tuple),
            inner.clone().prop_map(Term::hash),
            inner.clone().prop_map(Term::pk),
            (inner.clone(), inner.clone()).prop_map(|(k, m)| Term::aenc(Term::pk(k), m)),
            (inner.clone(), inner.clone()).prop_map(|(k, m)| Term::sig(k, m)),
            prop::collection::vec(inner.clone(), 1..3).prop_map(|xs| Term::kdf(1, xs)),
            prop::collection::vec(exponent(), 1..4).prop_map(|es| Term::exp_g(es).unwrap()),
        ]
    })
}

pub fn participant() -> impl Strategy<Value = ParticipantId> {
    prop::sample::select(vec!["A", "B", "C"]).prop_map(ParticipantId::from)
}

pub fn label() -> impl Strategy<Value = Label> {
    prop_oneof![
        Just(Label::Public),
        Just(Label::Unreadable),
        prop::collection::btree_set(participant(), 1..3).prop_map(Label::readers),
        prop::collection::btree_set(
            (participant(), 1u32..3).prop_map(|(p, s)| SessionRef::new(p, s)),
            1..3
        )
        .prop_map(Label::sessions),
    ]
}

use globtrace::trace::{Event, EventKind, ProtoEvent, Trace};

pub fn root() -> Trace {
    Trace::new([
        Term::int(1),
        Term::int(2),
        Term::int(3),
        Term::name("A"),
        Term::name("B"),
        Term::name("E"),
        Term::pk(Term::str("skA")),
        Term::pk(Term::str("skB")),
        Term::pk(Term::str("skE")),
    ])
}

/// Events over the Needham-Schroeder(-Lowe) vocabulary.
#[derive(Clone, Debug)]
pub enum Step {
    Send(Term),
    Msg(u8, u8, u32, u32),
    Drop(usize),
    Extend(Term),
    Nonce(u32),
    Corrupt(u8),
    CorruptSession(u8, u32),
    Proto(u8, u8, u8, u32, u32, u32),
}

const NAMES: [&str; 3] = ["A", "B", "E"];

pub fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        1 => term().prop_map(Step::Send),
        3 => (1u8..4, 0u8..3, 1u32..4, 1u32..4).prop_map(|(i, p, a, b)| Step::Msg(i, p, a, b)),
        1 => (0usize..4).prop_map(Step::Drop),
        1 => term().prop_map(Step::Extend),
        2 => (1u32..4).prop_map(Step::Nonce),
        1 => (0u8..3).prop_map(Step::Corrupt),
        1 => (0u8..3, 1u32..3).prop_map(|(p, s)| Step::CorruptSession(p, s)),
        4 => (0u8..4, 0u8..3, 0u8..3, 1u32..4, 1u32..4, 1u32..3)
            .prop_map(|(k, a, b, na, nb, s)| Step::Proto(k, a, b, na, nb, s)),
    ]
}

fn nsl_nonce(id: u32) -> Term {
    // Odd ids are initiator nonces, even ids responder nonces.
    Term::nonce(
        id,
        Label::readers([ParticipantId::from("A"), ParticipantId::from("B")]),
    )
}

pub fn event_of(s: &Step, tr: &Trace) -> Option<Event> {
    let name = |i: u8| Term::name(NAMES[i as usize]);
    let pk = |i: u8| Term::pk(Term::str(&format!("sk{}", NAMES[i as usize])));
    Some(match s {
        Step::Send(t) => Event::Send(t.clone()),
        Step::Msg(i, p, a, b) => {
            let body = match i {
                1 => Term::tuple(vec![Term::int(1), nsl_nonce(*a), name(*p)]),
                2 => Term::tuple(vec![Term::int(2), nsl_nonce(*a), nsl_nonce(*b), name(*p)]),
                _ => Term::tuple(vec![Term::int(3), nsl_nonce(*b)]),
            };
            Event::Send(Term::aenc(pk(*p), body))
        }
        Step::Drop(i) => Event::Drop(tr.receivable().get(*i)?.clone()),
        Step::Extend(t) => Event::Extend(t.clone()),
        Step::Nonce(id) => {
            let kind = if id % 2 == 1 { "FinishA" } else { "FinishB" };
            Event::create_nonce(nsl_nonce(*id), vec![EventKind::new(kind)])
        }
        Step::Corrupt(p) => Event::corrupt_participant(
            NAMES[*p as usize],
            [Term::str(&format!("sk{}", NAMES[*p as usize]))],
        ),
        Step::CorruptSession(p, sid) => {
            Event::corrupt_session(SessionRef::new(NAMES[*p as usize], *sid), [])
        }
        Step::Proto(k, a, b, na, nb, sid) => {
            let (kind, actor) = match k {
                0 => ("Initiate", a),
                1 => ("Respond", b),
                2 => ("FinishA", a),
                _ => ("FinishB", b),
            };
            let mut args = vec![name(*a), name(*b), nsl_nonce(*na)];
            if *k != 0 {
                args.push(nsl_nonce(*nb));
            }
            Event::Proto(ProtoEvent::new(kind, args, NAMES[*actor as usize], *sid))
        }
    })
}

pub fn build(steps: &[Step]) -> Trace {
    let mut tr = root();
    for s in steps {
        if let Some(e) = event_of(s, &tr) {
            tr = tr.append(e).unwrap();
        }
    }
    tr
}

pub fn trace(max: usize) -> impl Strategy<Value = Trace> {
    prop::collection::vec(step(), 0..max).prop_map(|s| build(&s))
}
