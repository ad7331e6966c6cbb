//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so every line is printed; exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

use globtrace::explore::{explore, is_reachable, Budget, Exploration};
use globtrace::lang::Scenario;
use globtrace::properties::{
    check_inj_agreement_akc, check_strong_forward_secrecy, check_weak_forward_secrecy,
    AgreementSpec, CorruptionScope, FsQuery, PropertyDecl, Status, Verdict,
};
use globtrace::semantics::CorruptionMode;
use globtrace::suite::builtin;
use globtrace::trace::{parse_trace_json, render_trace_text, Event, EventKind, ProtoEvent, Trace};
use globtrace::{terms_equal, Label, ParticipantId, SessionRef, Term};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::Value;

type Outcome = Result<String, String>;

fn scenario(name: &str) -> Scenario {
    builtin(name)
        .expect("built-in")
        .expect("built-in scenario parses")
}

fn run(name: &str, b: &Budget) -> Exploration {
    explore(&scenario(name), b).expect("exploration succeeds")
}

fn status(r: &Exploration, prop: &str) -> Result<Status, String> {
    r.property(prop)
        .map(|p| p.status)
        .ok_or_else(|| format!("no property {prop}"))
}

fn expect(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn lowe_attack() -> Outcome {
    let t0 = Instant::now();
    let b = Budget::default();
    let r = run("ns", &b);
    let took = t0.elapsed();
    let mut longest = 0;
    for prop in ["agreement(responder)", "secrecy(nb)"] {
        let p = r.property(prop).ok_or(format!("no property {prop}"))?;
        expect(
            p.status == Status::Violated,
            format!("{prop} is {}", p.status),
        )?;
        let cex = p
            .counterexample
            .as_ref()
            .ok_or(format!("{prop} has no counterexample"))?;
        expect(
            cex.len() <= 25,
            format!("{prop} counterexample has {} events", cex.len()),
        )?;
        longest = longest.max(cex.len());
    }
    expect(
        took < Duration::from_secs(60),
        format!("took {}", secs(took)),
    )?;
    let golden: Value =
        serde_json::from_str(include_str!("golden/ns-lowe.json")).map_err(|e| e.to_string())?;
    let golden = parse_trace_json(&golden["trace"]).map_err(|e| e.to_string())?;
    let reachable = is_reachable(&scenario("ns"), &b, &golden).map_err(|e| e.to_string())?;
    expect(
        reachable,
        format!(
            "golden trace not reachable:\n{}",
            render_trace_text(&golden)
        ),
    )?;
    Ok(format!(
        "non-injective agreement and secrecy(nb) violated, counterexamples <= {longest} events, {}, golden MITM trace reachable",
        secs(took)
    ))
}

fn nsl_safety() -> Outcome {
    let t0 = Instant::now();
    let r = run("nsl", &Budget::default());
    let took = t0.elapsed();
    for prop in [
        "secrecy(na)",
        "secrecy(nb)",
        "inj-agreement(responder)",
        "inj-agreement(initiator)",
    ] {
        let s = status(&r, prop)?;
        expect(s == Status::HoldsUpToBound, format!("{prop} is {s}"))?;
    }
    expect(
        r.violations.is_empty(),
        format!("{} violations", r.violations.len()),
    )?;
    expect(
        took < Duration::from_secs(120),
        format!("took {}", secs(took)),
    )?;
    Ok(format!(
        "0 violations over {} states, {}",
        r.states_explored,
        secs(took)
    ))
}

fn nsl_reuse() -> Outcome {
    let s = scenario("nsl-reuse");
    let r = explore(&s, &Budget::default()).map_err(|e| e.to_string())?;
    let v = r
        .violations
        .iter()
        .find(|v| v.kind == "WITNESS_DOUBLE_SPEND")
        .ok_or("no WITNESS_DOUBLE_SPEND reported")?;
    let decl = |name: &str| -> Result<&PropertyDecl, String> {
        s.properties
            .iter()
            .find(|p| p.name == name)
            .map(|p| &p.decl)
            .ok_or(format!("no property {name}"))
    };
    let inj = decl("inj-agreement(responder)")?.evaluate(&v.trace, &s.spec);
    let non_inj = decl("agreement(responder)")?.evaluate(&v.trace, &s.spec);
    expect(
        inj.is_violated(),
        "injective agreement holds on the double-spend trace",
    )?;
    expect(
        !non_inj.is_violated(),
        "non-injective agreement violated on the double-spend trace",
    )?;
    Ok(format!(
        "WITNESS_DOUBLE_SPEND at {}; on that trace injective VIOLATED, non-injective HOLDS",
        v.trace_index
    ))
}

fn commit_key(tr: &Trace, kind: &str) -> Option<Term> {
    tr.proto_events()
        .into_iter()
        .find(|(_, pe)| pe.kind.as_str() == kind)
        .map(|(_, pe)| pe.args[2].clone())
}

fn dh() -> Outcome {
    let honest = run(
        "dh",
        &Budget {
            passive: true,
            collect_terminal: true,
            ..Budget::default()
        },
    );
    let mut complete = 0;
    for tr in &honest.terminal {
        let (Some(ki), Some(kr)) = (commit_key(tr, "InitCommit"), commit_key(tr, "RespCommit"))
        else {
            continue;
        };
        expect(terms_equal(&ki, &kr), format!("keys differ: {ki} vs {kr}"))?;
        complete += 1;
    }
    expect(complete > 0, "no honest run completed both commits")?;
    let active = run("dh", &Budget::default());
    let s = status(&active, "inj-agreement(initiator)")?;
    expect(
        s == Status::HoldsUpToBound,
        format!("injective agreement on the key is {s}"),
    )?;
    let late = run(
        "dh",
        &Budget {
            corruption: CorruptionMode::Participant,
            corrupt_after: vec![EventKind::new("InitCommit"), EventKind::new("RespCommit")],
            ..Budget::default()
        },
    );
    let s = status(&late, "secrecy(key)")?;
    expect(
        s == Status::HoldsUpToBound,
        format!("key secrecy under late corruption is {s}"),
    )?;
    Ok(format!(
        "{complete} honest runs agree on the key; injective agreement and late-corruption secrecy hold ({} states)",
        late.states_explored
    ))
}

/// One hand-built trace with the expected weak-FS, strong-FS and
/// key-confirmation agreement verdicts.
struct Fixture {
    name: &'static str,
    trace: Trace,
    query: FsQuery,
    weak: bool,
    strong: bool,
    akc: bool,
}

fn fixtures() -> Vec<Fixture> {
    let (a, b, c) = (Term::name("A"), Term::name("B"), Term::name("C"));
    let k = Term::nonce(
        1,
        Label::readers([ParticipantId::from("A"), ParticipantId::from("B")]),
    );
    let pk = |s: &str| Term::pk(Term::str(s));
    let running = Event::Proto(ProtoEvent::new(
        "Running",
        vec![a.clone(), b.clone(), k.clone()],
        "B",
        1,
    ));
    let done = |sid| {
        Event::Proto(ProtoEvent::new(
            "HsDone",
            vec![a.clone(), b.clone(), k.clone()],
            "A",
            sid,
        ))
    };
    let corrupt = |p: &str| Event::corrupt_participant(p, [Term::str(&format!("sk{p}"))]);
    let corrupt_sess = |p: &str| Event::corrupt_session(SessionRef::new(p, 1), [k.clone()]);
    let under = |p: &str| Event::Send(Term::aenc(pk(&format!("sk{p}")), k.clone()));
    let clear = Event::Send(k.clone());
    let fx = |name, evs: Vec<Event>, weak, strong, akc| {
        let mut tr = Trace::new([
            a.clone(),
            b.clone(),
            c.clone(),
            pk("skA"),
            pk("skB"),
            pk("skC"),
        ]);
        tr = tr.append(Event::create_nonce(k.clone(), vec![])).unwrap();
        for e in evs {
            tr = tr.append(e).unwrap();
        }
        let has = |kind: &str| {
            tr.proto_events()
                .iter()
                .any(|(_, pe)| pe.kind.as_str() == kind)
        };
        let query = FsQuery {
            secret: k.clone(),
            actor: "A".into(),
            peer: "B".into(),
            actor_sess: SessionRef::new("A", 1),
            peer_sess: has("Running").then(|| SessionRef::new("B", 1)),
            mark: has("HsDone").then(|| done(1)),
        };
        Fixture {
            name,
            trace: tr,
            query,
            weak,
            strong,
            akc,
        }
    };
    vec![
        fx(
            "quiet handshake",
            vec![running.clone(), done(1)],
            true,
            true,
            true,
        ),
        fx("commit without running", vec![done(1)], true, true, false),
        fx(
            "actor corrupted before handshake",
            vec![under("A"), corrupt("A"), running.clone(), done(1)],
            true,
            false,
            true,
        ),
        fx(
            "actor-only corruption, no running",
            vec![corrupt("A"), done(1)],
            true,
            true,
            false,
        ),
        fx(
            "peer corrupted before handshake",
            vec![under("B"), corrupt("B"), running.clone(), done(1)],
            true,
            true,
            true,
        ),
        fx(
            "peer corruption, no running",
            vec![corrupt("B"), done(1)],
            true,
            true,
            true,
        ),
        fx(
            "both corrupted after handshake",
            vec![
                under("A"),
                running.clone(),
                done(1),
                corrupt("A"),
                corrupt("B"),
            ],
            false,
            false,
            true,
        ),
        fx(
            "actor corrupted after handshake",
            vec![under("A"), running.clone(), done(1), corrupt("A")],
            false,
            false,
            true,
        ),
        fx(
            "peer corrupted after handshake",
            vec![under("B"), running.clone(), done(1), corrupt("B")],
            false,
            false,
            true,
        ),
        fx(
            "actor session corrupted after handshake",
            vec![running.clone(), done(1), corrupt_sess("A")],
            true,
            true,
            true,
        ),
        fx(
            "actor session corrupted, no running",
            vec![corrupt_sess("A"), done(1)],
            true,
            true,
            true,
        ),
        fx(
            "peer session corrupted",
            vec![running.clone(), done(1), corrupt_sess("B")],
            true,
            true,
            true,
        ),
        fx(
            "key sent in clear",
            vec![running.clone(), done(1), clear.clone()],
            false,
            false,
            true,
        ),
        fx(
            "actor corrupted, handshake never completes",
            vec![under("A"), corrupt("A")],
            true,
            false,
            true,
        ),
        fx(
            "replayed commit",
            vec![running.clone(), done(1), done(2)],
            true,
            true,
            false,
        ),
        fx(
            "third party corrupted",
            vec![corrupt("C"), done(1), clear.clone()],
            false,
            false,
            false,
        ),
    ]
}

fn fs_truth_table() -> Outcome {
    let akc = AgreementSpec {
        commit: EventKind::new("HsDone"),
        running: EventKind::new("Running"),
        actor: 0,
        peer: 1,
        map: vec![0, 1, 2],
        nonce: Some(2),
        scope: CorruptionScope::PeerOrActorSession,
    };
    let holds = |v: Verdict| !v.is_violated();
    let all = fixtures();
    let mut wrong = Vec::new();
    for f in &all {
        let got = (
            holds(check_weak_forward_secrecy(&f.trace, &f.query)),
            holds(check_strong_forward_secrecy(&f.trace, &f.query)),
            holds(check_inj_agreement_akc(&f.trace, &akc)),
        );
        if got != (f.weak, f.strong, f.akc) {
            wrong.push(format!(
                "{}: got {got:?}, expected {:?}",
                f.name,
                (f.weak, f.strong, f.akc)
            ));
        }
    }
    expect(all.len() >= 12, format!("only {} fixtures", all.len()))?;
    expect(wrong.is_empty(), wrong.join("; "))?;
    Ok(format!(
        "{} fixtures match the weak/strong/AKC truth table",
        all.len()
    ))
}

/// Straight-line component code for the micro-scenarios.
#[derive(Clone, Debug)]
enum Op {
    Send(Val),
    Recv(String),
    Nonce(String),
    Emit(Val),
    IfEq(String, i64, Vec<Op>, Vec<Op>),
}

#[derive(Clone, Debug)]
enum Val {
    Int(i64),
    Var(String),
}

impl Op {
    fn cost(&self) -> usize {
        match self {
            Op::IfEq(_, _, a, b) => 1 + a.iter().chain(b).map(Op::cost).max().unwrap_or(0),
            _ => 1,
        }
    }

    fn src(&self) -> String {
        let val = |v: &Val| match v {
            Val::Int(i) => i.to_string(),
            Val::Var(x) => x.clone(),
        };
        let block = |ops: &[Op]| {
            if ops.is_empty() {
                "{ skip }".to_string()
            } else {
                format!(
                    "{{ {} }}",
                    ops.iter().map(Op::src).collect::<Vec<_>>().join("; ")
                )
            }
        };
        match self {
            Op::Send(v) => format!("send({})", val(v)),
            Op::Recv(x) => format!("recv({x})"),
            Op::Nonce(x) => format!("nonce {x} label public"),
            Op::Emit(v) => format!("emit Ev(self, {})", val(v)),
            Op::IfEq(x, c, a, b) => format!("if {x} == {c} {} else {}", block(a), block(b)),
        }
    }
}

fn gen_ops(rng: &mut StdRng, budget: usize, bound: &mut Vec<String>, fresh: &mut usize) -> Vec<Op> {
    let mut ops = Vec::new();
    let mut left = budget;
    while left > 0 && rng.gen_bool(0.8) {
        let val = |rng: &mut StdRng, bound: &[String]| {
            if !bound.is_empty() && rng.gen_bool(0.5) {
                Val::Var(bound[rng.gen_range(0..bound.len())].clone())
            } else {
                Val::Int(rng.gen_range(1..=2))
            }
        };
        let op = match rng.gen_range(0..5) {
            0 => Op::Send(val(rng, bound)),
            1 => {
                *fresh += 1;
                let x = format!("x{fresh}");
                bound.push(x.clone());
                Op::Recv(x)
            }
            2 => {
                *fresh += 1;
                let x = format!("n{fresh}");
                bound.push(x.clone());
                Op::Nonce(x)
            }
            3 => Op::Emit(val(rng, bound)),
            _ if left >= 2 && !bound.is_empty() => {
                let x = bound[rng.gen_range(0..bound.len())].clone();
                let mut ba = bound.clone();
                let mut bb = bound.clone();
                let a = gen_ops(rng, 1, &mut ba, fresh);
                let b = gen_ops(rng, 1, &mut bb, fresh);
                Op::IfEq(x, rng.gen_range(1..=2), a, b)
            }
            _ => Op::Send(val(rng, bound)),
        };
        left = left.saturating_sub(op.cost());
        ops.push(op);
    }
    ops
}

/// Reference interleaving semantics: each send, nonce, emit and receive is
/// one atomic step, and receiving picks any message sent so far.
struct Brute {
    root: Vec<Term>,
    names: Vec<&'static str>,
    out: BTreeSet<String>,
}

#[derive(Clone)]
struct Proc {
    code: Vec<Op>,
    env: BTreeMap<String, Term>,
}

impl Brute {
    fn value(p: &Proc, v: &Val) -> Term {
        match v {
            Val::Int(i) => Term::int(*i),
            Val::Var(x) => p.env.get(x).cloned().unwrap_or(Term::Undef),
        }
    }

    fn go(&mut self, procs: Vec<Proc>, events: Vec<Event>, next_nonce: u32) {
        let sent: Vec<Term> = {
            let mut seen = BTreeSet::new();
            events
                .iter()
                .filter_map(|e| match e {
                    Event::Send(m) if seen.insert(m.clone()) => Some(m.clone()),
                    _ => None,
                })
                .collect()
        };
        let mut moved = false;
        for i in 0..procs.len() {
            let Some(op) = procs[i].code.first().cloned() else {
                continue;
            };
            let mut ps = procs.clone();
            ps[i].code.remove(0);
            let name = self.names[i];
            match op {
                Op::Recv(x) => {
                    for m in &sent {
                        let mut ps = ps.clone();
                        ps[i].env.insert(x.clone(), m.clone());
                        moved = true;
                        self.go(ps, events.clone(), next_nonce);
                    }
                }
                Op::IfEq(x, c, a, b) => {
                    let taken = if ps[i].env.get(&x) == Some(&Term::int(c)) {
                        a
                    } else {
                        b
                    };
                    ps[i].code.splice(0..0, taken);
                    moved = true;
                    self.go(ps, events.clone(), next_nonce);
                }
                op => {
                    let mut evs = events.clone();
                    let mut nn = next_nonce;
                    match op {
                        Op::Send(v) => evs.push(Event::Send(Self::value(&ps[i], &v))),
                        Op::Nonce(x) => {
                            let n = Term::nonce(nn, Label::Public);
                            nn += 1;
                            ps[i].env.insert(x, n.clone());
                            evs.push(Event::create_nonce(n, vec![]));
                        }
                        Op::Emit(v) => {
                            let args = vec![Term::name(name), Self::value(&ps[i], &v)];
                            evs.push(Event::Proto(ProtoEvent::new("Ev", args, name, 1)));
                        }
                        _ => unreachable!(),
                    }
                    moved = true;
                    self.go(ps, evs, nn);
                }
            }
        }
        if !moved {
            let mut tr = Trace::new(self.root.clone());
            for e in events {
                tr = tr.append(e).expect("reference trace is well formed");
            }
            self.out.insert(render_trace_text(&tr));
        }
    }
}

fn micro_scenarios() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut total_traces = 0;
    for n in 0..50 {
        let mut fresh = 0;
        let a = gen_ops(&mut rng, 3, &mut Vec::new(), &mut fresh);
        let b = gen_ops(&mut rng, 3, &mut Vec::new(), &mut fresh);
        let body = |ops: &[Op]| {
            if ops.is_empty() {
                "skip".to_string()
            } else {
                ops.iter().map(Op::src).collect::<Vec<_>>().join("; ")
            }
        };
        let src = format!(
            "scenario micro{n};\nalphabet A, B;\nevent Ev(a, v) actor a;\n\
             role P {{ {} }}\nrole Q {{ {} }}\n\
             bootstrap {{ fork as A () run P; fork as B () run Q }}\n",
            body(&a),
            body(&b)
        );
        let s = Scenario::parse(&src).map_err(|e| format!("{e}\n{src}"))?;
        let budget = Budget {
            atomic_local: false,
            prune_dead_receives: false,
            collect_terminal: true,
            ..Budget::default()
        };
        let r = explore(&s, &budget).map_err(|e| format!("{e}\n{src}"))?;
        expect(
            r.violations.is_empty(),
            format!("monitor rejected micro-scenario\n{src}"),
        )?;
        let got: BTreeSet<String> = r.terminal.iter().map(render_trace_text).collect();
        let mut brute = Brute {
            root: vec![Term::name("A"), Term::name("B")],
            names: vec!["A", "B"],
            out: BTreeSet::new(),
        };
        let procs = [a, b]
            .into_iter()
            .map(|code| Proc {
                code,
                env: BTreeMap::new(),
            })
            .collect();
        brute.go(procs, Vec::new(), 1);
        expect(
            got == brute.out,
            format!(
                "terminal traces differ for\n{src}explorer only: {:?}\nreference only: {:?}",
                got.difference(&brute.out).collect::<Vec<_>>(),
                brute.out.difference(&got).collect::<Vec<_>>()
            ),
        )?;
        total_traces += got.len();
    }
    Ok(format!(
        "50 scenarios, {total_traces} terminal traces, identical to brute-force enumeration"
    ))
}

fn invariants() -> Outcome {
    let runs = [
        (
            "dh",
            Budget {
                atomic_local: false,
                prune_dead_receives: false,
                ..Budget::default()
            },
        ),
        (
            "ns",
            Budget {
                initiators: 2,
                ..Budget::default()
            },
        ),
        (
            "nsl-reuse",
            Budget {
                initiators: 2,
                ..Budget::default()
            },
        ),
        (
            "dh",
            Budget {
                corruption: CorruptionMode::Participant,
                ..Budget::default()
            },
        ),
    ];
    let (mut checked, mut failures) = (0, 0);
    for (name, b) in &runs {
        let r = run(name, b);
        checked += r.invariants.checked;
        failures += r.invariants.failures();
    }
    expect(
        checked >= 100_000,
        format!("only {checked} transitions checked"),
    )?;
    expect(failures == 0, format!("{failures} invariant failures"))?;
    Ok(format!(
        "{checked} transitions, 0 trace-prefix/snapshot-prefix/knowledge-monotonicity/nonce-uniqueness failures"
    ))
}

fn secrecy_lemma() -> Outcome {
    let t0 = Instant::now();
    let runs = [
        ("nsl", CorruptionMode::None),
        ("nsl", CorruptionMode::Participant),
        ("dh", CorruptionMode::None),
        ("dh", CorruptionMode::Participant),
    ];
    let (mut checked, mut failed) = (0, 0);
    for (name, corruption) in runs {
        let r = run(
            name,
            &Budget {
                corruption,
                check_lemma: true,
                ..Budget::default()
            },
        );
        checked += r.lemma.checked;
        failed += r.lemma.failed;
        if let Some((tr, t)) = r.lemma.examples.first() {
            return Err(format!("{name}: {t} derivable\n{}", render_trace_text(tr)));
        }
    }
    let took = t0.elapsed();
    expect(checked > 0, "no states checked")?;
    expect(failed == 0, format!("{failed} failures"))?;
    expect(
        took < Duration::from_secs(300),
        format!("took {}", secs(took)),
    )?;
    Ok(format!(
        "{checked} accepted states, every derivable term public or excused, {}",
        secs(took)
    ))
}

fn cli_report(args: &[&str], workers: &str) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_globtrace"))
        .args(args)
        .args(["--format", "json", "--workers", workers])
        .output()
        .map_err(|e| e.to_string())?;
    expect(
        matches!(out.status.code(), Some(0 | 1)),
        format!(
            "{args:?} exited with {:?}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr)
        ),
    )?;
    let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    let report: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let schema: Value = serde_json::from_str(include_str!("../../../docs/report.schema.json"))
        .map_err(|e| e.to_string())?;
    let validator = jsonschema::validator_for(&schema).map_err(|e| e.to_string())?;
    if let Err(e) = validator.validate(&report) {
        return Err(format!("{args:?}: report violates the schema: {e}"));
    }
    Ok(text
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"wallTime\""))
        .collect::<Vec<_>>()
        .join("\n"))
}

fn determinism() -> Outcome {
    let commands: [&[&str]; 5] = [
        &["check", "ns"],
        &["check", "nsl"],
        &["check", "nsl-reuse"],
        &["check", "dh", "--corruption", "participant"],
        &["check", "ns", "--initiators", "2"],
    ];
    for args in commands {
        let first = cli_report(args, "1")?;
        for workers in ["1", "4"] {
            let again = cli_report(args, workers)?;
            expect(
                first == again,
                format!("{args:?} differs with --workers {workers}"),
            )?;
        }
    }
    Ok(format!(
        "{} commands: identical JSON modulo wallTime across reruns and workers 1/4",
        commands.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 Lowe attack rediscovered on NS", lowe_attack),
        ("2 NSL bounded safety", nsl_safety),
        ("3 NSL nonce reuse", nsl_reuse),
        ("4 signed Diffie-Hellman", dh),
        ("5 forward-secrecy truth table", fs_truth_table),
        ("6 explorer vs brute-force enumeration", micro_scenarios),
        ("7 per-transition invariants", invariants),
        ("8 secrecy lemma", secrecy_lemma),
        ("9 deterministic reports", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match res {
            Ok(detail) => println!("PASS [{name}] {detail} ({})", secs(t0.elapsed())),
            Err(why) => {
                failed += 1;
                println!("FAIL [{name}] {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
