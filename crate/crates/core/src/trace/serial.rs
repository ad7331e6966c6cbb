//! Text and JSON renderings of traces.

use serde_json::{json, Map, Value};

use super::{Event, EventKind, ProtoEvent, Trace, TraceError};
use crate::ids::{ParticipantId, SessionId, SessionRef};
use crate::term::{parse_label, parse_term, NonceTable, SyntaxError, Term};

fn join_terms(ts: &[Term]) -> String {
    ts.iter()
        .map(Term::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// One event in `KIND(args)` form, without index.
pub fn render_event(e: &Event) -> String {
    match e {
        Event::Root(ts) => format!("Root({})", join_terms(ts)),
        Event::CreateNonce {
            nonce,
            label,
            unique_for,
        } => {
            let mut s = format!("CreateNonce({nonce}, {label})");
            if !unique_for.is_empty() {
                let kinds: Vec<&str> = unique_for.iter().map(EventKind::as_str).collect();
                s.push_str(" unique-for ");
                s.push_str(&kinds.join(" "));
            }
            s
        }
        Event::Send(m) => format!("Send({m})"),
        Event::Drop(m) => format!("Drop({m})"),
        Event::Extend(m) => format!("Extend({m})"),
        Event::CorruptParticipant { pid, leaked } => {
            format!("CorruptParticipant({pid}, {{{}}})", join_terms(leaked))
        }
        Event::CorruptSession { session, leaked } => format!(
            "CorruptSession({}, {}, {{{}}})",
            session.pid,
            session.sid,
            join_terms(leaked)
        ),
        Event::Proto(pe) => format!(
            "{}({}) @{}",
            pe.kind,
            join_terms(&pe.args),
            pe.actor_session()
        ),
    }
}

/// One event per line, `idx: KIND(args)`.
pub fn render_trace_text(tr: &Trace) -> String {
    let mut out = String::new();
    for (i, e) in tr.events().into_iter().enumerate() {
        out.push_str(&format!("{i}: {}\n", render_event(e)));
    }
    out
}

fn strings(ts: &[Term]) -> Value {
    Value::Array(ts.iter().map(|t| Value::String(t.to_string())).collect())
}

pub fn event_to_json(i: usize, e: &Event) -> Value {
    let mut obj = Map::new();
    obj.insert("index".into(), json!(i));
    obj.insert("kind".into(), json!(e.kind_name()));
    match e {
        Event::Root(ts) => {
            obj.insert("args".into(), strings(ts));
        }
        Event::CreateNonce {
            nonce,
            label,
            unique_for,
        } => {
            obj.insert("args".into(), json!([nonce.to_string(), label.to_string()]));
            if !unique_for.is_empty() {
                let kinds: Vec<&str> = unique_for.iter().map(EventKind::as_str).collect();
                obj.insert("uniqueFor".into(), json!(kinds));
            }
        }
        Event::Send(m) | Event::Drop(m) | Event::Extend(m) => {
            obj.insert("args".into(), json!([m.to_string()]));
        }
        Event::CorruptParticipant { pid, leaked } => {
            obj.insert("args".into(), strings(leaked));
            obj.insert("actor".into(), json!(pid.as_str()));
        }
        Event::CorruptSession { session, leaked } => {
            obj.insert("args".into(), strings(leaked));
            obj.insert("actor".into(), json!(session.pid.as_str()));
            obj.insert("session".into(), json!(session.sid.0));
        }
        Event::Proto(pe) => {
            obj.insert("args".into(), strings(&pe.args));
            obj.insert("actor".into(), json!(pe.actor.as_str()));
            obj.insert("session".into(), json!(pe.session.0));
        }
    }
    Value::Object(obj)
}

pub fn trace_to_json(tr: &Trace) -> Value {
    Value::Array(
        tr.events()
            .into_iter()
            .enumerate()
            .map(|(i, e)| event_to_json(i, e))
            .collect(),
    )
}

#[derive(Debug, thiserror::Error)]
pub enum TraceParseError {
    #[error("event {index}: {msg}")]
    Field { index: usize, msg: String },
    #[error("event {index}: {source}")]
    Syntax { index: usize, source: SyntaxError },
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Reads the JSON array form back. Nonce labels are taken from the
/// `CreateNonce` entries, so every nonce must be created before it is used.
pub fn parse_trace_json(v: &Value) -> Result<Trace, TraceParseError> {
    let arr = v.as_array().ok_or(TraceParseError::Field {
        index: 0,
        msg: "trace must be a JSON array".into(),
    })?;
    let mut nonces = NonceTable::new();
    let mut events = Vec::with_capacity(arr.len());
    for (index, ev) in arr.iter().enumerate() {
        let field = |msg: &str| TraceParseError::Field {
            index,
            msg: msg.to_string(),
        };
        let syn = |source| TraceParseError::Syntax { index, source };
        let kind = ev
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| field("missing kind"))?;
        let args: Vec<&str> = ev
            .get("args")
            .and_then(Value::as_array)
            .ok_or_else(|| field("missing args"))?
            .iter()
            .map(|a| a.as_str().ok_or_else(|| field("args must be strings")))
            .collect::<Result<_, _>>()?;
        let actor = ev
            .get("actor")
            .and_then(Value::as_str)
            .map(ParticipantId::new);
        let session = ev.get("session").and_then(Value::as_u64).map(|s| s as u32);

        let terms = |nonces: &NonceTable| -> Result<Vec<Term>, TraceParseError> {
            args.iter()
                .map(|a| parse_term(a, nonces).map_err(syn))
                .collect()
        };
        let one = |nonces: &NonceTable| -> Result<Term, TraceParseError> {
            match args.as_slice() {
                [a] => parse_term(a, nonces).map_err(syn),
                _ => Err(field("expected exactly one argument")),
            }
        };

        let e = match kind {
            "Root" => Event::root(terms(&nonces)?),
            "CreateNonce" => {
                let [n, l] = args.as_slice() else {
                    return Err(field("CreateNonce takes a nonce and a label"));
                };
                let label = parse_label(l).map_err(syn)?;
                let id = n
                    .strip_prefix("nonce#")
                    .and_then(|s| s.parse::<u32>().ok())
                    .ok_or_else(|| field("CreateNonce argument must be nonce#N"))?;
                let nonce = Term::nonce(id, label);
                nonces.learn(&nonce);
                let unique_for = ev
                    .get("uniqueFor")
                    .and_then(Value::as_array)
                    .map(|ks| {
                        ks.iter()
                            .filter_map(Value::as_str)
                            .map(EventKind::new)
                            .collect()
                    })
                    .unwrap_or_default();
                Event::create_nonce(nonce, unique_for)
            }
            "Send" => Event::Send(one(&nonces)?),
            "Drop" => Event::Drop(one(&nonces)?),
            "Extend" => Event::Extend(one(&nonces)?),
            "CorruptParticipant" => {
                let pid = actor.ok_or_else(|| field("missing actor"))?;
                Event::corrupt_participant(pid, terms(&nonces)?)
            }
            "CorruptSession" => {
                let pid = actor.ok_or_else(|| field("missing actor"))?;
                let sid = session.ok_or_else(|| field("missing session"))?;
                Event::corrupt_session(
                    SessionRef {
                        pid,
                        sid: SessionId(sid),
                    },
                    terms(&nonces)?,
                )
            }
            other => Event::Proto(ProtoEvent {
                kind: EventKind::new(other),
                args: terms(&nonces)?.into(),
                actor: actor.ok_or_else(|| field("missing actor"))?,
                session: SessionId(session.ok_or_else(|| field("missing session"))?),
            }),
        };
        for t in e.attacker_terms() {
            nonces.learn(t);
        }
        events.push(e);
    }
    Ok(Trace::from_events(events)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::Label;

    fn sample() -> Trace {
        let na = Term::nonce(
            1,
            Label::readers([ParticipantId::new("A"), ParticipantId::new("B")]),
        );
        let msg = Term::aenc(
            Term::pk(Term::str("skB")),
            Term::tuple(vec![Term::int(1), na.clone(), Term::name("A")]),
        );
        Trace::new([Term::name("A"), Term::int(0)])
            .append(Event::create_nonce(
                na.clone(),
                vec![EventKind::new("FinishA")],
            ))
            .unwrap()
            .append(Event::Proto(ProtoEvent::new(
                "Initiate",
                vec![Term::name("A"), Term::name("B"), na.clone()],
                "A",
                1,
            )))
            .unwrap()
            .append(Event::Send(msg.clone()))
            .unwrap()
            .append(Event::Drop(msg))
            .unwrap()
            .append(Event::corrupt_participant("A", [na.clone()]))
            .unwrap()
            .append(Event::corrupt_session(SessionRef::new("B", 2), []))
            .unwrap()
            .append(Event::Extend(na))
            .unwrap()
    }

    #[test]
    fn text_form() {
        let text = render_trace_text(&sample());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "0: Root(0, A)");
        assert_eq!(
            lines[1],
            "1: CreateNonce(nonce#1, readers{A, B}) unique-for FinishA"
        );
        assert_eq!(lines[2], "2: Initiate(A, B, nonce#1) @A:1");
        assert_eq!(lines[6], "6: CorruptSession(B, 2, {})");
    }

    #[test]
    fn json_round_trip() {
        let tr = sample();
        let v = trace_to_json(&tr);
        assert_eq!(v[2]["actor"], "A");
        assert_eq!(v[2]["session"], 1);
        let back = parse_trace_json(&v).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn unknown_nonce_is_rejected() {
        let v = json!([
            {"index": 0, "kind": "Root", "args": []},
            {"index": 1, "kind": "Send", "args": ["nonce#4"]}
        ]);
        assert!(parse_trace_json(&v).is_err());
    }
}
