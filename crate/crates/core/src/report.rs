//! Exploration and replay reports in JSON and text form.
//!
//! Everything except `wallTime` is a function of the scenario and the
//! semantic budget, so reports of identical runs compare equal once that
//! field is removed.

use serde_json::{json, Map, Value};

use crate::explore::{Exploration, ViolationRecord};
use crate::lang::Scenario;
use crate::monitor::{check_trace_invariant, Violation};
use crate::properties::{Status, Verdict};
use crate::trace::{render_trace_text, trace_to_json, Trace};

/// Key of the only field that differs between identical runs.
pub const WALL_TIME: &str = "wallTime";

fn violation_json(v: &ViolationRecord) -> Value {
    json!({
        "type": v.kind,
        "traceIndex": v.trace_index,
        "eventRendered": v.event,
        "reason": v.reason,
        "trace": trace_to_json(&v.trace),
    })
}

pub fn to_json(r: &Exploration) -> Value {
    let b = &r.budget;
    let budget = json!({
        "initiators": b.initiators,
        "responders": b.responders,
        "depth": b.depth,
        "synthDepth": b.synth_depth,
        "corruption": b.corruption.as_str(),
        "corruptAfter": b.corrupt_after.iter().map(|k| k.as_str()).collect::<Vec<_>>(),
        "drops": b.drops,
        "macroSteps": b.atomic_local,
    });
    let properties: Vec<Value> = r
        .properties
        .iter()
        .map(|p| {
            let mut o = Map::new();
            o.insert("name".into(), json!(p.name));
            o.insert("verdict".into(), json!(p.status.as_str()));
            if let (Some(tr), Some(i)) = (&p.counterexample, p.index) {
                o.insert("traceIndex".into(), json!(i));
                o.insert("trace".into(), trace_to_json(tr));
            }
            Value::Object(o)
        })
        .collect();
    json!({
        "scenario": r.scenario,
        "status": r.outcome().as_str(),
        "budget": budget,
        "statesExplored": r.states_explored,
        "transitions": r.transitions,
        "tracesTerminal": r.traces_terminal,
        "boundReached": r.bound_reached,
        "properties": properties,
        "violations": r.violations.iter().map(violation_json).collect::<Vec<_>>(),
        "invariantFailures": r.invariants.failures(),
        WALL_TIME: r.wall_time.as_secs_f64(),
    })
}

pub fn to_json_string(r: &Exploration) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(r)).expect("reports serialize");
    s.push('\n');
    s
}

/// Parses a JSON report and drops its wall-clock field.
pub fn strip_wall_time(report: &str) -> Result<Value, serde_json::Error> {
    let mut v: Value = serde_json::from_str(report)?;
    if let Some(o) = v.as_object_mut() {
        o.remove(WALL_TIME);
    }
    Ok(v)
}

fn indent(s: &str) -> String {
    s.lines().map(|l| format!("    {l}\n")).collect()
}

pub fn to_text(r: &Exploration) -> String {
    let b = &r.budget;
    let mut s = format!("scenario {}: {}\n", r.scenario, r.outcome().as_str());
    s += &format!(
        "budget: initiators={} responders={} depth={} synth-depth={} corruption={}\n",
        b.initiators, b.responders, b.depth, b.synth_depth, b.corruption
    );
    s += &format!(
        "states explored: {}, transitions: {}, terminal traces: {}{}\n",
        r.states_explored,
        r.transitions,
        r.traces_terminal,
        if r.bound_reached {
            " (bound reached)"
        } else {
            ""
        }
    );
    s += "properties:\n";
    for p in &r.properties {
        s += &format!("  {:<28} {}\n", p.name, p.status.as_str());
    }
    for v in &r.violations {
        s += &format!(
            "violation {} at {}: {}\n  event: {}\n  trace:\n",
            v.kind, v.trace_index, v.reason, v.event
        );
        s += &indent(&render_trace_text(&v.trace));
    }
    s += &format!("wall time: {:.3}s\n", r.wall_time.as_secs_f64());
    s
}

/// Verdicts of re-checking one trace against a scenario.
#[derive(Clone, Debug)]
pub struct Replay {
    pub scenario: String,
    pub monitor: Option<Violation>,
    pub properties: Vec<(String, Verdict)>,
}

impl Replay {
    pub fn violated(&self) -> bool {
        self.monitor.is_some() || self.properties.iter().any(|(_, v)| v.is_violated())
    }
}

/// Runs the trace invariant and every property of `s` over `tr`.
pub fn replay(s: &Scenario, tr: &Trace) -> Replay {
    Replay {
        scenario: s.name.clone(),
        monitor: check_trace_invariant(tr, &s.spec).err(),
        properties: s
            .properties
            .iter()
            .map(|p| (p.name.clone(), p.decl.evaluate(tr, &s.spec)))
            .collect(),
    }
}

pub fn replay_json(r: &Replay) -> Value {
    let monitor = r.monitor.as_ref().map(|v| {
        json!({
            "type": v.kind.as_str(),
            "traceIndex": v.index,
            "eventRendered": v.event,
            "reason": v.reason,
        })
    });
    let properties: Vec<Value> = r
        .properties
        .iter()
        .map(|(name, v)| {
            let status = if v.is_violated() {
                Status::Violated
            } else {
                Status::Holds
            };
            let mut o = Map::new();
            o.insert("name".into(), json!(name));
            o.insert("verdict".into(), json!(status.as_str()));
            if let Some(i) = v.index {
                o.insert("traceIndex".into(), json!(i));
            }
            Value::Object(o)
        })
        .collect();
    json!({
        "scenario": r.scenario,
        "status": if r.violated() { "VIOLATION" } else { "PASS" },
        "monitor": monitor,
        "properties": properties,
    })
}

pub fn replay_text(r: &Replay) -> String {
    let mut s = format!(
        "scenario {}: {}\n",
        r.scenario,
        if r.violated() { "VIOLATION" } else { "PASS" }
    );
    match &r.monitor {
        Some(v) => {
            s += &format!(
                "monitor: {} at {}: {}\n  event: {}\n",
                v.kind.as_str(),
                v.index,
                v.reason,
                v.event
            )
        }
        None => s += "monitor: accepted\n",
    }
    for (name, v) in &r.properties {
        let status = if v.is_violated() { "VIOLATED" } else { "HOLDS" };
        match v.index {
            Some(i) if v.is_violated() => s += &format!("  {name:<28} {status} at {i}\n"),
            _ => s += &format!("  {name:<28} {status}\n"),
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::{explore, Budget};
    use crate::suite::builtin;

    #[test]
    fn json_and_text_agree_on_verdicts() {
        let s = builtin("ns").unwrap().unwrap();
        let r = explore(&s, &Budget::default()).unwrap();
        let j = to_json(&r);
        let text = to_text(&r);
        assert_eq!(j["status"], "VIOLATION");
        for p in j["properties"].as_array().unwrap() {
            let line = text
                .lines()
                .find(|l| l.trim_start().starts_with(p["name"].as_str().unwrap()))
                .unwrap();
            assert!(line.ends_with(p["verdict"].as_str().unwrap()), "{line}");
        }
        let again = strip_wall_time(&to_json_string(&r)).unwrap();
        assert!(again.get(WALL_TIME).is_none());
        assert_eq!(again["statesExplored"], j["statesExplored"]);
    }
}
