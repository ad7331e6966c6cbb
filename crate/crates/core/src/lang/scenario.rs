//! Scenario files: a protocol's roles, bootstrap, trace invariant and
//! properties in one source.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use super::ast::{Cmd, Expr, ForkTarget, LabelExpr};
use super::lexer::ParseError;
use super::parser::{check_roles, Item, Parser};
use crate::monitor::ProtocolSpec;
use crate::properties::{PropValue, PropertyDecl};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: {msg}")]
    Invalid { line: usize, msg: String },
    #[error("{0}")]
    Config(String),
}

/// A property with the name it is reported under.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedProperty {
    pub name: String,
    pub decl: PropertyDecl,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub spec: Arc<ProtocolSpec>,
    pub properties: Vec<NamedProperty>,
    pub roles: BTreeMap<String, Cmd>,
    /// Bootstrap with `run` resolved; `repeat` blocks remain until
    /// [`Scenario::instantiate`].
    pub bootstrap: Cmd,
}

impl Scenario {
    pub fn parse(src: &str) -> Result<Scenario, ScenarioError> {
        let mut p = Parser::new(src)?;
        let mut name = None;
        let mut spec = ProtocolSpec::default();
        let mut props = Vec::new();
        let mut roles = BTreeMap::new();
        let mut bootstrap = None;
        while !p.at_eof() {
            match p.item()? {
                Item::Name(n) => name = Some(n),
                Item::Alphabet(ts) => spec.alphabet.extend(ts),
                Item::Label(t, l) => spec.labels.declare(t, l),
                Item::Shape(s) => spec.shapes.push(s),
                Item::Event(d) => {
                    if spec.events.contains_key(&d.kind) {
                        return Err(p.err(format!("event {} declared twice", d.kind)).into());
                    }
                    spec.events.insert(d.kind.clone(), d);
                }
                Item::Message(m) => spec.messages.push(m),
                Item::Property { name, args, line } => props.push((name, args, line)),
                Item::Role(n, body) => {
                    if roles.insert(n.clone(), body).is_some() {
                        return Err(p.err(format!("role {n} declared twice")).into());
                    }
                }
                Item::Bootstrap(b) => {
                    if bootstrap.replace(b).is_some() {
                        return Err(p.err("more than one bootstrap block").into());
                    }
                }
            }
        }
        let name = name
            .ok_or_else(|| ScenarioError::Config("missing 'scenario NAME;' declaration".into()))?;
        let bootstrap =
            bootstrap.ok_or_else(|| ScenarioError::Config("missing bootstrap block".into()))?;
        let mut properties = Vec::new();
        for (pname, mut args, line) in props {
            let display = match args.remove("name") {
                Some(PropValue::Ident(s)) => Some(format!("{pname}({s})")),
                Some(v) => {
                    return Err(ScenarioError::Invalid {
                        line,
                        msg: format!("'name' must be an identifier, got {v}"),
                    })
                }
                None => None,
            };
            let decl = PropertyDecl::from_args(&pname, &args, &spec)
                .map_err(|msg| ScenarioError::Invalid { line, msg })?;
            properties.push(NamedProperty {
                name: display.unwrap_or_else(|| decl.to_string()),
                decl,
            });
        }
        for (r, body) in &roles {
            check_body(body, &spec).map_err(|m| ScenarioError::Config(format!("role {r}: {m}")))?;
            check_roles(body, false)
                .map_err(|m| ScenarioError::Config(format!("role {r}: {m}")))?;
        }
        let bootstrap = resolve_runs(&bootstrap, &roles).map_err(ScenarioError::Config)?;
        check_roles(&bootstrap, false)
            .map_err(|m| ScenarioError::Config(format!("bootstrap: {m}")))?;
        check_body(&bootstrap, &spec)
            .map_err(|m| ScenarioError::Config(format!("bootstrap: {m}")))?;
        Ok(Scenario {
            name,
            spec: Arc::new(spec),
            properties,
            roles,
            bootstrap,
        })
    }

    /// The bootstrap with every `repeat initiators` block copied
    /// `initiators` times and every `repeat responders` block `responders`
    /// times.
    pub fn instantiate(&self, initiators: usize, responders: usize) -> Cmd {
        expand_repeats(&self.bootstrap, initiators, responders)
    }
}

fn resolve_runs(c: &Cmd, roles: &BTreeMap<String, Cmd>) -> Result<Cmd, String> {
    let rec = |c: &Cmd| resolve_runs(c, roles);
    Ok(match c {
        Cmd::Run(r) => roles
            .get(&**r)
            .cloned()
            .ok_or_else(|| format!("unknown role '{r}'"))?,
        Cmd::Seq(cs) => Cmd::Seq(cs.iter().map(rec).collect::<Result<_, _>>()?),
        Cmd::If(e, a, b) => Cmd::If(e.clone(), Box::new(rec(a)?), Box::new(rec(b)?)),
        Cmd::While(e, b) => Cmd::While(e.clone(), Box::new(rec(b)?)),
        Cmd::Repeat(v, b) => Cmd::Repeat(v.clone(), Box::new(rec(b)?)),
        Cmd::Fork { target, vars, body } => Cmd::Fork {
            target: target.clone(),
            vars: vars.clone(),
            body: Arc::new(rec(body)?),
        },
        c => c.clone(),
    })
}

fn expand_repeats(c: &Cmd, ni: usize, nr: usize) -> Cmd {
    let rec = |c: &Cmd| expand_repeats(c, ni, nr);
    match c {
        Cmd::Repeat(v, b) => {
            let n = if &**v == "initiators" { ni } else { nr };
            Cmd::seq(vec![rec(b); n])
        }
        Cmd::Seq(cs) => Cmd::seq(cs.iter().map(rec).collect()),
        Cmd::If(e, a, b) => Cmd::If(e.clone(), Box::new(rec(a)), Box::new(rec(b))),
        Cmd::While(e, b) => Cmd::While(e.clone(), Box::new(rec(b))),
        Cmd::Fork { target, vars, body } => Cmd::Fork {
            target: target.clone(),
            vars: vars.clone(),
            body: Arc::new(rec(body)),
        },
        c => c.clone(),
    }
}

/// Emitted events must be declared with matching arity; `repeat` counts
/// must be `initiators` or `responders`; `run` may not nest.
fn check_body(c: &Cmd, spec: &ProtocolSpec) -> Result<(), String> {
    let mut err = None;
    c.walk(&mut |c| {
        if err.is_some() {
            return;
        }
        match c {
            Cmd::Emit(k, args) => match spec.events.get(k) {
                None => err = Some(format!("emits undeclared event {k}")),
                Some(d) if d.params.len() != args.len() => {
                    err = Some(format!(
                        "{k} takes {} arguments, emitted with {}",
                        d.params.len(),
                        args.len()
                    ))
                }
                _ => {}
            },
            Cmd::Repeat(v, _) if &**v != "initiators" && &**v != "responders" => {
                err = Some(format!(
                    "repeat count must be 'initiators' or 'responders', not '{v}'"
                ))
            }
            Cmd::Fork {
                target: ForkTarget::Participant(Expr::Lit(t)),
                ..
            } if t.as_name().is_none() => err = Some(format!("cannot fork as {t}")),
            Cmd::Nonce {
                label: Some(LabelExpr::Readers(v)),
                ..
            } if v.is_empty() => err = Some("empty reader set".into()),
            _ => {}
        }
    });
    err.map_or(Ok(()), Err)
}
