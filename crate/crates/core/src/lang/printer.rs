//! Renders programs back to source that parses to the same tree.

use std::fmt::{self, Write};

use super::ast::{Cmd, Expr, ForkTarget, LabelExpr};
use crate::term::Term;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::And(..) => 1,
        Expr::Eq(..) => 2,
        Expr::Not(inner) if matches!(**inner, Expr::Eq(..)) => 2,
        Expr::Not(_) => 3,
        _ => 4,
    }
}

fn lit(t: &Term, f: &mut impl Write) -> fmt::Result {
    match t {
        Term::Str(s) => write!(f, "{s:?}"),
        Term::Undef => f.write_str("undef"),
        Term::Generator => f.write_str("g"),
        t => write!(f, "{t}"),
    }
}

fn expr_at(e: &Expr, min: u8, f: &mut impl Write) -> fmt::Result {
    if prec(e) < min {
        f.write_char('(')?;
        expr_at(e, 0, f)?;
        return f.write_char(')');
    }
    match e {
        Expr::Var(v) => f.write_str(v),
        Expr::Lit(t) => lit(t, f),
        Expr::Tuple(items) => {
            f.write_char('<')?;
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                expr_at(x, 0, f)?;
            }
            f.write_char('>')
        }
        Expr::Proj(inner, i) => {
            expr_at(inner, 4, f)?;
            write!(f, ".{i}")
        }
        Expr::Eq(a, b) => {
            expr_at(a, 3, f)?;
            f.write_str(" == ")?;
            expr_at(b, 3, f)
        }
        Expr::Not(inner) => match &**inner {
            Expr::Eq(a, b) => {
                expr_at(a, 3, f)?;
                f.write_str(" != ")?;
                expr_at(b, 3, f)
            }
            inner => {
                f.write_char('!')?;
                expr_at(inner, 3, f)
            }
        },
        Expr::And(a, b) => {
            expr_at(a, 1, f)?;
            f.write_str(" && ")?;
            expr_at(b, 2, f)
        }
        Expr::PkOf(inner) => {
            f.write_str("pk(")?;
            expr_at(inner, 0, f)?;
            f.write_char(')')
        }
        Expr::SelfName => f.write_str("self"),
        Expr::Sid => f.write_str("sid"),
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr_at(e, 0, &mut s).unwrap();
    s
}

fn args(es: &[Expr]) -> String {
    es.iter().map(print_expr).collect::<Vec<_>>().join(", ")
}

fn label(l: &LabelExpr) -> String {
    match l {
        LabelExpr::Public => "public".into(),
        LabelExpr::OwnSession => "session".into(),
        LabelExpr::Readers(es) => format!(
            "readers{{{}}}",
            es.iter().map(unary).collect::<Vec<_>>().join(", ")
        ),
        LabelExpr::Sessions(ps) => format!(
            "sessions{{{}}}",
            ps.iter()
                .map(|(a, b)| format!("{}:{}", unary(a), unary(b)))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

fn unary(e: &Expr) -> String {
    let mut s = String::new();
    expr_at(e, 3, &mut s).unwrap();
    s
}

fn cmd(c: &Cmd, ind: usize, out: &mut String) {
    let pad = "    ".repeat(ind);
    let line = |out: &mut String, s: String| {
        out.push_str(&pad);
        out.push_str(&s);
    };
    match c {
        Cmd::Skip => line(out, "skip".into()),
        Cmd::Seq(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(";\n");
                }
                cmd(c, ind, out);
            }
        }
        Cmd::If(e, a, b) => {
            line(out, format!("if {} ", print_expr(e)));
            block(a, ind, out);
            if **b != Cmd::Skip {
                out.push_str(" else ");
                block(b, ind, out);
            }
        }
        Cmd::While(e, b) => {
            line(out, format!("while {} ", print_expr(e)));
            block(b, ind, out);
        }
        Cmd::Assign(x, e) => {
            // A bare pk(..) on the right would parse as the pk command.
            let rhs = match e {
                Expr::PkOf(_) => format!("({})", print_expr(e)),
                e => print_expr(e),
            };
            line(out, format!("{x} := {rhs}"))
        }
        Cmd::Send(e) => line(out, format!("send({})", print_expr(e))),
        Cmd::Recv(x) => line(out, format!("recv({x})")),
        Cmd::Nonce {
            var,
            label: l,
            unique_for,
        } => {
            let mut s = format!("nonce {var}");
            if let Some(l) = l {
                s.push_str(&format!(" label {}", label(l)));
            }
            if !unique_for.is_empty() {
                s.push_str(" unique-for");
                for k in unique_for {
                    s.push_str(&format!(" {k}"));
                }
            }
            line(out, s)
        }
        Cmd::Hash(x, e) => line(out, format!("{x} := hash({})", print_expr(e))),
        Cmd::Pk(x, e) => line(out, format!("{x} := pk({})", print_expr(e))),
        Cmd::Enc(x, k, m) => line(
            out,
            format!("{x} := enc({})", args(&[k.clone(), m.clone()])),
        ),
        Cmd::Sign(x, k, m) => line(
            out,
            format!("{x} := sign({})", args(&[k.clone(), m.clone()])),
        ),
        Cmd::Exp(x, b, e) => line(
            out,
            format!("{x} := exp({})", args(&[b.clone(), e.clone()])),
        ),
        Cmd::Kdf(x, i, es) => line(out, format!("{x} := kdf{i}({})", args(es))),
        Cmd::Dec { out: o, ok, sk, ct } => line(
            out,
            format!("dec({o}, {ok}, {}, {})", print_expr(sk), print_expr(ct)),
        ),
        Cmd::Verify {
            out: o,
            ok,
            pk,
            sig,
        } => line(
            out,
            format!("verify({o}, {ok}, {}, {})", print_expr(pk), print_expr(sig)),
        ),
        Cmd::Drop(e) => line(out, format!("drop({})", print_expr(e))),
        Cmd::Learn(e) => line(out, format!("learn({})", print_expr(e))),
        Cmd::Choose(x) => line(out, format!("choose({x})")),
        Cmd::Corrupt(p, None) => line(out, format!("corrupt({})", print_expr(p))),
        Cmd::Corrupt(p, Some(s)) => line(
            out,
            format!("corrupt({}, {})", print_expr(p), print_expr(s)),
        ),
        Cmd::Fork { target, vars, body } => {
            let t = match target {
                ForkTarget::Attacker => "attacker".to_string(),
                ForkTarget::Participant(e) => format!("as {}", primary(e)),
            };
            let vs: Vec<&str> = vars.iter().map(|v| &**v).collect();
            line(out, format!("fork {t} ({}) ", vs.join(", ")));
            match &**body {
                Cmd::Run(r) => out.push_str(&format!("run {r}")),
                b => block(b, ind, out),
            }
        }
        Cmd::Emit(k, es) => line(out, format!("emit {k}({})", args(es))),
        Cmd::Attacker => line(out, "attacker".into()),
        Cmd::Repeat(v, b) => {
            line(out, format!("repeat {v} "));
            block(b, ind, out);
        }
        Cmd::Run(r) => line(out, format!("fork as self () run {r}")),
    }
}

/// Fork targets are parsed as primaries, so anything else is parenthesised.
fn primary(e: &Expr) -> String {
    match e {
        Expr::Var(_)
        | Expr::Lit(_)
        | Expr::Tuple(_)
        | Expr::PkOf(_)
        | Expr::SelfName
        | Expr::Sid => print_expr(e),
        e => format!("({})", print_expr(e)),
    }
}

fn block(c: &Cmd, ind: usize, out: &mut String) {
    if *c == Cmd::Skip {
        out.push_str("{ }");
        return;
    }
    out.push_str("{\n");
    cmd(c, ind + 1, out);
    out.push('\n');
    out.push_str(&"    ".repeat(ind));
    out.push('}');
}

pub fn print_program(c: &Cmd) -> String {
    let mut s = String::new();
    cmd(c, 0, &mut s);
    s
}
