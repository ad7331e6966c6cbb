//! Abstract syntax of protocol programs.

use std::sync::Arc;

use crate::term::Term;
use crate::trace::EventKind;

pub type Var = Arc<str>;

pub fn var(s: &str) -> Var {
    Arc::from(s)
}

/// Reserved snapshot variable; programs may neither read nor write it.
pub const SNAP: &str = "snap";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Var(Var),
    Lit(Term),
    Tuple(Vec<Expr>),
    /// Zero-based projection `e.i`.
    Proj(Box<Expr>, usize),
    Eq(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    PkOf(Box<Expr>),
    /// The running component's own participant name.
    SelfName,
    /// The running component's session id as an integer.
    Sid,
}

/// Label annotation on `nonce`, evaluated when the nonce is created.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LabelExpr {
    Public,
    /// `readers{e, ...}`; each expression must evaluate to a name.
    Readers(Vec<Expr>),
    /// `sessions{p:s, ...}` with name and integer expressions.
    Sessions(Vec<(Expr, Expr)>),
    /// `session`: the creating component's own session.
    OwnSession,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ForkTarget {
    /// `fork as e (...)`: a participant component named by `e`.
    Participant(Expr),
    /// `fork attacker (...)`
    Attacker,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Cmd {
    Skip,
    Seq(Vec<Cmd>),
    If(Expr, Box<Cmd>, Box<Cmd>),
    While(Expr, Box<Cmd>),
    Assign(Var, Expr),
    Send(Expr),
    Recv(Var),
    Nonce {
        var: Var,
        label: Option<LabelExpr>,
        unique_for: Vec<EventKind>,
    },
    Hash(Var, Expr),
    Pk(Var, Expr),
    Enc(Var, Expr, Expr),
    Dec {
        out: Var,
        ok: Var,
        sk: Expr,
        ct: Expr,
    },
    Sign(Var, Expr, Expr),
    Verify {
        out: Var,
        ok: Var,
        pk: Expr,
        sig: Expr,
    },
    Exp(Var, Expr, Expr),
    Kdf(Var, u8, Vec<Expr>),
    Drop(Expr),
    Learn(Expr),
    Choose(Var),
    /// `corrupt(p)` corrupts a participant, `corrupt(p, s)` one session.
    Corrupt(Expr, Option<Expr>),
    Fork {
        target: ForkTarget,
        vars: Vec<Var>,
        body: Arc<Cmd>,
    },
    Emit(EventKind, Vec<Expr>),
    /// The built-in most-general attacker loop.
    Attacker,
    /// `repeat initiators { ... }`: copied once per instance when a scenario
    /// is instantiated. Never reaches the interpreter.
    Repeat(Var, Box<Cmd>),
    /// `run Role`: replaced by the role body when a scenario is loaded.
    Run(Var),
}

impl Cmd {
    pub fn seq(cmds: Vec<Cmd>) -> Cmd {
        let mut flat = Vec::new();
        for c in cmds {
            match c {
                Cmd::Seq(inner) => flat.extend(inner),
                Cmd::Skip => {}
                c => flat.push(c),
            }
        }
        match flat.len() {
            0 => Cmd::Skip,
            1 => flat.pop().unwrap(),
            _ => Cmd::Seq(flat),
        }
    }

    /// Commands only the attacker may run.
    pub fn is_attacker_only(&self) -> bool {
        matches!(
            self,
            Cmd::Drop(_) | Cmd::Learn(_) | Cmd::Choose(_) | Cmd::Corrupt(..) | Cmd::Attacker
        )
    }

    /// Visits this command and every nested command, fork bodies included.
    pub fn walk(&self, f: &mut impl FnMut(&Cmd)) {
        f(self);
        match self {
            Cmd::Seq(cs) => cs.iter().for_each(|c| c.walk(f)),
            Cmd::If(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Cmd::While(_, c) | Cmd::Repeat(_, c) => c.walk(f),
            Cmd::Fork { body, .. } => body.walk(f),
            _ => {}
        }
    }
}
