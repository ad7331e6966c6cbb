//! Recursive-descent parser for programs and scenario files.
//!
//! Lexical conventions: identifiers starting with an upper-case letter are
//! participant names, lower-case identifiers are variables.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::ast::{var, Cmd, Expr, ForkTarget, LabelExpr, Var, SNAP};
use super::lexer::{lex, ParseError, Spanned, Tok};
use crate::ids::{ParticipantId, SessionRef};
use crate::label::Label;
use crate::monitor::{Cond, EventDecl, MessageRule};
use crate::pattern::Pattern;
use crate::properties::PropValue;
use crate::term::Term;
use crate::trace::EventKind;

const EXPR_KEYWORDS: [&str; 7] = ["true", "false", "undef", "g", "self", "sid", "pk"];
const CMD_KEYWORDS: [&str; 17] = [
    "skip", "send", "recv", "nonce", "dec", "verify", "drop", "learn", "choose", "corrupt", "fork",
    "emit", "if", "else", "while", "attacker", "repeat",
];

pub(crate) struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

/// One top-level item of a scenario file, in source order.
#[derive(Clone, Debug)]
pub enum Item {
    Name(String),
    Alphabet(Vec<Term>),
    Label(Term, Label),
    Shape(Pattern),
    Event(EventDecl),
    Message(MessageRule),
    Property {
        name: String,
        args: BTreeMap<String, PropValue>,
        line: usize,
    },
    Role(String, Cmd),
    Bootstrap(Cmd),
}

impl Parser {
    pub(crate) fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn line(&self) -> usize {
        self.toks[self.pos].line
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn err(&self, msg: impl Into<String>) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError {
            line: s.line,
            col: s.col,
            msg: msg.into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}', found {}", self.peek())))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{s}', found {}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => Err(self.err(format!("expected identifier, found {t}"))),
        }
    }

    fn variable(&mut self) -> Result<Var, ParseError> {
        let s = self.ident()?;
        if s == SNAP {
            return Err(self.err("the snapshot variable 'snap' is reserved"));
        }
        if !is_var_name(&s)
            || EXPR_KEYWORDS.contains(&s.as_str())
            || CMD_KEYWORDS.contains(&s.as_str())
        {
            return Err(self.err(format!("'{s}' is not a valid variable name")));
        }
        Ok(var(&s))
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            t => Err(self.err(format!("expected integer, found {t}"))),
        }
    }

    fn comma_list<T>(
        &mut self,
        close: &str,
        mut item: impl FnMut(&mut Self) -> Result<T, ParseError>,
    ) -> Result<Vec<T>, ParseError> {
        let mut out = Vec::new();
        if self.eat_sym(close) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.eat_sym(close) {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }

    pub(crate) fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    // ---- expressions ----

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.cmp()?;
        while self.eat_sym("&&") {
            let r = self.cmp()?;
            e = Expr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn cmp(&mut self) -> Result<Expr, ParseError> {
        let l = self.unary()?;
        if self.eat_sym("==") {
            let r = self.unary()?;
            return Ok(Expr::Eq(Box::new(l), Box::new(r)));
        }
        if self.eat_sym("!=") {
            let r = self.unary()?;
            return Ok(Expr::Not(Box::new(Expr::Eq(Box::new(l), Box::new(r)))));
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_sym("!") {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        let mut e = self.primary()?;
        while self.eat_sym(".") {
            let i = self.int()?;
            let i = usize::try_from(i).map_err(|_| self.err("negative projection index"))?;
            e = Expr::Proj(Box::new(e), i);
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Lit(Term::Int(v)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Term::str(&s)))
            }
            Tok::Sym("<") => {
                self.bump();
                let items = self.comma_list(">", |p| p.expr())?;
                if items.len() < 2 {
                    return Err(self.err("tuple needs at least two components"));
                }
                Ok(Expr::Tuple(items))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::Lit(Term::Bool(true)))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::Lit(Term::Bool(false)))
                }
                "undef" => {
                    self.bump();
                    Ok(Expr::Lit(Term::Undef))
                }
                "g" => {
                    self.bump();
                    Ok(Expr::Lit(Term::Generator))
                }
                "self" => {
                    self.bump();
                    Ok(Expr::SelfName)
                }
                "sid" => {
                    self.bump();
                    Ok(Expr::Sid)
                }
                "pk" => {
                    self.bump();
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::PkOf(Box::new(e)))
                }
                _ if is_name(&s) => {
                    self.bump();
                    Ok(Expr::Lit(Term::name(s.as_str())))
                }
                _ => Ok(Expr::Var(self.variable()?)),
            },
            t => Err(self.err(format!("expected an expression, found {t}"))),
        }
    }

    // ---- commands ----

    /// `cmd (; cmd)*`, stopping before `}` or end of input.
    pub(crate) fn seq(&mut self) -> Result<Cmd, ParseError> {
        let mut cmds = Vec::new();
        loop {
            while self.eat_sym(";") {}
            if self.is_sym("}") || self.at_eof() {
                break;
            }
            cmds.push(self.cmd()?);
            if !self.eat_sym(";")
                && !self.is_sym("}")
                && !self.at_eof()
                && !matches!(cmds.last(), Some(c) if ends_with_block(c))
            {
                return Err(self.err(format!("expected ';', found {}", self.peek())));
            }
        }
        Ok(Cmd::seq(cmds))
    }

    fn block(&mut self) -> Result<Cmd, ParseError> {
        self.expect_sym("{")?;
        let c = self.seq()?;
        self.expect_sym("}")?;
        Ok(c)
    }

    fn paren_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect_sym("(")?;
        self.comma_list(")", |p| p.expr())
    }

    fn paren_n<const N: usize>(&mut self, what: &str) -> Result<[Expr; N], ParseError> {
        let args = self.paren_args()?;
        args.try_into()
            .map_err(|_| self.err(format!("{what} takes {N} arguments")))
    }

    fn cmd(&mut self) -> Result<Cmd, ParseError> {
        let Tok::Ident(kw) = self.peek().clone() else {
            return Err(self.err(format!("expected a command, found {}", self.peek())));
        };
        if matches!(self.peek_at(1), Tok::Sym(":=")) {
            let x = self.variable()?;
            self.bump();
            return self.assignment(x);
        }
        self.bump();
        match kw.as_str() {
            "skip" => Ok(Cmd::Skip),
            "attacker" => Ok(Cmd::Attacker),
            "send" => {
                let [e] = self.paren_n("send")?;
                Ok(Cmd::Send(e))
            }
            "drop" => {
                let [e] = self.paren_n("drop")?;
                Ok(Cmd::Drop(e))
            }
            "learn" => {
                let [e] = self.paren_n("learn")?;
                Ok(Cmd::Learn(e))
            }
            "recv" | "choose" => {
                self.expect_sym("(")?;
                let x = self.variable()?;
                self.expect_sym(")")?;
                Ok(if kw == "recv" {
                    Cmd::Recv(x)
                } else {
                    Cmd::Choose(x)
                })
            }
            "corrupt" => {
                let mut args = self.paren_args()?;
                match args.len() {
                    1 => Ok(Cmd::Corrupt(args.remove(0), None)),
                    2 => {
                        let s = args.pop();
                        Ok(Cmd::Corrupt(args.remove(0), s))
                    }
                    _ => Err(self.err("corrupt takes a participant and an optional session")),
                }
            }
            "nonce" => {
                let x = self.variable()?;
                let label = if self.eat_kw("label") {
                    Some(self.label_expr()?)
                } else {
                    None
                };
                let mut unique_for = Vec::new();
                if self.eat_kw("unique-for") {
                    while let Tok::Ident(k) = self.peek().clone() {
                        if !is_name(&k) {
                            break;
                        }
                        self.bump();
                        unique_for.push(EventKind::new(&k));
                    }
                    if unique_for.is_empty() {
                        return Err(self.err("unique-for needs at least one event kind"));
                    }
                }
                Ok(Cmd::Nonce {
                    var: x,
                    label,
                    unique_for,
                })
            }
            "dec" | "verify" => {
                self.expect_sym("(")?;
                let out = self.variable()?;
                self.expect_sym(",")?;
                let ok = self.variable()?;
                self.expect_sym(",")?;
                let key = self.expr()?;
                self.expect_sym(",")?;
                let msg = self.expr()?;
                self.expect_sym(")")?;
                Ok(if kw == "dec" {
                    Cmd::Dec {
                        out,
                        ok,
                        sk: key,
                        ct: msg,
                    }
                } else {
                    Cmd::Verify {
                        out,
                        ok,
                        pk: key,
                        sig: msg,
                    }
                })
            }
            "emit" => {
                let k = self.ident()?;
                if !is_name(&k) {
                    return Err(self.err("event kinds start with an upper-case letter"));
                }
                let args = self.paren_args()?;
                Ok(Cmd::Emit(EventKind::new(&k), args))
            }
            "if" => self.if_rest(),
            "while" => {
                let e = self.expr()?;
                let body = self.block()?;
                Ok(Cmd::While(e, Box::new(body)))
            }
            "fork" => {
                let target = if self.eat_kw("as") {
                    ForkTarget::Participant(self.primary()?)
                } else {
                    self.expect_kw("attacker")?;
                    ForkTarget::Attacker
                };
                self.expect_sym("(")?;
                let vars = self.comma_list(")", |p| p.variable())?;
                let body = if self.eat_kw("run") {
                    let r = self.ident()?;
                    Cmd::Run(var(&r))
                } else {
                    self.block()?
                };
                Ok(Cmd::Fork {
                    target,
                    vars,
                    body: Arc::new(body),
                })
            }
            "repeat" => {
                let n = self.ident()?;
                let body = self.block()?;
                Ok(Cmd::Repeat(var(&n), Box::new(body)))
            }
            other => Err(self.err(format!("unknown command '{other}'"))),
        }
    }

    fn if_rest(&mut self) -> Result<Cmd, ParseError> {
        let e = self.expr()?;
        let then = self.block()?;
        let els = if self.eat_kw("else") {
            if self.eat_kw("if") {
                self.if_rest()?
            } else {
                self.block()?
            }
        } else {
            Cmd::Skip
        };
        Ok(Cmd::If(e, Box::new(then), Box::new(els)))
    }

    fn assignment(&mut self, x: Var) -> Result<Cmd, ParseError> {
        if let (Tok::Ident(f), Tok::Sym("(")) = (self.peek().clone(), self.peek_at(1).clone()) {
            let c = match f.as_str() {
                "hash" => {
                    self.bump();
                    let [e] = self.paren_n("hash")?;
                    Some(Cmd::Hash(x.clone(), e))
                }
                "pk" => {
                    self.bump();
                    let [e] = self.paren_n("pk")?;
                    Some(Cmd::Pk(x.clone(), e))
                }
                "enc" => {
                    self.bump();
                    let [k, m] = self.paren_n("enc")?;
                    Some(Cmd::Enc(x.clone(), k, m))
                }
                "sign" => {
                    self.bump();
                    let [k, m] = self.paren_n("sign")?;
                    Some(Cmd::Sign(x.clone(), k, m))
                }
                "exp" => {
                    self.bump();
                    let [b, e] = self.paren_n("exp")?;
                    Some(Cmd::Exp(x.clone(), b, e))
                }
                k if kdf_index(k).is_some() => {
                    self.bump();
                    let args = self.paren_args()?;
                    if args.is_empty() {
                        return Err(self.err("kdf needs at least one input"));
                    }
                    Some(Cmd::Kdf(x.clone(), kdf_index(k).unwrap(), args))
                }
                _ => None,
            };
            if let Some(c) = c {
                return Ok(c);
            }
        }
        Ok(Cmd::Assign(x, self.expr()?))
    }

    fn label_expr(&mut self) -> Result<LabelExpr, ParseError> {
        let kw = self.ident()?;
        match kw.as_str() {
            "public" => Ok(LabelExpr::Public),
            "session" => Ok(LabelExpr::OwnSession),
            "readers" => {
                self.expect_sym("{")?;
                let items = self.comma_list("}", |p| p.unary())?;
                if items.is_empty() {
                    return Err(self.err("reader sets must not be empty"));
                }
                Ok(LabelExpr::Readers(items))
            }
            "sessions" => {
                self.expect_sym("{")?;
                let items = self.comma_list("}", |p| {
                    let a = p.unary()?;
                    p.expect_sym(":")?;
                    let b = p.unary()?;
                    Ok((a, b))
                })?;
                if items.is_empty() {
                    return Err(self.err("session sets must not be empty"));
                }
                Ok(LabelExpr::Sessions(items))
            }
            other => Err(self.err(format!("unknown label '{other}'"))),
        }
    }

    // ---- literal terms, labels, patterns ----

    fn literal_term(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Term::Int(v))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Term::str(&s))
            }
            Tok::Ident(s) if is_name(&s) => {
                self.bump();
                Ok(Term::name(s.as_str()))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(Term::Bool(s == "true"))
            }
            t => Err(self.err(format!("expected a constant, found {t}"))),
        }
    }

    /// A pattern without variables or wildcards, read as a term.
    fn ground_term(&mut self) -> Result<Term, ParseError> {
        let p = self.pattern()?;
        ground(&p).ok_or_else(|| self.err(format!("{p} is not a ground term")))
    }

    fn literal_label(&mut self) -> Result<Label, ParseError> {
        let kw = self.ident()?;
        match kw.as_str() {
            "public" => Ok(Label::Public),
            "unreadable" => Ok(Label::Unreadable),
            "readers" => {
                self.expect_sym("{")?;
                let ps = self.comma_list("}", |p| p.ident().map(ParticipantId::new))?;
                Ok(Label::readers(ps))
            }
            "sessions" => {
                self.expect_sym("{")?;
                let ss = self.comma_list("}", |p| {
                    let a = p.ident()?;
                    p.expect_sym(":")?;
                    let s = p.int()?;
                    Ok(SessionRef::new(a.as_str(), s as u32))
                })?;
                Ok(Label::sessions(ss))
            }
            other => Err(self.err(format!("unknown label '{other}'"))),
        }
    }

    pub(crate) fn pattern(&mut self) -> Result<Pattern, ParseError> {
        match self.peek().clone() {
            Tok::Sym("_") => {
                self.bump();
                Ok(Pattern::Wild)
            }
            Tok::Sym("?") => {
                self.bump();
                Ok(Pattern::var(&self.ident()?))
            }
            Tok::Sym("<") => {
                self.bump();
                let ps = self.comma_list(">", |p| p.pattern())?;
                if ps.len() < 2 {
                    return Err(self.err("tuple needs at least two components"));
                }
                Ok(Pattern::Tuple(ps))
            }
            Tok::Int(_) | Tok::Str(_) => Ok(Pattern::Lit(self.literal_term()?)),
            Tok::Ident(s) => {
                let call = matches!(self.peek_at(1), Tok::Sym("("));
                match s.as_str() {
                    "true" | "false" => Ok(Pattern::Lit(self.literal_term()?)),
                    "g" => {
                        self.bump();
                        Ok(Pattern::Lit(Term::Generator))
                    }
                    "hash" | "pk" if call => {
                        self.bump();
                        let [a] = self.pattern_args::<1>(&s)?;
                        Ok(if s == "hash" {
                            Pattern::Hash(Box::new(a))
                        } else {
                            Pattern::Pk(Box::new(a))
                        })
                    }
                    "enc" | "sig" if call => {
                        self.bump();
                        let [a, b] = self.pattern_args::<2>(&s)?;
                        Ok(if s == "enc" {
                            Pattern::AEnc(Box::new(a), Box::new(b))
                        } else {
                            Pattern::Sig(Box::new(a), Box::new(b))
                        })
                    }
                    "aead" if call => {
                        self.bump();
                        let ps = self.pattern_args::<4>(&s)?;
                        Ok(Pattern::Aead(Box::new(ps)))
                    }
                    "exp" if call => {
                        self.bump();
                        self.expect_sym("(")?;
                        self.expect_kw("g")?;
                        self.expect_sym(";")?;
                        let ps = self.comma_list(")", |p| p.pattern())?;
                        if ps.is_empty() {
                            return Err(self.err("exp needs at least one exponent"));
                        }
                        Ok(Pattern::Exp(ps))
                    }
                    k if call && kdf_index(k).is_some() => {
                        self.bump();
                        self.expect_sym("(")?;
                        let ps = self.comma_list(")", |p| p.pattern())?;
                        Ok(Pattern::Kdf(kdf_index(k).unwrap(), ps))
                    }
                    _ if is_name(&s) => Ok(Pattern::Lit(self.literal_term()?)),
                    _ => {
                        self.bump();
                        Ok(Pattern::var(&s))
                    }
                }
            }
            t => Err(self.err(format!("expected a pattern, found {t}"))),
        }
    }

    fn pattern_args<const N: usize>(&mut self, what: &str) -> Result<[Pattern; N], ParseError> {
        self.expect_sym("(")?;
        let ps = self.comma_list(")", |p| p.pattern())?;
        ps.try_into()
            .map_err(|_| self.err(format!("{what} takes {N} arguments")))
    }

    // ---- conditions ----

    fn cond(&mut self) -> Result<Cond, ParseError> {
        let mut alts = vec![self.conj()?];
        while self.eat_kw("or") {
            alts.push(self.conj()?);
        }
        Ok(if alts.len() == 1 {
            alts.pop().unwrap()
        } else {
            Cond::Or(alts)
        })
    }

    fn conj(&mut self) -> Result<Cond, ParseError> {
        let mut parts = vec![self.cond_atom()?];
        while self.eat_kw("and") {
            parts.push(self.cond_atom()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Cond::And(parts)
        })
    }

    fn cond_atom(&mut self) -> Result<Cond, ParseError> {
        if self.eat_sym("(") {
            let c = self.cond()?;
            self.expect_sym(")")?;
            return Ok(c);
        }
        let name = self.ident()?;
        match name.as_str() {
            "true" => Ok(Cond::True),
            "corrupted" => {
                self.expect_sym("(")?;
                Ok(Cond::Corrupted(self.comma_list(")", |p| p.pattern())?))
            }
            "publishable" => {
                let [p] = self.pattern_args::<1>("publishable")?;
                Ok(Cond::Publishable(p))
            }
            k if is_name(k) => {
                self.expect_sym("(")?;
                Ok(Cond::Occurs(
                    EventKind::new(k),
                    self.comma_list(")", |p| p.pattern())?,
                ))
            }
            other => Err(self.err(format!("unknown condition '{other}'"))),
        }
    }

    // ---- scenario items ----

    pub(crate) fn item(&mut self) -> Result<Item, ParseError> {
        let line = self.line();
        let kw = self.ident()?;
        let item = match kw.as_str() {
            "scenario" => Item::Name(self.ident()?),
            "alphabet" => {
                let mut ts = vec![self.ground_term()?];
                while self.eat_sym(",") {
                    ts.push(self.ground_term()?);
                }
                Item::Alphabet(ts)
            }
            "label" => {
                let t = self.ground_term()?;
                Item::Label(t, self.literal_label()?)
            }
            "shape" => Item::Shape(self.pattern()?),
            "event" => {
                let k = self.ident()?;
                if !is_name(&k) {
                    return Err(self.err("event kinds start with an upper-case letter"));
                }
                self.expect_sym("(")?;
                let params: Vec<Arc<str>> =
                    self.comma_list(")", |p| p.ident().map(|s| Arc::from(s.as_str())))?;
                let pos = |p: &Self, name: &str| -> Result<usize, ParseError> {
                    params
                        .iter()
                        .position(|x| &**x == name)
                        .ok_or_else(|| p.err(format!("'{name}' is not a parameter of {k}")))
                };
                let mut decl = EventDecl {
                    kind: EventKind::new(&k),
                    params: params.clone(),
                    actor: None,
                    unique: None,
                    requires: Cond::True,
                };
                loop {
                    if self.eat_kw("actor") {
                        let a = self.ident()?;
                        decl.actor = Some(pos(self, &a)?);
                    } else if self.eat_kw("unique") {
                        let u = self.ident()?;
                        decl.unique = Some(pos(self, &u)?);
                    } else if self.eat_kw("requires") {
                        decl.requires = self.cond()?;
                    } else {
                        break;
                    }
                }
                Item::Event(decl)
            }
            "message" => {
                let pattern = self.pattern()?;
                self.expect_kw("requires")?;
                Item::Message(MessageRule {
                    pattern,
                    requires: self.cond()?,
                })
            }
            "property" => {
                let name = self.ident()?;
                self.expect_sym("(")?;
                let kvs = self.comma_list(")", |p| {
                    let k = p.ident()?;
                    p.expect_sym("=")?;
                    let v = match p.peek().clone() {
                        Tok::Int(v) => {
                            p.bump();
                            PropValue::Int(v)
                        }
                        Tok::Sym("[") => {
                            p.bump();
                            PropValue::List(p.comma_list("]", |q| q.int())?)
                        }
                        _ => PropValue::Ident(p.ident()?),
                    };
                    Ok((k, v))
                })?;
                Item::Property {
                    name,
                    args: kvs.into_iter().collect(),
                    line,
                }
            }
            "role" => {
                let name = self.ident()?;
                Item::Role(name, self.block()?)
            }
            "bootstrap" => Item::Bootstrap(self.block()?),
            other => return Err(self.err(format!("unknown declaration '{other}'"))),
        };
        if !matches!(item, Item::Role(..) | Item::Bootstrap(_)) {
            self.expect_sym(";")?;
        }
        Ok(item)
    }
}

fn ground(p: &Pattern) -> Option<Term> {
    let all = |ps: &[Pattern]| ps.iter().map(ground).collect::<Option<Vec<_>>>();
    Some(match p {
        Pattern::Lit(t) => t.clone(),
        Pattern::Var(_) | Pattern::Wild => return None,
        Pattern::Tuple(ps) => Term::tuple(all(ps)?),
        Pattern::Hash(a) => Term::hash(ground(a)?),
        Pattern::Pk(a) => Term::pk(ground(a)?),
        Pattern::AEnc(a, b) => Term::aenc(ground(a)?, ground(b)?),
        Pattern::Sig(a, b) => Term::sig(ground(a)?, ground(b)?),
        Pattern::Aead(ps) => {
            let [a, b, c, d] = &**ps;
            Term::aead(ground(a)?, ground(b)?, ground(c)?, ground(d)?)
        }
        Pattern::Kdf(i, ps) => Term::kdf(*i, all(ps)?),
        Pattern::Exp(ps) => Term::exp_g(all(ps)?).ok()?,
    })
}

fn ends_with_block(c: &Cmd) -> bool {
    matches!(c, Cmd::If(..) | Cmd::While(..) | Cmd::Repeat(..))
        || matches!(c, Cmd::Fork { body, .. } if !matches!(**body, Cmd::Run(_)))
}

pub(crate) fn is_name(s: &str) -> bool {
    s.starts_with(|c: char| c.is_uppercase())
}

fn is_var_name(s: &str) -> bool {
    s.starts_with(|c: char| c.is_lowercase() || c == '_')
}

fn kdf_index(s: &str) -> Option<u8> {
    s.strip_prefix("kdf")
        .filter(|d| !d.is_empty())
        .and_then(|d| d.parse().ok())
}

/// Parses a command sequence.
pub fn parse_program(src: &str) -> Result<Cmd, ParseError> {
    let mut p = Parser::new(src)?;
    let c = p.seq()?;
    if !p.at_eof() {
        return Err(p.err(format!("unexpected {}", p.peek())));
    }
    check_roles(&c, false).map_err(|msg| ParseError {
        line: 0,
        col: 0,
        msg,
    })?;
    Ok(c)
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.err(format!("unexpected {}", p.peek())));
    }
    Ok(e)
}

pub fn parse_pattern(src: &str) -> Result<Pattern, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.pattern()?;
    if !p.at_eof() {
        return Err(p.err(format!("unexpected {}", p.peek())));
    }
    Ok(e)
}

/// Attacker-only commands may appear only inside `fork attacker` bodies.
pub(crate) fn check_roles(c: &Cmd, attacker: bool) -> Result<(), String> {
    match c {
        Cmd::Seq(cs) => cs.iter().try_for_each(|c| check_roles(c, attacker)),
        Cmd::If(_, a, b) => {
            check_roles(a, attacker)?;
            check_roles(b, attacker)
        }
        Cmd::While(_, b) | Cmd::Repeat(_, b) => check_roles(b, attacker),
        Cmd::Fork { target, body, .. } => check_roles(body, matches!(target, ForkTarget::Attacker)),
        c if c.is_attacker_only() && !attacker => Err(format!(
            "'{}' may only be used by the attacker",
            command_name(c)
        )),
        _ => Ok(()),
    }
}

fn command_name(c: &Cmd) -> &'static str {
    match c {
        Cmd::Drop(_) => "drop",
        Cmd::Learn(_) => "learn",
        Cmd::Choose(_) => "choose",
        Cmd::Corrupt(..) => "corrupt",
        Cmd::Attacker => "attacker",
        _ => "command",
    }
}
