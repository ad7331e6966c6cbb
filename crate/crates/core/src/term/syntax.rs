//! Textual syntax for terms and labels.
//!
//! ```text
//! 1   "str"   true   undef   A   g   nonce#7   <a, b, c>
//! hash(t)   pk(sk)   enc(pk(skB), <1, na, A>)   sig(sk, m)
//! aead(k, n, m, ad)   kdf1(a, b)   exp(g; x, y)
//! public   unreadable   readers{A, B}   sessions{A:1, B:2}
//! ```
//!
//! Nonces print as `nonce#<id>`; their labels are recovered from a
//! [`NonceTable`] when parsing, or from an inline `nonce#7[readers{A}]`
//! annotation.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use super::Term;
use crate::ids::{NonceId, ParticipantId, SessionRef};
use crate::label::Label;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{msg} at offset {offset}")]
pub struct SyntaxError {
    pub msg: String,
    pub offset: usize,
}

/// Labels of known nonces, used to resolve `nonce#<id>` while parsing.
#[derive(Clone, Debug, Default)]
pub struct NonceTable {
    labels: HashMap<NonceId, Label>,
}

impl NonceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: NonceId, label: Label) {
        self.labels.insert(id, label);
    }

    pub fn get(&self, id: NonceId) -> Option<&Label> {
        self.labels.get(&id)
    }

    /// Registers every nonce occurring in `t`.
    pub fn learn(&mut self, t: &Term) {
        for s in t.subterms() {
            if let Term::Nonce(id, l) = s {
                self.labels.insert(*id, l.clone());
            }
        }
    }
}

pub(crate) fn write_term(f: &mut impl fmt::Write, t: &Term) -> fmt::Result {
    match t {
        Term::Int(v) => write!(f, "{v}"),
        Term::Str(s) => {
            f.write_char('"')?;
            for c in s.chars() {
                match c {
                    '"' => f.write_str("\\\"")?,
                    '\\' => f.write_str("\\\\")?,
                    c => f.write_char(c)?,
                }
            }
            f.write_char('"')
        }
        Term::Bool(b) => write!(f, "{b}"),
        Term::Undef => f.write_str("undef"),
        Term::Name(p) => f.write_str(p.as_str()),
        Term::Generator => f.write_str("g"),
        Term::Nonce(id, _) => write!(f, "nonce#{id}"),
        Term::Tuple(items) => {
            f.write_char('<')?;
            write_list(f, items)?;
            f.write_char('>')
        }
        Term::Hash(a) => call(f, "hash", &[a]),
        Term::Pk(a) => call(f, "pk", &[a]),
        Term::AEnc(a, b) => call(f, "enc", &[a, b]),
        Term::Sig(a, b) => call(f, "sig", &[a, b]),
        Term::Aead(p) => call(f, "aead", &[&p[0], &p[1], &p[2], &p[3]]),
        Term::Kdf(i, inputs) => {
            write!(f, "kdf{i}(")?;
            write_list(f, inputs)?;
            f.write_char(')')
        }
        Term::Exp(base, es) => {
            f.write_str("exp(")?;
            write_term(f, base)?;
            f.write_str("; ")?;
            write_list(f, es)?;
            f.write_char(')')
        }
    }
}

fn write_list(f: &mut impl fmt::Write, items: &[Term]) -> fmt::Result {
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_term(f, t)?;
    }
    Ok(())
}

fn call(f: &mut impl fmt::Write, name: &str, args: &[&Term]) -> fmt::Result {
    f.write_str(name)?;
    f.write_char('(')?;
    for (i, t) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write_term(f, t)?;
    }
    f.write_char(')')
}

pub(crate) fn write_label(f: &mut impl fmt::Write, l: &Label) -> fmt::Result {
    match l {
        Label::Public => f.write_str("public"),
        Label::Unreadable => f.write_str("unreadable"),
        Label::Readers(ps) => {
            f.write_str("readers{")?;
            for (i, p) in ps.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                f.write_str(p.as_str())?;
            }
            f.write_char('}')
        }
        Label::Sessions(ss) => {
            f.write_str("sessions{")?;
            for (i, s) in ss.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}:{}", s.pid, s.sid)?;
            }
            f.write_char('}')
        }
    }
}

/// Parses a complete term. Nonces without an inline label must be present in
/// `nonces`.
pub fn parse_term(src: &str, nonces: &NonceTable) -> Result<Term, SyntaxError> {
    let mut p = Cursor::new(src);
    let t = p.term(nonces)?;
    p.ws();
    if !p.at_end() {
        return Err(p.err("trailing input"));
    }
    Ok(t)
}

pub fn parse_label(src: &str) -> Result<Label, SyntaxError> {
    let mut p = Cursor::new(src);
    let l = p.label()?;
    p.ws();
    if !p.at_end() {
        return Err(p.err("trailing input"));
    }
    Ok(l)
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Cursor { src, pos: 0 }
    }

    fn err(&self, msg: &str) -> SyntaxError {
        SyntaxError {
            msg: msg.to_string(),
            offset: self.pos,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SyntaxError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{c}'")))
        }
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c.is_alphanumeric() || c == '_' || (i > 0 && c == '\'')))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        if len == 0 || rest.starts_with(|c: char| c.is_ascii_digit()) {
            return None;
        }
        self.pos += len;
        Some(&rest[..len])
    }

    fn number(&mut self) -> Result<i64, SyntaxError> {
        self.ws();
        let rest = self.rest();
        let mut len = 0;
        if rest.starts_with('-') {
            len = 1;
        }
        len += rest[len..]
            .chars()
            .take_while(|c| c.is_ascii_digit())
            .count();
        let s = &rest[..len];
        let v = s.parse::<i64>().map_err(|_| self.err("bad integer"))?;
        self.pos += len;
        Ok(v)
    }

    fn args(&mut self, nonces: &NonceTable) -> Result<Vec<Term>, SyntaxError> {
        self.expect('(')?;
        let mut out = vec![self.term(nonces)?];
        while self.eat(',') {
            out.push(self.term(nonces)?);
        }
        self.expect(')')?;
        Ok(out)
    }

    fn fixed<const N: usize>(
        &mut self,
        nonces: &NonceTable,
        what: &str,
    ) -> Result<[Term; N], SyntaxError> {
        let v = self.args(nonces)?;
        v.try_into()
            .map_err(|_| self.err(&format!("{what} takes {N} arguments")))
    }

    fn term(&mut self, nonces: &NonceTable) -> Result<Term, SyntaxError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('<') => {
                self.pos += 1;
                let mut items = vec![self.term(nonces)?];
                while self.eat(',') {
                    items.push(self.term(nonces)?);
                }
                self.expect('>')?;
                if items.len() < 2 {
                    return Err(self.err("tuple needs at least two components"));
                }
                Ok(Term::tuple(items))
            }
            Some('"') => {
                self.pos += 1;
                let mut s = String::new();
                let mut chars = self.rest().char_indices();
                loop {
                    match chars.next() {
                        None => return Err(self.err("unterminated string")),
                        Some((i, '"')) => {
                            self.pos += i + 1;
                            break;
                        }
                        Some((_, '\\')) => match chars.next() {
                            Some((_, c)) => s.push(c),
                            None => return Err(self.err("unterminated string")),
                        },
                        Some((_, c)) => s.push(c),
                    }
                }
                Ok(Term::str(&s))
            }
            Some(c) if c.is_ascii_digit() || c == '-' => Ok(Term::Int(self.number()?)),
            Some(_) => {
                let start = self.pos;
                let id = self.ident().ok_or_else(|| self.err("expected a term"))?;
                match id {
                    "true" => Ok(Term::Bool(true)),
                    "false" => Ok(Term::Bool(false)),
                    "undef" => Ok(Term::Undef),
                    "g" => Ok(Term::Generator),
                    "nonce" if self.rest().starts_with('#') => {
                        self.pos += 1;
                        let v = self.number()?;
                        let nid = NonceId(u32::try_from(v).map_err(|_| self.err("bad nonce id"))?);
                        let label = if self.eat('[') {
                            let l = self.label()?;
                            self.expect(']')?;
                            l
                        } else {
                            nonces.get(nid).cloned().ok_or(SyntaxError {
                                msg: format!("unknown nonce#{nid}"),
                                offset: start,
                            })?
                        };
                        Ok(Term::Nonce(nid, label))
                    }
                    "hash" if self.peek() == Some('(') => {
                        let [a] = self.fixed(nonces, "hash")?;
                        Ok(Term::hash(a))
                    }
                    "pk" if self.peek() == Some('(') => {
                        let [a] = self.fixed(nonces, "pk")?;
                        Ok(Term::pk(a))
                    }
                    "enc" if self.peek() == Some('(') => {
                        let [a, b] = self.fixed(nonces, "enc")?;
                        Ok(Term::aenc(a, b))
                    }
                    "sig" if self.peek() == Some('(') => {
                        let [a, b] = self.fixed(nonces, "sig")?;
                        Ok(Term::sig(a, b))
                    }
                    "aead" if self.peek() == Some('(') => {
                        let [k, n, m, ad] = self.fixed(nonces, "aead")?;
                        Ok(Term::aead(k, n, m, ad))
                    }
                    "exp" if self.peek() == Some('(') => {
                        self.expect('(')?;
                        let base = self.term(nonces)?;
                        self.expect(';')?;
                        let mut es = vec![self.term(nonces)?];
                        while self.eat(',') {
                            es.push(self.term(nonces)?);
                        }
                        self.expect(')')?;
                        Ok(Term::exp_raw(base, es))
                    }
                    k if k.starts_with("kdf")
                        && k.len() > 3
                        && k[3..].chars().all(|c| c.is_ascii_digit())
                        && self.peek() == Some('(') =>
                    {
                        let idx: u8 = k[3..].parse().map_err(|_| self.err("bad kdf index"))?;
                        Ok(Term::kdf(idx, self.args(nonces)?))
                    }
                    name => Ok(Term::name(name)),
                }
            }
        }
    }

    fn label(&mut self) -> Result<Label, SyntaxError> {
        let id = self.ident().ok_or_else(|| self.err("expected a label"))?;
        match id {
            "public" => Ok(Label::Public),
            "unreadable" => Ok(Label::Unreadable),
            "readers" => {
                self.expect('{')?;
                let mut set = BTreeSet::new();
                loop {
                    let p = self
                        .ident()
                        .ok_or_else(|| self.err("expected participant"))?;
                    set.insert(ParticipantId::new(p));
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect('}')?;
                Ok(Label::readers(set))
            }
            "sessions" => {
                self.expect('{')?;
                let mut set = BTreeSet::new();
                loop {
                    let p = self
                        .ident()
                        .ok_or_else(|| self.err("expected participant"))?;
                    self.expect(':')?;
                    let sid = self.number()?;
                    let sid = u32::try_from(sid).map_err(|_| self.err("bad session id"))?;
                    set.insert(SessionRef::new(p, sid));
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect('}')?;
                Ok(Label::sessions(set))
            }
            other => Err(self.err(&format!("unknown label '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_examples() {
        let mut table = NonceTable::new();
        table.insert(NonceId(7), Label::Public);
        let t = parse_term("enc(pk(nonce#7), <1, nonce#7, A>)", &table).unwrap();
        assert_eq!(t.to_string(), "enc(pk(nonce#7), <1, nonce#7, A>)");
        let e = parse_term("exp(g; nonce#7, 3)", &table).unwrap();
        assert_eq!(e.to_string(), "exp(g; nonce#7, 3)");
        let k = parse_term("kdf1(a, b)", &table).unwrap();
        assert_eq!(k, Term::kdf(1, vec![Term::name("a"), Term::name("b")]));
    }

    #[test]
    fn unknown_nonce_is_an_error() {
        assert!(parse_term("nonce#3", &NonceTable::new()).is_err());
        let t = parse_term("nonce#3[readers{A, B}]", &NonceTable::new()).unwrap();
        assert_eq!(
            t,
            Term::nonce(3, Label::readers(["A", "B"].map(ParticipantId::new)))
        );
    }

    #[test]
    fn labels_round_trip() {
        for s in [
            "public",
            "unreadable",
            "readers{A, B}",
            "sessions{A:1, B:2}",
        ] {
            assert_eq!(parse_label(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn strings_escape() {
        let t = Term::str("a\"b\\c");
        assert_eq!(parse_term(&t.to_string(), &NonceTable::new()).unwrap(), t);
    }
}
