//! Tokenizer shared by program and scenario parsing.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    /// Punctuation and operators: `( ) { } < > [ ] , ; : . # ? := == != ! && =`
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Int(v) => write!(f, "{v}"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Sym(s) => write!(f, "'{s}'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMS: [&str; 21] = [
    ":=", "==", "!=", "&&", "(", ")", "{", "}", "<", ">", "[", "]", ",", ";", ":", ".", "#", "?",
    "!", "=", "_",
];

pub fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for k in 0..n {
            if chars[*i + k] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        }
        *i += n;
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        let (l0, c0) = (line, col);
        let err = |msg: &str| ParseError {
            line: l0,
            col: c0,
            msg: msg.to_string(),
        };
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let mut j = i + 1;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            let v = s.parse::<i64>().map_err(|_| err("integer out of range"))?;
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push(Spanned {
                tok: Tok::Int(v),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c.is_alphabetic()
            || (c == '_'
                && chars
                    .get(i + 1)
                    .is_some_and(|d| d.is_alphanumeric() || *d == '_'))
        {
            let mut j = i + 1;
            while j < chars.len() {
                let d = chars[j];
                let hyphen = d == '-' && chars.get(j + 1).is_some_and(|e| e.is_alphabetic());
                if d.is_alphanumeric() || d == '_' || d == '\'' || hyphen {
                    j += 1;
                } else {
                    break;
                }
            }
            let s: String = chars[i..j].iter().collect();
            let n = j - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push(Spanned {
                tok: Tok::Ident(s),
                line: l0,
                col: c0,
            });
            continue;
        }
        if c == '"' {
            let mut j = i + 1;
            let mut s = String::new();
            loop {
                match chars.get(j) {
                    None => return Err(err("unterminated string")),
                    Some('"') => break,
                    Some('\\') => {
                        s.push(*chars.get(j + 1).ok_or_else(|| err("unterminated string"))?);
                        j += 2;
                    }
                    Some(&d) => {
                        s.push(d);
                        j += 1;
                    }
                }
            }
            let n = j + 1 - i;
            advance(&mut i, &mut line, &mut col, n);
            out.push(Spanned {
                tok: Tok::Str(s),
                line: l0,
                col: c0,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let sym = SYMS
            .iter()
            .find(|s| rest.starts_with(**s))
            .ok_or_else(|| err(&format!("unexpected character '{c}'")))?;
        advance(&mut i, &mut line, &mut col, sym.chars().count());
        out.push(Spanned {
            tok: Tok::Sym(sym),
            line: l0,
            col: c0,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}
