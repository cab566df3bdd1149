//! Tokenizer for the constraint language.
//!
//! Identifiers may contain interior hyphens (`eventually-precedes`,
//! `same-actor`). An integer immediately followed by `m`, `h` or `d` is a
//! duration literal.

use std::fmt;

use super::DslError;
use crate::time::Duration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    Dur(Duration),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Assign,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Int(i) => write!(f, "integer {i}"),
            Tok::Dur(d) => write!(f, "duration {d}"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Semi => f.write_str("';'"),
            Tok::Comma => f.write_str("','"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Assign => f.write_str("':='"),
            Tok::EqEq => f.write_str("'=='"),
            Tok::NotEq => f.write_str("'!='"),
            Tok::Lt => f.write_str("'<'"),
            Tok::Le => f.write_str("'<='"),
            Tok::Gt => f.write_str("'>'"),
            Tok::Ge => f.write_str("'>='"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Pos)>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! advance {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c.is_whitespace() {
            advance!();
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                advance!();
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() {
                let ch = chars[i];
                let hyphen_inside = ch == '-'
                    && chars
                        .get(i + 1)
                        .is_some_and(|n| n.is_ascii_alphanumeric() || *n == '_');
                if ch.is_ascii_alphanumeric() || ch == '_' || hyphen_inside {
                    s.push(ch);
                    advance!();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(s), pos));
            continue;
        }
        if c.is_ascii_digit() || (c == '-' && chars.get(i + 1).is_some_and(|n| n.is_ascii_digit())) {
            let mut s = String::new();
            s.push(c);
            advance!();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                advance!();
            }
            let value: i64 = s
                .parse()
                .map_err(|_| DslError::syntax(pos, format!("integer literal {s} out of range")))?;
            let unit = chars.get(i).copied();
            let unit_ends = chars
                .get(i + 1)
                .is_none_or(|n| !(n.is_ascii_alphanumeric() || *n == '_'));
            if let Some(u @ ('m' | 'h' | 'd')) = unit {
                if unit_ends {
                    advance!();
                    let d = Duration::from_unit(value, u)
                        .ok_or_else(|| DslError::syntax(pos, format!("duration {s}{u} out of range")))?;
                    out.push((Tok::Dur(d), pos));
                    continue;
                }
            }
            if unit.is_some_and(|u| u.is_ascii_alphabetic() || u == '_') {
                return Err(DslError::syntax(
                    pos,
                    format!("malformed number or duration starting with {s}; duration units are m, h, d"),
                ));
            }
            out.push((Tok::Int(value), pos));
            continue;
        }
        if c == '\'' || c == '"' {
            let quote = c;
            advance!();
            let mut s = String::new();
            loop {
                if i >= chars.len() {
                    return Err(DslError::syntax(pos, "unterminated string literal"));
                }
                let ch = chars[i];
                if ch == quote {
                    advance!();
                    break;
                }
                if ch == '\\' {
                    advance!();
                    let esc = *chars
                        .get(i)
                        .ok_or_else(|| DslError::syntax(pos, "unterminated string literal"))?;
                    s.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                    advance!();
                    continue;
                }
                s.push(ch);
                advance!();
            }
            out.push((Tok::Str(s), pos));
            continue;
        }
        let two = |a: char, b: char| c == a && chars.get(i + 1) == Some(&b);
        let (tok, width) = if two(':', '=') {
            (Tok::Assign, 2)
        } else if two('=', '=') {
            (Tok::EqEq, 2)
        } else if two('!', '=') {
            (Tok::NotEq, 2)
        } else if two('<', '=') {
            (Tok::Le, 2)
        } else if two('>', '=') {
            (Tok::Ge, 2)
        } else {
            let t = match c {
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ';' => Tok::Semi,
                ',' => Tok::Comma,
                '.' => Tok::Dot,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                // single '=' is accepted as equality
                '=' => Tok::EqEq,
                other => return Err(DslError::syntax(pos, format!("unexpected character '{other}'"))),
            };
            (t, 1)
        };
        for _ in 0..width {
            advance!();
        }
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, column: col }));
    Ok(out)
}
