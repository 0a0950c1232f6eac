use std::fmt;

use crate::error::{Error, Position, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Tok {
    Ident(String),
    Int(u64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Arrow,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Int(v) => write!(f, "'{v}'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
            Tok::Semi => f.write_str("';'"),
            Tok::Colon => f.write_str("':'"),
            Tok::Arrow => f.write_str("'->'"),
            Tok::EqEq => f.write_str("'=='"),
            Tok::NotEq => f.write_str("'!='"),
            Tok::Lt => f.write_str("'<'"),
            Tok::Le => f.write_str("'<='"),
            Tok::Gt => f.write_str("'>'"),
            Tok::Ge => f.write_str("'>='"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub(super) struct Token {
    pub tok: Tok,
    pub pos: Position,
}

pub(super) fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    while let Some(&ch) = chars.peek() {
        let pos = Position::new(line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if ch.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if ch == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }
        let tok = if ch.is_ascii_alphabetic() || ch == '_' {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    s.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            Tok::Ident(s)
        } else if ch.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    bump(&mut chars);
                } else {
                    break;
                }
            }
            if chars.peek().is_some_and(|c| c.is_ascii_alphabetic() || *c == '_') {
                return Err(Error::parse(pos, format!("malformed number '{s}...'")));
            }
            let v = s
                .parse::<u64>()
                .map_err(|_| Error::parse(pos, format!("number '{s}' is too large")))?;
            Tok::Int(v)
        } else {
            bump(&mut chars);
            let next = chars.peek().copied();
            let mut two = |t: Tok, chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
                bump(chars);
                t
            };
            match (ch, next) {
                ('{', _) => Tok::LBrace,
                ('}', _) => Tok::RBrace,
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                (',', _) => Tok::Comma,
                (';', _) => Tok::Semi,
                (':', _) => Tok::Colon,
                ('+', _) => Tok::Plus,
                ('-', Some('>')) => two(Tok::Arrow, &mut chars),
                ('=', Some('=')) => two(Tok::EqEq, &mut chars),
                ('!', Some('=')) => two(Tok::NotEq, &mut chars),
                ('<', Some('=')) => two(Tok::Le, &mut chars),
                ('>', Some('=')) => two(Tok::Ge, &mut chars),
                ('<', _) => Tok::Lt,
                ('>', _) => Tok::Gt,
                ('=', _) => return Err(Error::parse(pos, "unexpected '=' (did you mean '=='?)")),
                ('-', _) => return Err(Error::parse(pos, "unexpected '-' (did you mean '->'?)")),
                (c, _) => return Err(Error::parse(pos, format!("unexpected character {c:?}"))),
            }
        };
        out.push(Token { tok, pos });
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Position::new(line, col),
    });
    Ok(out)
}
