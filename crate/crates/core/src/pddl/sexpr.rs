// SPDX-License-Identifier: Apache-2.0

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    Atom(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            SExpr::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items) => Some(items),
            SExpr::Atom(_) => None,
        }
    }

    /// Head atom of a list, e.g. `and` for `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

/// Prints with single spaces and no line breaks.
impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => f.write_str(a),
            SExpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LexError {
    #[error("empty input")]
    Empty,
    #[error("`(` at byte {0} is never closed")]
    Unclosed(usize),
    #[error("unexpected `)` at byte {0}")]
    UnexpectedClose(usize),
    #[error("trailing input at byte {0}")]
    Trailing(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token<'a> {
    Open(usize),
    Close(usize),
    Atom(usize, &'a str),
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => {
                tokens.push(Token::Open(i));
                i += 1;
            }
            b')' => {
                tokens.push(Token::Close(i));
                i += 1;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b if b.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b';')
                {
                    i += 1;
                }
                tokens.push(Token::Atom(start, &text[start..i]));
            }
        }
    }
    tokens
}

/// Parses exactly one expression. `;` starts a comment running to end of line.
pub fn parse_sexpr(text: &str) -> Result<SExpr, LexError> {
    let tokens = tokenize(text);
    let mut iter = tokens.iter().copied().peekable();
    let expr = match iter.next() {
        None => return Err(LexError::Empty),
        Some(tok) => read(tok, &mut iter)?,
    };
    match iter.next() {
        None => Ok(expr),
        Some(Token::Open(at) | Token::Close(at) | Token::Atom(at, _)) => Err(LexError::Trailing(at)),
    }
}

fn read<'a, I>(first: Token<'a>, rest: &mut I) -> Result<SExpr, LexError>
where
    I: Iterator<Item = Token<'a>>,
{
    match first {
        Token::Atom(_, a) => Ok(SExpr::Atom(a.into())),
        Token::Close(at) => Err(LexError::UnexpectedClose(at)),
        Token::Open(at) => {
            // Explicit stack so deeply nested input cannot overflow.
            let mut stack: Vec<(usize, Vec<SExpr>)> = alloc::vec![(at, Vec::new())];
            loop {
                match rest.next() {
                    None => return Err(LexError::Unclosed(stack.last().map_or(at, |s| s.0))),
                    Some(Token::Atom(_, a)) => {
                        stack.last_mut().expect("non-empty").1.push(SExpr::Atom(a.into()))
                    }
                    Some(Token::Open(pos)) => stack.push((pos, Vec::new())),
                    Some(Token::Close(_)) => {
                        let (_, items) = stack.pop().expect("non-empty");
                        let list = SExpr::List(items);
                        match stack.last_mut() {
                            Some(parent) => parent.1.push(list),
                            None => return Ok(list),
                        }
                    }
                }
            }
        }
    }
}
