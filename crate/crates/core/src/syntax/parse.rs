//! Concrete syntax:
//!
//! ```text
//! G ::= 0
//!     | p->q:m . G
//!     | + { p->q1:m1 . G1, p->q2:m2 . G2, ... }   (one sender for all branches)
//!     | mu t . G
//!     | t
//! ```
//!
//! Whitespace is insignificant and `//` starts a line comment.

use std::fmt;

use thiserror::Error;

use super::{GlobalType, GlobalTypeBuilder, NodeId};
use crate::names::{Message, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Zero,
    Mu,
    Ident(String),
    Arrow,
    Colon,
    Dot,
    Plus,
    LBrace,
    RBrace,
    Comma,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Zero => f.write_str("`0`"),
            Tok::Mu => f.write_str("`mu`"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

fn error(pos: Pos, message: impl Into<String>) -> SyntaxError {
    SyntaxError {
        line: pos.line,
        column: pos.column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, SyntaxError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let tok = match c {
            '/' => {
                bump!();
                if chars.peek() != Some(&'/') {
                    return Err(error(pos, "expected `//` to start a comment"));
                }
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
                continue;
            }
            '-' => {
                bump!();
                if chars.peek() != Some(&'>') {
                    return Err(error(pos, "expected `->`"));
                }
                bump!();
                Tok::Arrow
            }
            ':' => {
                bump!();
                Tok::Colon
            }
            '.' => {
                bump!();
                Tok::Dot
            }
            '+' => {
                bump!();
                Tok::Plus
            }
            '{' => {
                bump!();
                Tok::LBrace
            }
            '}' => {
                bump!();
                Tok::RBrace
            }
            ',' => {
                bump!();
                Tok::Comma
            }
            '0' => {
                bump!();
                if matches!(chars.peek(), Some(c) if is_ident_char(*c)) {
                    return Err(error(pos, "identifiers must not start with a digit"));
                }
                Tok::Zero
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    ident.push(c);
                    bump!();
                }
                if ident == "mu" {
                    Tok::Mu
                } else {
                    Tok::Ident(ident)
                }
            }
            other => return Err(error(pos, format!("unexpected character `{other}`"))),
        };
        toks.push((tok, pos));
    }
    toks.push((Tok::Eof, Pos { line, column }));
    Ok(toks)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    builder: GlobalTypeBuilder,
}

struct Prefix {
    sender: Role,
    receiver: Role,
    message: Message,
    cont: NodeId,
    pos: Pos,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.at + 1).min(self.toks.len() - 1)].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        let (tok, pos) = self.next();
        if tok == want {
            Ok(())
        } else {
            Err(error(pos, format!("expected {want}, found {tok}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, SyntaxError> {
        match self.next() {
            (Tok::Ident(s), _) => Ok(s),
            (tok, pos) => Err(error(pos, format!("expected {what}, found {tok}"))),
        }
    }

    fn global(&mut self) -> Result<NodeId, SyntaxError> {
        match self.peek().clone() {
            Tok::Zero => {
                self.next();
                Ok(self.builder.end())
            }
            Tok::Mu => {
                self.next();
                let var = self.ident("recursion variable")?;
                self.expect(Tok::Dot)?;
                let body = self.global()?;
                Ok(self.builder.rec(var.as_str(), body))
            }
            Tok::Plus => {
                self.next();
                self.expect(Tok::LBrace)?;
                let mut prefixes = vec![self.prefix()?];
                loop {
                    match self.next() {
                        (Tok::Comma, _) => {
                            if *self.peek() == Tok::RBrace {
                                self.next();
                                break;
                            }
                            prefixes.push(self.prefix()?);
                        }
                        (Tok::RBrace, _) => break,
                        (tok, pos) => return Err(error(pos, format!("expected `,` or `}}`, found {tok}"))),
                    }
                }
                let sender = prefixes[0].sender.clone();
                if let Some(bad) = prefixes.iter().find(|p| p.sender != sender) {
                    return Err(error(
                        bad.pos,
                        format!(
                            "all branches of a choice must share one sender: expected `{}`, found `{}`",
                            sender, bad.sender
                        ),
                    ));
                }
                let branches = prefixes.into_iter().map(|p| (p.receiver, p.message, p.cont)).collect();
                Ok(self.builder.choice(sender, branches))
            }
            Tok::Ident(name) => {
                if *self.peek2() == Tok::Arrow {
                    let p = self.prefix()?;
                    Ok(self.builder.message(p.sender, p.receiver, p.message, p.cont))
                } else {
                    self.next();
                    Ok(self.builder.var(name.as_str()))
                }
            }
            tok => Err(error(self.pos(), format!("expected a global type, found {tok}"))),
        }
    }

    fn prefix(&mut self) -> Result<Prefix, SyntaxError> {
        let pos = self.pos();
        let sender = self.ident("sender role")?;
        self.expect(Tok::Arrow)?;
        let receiver = self.ident("receiver role")?;
        self.expect(Tok::Colon)?;
        let message = self.ident("message label")?;
        self.expect(Tok::Dot)?;
        let cont = self.global()?;
        Ok(Prefix {
            sender: Role::new(sender),
            receiver: Role::new(receiver),
            message: Message::new(message),
            cont,
            pos,
        })
    }
}

/// Parses the concrete syntax into an interned global type.
///
/// Well-formedness is not checked here; see
/// [`validate_well_formedness`](super::validate_well_formedness).
pub fn parse_global_type(text: &str) -> Result<GlobalType, SyntaxError> {
    let mut parser = Parser {
        toks: lex(text)?,
        at: 0,
        builder: GlobalTypeBuilder::new(),
    };
    let root = parser.global()?;
    match parser.next() {
        (Tok::Eof, _) => Ok(parser.builder.build(root)),
        (tok, pos) => Err(error(pos, format!("expected end of input, found {tok}"))),
    }
}
