use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::ast::Pos;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Dot,
    Arrow,
    Eq,
    Ne,
    Plus,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Arrow => f.write_str("`<-`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Ne => f.write_str("`!=`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }
}

fn lex_error(pos: Pos, expected: &str, found: String) -> ParseError {
    ParseError::Syntax {
        line: pos.line,
        column: pos.column,
        expected: vec![expected.into()],
        found,
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let pos = cur.pos();
        let Some(c) = cur.peek() else {
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = match c {
            '-' if cur.peek2() == Some('-') => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
                continue;
            }
            '-' if cur.peek2().is_some_and(|c| c.is_ascii_digit()) => {
                cur.bump();
                match number(&mut cur, pos)? {
                    Tok::Num(n) => Tok::Num(-n),
                    _ => unreachable!(),
                }
            }
            c if c.is_ascii_digit() => number(&mut cur, pos)?,
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(c) = cur.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
                    ident.push(c);
                    cur.bump();
                }
                Tok::Ident(ident)
            }
            '"' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(lex_error(pos, "closing `\"`", "end of input".into())),
                        Some('"') => break,
                        Some('\\') => {
                            let esc_pos = cur.pos();
                            match cur.bump() {
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('r') => s.push('\r'),
                                Some(c @ ('"' | '\\' | '/')) => s.push(c),
                                other => {
                                    return Err(lex_error(
                                        esc_pos,
                                        "escape sequence",
                                        format!("{other:?}"),
                                    ))
                                }
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            _ => {
                cur.bump();
                match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ':' => Tok::Colon,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    '=' => Tok::Eq,
                    '+' => Tok::Plus,
                    '<' if cur.peek() == Some('-') => {
                        cur.bump();
                        Tok::Arrow
                    }
                    '!' if cur.peek() == Some('=') => {
                        cur.bump();
                        Tok::Ne
                    }
                    other => return Err(lex_error(pos, "token", format!("`{other}`"))),
                }
            }
        };
        out.push(Token { tok, pos });
    }
}

fn number(cur: &mut Cursor<'_>, pos: Pos) -> Result<Tok, ParseError> {
    let mut text = String::new();
    while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
        text.push(c);
        cur.bump();
    }
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        text.push('.');
        cur.bump();
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            text.push(c);
            cur.bump();
        }
    }
    text.parse()
        .map(Tok::Num)
        .map_err(|_| lex_error(pos, "number", text))
}
