//! Tokenizer shared by the program grammar and the expression grammar.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Integer or decimal literal, kept as written.
    Num(String),
    /// Lowercase-initial identifier: predicate names and constants.
    Lower(String),
    /// Uppercase- or underscore-initial identifier: logic variables.
    Upper(String),
    ColonColon,
    ColonDash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Dot,
    Plus,
    Minus,
    Star,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Num(s) => format!("number `{s}`"),
            Tok::Lower(s) | Tok::Upper(s) => format!("`{s}`"),
            Tok::ColonColon => "`::`".into(),
            Tok::ColonDash => "`:-`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Ge => "`>=`".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

/// Tokenize `src`, dropping `%` comments. Positions are 1-based.
pub fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    let err = |line: usize, col: usize, msg: String| Error::Parse { line, col, msg };

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };

        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut text = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                text.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            // A dot only belongs to the number when a digit follows; otherwise
            // it terminates the clause.
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                text.push('.');
                advance(&mut i, &mut line, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    text.push(chars[i]);
                    advance(&mut i, &mut line, &mut col);
                }
            }
            out.push(Token {
                tok: Tok::Num(text),
                pos,
            });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut text = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                text.push(chars[i]);
                advance(&mut i, &mut line, &mut col);
            }
            let tok = if c.is_ascii_lowercase() {
                Tok::Lower(text)
            } else {
                Tok::Upper(text)
            };
            out.push(Token { tok, pos });
            continue;
        }

        let two = |d: char| i + 1 < chars.len() && chars[i + 1] == d;
        let (tok, len) = match c {
            ':' if two(':') => (Tok::ColonColon, 2),
            ':' if two('-') => (Tok::ColonDash, 2),
            ':' => return Err(err(line, col, "expected `::` or `:-`".into())),
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            '[' => (Tok::LBracket, 1),
            ']' => (Tok::RBracket, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            '+' => (Tok::Plus, 1),
            '-' => (Tok::Minus, 1),
            '*' => (Tok::Star, 1),
            '<' if two('=') => (Tok::Le, 2),
            '<' => (Tok::Lt, 1),
            '>' if two('=') => (Tok::Ge, 2),
            '>' => (Tok::Gt, 1),
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        };
        for _ in 0..len {
            advance(&mut i, &mut line, &mut col);
        }
        out.push(Token { tok, pos });
    }
    Ok(out)
}

/// Cursor over a token list with position-carrying errors.
pub struct Cursor {
    tokens: Vec<Token>,
    pub at: usize,
}

impl Cursor {
    pub fn new(tokens: Vec<Token>) -> Self {
        Cursor { tokens, at: 0 }
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|t| &t.tok)
    }

    pub fn peek2(&self) -> Option<&Tok> {
        self.tokens.get(self.at + 1).map(|t| &t.tok)
    }

    pub fn pos(&self) -> Pos {
        self.tokens
            .get(self.at)
            .or_else(|| self.tokens.last())
            .map(|t| t.pos)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    pub fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.at).cloned();
        if t.is_some() {
            self.at += 1;
        }
        t
    }

    pub fn done(&self) -> bool {
        self.at >= self.tokens.len()
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let pos = self.pos();
        let suffix = if self.done() {
            " (at end of input)"
        } else {
            ""
        };
        Error::Parse {
            line: pos.line,
            col: pos.col,
            msg: format!("{}{}", msg.into(), suffix),
        }
    }

    pub fn expect(&mut self, want: &Tok) -> Result<()> {
        match self.peek() {
            Some(t) if t == want => {
                self.next();
                Ok(())
            }
            Some(t) => Err(self.error(format!(
                "expected {}, found {}",
                want.describe(),
                t.describe()
            ))),
            None => Err(self.error(format!("expected {}", want.describe()))),
        }
    }
}
