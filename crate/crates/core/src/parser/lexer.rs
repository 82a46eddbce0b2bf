use std::fmt;
use std::str::FromStr;

use bigdecimal::BigDecimal;
use num_bigint::BigInt;

use crate::error::{Error, ErrorCode, Pos, Result};

macro_rules! keywords {
    ($($variant:ident => $text:literal),* $(,)?) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Keyword {
            $($variant),*
        }

        impl Keyword {
            pub fn as_str(self) -> &'static str {
                match self {
                    $(Keyword::$variant => $text),*
                }
            }

            fn lookup(s: &str) -> Option<Keyword> {
                match s {
                    $($text => Some(Keyword::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

keywords! {
    For => "for",
    Let => "let",
    Where => "where",
    Order => "order",
    By => "by",
    Return => "return",
    If => "if",
    Then => "then",
    Else => "else",
    Declare => "declare",
    Function => "function",
    At => "at",
    In => "in",
    To => "to",
    Eq => "eq",
    Ne => "ne",
    Lt => "lt",
    Le => "le",
    Gt => "gt",
    Ge => "ge",
    Div => "div",
    IDiv => "idiv",
    Mod => "mod",
    And => "and",
    Or => "or",
    Not => "not",
    As => "as",
    Ascending => "ascending",
    Descending => "descending",
}

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Keyword(Keyword),
    Name(String),
    Var(String),
    ContextItem,
    Str(String),
    Int(BigInt),
    Dec(BigDecimal),
    Dbl(f64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LMerge,
    RMerge,
    Comma,
    Colon,
    Assign,
    Semicolon,
    Dot,
    Hash,
    Plus,
    Minus,
    Star,
    Question,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Keyword(k) => f.write_str(k.as_str()),
            Tok::Name(n) => f.write_str(n),
            Tok::Var(n) => write!(f, "${n}"),
            Tok::ContextItem => f.write_str("$$"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Int(v) => write!(f, "{v}"),
            Tok::Dec(v) => write!(f, "{v}"),
            Tok::Dbl(v) => write!(f, "{v:e}"),
            Tok::LParen => f.write_str("("),
            Tok::RParen => f.write_str(")"),
            Tok::LBrace => f.write_str("{"),
            Tok::RBrace => f.write_str("}"),
            Tok::LBracket => f.write_str("["),
            Tok::RBracket => f.write_str("]"),
            Tok::LMerge => f.write_str("{|"),
            Tok::RMerge => f.write_str("|}"),
            Tok::Comma => f.write_str(","),
            Tok::Colon => f.write_str(":"),
            Tok::Assign => f.write_str(":="),
            Tok::Semicolon => f.write_str(";"),
            Tok::Dot => f.write_str("."),
            Tok::Hash => f.write_str("#"),
            Tok::Plus => f.write_str("+"),
            Tok::Minus => f.write_str("-"),
            Tok::Star => f.write_str("*"),
            Tok::Question => f.write_str("?"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: u32,
    column: u32,
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> Pos {
        Pos::new(self.line, self.column)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|(_, c)| *c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |(i, _)| *i)
    }

    fn error(pos: Pos, msg: impl Into<String>) -> Error {
        Error::at(ErrorCode::LexError, pos, msg)
    }

    fn skip_trivia(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('(') if self.peek2() == Some(':') => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    let mut depth = 1;
                    while depth > 0 {
                        match self.bump() {
                            None => return Err(Lexer::error(start, "unterminated comment")),
                            Some('(') if self.peek() == Some(':') => {
                                self.bump();
                                depth += 1;
                            }
                            Some(':') if self.peek() == Some(')') => {
                                self.bump();
                                depth -= 1;
                            }
                            _ => {}
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn name(&mut self) -> String {
        let start = self.offset();
        while self.peek().is_some_and(is_name_char) {
            self.bump();
        }
        let end = self.offset();
        self.src[start..end].to_string()
    }

    fn string(&mut self, start: Pos) -> Result<String> {
        let quote = self.bump().expect("opening quote");
        let mut out = String::new();
        loop {
            let here = self.pos();
            match self.bump() {
                None => return Err(Lexer::error(start, "unterminated string literal")),
                Some(c) if c == quote => return Ok(out),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\'') => out.push('\''),
                    Some('\\') => out.push('\\'),
                    Some('/') => out.push('/'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some('b') => out.push('\u{8}'),
                    Some('f') => out.push('\u{c}'),
                    Some('u') => {
                        let code = self.hex4(here)?;
                        let ch = if (0xD800..0xDC00).contains(&code) {
                            if self.bump() != Some('\\') || self.bump() != Some('u') {
                                return Err(Lexer::error(here, "unpaired surrogate escape"));
                            }
                            let low = self.hex4(here)?;
                            if !(0xDC00..0xE000).contains(&low) {
                                return Err(Lexer::error(here, "unpaired surrogate escape"));
                            }
                            char::from_u32(0x10000 + ((code - 0xD800) << 10) + (low - 0xDC00))
                        } else {
                            char::from_u32(code)
                        };
                        out.push(ch.ok_or_else(|| Lexer::error(here, "invalid \\u escape"))?);
                    }
                    _ => return Err(Lexer::error(here, "invalid escape sequence")),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn hex4(&mut self, at: Pos) -> Result<u32> {
        let mut code = 0;
        for _ in 0..4 {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| Lexer::error(at, "invalid \\u escape"))?;
            code = code * 16 + d;
        }
        Ok(code)
    }

    fn number(&mut self, pos: Pos) -> Result<Tok> {
        let start = self.offset();
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        let mut decimal = false;
        if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            decimal = true;
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        let mut double = false;
        if matches!(self.peek(), Some('e' | 'E')) {
            let mut look = self.chars.clone();
            look.next();
            let mut next = look.next().map(|(_, c)| c);
            if matches!(next, Some('+' | '-')) {
                next = look.next().map(|(_, c)| c);
            }
            if next.is_some_and(|c| c.is_ascii_digit()) {
                double = true;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let end = self.offset();
        let text = &self.src[start..end];
        if self.peek().is_some_and(is_name_start) {
            return Err(Lexer::error(pos, format!("invalid number literal {text}...")));
        }
        let bad = || Lexer::error(pos, format!("invalid number literal {text}"));
        Ok(if double {
            Tok::Dbl(text.parse().map_err(|_| bad())?)
        } else if decimal {
            Tok::Dec(BigDecimal::from_str(text).map_err(|_| bad())?)
        } else {
            Tok::Int(BigInt::from_str(text).map_err(|_| bad())?)
        })
    }

    fn next_token(&mut self) -> Result<Token> {
        self.skip_trivia()?;
        let pos = self.pos();
        let Some(c) = self.peek() else {
            return Ok(Token { tok: Tok::Eof, pos });
        };
        let single = |lx: &mut Lexer, tok: Tok| {
            lx.bump();
            tok
        };
        let tok = match c {
            '(' => single(self, Tok::LParen),
            ')' => single(self, Tok::RParen),
            '{' => {
                self.bump();
                if self.peek() == Some('|') {
                    self.bump();
                    Tok::LMerge
                } else {
                    Tok::LBrace
                }
            }
            '|' if self.peek2() == Some('}') => {
                self.bump();
                self.bump();
                Tok::RMerge
            }
            '}' => single(self, Tok::RBrace),
            '[' => single(self, Tok::LBracket),
            ']' => single(self, Tok::RBracket),
            ',' => single(self, Tok::Comma),
            ';' => single(self, Tok::Semicolon),
            '.' => single(self, Tok::Dot),
            '#' => single(self, Tok::Hash),
            '+' => single(self, Tok::Plus),
            '-' => single(self, Tok::Minus),
            '*' => single(self, Tok::Star),
            '?' => single(self, Tok::Question),
            ':' => {
                self.bump();
                if self.peek() == Some('=') {
                    self.bump();
                    Tok::Assign
                } else {
                    Tok::Colon
                }
            }
            '"' | '\'' => Tok::Str(self.string(pos)?),
            '$' => {
                self.bump();
                match self.peek() {
                    Some('$') => {
                        self.bump();
                        Tok::ContextItem
                    }
                    Some(c) if is_name_start(c) => Tok::Var(self.name()),
                    _ => return Err(Lexer::error(pos, "expected a variable name after '$'")),
                }
            }
            c if c.is_ascii_digit() => self.number(pos)?,
            c if is_name_start(c) => {
                let mut name = self.name();
                if self.peek() == Some(':') && self.peek2().is_some_and(is_name_start) {
                    self.bump();
                    name.push(':');
                    name.push_str(&self.name());
                    Tok::Name(name)
                } else {
                    match Keyword::lookup(&name) {
                        Some(k) => Tok::Keyword(k),
                        None => Tok::Name(name),
                    }
                }
            }
            other => return Err(Lexer::error(pos, format!("illegal character {other:?}"))),
        };
        Ok(Token { tok, pos })
    }
}

/// Splits query text into tokens. The last token is always `Eof`.
pub fn lex(text: &str) -> Result<Vec<Token>> {
    let mut lx = Lexer {
        chars: text.char_indices().peekable(),
        src: text,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        let t = lx.next_token()?;
        let done = t.tok == Tok::Eof;
        out.push(t);
        if done {
            return Ok(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn let_binding() {
        assert_eq!(
            toks("let $x := 1"),
            vec![
                Tok::Keyword(Keyword::Let),
                Tok::Var("x".into()),
                Tok::Assign,
                Tok::Int(1.into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn context_item_lookup() {
        assert_eq!(
            toks("$$.label eq $$.prediction"),
            vec![
                Tok::ContextItem,
                Tok::Dot,
                Tok::Name("label".into()),
                Tok::Keyword(Keyword::Eq),
                Tok::ContextItem,
                Tok::Dot,
                Tok::Name("prediction".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn unterminated_string() {
        let e = lex("\"unterminated").unwrap_err();
        assert_eq!(e.code, ErrorCode::LexError);
        assert_eq!(e.pos, Some(Pos::new(1, 1)));
    }

    #[test]
    fn qnames_and_merge_braces() {
        assert_eq!(
            toks("local:convert#1 {| |}"),
            vec![
                Tok::Name("local:convert".into()),
                Tok::Hash,
                Tok::Int(1.into()),
                Tok::LMerge,
                Tok::RMerge,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn hyphenated_variables_and_comments() {
        assert_eq!(
            toks("$training-data (: note (: nested :) :) 1.5 2e3"),
            vec![
                Tok::Var("training-data".into()),
                Tok::Dec(BigDecimal::from_str("1.5").unwrap()),
                Tok::Dbl(2000.0),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn escapes() {
        assert_eq!(toks(r#""a\"b\né""#)[0], Tok::Str("a\"b\né".into()));
    }

    #[test]
    fn positions_track_lines() {
        let t = lex("1\n  foo").unwrap();
        assert_eq!(t[1].pos, Pos::new(2, 3));
    }

    #[test]
    fn illegal_character() {
        let e = lex("1 @ 2").unwrap_err();
        assert_eq!(e.pos, Some(Pos::new(1, 3)));
    }
}
