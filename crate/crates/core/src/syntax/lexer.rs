use std::fmt;

use num_bigint::BigInt;

use super::ast::Pos;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(BigInt),
    /// Decimal or scientific literal, kept as written.
    Real(String),
    Kw(Kw),
    /// A Java word that MiniJML deliberately does not support.
    Reserved(&'static str),
    Backslash(Bs),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Not,
    AndAnd,
    OrOr,
    Implies,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AnnotOpen,
    AnnotClose,
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kw {
    Int,
    Integer,
    Real,
    Bool,
    Void,
    If,
    Else,
    While,
    Do,
    Return,
    True,
    False,
    New,
    Length,
    Lemma,
    Predicate,
    Requires,
    Ensures,
    Behaviour,
    Assumes,
    LoopInvariant,
    LoopVariant,
    Assert,
    Ghost,
    Permut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bs {
    Forall,
    Old,
    Result,
}

const KEYWORDS: &[(&str, Kw)] = &[
    ("int", Kw::Int),
    ("integer", Kw::Integer),
    ("real", Kw::Real),
    ("bool", Kw::Bool),
    ("void", Kw::Void),
    ("if", Kw::If),
    ("else", Kw::Else),
    ("while", Kw::While),
    ("do", Kw::Do),
    ("return", Kw::Return),
    ("true", Kw::True),
    ("false", Kw::False),
    ("new", Kw::New),
    ("length", Kw::Length),
    ("lemma", Kw::Lemma),
    ("predicate", Kw::Predicate),
    ("requires", Kw::Requires),
    ("ensures", Kw::Ensures),
    ("behaviour", Kw::Behaviour),
    ("behavior", Kw::Behaviour),
    ("assumes", Kw::Assumes),
    ("loop_invariant", Kw::LoopInvariant),
    ("loop_variant", Kw::LoopVariant),
    ("assert", Kw::Assert),
    ("ghost", Kw::Ghost),
    ("Permut", Kw::Permut),
];

const RESERVED: &[&str] = &[
    "abstract", "boolean", "break", "byte", "case", "catch", "char", "class", "const", "continue",
    "default", "double", "enum", "extends", "final", "finally", "float", "for", "goto",
    "implements", "import", "instanceof", "interface", "long", "native", "null", "package",
    "private", "protected", "public", "short", "static", "super", "switch", "synchronized",
    "this", "throw", "throws", "transient", "try", "volatile", "exists",
];

impl Kw {
    pub fn text(self) -> &'static str {
        KEYWORDS.iter().find(|(_, k)| *k == self).map(|(s, _)| *s).unwrap_or("?")
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(i) => write!(f, "integer `{i}`"),
            Tok::Real(r) => write!(f, "number `{r}`"),
            Tok::Kw(k) => write!(f, "`{}`", k.text()),
            Tok::Reserved(w) => write!(f, "`{w}`"),
            Tok::Backslash(Bs::Forall) => f.write_str("`\\forall`"),
            Tok::Backslash(Bs::Old) => f.write_str("`\\old`"),
            Tok::Backslash(Bs::Result) => f.write_str("`\\result`"),
            Tok::Eof => f.write_str("end of input"),
            other => write!(f, "`{}`", punct_text(other)),
        }
    }
}

pub fn punct_text(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrack => "[",
        Tok::RBrack => "]",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Comma => ",",
        Tok::Semi => ";",
        Tok::Colon => ":",
        Tok::Dot => ".",
        Tok::Assign => "=",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Not => "!",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::Implies => "==>",
        Tok::EqEq => "==",
        Tok::NotEq => "!=",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        Tok::AnnotOpen => "/*@",
        Tok::AnnotClose => "@*/",
        _ => "?",
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

struct Lexer<'a> {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    in_annot: bool,
    _src: &'a str,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer { chars: src.chars().collect(), i: 0, line: 1, col: 1, in_annot: false, _src: src };
    let mut out = Vec::new();
    loop {
        lx.skip_trivia()?;
        let pos = lx.pos();
        let Some(c) = lx.peek(0) else {
            if lx.in_annot {
                return Err(ParseError::new(pos, "unterminated annotation comment", vec!["@*/".into()]));
            }
            out.push(Token { tok: Tok::Eof, pos });
            return Ok(out);
        };
        let tok = lx.token(c, pos)?;
        match tok {
            Tok::AnnotOpen => lx.in_annot = true,
            Tok::AnnotClose => lx.in_annot = false,
            _ => {}
        }
        out.push(Token { tok, pos });
    }
}

impl Lexer<'_> {
    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match (self.peek(0), self.peek(1), self.peek(2)) {
                (Some(c), _, _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/'), _) => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*'), third) if third != Some('@') => {
                    let start = self.pos();
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(ParseError::new(start, "unterminated comment", vec!["*/".into()]));
                            }
                        }
                    }
                }
                // Continuation markers at the start of annotation lines.
                (Some('@'), next, _) if self.in_annot && next != Some('*') => {
                    self.bump();
                }
                _ => return Ok(()),
            }
        }
    }

    fn token(&mut self, c: char, pos: Pos) -> Result<Tok, ParseError> {
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = self.peek(0) {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            if let Some((_, kw)) = KEYWORDS.iter().find(|(s, _)| *s == word) {
                return Ok(Tok::Kw(*kw));
            }
            if let Some(r) = RESERVED.iter().find(|r| **r == word) {
                return Ok(Tok::Reserved(r));
            }
            return Ok(Tok::Ident(word));
        }
        if c.is_ascii_digit() {
            return self.number(pos);
        }
        if c == '\\' {
            self.bump();
            let mut word = String::new();
            while let Some(c) = self.peek(0) {
                if c.is_ascii_alphanumeric() || c == '_' {
                    word.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            return match word.as_str() {
                "forall" => Ok(Tok::Backslash(Bs::Forall)),
                "old" => Ok(Tok::Backslash(Bs::Old)),
                "result" => Ok(Tok::Backslash(Bs::Result)),
                _ => Err(ParseError::new(
                    pos,
                    format!("unsupported specification keyword `\\{word}`"),
                    vec!["\\forall".into(), "\\old".into(), "\\result".into()],
                )),
            };
        }
        let two = |a: char, b: char| self.peek(0) == Some(a) && self.peek(1) == Some(b);
        let (tok, len) = if self.peek(0) == Some('/') && self.peek(1) == Some('*') && self.peek(2) == Some('@') {
            if self.in_annot {
                return Err(ParseError::new(pos, "annotation comments cannot nest", vec!["@*/".into()]));
            }
            (Tok::AnnotOpen, 3)
        } else if self.peek(0) == Some('@') && self.peek(1) == Some('*') && self.peek(2) == Some('/') {
            if !self.in_annot {
                return Err(ParseError::new(pos, "`@*/` outside an annotation", vec![]));
            }
            (Tok::AnnotClose, 3)
        } else if self.peek(0) == Some('=') && self.peek(1) == Some('=') && self.peek(2) == Some('>') {
            (Tok::Implies, 3)
        } else if two('&', '&') {
            (Tok::AndAnd, 2)
        } else if two('|', '|') {
            (Tok::OrOr, 2)
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
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                ':' => Tok::Colon,
                '.' => Tok::Dot,
                '=' => Tok::Assign,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '!' => Tok::Not,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '@' => {
                    return Err(ParseError::new(pos, "Java annotations (`@`) are not part of MiniJML", vec![]));
                }
                other => {
                    return Err(ParseError::new(pos, format!("unexpected character `{other}`"), vec![]));
                }
            };
            (t, 1)
        };
        for _ in 0..len {
            self.bump();
        }
        Ok(tok)
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let mut text = String::new();
        let mut is_real = false;
        while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
            text.push(c);
            self.bump();
        }
        if self.peek(0) == Some('.') && self.peek(1).is_some_and(|c| c.is_ascii_digit()) {
            is_real = true;
            text.push('.');
            self.bump();
            while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
                text.push(c);
                self.bump();
            }
        } else if self.peek(0) == Some('.') && !self.peek(1).is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Err(ParseError::new(self.pos(), "expected a digit after the decimal point", vec!["digit".into()]));
        }
        if matches!(self.peek(0), Some('e' | 'E')) {
            let sign = matches!(self.peek(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.peek(digit_at).is_some_and(|c| c.is_ascii_digit()) {
                is_real = true;
                text.push('E');
                self.bump();
                if sign {
                    text.push(self.bump().unwrap());
                }
                while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
                    text.push(c);
                    self.bump();
                }
            }
        }
        if let Some(c) = self.peek(0).filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
            let msg = if text == "0" && matches!(c, 'x' | 'X') {
                "hexadecimal literals are not supported".to_string()
            } else {
                format!("numeric literal `{text}` has unsupported suffix `{c}`")
            };
            return Err(ParseError::new(pos, msg, vec![]));
        }
        if is_real {
            Ok(Tok::Real(text))
        } else {
            Ok(Tok::Int(text.parse().expect("digits")))
        }
    }
}
