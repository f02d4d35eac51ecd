//! The concrete syntax: a lexer, recursive-descent parsers for the two
//! dialects, and printers.
//!
//! Grammar sketch (ASCII is the canonical interchange form):
//!
//! ```text
//! source  ::= ["refs" ident ":" type (";" ident ":" type)* "."] "term" body
//!             ["expect" "(" type "," "{" idents? "}" ")"]
//! sum     ::= "0" | par ("+" par)*
//! par     ::= item ("||" item)*
//! item    ::= "{" bindings "}s" item | "[" rbinds "]v" item
//!           | "[" rbinds "]^" item | core
//! core    ::= value | "get" ident | "(" par ")" | "(" par par ")" lsub?
//! value   ::= ident | "*" | "\" ident ":" type "." par
//! lsub    ::= "[" rbinds "]L"
//! bindings::= ident ":=" value ("," ident ":=" value)*
//! rbinds  ::= [ident "->" "{" [value ("," value)*] "}" (";" ...)*]
//! type    ::= tatom ["-{" idents? "}>" type]
//! tatom   ::= "Unit" | "B" | "Ref" ident tatom | "(" type ")"
//! ```
//!
//! The source-calculus dialect replaces explicit substitutions with
//! `set(r, value)` and store threads `r <= value`; a lambda body extends as
//! far right as possible at the `||` level. Application is always written
//! with parentheses, so `||` binding looser than application and `+` loosest
//! come for free.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::lambda_c::{LCProgram, LCTerm, LCValue};
use crate::syntax::{
    canonical_term, canonicalize, Multiset, Name, RefName, RefSubst, Sum, Term, Value, VarName,
    VarSubst,
};
use crate::typing::{Effect, RefContext, TypeExpr};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Dialect {
    Lces,
    Lc,
}

/// A parsed source file: the stratification-ordered reference declarations,
/// the body, and an optional expected type-and-effect.
#[derive(Clone, Debug)]
pub struct SourceFile {
    pub refs: RefContext,
    pub body: SourceBody,
    pub expect: Option<(TypeExpr, Effect)>,
}

#[derive(Clone, Debug)]
pub enum SourceBody {
    Lces(Sum),
    Lc(LCProgram),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl core::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
enum Tok {
    Ident(String),
    Star,
    Lambda,
    Colon,
    Dot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Assign,    // :=
    Arrow,     // ->
    StoreArr,  // <=
    ParBar,    // ||
    Plus,
    Zero,
    Caret,
    EffOpen,  // -{
    EffClose, // }>
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "'{s}'"),
            Tok::Star => "'*'",
            Tok::Lambda => "'\\'",
            Tok::Colon => "':'",
            Tok::Dot => "'.'",
            Tok::LParen => "'('",
            Tok::RParen => "')'",
            Tok::LBrace => "'{'",
            Tok::RBrace => "'}'",
            Tok::LBracket => "'['",
            Tok::RBracket => "']'",
            Tok::Comma => "','",
            Tok::Semi => "';'",
            Tok::Assign => "':='",
            Tok::Arrow => "'->'",
            Tok::StoreArr => "'<='",
            Tok::ParBar => "'||'",
            Tok::Plus => "'+'",
            Tok::Zero => "'0'",
            Tok::Caret => "'^'",
            Tok::EffOpen => "'-{'",
            Tok::EffClose => "'}>'",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_cont(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'\''
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Lexer<'a> {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
            col: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.src.get(self.pos).copied()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn error(&self, message: String) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            message,
        }
    }

    fn tokenize(mut self) -> Result<Vec<Token>, ParseError> {
        let mut out = Vec::new();
        loop {
            // skip whitespace and # line comments
            loop {
                match self.peek() {
                    Some(c) if (c as char).is_whitespace() => {
                        self.bump();
                    }
                    Some(b'#') => {
                        while let Some(c) = self.peek() {
                            if c == b'\n' {
                                break;
                            }
                            self.bump();
                        }
                    }
                    _ => break,
                }
            }
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek() else {
                out.push(Token {
                    tok: Tok::Eof,
                    line,
                    col,
                });
                return Ok(out);
            };
            let tok = match c {
                b'*' => {
                    self.bump();
                    Tok::Star
                }
                b'\\' => {
                    self.bump();
                    Tok::Lambda
                }
                b'.' => {
                    self.bump();
                    Tok::Dot
                }
                b'(' => {
                    self.bump();
                    Tok::LParen
                }
                b')' => {
                    self.bump();
                    Tok::RParen
                }
                b'{' => {
                    self.bump();
                    Tok::LBrace
                }
                b'}' => {
                    self.bump();
                    if self.peek() == Some(b'>') {
                        self.bump();
                        Tok::EffClose
                    } else {
                        Tok::RBrace
                    }
                }
                b'[' => {
                    self.bump();
                    Tok::LBracket
                }
                b']' => {
                    self.bump();
                    Tok::RBracket
                }
                b',' => {
                    self.bump();
                    Tok::Comma
                }
                b';' => {
                    self.bump();
                    Tok::Semi
                }
                b'^' => {
                    self.bump();
                    Tok::Caret
                }
                b'+' => {
                    self.bump();
                    Tok::Plus
                }
                b'0' => {
                    self.bump();
                    Tok::Zero
                }
                b':' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::Assign
                    } else {
                        Tok::Colon
                    }
                }
                b'-' => {
                    self.bump();
                    match self.peek() {
                        Some(b'>') => {
                            self.bump();
                            Tok::Arrow
                        }
                        Some(b'{') => {
                            self.bump();
                            Tok::EffOpen
                        }
                        _ => return Err(self.error("expected '->' or '-{'".to_string())),
                    }
                }
                b'<' => {
                    self.bump();
                    if self.peek() == Some(b'=') {
                        self.bump();
                        Tok::StoreArr
                    } else {
                        return Err(self.error("expected '<='".to_string()));
                    }
                }
                b'|' => {
                    if self.peek2() == Some(b'|') {
                        self.bump();
                        self.bump();
                        Tok::ParBar
                    } else {
                        return Err(self.error("expected '||'".to_string()));
                    }
                }
                c if is_ident_start(c) => {
                    let start = self.pos;
                    while let Some(c) = self.peek() {
                        if is_ident_cont(c) {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let s = core::str::from_utf8(&self.src[start..self.pos])
                        .expect("ascii ident")
                        .to_string();
                    Tok::Ident(s)
                }
                other => {
                    return Err(self.error(format!("unexpected character '{}'", other as char)))
                }
            };
            out.push(Token { tok, line, col });
        }
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

const KEYWORDS: &[&str] = &["refs", "term", "expect", "get", "set", "Unit", "B", "Ref"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> Result<Parser, ParseError> {
        Ok(Parser {
            toks: Lexer::new(text).tokenize()?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        let i = (self.pos + 1).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: String) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            message,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.peek() == &tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {}, found {}", tok, self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                if KEYWORDS.contains(&s.as_str()) {
                    Err(self.error_here(format!("'{s}' is a keyword; expected {what}")))
                } else {
                    self.bump();
                    Ok(s)
                }
            }
            other => Err(self.error_here(format!("expected {what}, found {other}"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.at_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    // -- types --------------------------------------------------------------

    fn type_expr(&mut self) -> Result<TypeExpr, ParseError> {
        let lhs = self.type_atom()?;
        if self.peek() == &Tok::EffOpen {
            self.bump();
            let mut refs = Vec::new();
            if self.peek() != &Tok::EffClose {
                loop {
                    refs.push(RefName::new(&self.ident("a reference name")?));
                    if self.peek() == &Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::EffClose)?;
            let rhs = self.type_expr()?;
            Ok(TypeExpr::arrow(lhs, Effect::from_refs(refs), rhs))
        } else {
            Ok(lhs)
        }
    }

    fn type_atom(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "Unit" => {
                self.bump();
                Ok(TypeExpr::Unit)
            }
            Tok::Ident(s) if s == "B" => {
                self.bump();
                Ok(TypeExpr::Behavior)
            }
            Tok::Ident(s) if s == "Ref" => {
                self.bump();
                let r = RefName::new(&self.ident("a reference name")?);
                let content = self.type_atom()?;
                Ok(TypeExpr::Ref(r, Box::new(content)))
            }
            Tok::LParen => {
                self.bump();
                let t = self.type_expr()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => Err(self.error_here(format!("expected a type, found {other}"))),
        }
    }

    // -- substitution literals ------------------------------------------------

    fn rbinds(&mut self) -> Result<RefSubst, ParseError> {
        // after '[': ident -> { values } (';' ...)* up to ']'
        let mut pairs = Vec::new();
        if self.peek() != &Tok::RBracket {
            loop {
                let r = RefName::new(&self.ident("a reference name")?);
                self.expect(Tok::Arrow)?;
                self.expect(Tok::LBrace)?;
                let mut values = Vec::new();
                if self.peek() != &Tok::RBrace {
                    loop {
                        values.push(self.value()?);
                        if self.peek() == &Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBrace)?;
                pairs.push((r, Multiset::new(values)));
                if self.peek() == &Tok::Semi {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBracket)?;
        Ok(RefSubst::from_pairs(pairs))
    }

    fn bindings(&mut self) -> Result<VarSubst, ParseError> {
        let mut pairs = Vec::new();
        if self.peek() != &Tok::RBrace {
            loop {
                let x = VarName::free(&self.ident("a variable name")?);
                self.expect(Tok::Assign)?;
                let v = self.value()?;
                pairs.push((x, v));
                if self.peek() == &Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(VarSubst::from_pairs(pairs))
    }

    /// The marker after a closing bracket: `v`, `^` or `L`.
    fn bracket_marker(&mut self) -> Result<char, ParseError> {
        match self.peek().clone() {
            Tok::Caret => {
                self.bump();
                Ok('^')
            }
            Tok::Ident(s) if s == "v" => {
                self.bump();
                Ok('v')
            }
            Tok::Ident(s) if s == "L" => {
                self.bump();
                Ok('L')
            }
            other => Err(self.error_here(format!(
                "expected a substitution marker 'v', '^' or 'L', found {other}"
            ))),
        }
    }

    // -- terms ---------------------------------------------------------------

    fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let v = self.value()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::Star => {
                self.bump();
                Ok(Value::Unit)
            }
            Tok::Lambda => {
                self.bump();
                let x = self.ident("a binder")?;
                self.expect(Tok::Colon)?;
                let ann = self.type_expr()?;
                self.expect(Tok::Dot)?;
                let body = self.par_term()?;
                Ok(Value::lambda(VarName::free(&x), ann, body))
            }
            Tok::Ident(_) => {
                let x = self.ident("a variable")?;
                Ok(Value::Var(VarName::free(&x)))
            }
            other => Err(self.error_here(format!("expected a value, found {other}"))),
        }
    }

    fn par_term(&mut self) -> Result<Term, ParseError> {
        let mut items = alloc::vec![self.item()?];
        while self.peek() == &Tok::ParBar {
            self.bump();
            items.push(self.item()?);
        }
        Ok(Term::par(items))
    }

    fn item(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::LBrace => {
                self.bump();
                let sub = self.bindings()?;
                // marker 's'
                match self.peek().clone() {
                    Tok::Ident(s) if s == "s" => {
                        self.bump();
                    }
                    other => {
                        return Err(
                            self.error_here(format!("expected marker 's' after '}}', found {other}"))
                        )
                    }
                }
                Ok(Term::var_sub(sub, self.item()?))
            }
            Tok::LBracket => {
                self.bump();
                let sub = self.rbinds()?;
                match self.bracket_marker()? {
                    'v' => Ok(Term::down(sub, self.item()?)),
                    '^' => Ok(Term::up(sub, self.item()?)),
                    'L' => Err(self.error_here(
                        "a lambda-substitution can only follow an application".to_string(),
                    )),
                    _ => unreachable!(),
                }
            }
            _ => self.core_term(),
        }
    }

    fn core_term(&mut self) -> Result<Term, ParseError> {
        if self.eat_keyword("get") {
            // get r | get(r)
            if self.peek() == &Tok::LParen {
                self.bump();
                let r = self.ident("a reference name")?;
                self.expect(Tok::RParen)?;
                return Ok(Term::get(&r));
            }
            let r = self.ident("a reference name")?;
            return Ok(Term::get(&r));
        }
        if self.peek() == &Tok::LParen {
            self.bump();
            let first = self.par_term()?;
            if self.peek() == &Tok::RParen {
                self.bump();
                return Ok(first);
            }
            let second = self.par_term()?;
            self.expect(Tok::RParen)?;
            // A '[' here is either this application's stationary
            // substitution or the start of a following item; the marker
            // after the bracket decides, so probe and rewind when it is not
            // an 'L'.
            let mut sub = RefSubst::new();
            if self.peek() == &Tok::LBracket {
                let saved = self.pos;
                self.bump();
                if let Ok(parsed) = self.rbinds() {
                    if matches!(self.peek(), Tok::Ident(s) if s == "L") {
                        self.bump();
                        sub = parsed;
                    } else {
                        self.pos = saved;
                    }
                } else {
                    self.pos = saved;
                }
            }
            return Ok(Term::app_sub(sub, first, second));
        }
        Ok(Term::Val(self.value()?))
    }

    fn sum(&mut self) -> Result<Sum, ParseError> {
        if self.peek() == &Tok::Zero {
            self.bump();
            // allow 0 + M as well, though 0 alone is the common case
            let mut terms = Vec::new();
            while self.peek() == &Tok::Plus {
                self.bump();
                terms.push(self.par_term()?);
            }
            return Ok(Sum::from_terms(terms));
        }
        let mut terms = alloc::vec![self.par_term()?];
        while self.peek() == &Tok::Plus {
            self.bump();
            if self.peek() == &Tok::Zero {
                self.bump();
                continue;
            }
            terms.push(self.par_term()?);
        }
        Ok(Sum::from_terms(terms))
    }

    // -- source-calculus terms ------------------------------------------------

    fn lc_value(&mut self) -> Result<LCValue, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let v = self.lc_value()?;
                self.expect(Tok::RParen)?;
                Ok(v)
            }
            Tok::Star => {
                self.bump();
                Ok(LCValue::Unit)
            }
            Tok::Lambda => {
                self.bump();
                let x = self.ident("a binder")?;
                self.expect(Tok::Colon)?;
                let ann = self.type_expr()?;
                self.expect(Tok::Dot)?;
                let body = self.lc_par()?;
                Ok(LCValue::Lambda(VarName::free(&x), ann, Box::new(body)))
            }
            Tok::Ident(_) => {
                let x = self.ident("a variable")?;
                Ok(LCValue::Var(VarName::free(&x)))
            }
            other => Err(self.error_here(format!("expected a value, found {other}"))),
        }
    }

    /// One thread-level component: either a store `r <= V` or a term.
    fn lc_component(&mut self) -> Result<LcComponent, ParseError> {
        if let Tok::Ident(s) = self.peek() {
            if !KEYWORDS.contains(&s.as_str()) && self.peek2() == &Tok::StoreArr {
                let r = RefName::new(&self.ident("a reference name")?);
                self.expect(Tok::StoreArr)?;
                let v = self.lc_value()?;
                return Ok(LcComponent::Store(r, v));
            }
        }
        Ok(LcComponent::Thread(self.lc_item()?))
    }

    fn lc_par(&mut self) -> Result<LCTerm, ParseError> {
        let mut items = alloc::vec![self.lc_item()?];
        while self.peek() == &Tok::ParBar {
            self.bump();
            items.push(self.lc_item()?);
        }
        if items.len() == 1 {
            Ok(items.pop().unwrap())
        } else {
            Ok(LCTerm::Par(items))
        }
    }

    fn lc_item(&mut self) -> Result<LCTerm, ParseError> {
        if self.eat_keyword("get") {
            if self.peek() == &Tok::LParen {
                self.bump();
                let r = self.ident("a reference name")?;
                self.expect(Tok::RParen)?;
                return Ok(LCTerm::Get(RefName::new(&r)));
            }
            let r = self.ident("a reference name")?;
            return Ok(LCTerm::Get(RefName::new(&r)));
        }
        if self.eat_keyword("set") {
            self.expect(Tok::LParen)?;
            let r = self.ident("a reference name")?;
            self.expect(Tok::Comma)?;
            let v = self.lc_value()?;
            self.expect(Tok::RParen)?;
            return Ok(LCTerm::Set(RefName::new(&r), v));
        }
        if self.peek() == &Tok::LParen {
            self.bump();
            let first = self.lc_par()?;
            if self.peek() == &Tok::RParen {
                self.bump();
                return Ok(first);
            }
            let second = self.lc_par()?;
            self.expect(Tok::RParen)?;
            return Ok(LCTerm::app(first, second));
        }
        Ok(LCTerm::Val(self.lc_value()?))
    }

    // -- files -----------------------------------------------------------------

    fn refs_header(&mut self) -> Result<RefContext, ParseError> {
        let mut ctx = RefContext::new();
        if self.eat_keyword("refs") {
            loop {
                let r = RefName::new(&self.ident("a reference name")?);
                self.expect(Tok::Colon)?;
                let ty = self.type_expr()?;
                ctx.push(r, ty);
                if self.peek() == &Tok::Semi {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::Dot)?;
        }
        Ok(ctx)
    }

    fn expect_clause(&mut self) -> Result<Option<(TypeExpr, Effect)>, ParseError> {
        if !self.eat_keyword("expect") {
            return Ok(None);
        }
        self.expect(Tok::LParen)?;
        let ty = self.type_expr()?;
        self.expect(Tok::Comma)?;
        self.expect(Tok::LBrace)?;
        let mut refs = Vec::new();
        if self.peek() != &Tok::RBrace {
            loop {
                refs.push(RefName::new(&self.ident("a reference name")?));
                if self.peek() == &Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::RParen)?;
        Ok(Some((ty, Effect::from_refs(refs))))
    }

    fn source(&mut self, dialect: Dialect) -> Result<SourceFile, ParseError> {
        let refs = self.refs_header()?;
        if !self.eat_keyword("term") {
            return Err(self.error_here(format!("expected 'term', found {}", self.peek())));
        }
        let body = match dialect {
            Dialect::Lces => SourceBody::Lces(canonicalize(&self.sum()?)),
            Dialect::Lc => {
                let mut threads = Vec::new();
                let mut stores = Vec::new();
                loop {
                    match self.lc_component()? {
                        LcComponent::Thread(t) => threads.push(t),
                        LcComponent::Store(r, v) => stores.push((r, v)),
                    }
                    if self.peek() == &Tok::ParBar {
                        self.bump();
                    } else {
                        break;
                    }
                }
                SourceBody::Lc(LCProgram::new(threads, stores))
            }
        };
        let expect = self.expect_clause()?;
        if self.peek() != &Tok::Eof {
            return Err(self.error_here(format!("unexpected {} after the term", self.peek())));
        }
        Ok(SourceFile { refs, body, expect })
    }
}

enum LcComponent {
    Thread(LCTerm),
    Store(RefName, LCValue),
}

/// Parse a source file in the given dialect.
pub fn parse(text: &str, dialect: Dialect) -> Result<SourceFile, ParseError> {
    Parser::new(text)?.source(dialect)
}

/// Parse a bare term (no `refs`/`term` framing); handy in tests and tools.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.par_term()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error_here(format!("unexpected {} after the term", p.peek())));
    }
    Ok(canonical_term(&t))
}

/// Parse a bare sum.
pub fn parse_sum(text: &str) -> Result<Sum, ParseError> {
    let mut p = Parser::new(text)?;
    let s = p.sum()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error_here(format!("unexpected {} after the sum", p.peek())));
    }
    Ok(canonicalize(&s))
}

/// Parse a type.
pub fn parse_type(text: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser::new(text)?;
    let t = p.type_expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error_here(format!("unexpected {} after the type", p.peek())));
    }
    Ok(t)
}

/// Parse a reference-substitution literal `[r -> {V, ...}; ...]`.
pub fn parse_ref_subst(text: &str) -> Result<RefSubst, ParseError> {
    let mut p = Parser::new(text)?;
    p.expect(Tok::LBracket)?;
    let sub = p.rbinds()?;
    if p.peek() != &Tok::Eof {
        return Err(p.error_here(format!("unexpected {}", p.peek())));
    }
    Ok(sub)
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Ascii,
    Pretty,
}

struct Printer {
    style: Style,
    out: String,
    /// Names already taken: free names of the whole unit plus enclosing
    /// binder names.
    used: BTreeSet<String>,
    /// Binder scope: (canonical id, chosen display name).
    scope: Vec<(u32, String)>,
}

impl Printer {
    fn new(style: Style, frees: &BTreeSet<VarName>) -> Printer {
        Printer {
            style,
            out: String::new(),
            // only truly free surface names block a display name; bound
            // names reported by the free-name pass get their own displays
            used: frees
                .iter()
                .filter_map(|v| match v {
                    VarName::Free(n) => Some(n.as_str().to_string()),
                    VarName::Bound(_) => None,
                })
                .collect(),
            scope: Vec::new(),
        }
    }

    fn push(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn fresh_display(&mut self, hint: &Name) -> String {
        let mut candidate = hint.as_str().to_string();
        if candidate.is_empty() {
            candidate.push('x');
        }
        while self.used.contains(&candidate) || KEYWORDS.contains(&candidate.as_str()) {
            candidate.push('\'');
        }
        candidate
    }

    fn var(&mut self, x: &VarName) {
        match x {
            VarName::Free(n) => self.push(n.as_str()),
            VarName::Bound(b) => {
                // innermost scope entry wins
                let name = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(id, _)| *id == b.id)
                    .map(|(_, n)| n.clone());
                match name {
                    Some(n) => self.push(&n),
                    // A dangling bound name; canonical printing never hits
                    // this, but render something readable anyway.
                    None => {
                        let s = format!("{}'{}", b.hint, b.id);
                        self.push(&s);
                    }
                }
            }
        }
    }

    fn value(&mut self, v: &Value) {
        match v {
            Value::Var(x) => self.var(x),
            Value::Unit => self.push("*"),
            Value::Lambda(l) => {
                let lam = if self.style == Style::Pretty { "\u{3bb}" } else { "\\" };
                self.push(lam);
                let display = match &l.binder {
                    VarName::Bound(b) => {
                        let d = self.fresh_display(&b.hint);
                        self.used.insert(d.clone());
                        self.scope.push((b.id, d.clone()));
                        Some(d)
                    }
                    VarName::Free(n) => {
                        self.push(n.as_str());
                        None
                    }
                };
                if let Some(d) = &display {
                    self.push(d);
                }
                self.push(":");
                let ty = print_type(&l.ann);
                self.push(&ty);
                self.push(". ");
                self.term(&l.body);
                if let Some(d) = display {
                    if let VarName::Bound(_) = &l.binder {
                        self.scope.pop();
                        self.used.remove(&d);
                    }
                }
            }
        }
    }

    fn ref_subst(&mut self, sub: &RefSubst) {
        self.push("[");
        for (i, (r, vs)) in sub.iter().enumerate() {
            if i > 0 {
                self.push("; ");
            }
            self.push(r.0.as_str());
            self.push(if self.style == Style::Pretty { " \u{21a6} {" } else { " -> {" });
            for (j, v) in vs.iter().enumerate() {
                if j > 0 {
                    self.push(", ");
                }
                self.value(v);
            }
            self.push("}");
        }
        self.push("]");
    }

    /// Domain entries bind in the body: allocate display names, print the
    /// bindings (values in the outer scope), and return what to pop after
    /// the body is printed.
    fn var_subst_open(&mut self, sub: &VarSubst) -> Vec<Option<String>> {
        // values rendered before the domain names enter scope
        let rendered: Vec<String> = sub
            .iter()
            .map(|(_, v)| {
                let mut inner = Printer {
                    style: self.style,
                    out: String::new(),
                    used: self.used.clone(),
                    scope: self.scope.clone(),
                };
                inner.value(v);
                inner.out
            })
            .collect();
        let mut opened = Vec::new();
        self.push("{");
        for (i, (x, _)) in sub.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            match x {
                VarName::Bound(b) => {
                    let d = self.fresh_display(&b.hint);
                    self.used.insert(d.clone());
                    self.scope.push((b.id, d.clone()));
                    self.push(&d);
                    opened.push(Some(d));
                }
                VarName::Free(n) => {
                    self.push(n.as_str());
                    opened.push(None);
                }
            }
            self.push(" := ");
            let v = &rendered[i];
            self.push(v);
        }
        self.push("}");
        opened
    }

    fn var_subst_close(&mut self, opened: Vec<Option<String>>) {
        for entry in opened.into_iter().rev() {
            if let Some(d) = entry {
                self.scope.pop();
                self.used.remove(&d);
            }
        }
    }

    /// True when the printed form of a term ends in a greedy lambda body, so
    /// a following `||` or `+` would be swallowed on re-parse.
    fn ends_open(t: &Term) -> bool {
        match t {
            Term::Val(Value::Lambda(_)) => true,
            Term::Val(_) | Term::Get(_) | Term::App(..) => false,
            Term::VarSub(_, b) | Term::Down(_, b) | Term::Up(_, b) => Self::ends_open(b),
            Term::Par(cs) => cs.last().map(Self::ends_open).unwrap_or(false),
        }
    }

    fn item(&mut self, t: &Term) {
        match t {
            Term::Par(_) => {
                self.push("(");
                self.term(t);
                self.push(")");
            }
            Term::VarSub(sub, body) => {
                let opened = self.var_subst_open(sub);
                self.push(if self.style == Style::Pretty { "\u{02e2} " } else { "s " });
                self.item(body);
                self.var_subst_close(opened);
            }
            Term::Down(sub, body) => {
                self.ref_subst(sub);
                self.push(if self.style == Style::Pretty { "\u{2193} " } else { "v " });
                self.item(body);
            }
            Term::Up(sub, body) => {
                self.ref_subst(sub);
                self.push(if self.style == Style::Pretty { "\u{2191} " } else { "^ " });
                self.item(body);
            }
            Term::App(sub, f, a) => {
                self.push("(");
                // a lambda-ended function reads badly unwrapped: its body
                // would visually swallow the argument
                if Self::ends_open(f) {
                    self.push("(");
                    self.term(f);
                    self.push(")");
                } else {
                    self.term(f);
                }
                self.push(" ");
                self.term(a);
                self.push(")");
                if !sub.is_empty() {
                    self.ref_subst(sub);
                    self.push(if self.style == Style::Pretty { "\u{3bb}" } else { "L" });
                }
            }
            Term::Get(r) => {
                self.push("get ");
                self.push(r.0.as_str());
            }
            Term::Val(v) => self.value(v),
        }
    }

    /// Print at the `||` level.
    fn term(&mut self, t: &Term) {
        match t {
            Term::Par(cs) => {
                let bar = if self.style == Style::Pretty { " \u{2225} " } else { " || " };
                let last = cs.len() - 1;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        self.push(bar);
                    }
                    if i != last && Self::ends_open(c) {
                        self.push("(");
                        self.item(c);
                        self.push(")");
                    } else {
                        self.item(c);
                    }
                }
            }
            _ => self.item(t),
        }
    }

    fn sum(&mut self, s: &Sum) {
        if s.is_empty() {
            self.push("0");
            return;
        }
        let last = s.len() - 1;
        for (i, t) in s.summands().enumerate() {
            if i > 0 {
                self.push(" + ");
            }
            if i != last && Self::ends_open(t) {
                self.push("(");
                self.term(t);
                self.push(")");
            } else {
                self.term(t);
            }
        }
    }
}

fn print_with(style: Style, f: impl FnOnce(&mut Printer)) -> String {
    let mut p = Printer::new(style, &BTreeSet::new());
    f(&mut p);
    p.out
}

/// Print the canonical ASCII form of a term; `parse_term` inverts this up to
/// canonical equality.
pub fn print_term(t: &Term) -> String {
    let t = canonical_term(t);
    let frees = crate::syntax::free_names(&t);
    let mut p = Printer::new(Style::Ascii, &frees.vars);
    p.term(&t);
    p.out
}

/// Print a term with unicode sugar; display only, not re-parseable.
pub fn pretty_term(t: &Term) -> String {
    let t = canonical_term(t);
    let frees = crate::syntax::free_names(&t);
    let mut p = Printer::new(Style::Pretty, &frees.vars);
    p.term(&t);
    p.out
}

pub fn print_sum(s: &Sum) -> String {
    let s = canonicalize(s);
    let frees = crate::syntax::free_names_sum(&s);
    let mut p = Printer::new(Style::Ascii, &frees.vars);
    p.sum(&s);
    p.out
}

pub fn pretty_sum(s: &Sum) -> String {
    let s = canonicalize(s);
    let frees = crate::syntax::free_names_sum(&s);
    let mut p = Printer::new(Style::Pretty, &frees.vars);
    p.sum(&s);
    p.out
}

pub fn print_value(v: &Value) -> String {
    print_term(&Term::Val(v.clone()))
}

pub fn print_ref_subst(sub: &RefSubst) -> String {
    print_with(Style::Ascii, |p| p.ref_subst(sub))
}

pub fn print_type(t: &TypeExpr) -> String {
    let mut s = String::new();
    fmt_type_into(t, &mut s);
    s
}

fn fmt_type_into(t: &TypeExpr, out: &mut String) {
    match t {
        TypeExpr::Unit => out.push_str("Unit"),
        TypeExpr::Behavior => out.push_str("B"),
        TypeExpr::Arrow(dom, eff, cod) => {
            let dom_needs_parens = matches!(**dom, TypeExpr::Arrow(..));
            if dom_needs_parens {
                out.push('(');
            }
            fmt_type_into(dom, out);
            if dom_needs_parens {
                out.push(')');
            }
            out.push_str(" -{");
            let mut first = true;
            for r in eff.iter() {
                if !first {
                    out.push_str(", ");
                }
                first = false;
                out.push_str(r.0.as_str());
            }
            out.push_str("}> ");
            fmt_type_into(cod, out);
        }
        TypeExpr::Ref(r, content) => {
            out.push_str("Ref ");
            out.push_str(r.0.as_str());
            out.push(' ');
            let needs_parens = matches!(**content, TypeExpr::Arrow(..));
            if needs_parens {
                out.push('(');
            }
            fmt_type_into(content, out);
            if needs_parens {
                out.push(')');
            }
        }
    }
}

/// Print an effect as `{r, s}`.
pub fn print_effect(e: &Effect) -> String {
    let mut out = String::from("{");
    for (i, r) in e.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(r.0.as_str());
    }
    out.push('}');
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Display for Sum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_sum(self))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_value(self))
    }
}
