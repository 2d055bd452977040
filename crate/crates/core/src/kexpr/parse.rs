//! Recursive-descent parser for the virtual-bundle DSL.
//!
//! ```text
//! expr   := ["-"] term (("+" | "-") term)*
//! term   := factor ("(x)" factor)*
//! factor := primary ("^" ["-"] INT)*
//! primary:= INT | NAME | "(" expr ")"
//!         | ("dual" | "det") "(" expr ")"
//!         | ("psi" | "theta" | "tau") "(" INT "," expr ")"
//!         | "pull" "(" NAME "," expr ")"
//! ```
//!
//! `(x)` is lexed as the tensor operator, so a symbol literally named `x`
//! cannot be written in parentheses on its own.

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use super::table::{SymbolKind, SymbolTable, UNIT_NAME};
use super::{KexprError, VirtualExpr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Int(BigInt),
    Name(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Plus,
    Minus,
    Caret,
    Tensor,
    Semi,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub pos: usize,
}

pub fn lex(text: &str) -> Result<Vec<Token>, KexprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '(' if text[i..].starts_with("(x)") => {
                i += 3;
                Tok::Tensor
            }
            '(' => {
                i += 1;
                Tok::LParen
            }
            ')' => {
                i += 1;
                Tok::RParen
            }
            '[' => {
                i += 1;
                Tok::LBracket
            }
            ']' => {
                i += 1;
                Tok::RBracket
            }
            ',' => {
                i += 1;
                Tok::Comma
            }
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            '^' => {
                i += 1;
                Tok::Caret
            }
            ';' => {
                i += 1;
                Tok::Semi
            }
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Int(text[start..i].parse().expect("digits"))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric()
                        || bytes[i] == b'_'
                        || bytes[i] == b'\''
                        || bytes[i] == b'.')
                {
                    i += 1;
                }
                Tok::Name(text[start..i].to_string())
            }
            other => {
                return Err(KexprError::Syntax {
                    pos: start,
                    message: format!("unexpected character `{}`", other),
                })
            }
        };
        out.push(Token { tok, pos: start });
    }
    out.push(Token { tok: Tok::Eof, pos: text.len() });
    Ok(out)
}

/// Token cursor shared by the expression and graded-line grammars.
pub struct Parser<'t> {
    tokens: Vec<Token>,
    at: usize,
    table: &'t SymbolTable,
    lenient: bool,
}

impl<'t> Parser<'t> {
    pub fn new(text: &str, table: &'t SymbolTable) -> Result<Self, KexprError> {
        Ok(Parser { tokens: lex(text)?, at: 0, table, lenient: false })
    }

    /// Lenient parsers accept undeclared names as bundle symbols; used to
    /// re-read rendered traces whose symbol tables are not serialized.
    pub fn lenient(mut self) -> Self {
        self.lenient = true;
        self
    }

    pub fn table(&self) -> &SymbolTable {
        self.table
    }

    pub fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    pub fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.at + ahead).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    pub fn pos(&self) -> usize {
        self.tokens[self.at].pos
    }

    pub fn bump(&mut self) -> Tok {
        let t = self.tokens[self.at].tok.clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    pub fn error(&self, message: impl Into<String>) -> KexprError {
        KexprError::Syntax { pos: self.pos(), message: message.into() }
    }

    pub fn expect(&mut self, want: Tok, what: &str) -> Result<(), KexprError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {}", what)))
        }
    }

    pub fn expect_int(&mut self) -> Result<BigInt, KexprError> {
        match self.bump() {
            Tok::Int(n) => Ok(n),
            _ => {
                self.at -= 1;
                Err(self.error("expected integer"))
            }
        }
    }

    pub fn expect_small_int(&mut self) -> Result<u32, KexprError> {
        let pos = self.pos();
        let n = self.expect_int()?;
        n.to_u32().ok_or(KexprError::Syntax { pos, message: "integer out of range".into() })
    }

    pub fn expect_name(&mut self) -> Result<String, KexprError> {
        match self.bump() {
            Tok::Name(n) => Ok(n),
            _ => {
                self.at -= 1;
                Err(self.error("expected name"))
            }
        }
    }

    pub fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    pub fn expr(&mut self) -> Result<VirtualExpr, KexprError> {
        let mut terms = Vec::new();
        let leading_minus = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let first = self.term()?;
        terms.push(if leading_minus { VirtualExpr::neg(first) } else { first });
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    terms.push(VirtualExpr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { VirtualExpr::Sum(terms) })
    }

    fn term(&mut self) -> Result<VirtualExpr, KexprError> {
        let mut factors = vec![self.factor()?];
        while *self.peek() == Tok::Tensor {
            self.bump();
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { VirtualExpr::Tensor(factors) })
    }

    fn factor(&mut self) -> Result<VirtualExpr, KexprError> {
        let mut base = self.primary()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            base = VirtualExpr::power(base, self.signed_exponent()?);
        }
        Ok(base)
    }

    pub fn signed_exponent(&mut self) -> Result<i64, KexprError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let pos = self.pos();
        let n = self.expect_int()?;
        let n = n
            .to_i64()
            .ok_or(KexprError::Syntax { pos, message: "exponent out of range".into() })?;
        Ok(if negative { -n } else { n })
    }

    fn primary(&mut self) -> Result<VirtualExpr, KexprError> {
        let pos = self.pos();
        match self.bump() {
            Tok::Int(n) => Ok(if n == BigInt::from(1) {
                VirtualExpr::Unit
            } else {
                VirtualExpr::Int(n)
            }),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Name(name) if *self.peek() == Tok::LParen => self.call(&name, pos),
            Tok::Name(name) => self.symbol(&name, pos),
            _ => {
                self.at -= 1;
                Err(self.error("expected expression"))
            }
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<VirtualExpr, KexprError> {
        self.expect(Tok::LParen, "`(`")?;
        let e = match name {
            "dual" => VirtualExpr::dual(self.expr()?),
            "det" => VirtualExpr::det(self.expr()?),
            "psi" | "theta" | "tau" => {
                let kpos = self.pos();
                let k = self.expect_small_int()?;
                if k == 0 {
                    return Err(KexprError::Syntax {
                        pos: kpos,
                        message: format!("{} index must be >= 1", name),
                    });
                }
                self.expect(Tok::Comma, "`,`")?;
                let arg = self.expr()?;
                match name {
                    "psi" => VirtualExpr::psi(k, arg),
                    "theta" => VirtualExpr::theta(k, arg),
                    _ => VirtualExpr::tau(k, arg),
                }
            }
            "pull" => {
                let m = self.expect_name()?;
                self.expect(Tok::Comma, "`,`")?;
                VirtualExpr::pull(&m, self.expr()?)
            }
            other => {
                return Err(KexprError::Syntax { pos, message: format!("unknown operator `{}`", other) })
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(e)
    }

    fn symbol(&mut self, name: &str, pos: usize) -> Result<VirtualExpr, KexprError> {
        if name == UNIT_NAME {
            return Ok(VirtualExpr::Unit);
        }
        match self.table.get(name) {
            Some(entry) => Ok(match entry.kind {
                SymbolKind::Line => VirtualExpr::Line(name.to_string()),
                SymbolKind::Bundle => VirtualExpr::Bundle(name.to_string()),
            }),
            None if self.lenient => Ok(VirtualExpr::Bundle(name.to_string())),
            None => Err(KexprError::Undeclared { name: name.to_string(), pos }),
        }
    }
}

/// Parses one expression against a symbol table.
pub fn parse(text: &str, table: &SymbolTable) -> Result<VirtualExpr, KexprError> {
    let mut p = Parser::new(text, table)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

/// Splits `text` into leading `;`-terminated declarations and a body,
/// applying the declarations to a copy of `base`.
pub fn split_declarations(text: &str, base: &SymbolTable) -> Result<(SymbolTable, String), KexprError> {
    let mut table = base.clone();
    let mut rest = text;
    let mut consumed = 0;
    loop {
        let Some(semi) = rest.find(';') else { break };
        let stmt = &rest[..semi];
        if !SymbolTable::is_declaration(stmt) {
            break;
        }
        let words: Vec<&str> = stmt.split_whitespace().collect();
        table.apply_declaration(&words).map_err(|e| match e {
            KexprError::Syntax { message, .. } => KexprError::Syntax { pos: consumed, message },
            other => other,
        })?;
        consumed += semi + 1;
        rest = &rest[semi + 1..];
    }
    Ok((table, rest.to_string()))
}

/// Parses `"line L; bundle E rank 2; <expr>"`.
pub fn parse_program(text: &str, base: &SymbolTable) -> Result<(SymbolTable, VirtualExpr), KexprError> {
    let (table, body) = split_declarations(text, base)?;
    let offset = text.len() - body.len();
    let e = parse(&body, &table).map_err(|e| e.shifted(offset))?;
    Ok((table, e))
}
