//! Recursive-descent parser for the polynomial and formula text grammars.
//!
//! ```text
//! formula := disj
//! disj    := conj ( "||" conj )*
//! conj    := unary ( "&&" unary )*
//! unary   := "!" unary | "true" | "false" | cmp | "(" formula ")"
//! cmp     := expr ( "<" | "<=" | "=" | "==" | "!=" | ">=" | ">" ) expr
//! expr    := term ( ("+" | "-") term )*
//! term    := signed ( "*" signed )*
//! signed  := "-" signed | "+" signed | power
//! power   := primary ( "^" INT )?
//! primary := INT | INT "/" INT | IDENT | "(" expr ")"
//! ```
//!
//! Positions in errors are 1-based character columns.

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use crate::formula::Formula;
use crate::poly::{Polynomial, Rational, VarContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("unknown variable `{name}` at column {column}")]
    UnknownVariable { name: String, column: usize },
}

impl ParseError {
    pub fn column(&self) -> usize {
        match self {
            ParseError::Syntax { column, .. } | ParseError::UnknownVariable { column, .. } => *column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
    AndAnd,
    OrOr,
    Bang,
    True,
    False,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(n) => format!("number `{n}`"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::End => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Caret => "^",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::True => "true",
            Tok::False => "false",
            _ => "",
        }
    }
}

fn syntax(column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { column, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            if i < chars.len() && chars[i] == '.' {
                return Err(syntax(i + 1, "decimal literals are not supported; write rationals as a/b"));
            }
            out.push((Tok::Int(digits.parse().expect("digits")), col));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match word.as_str() {
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word),
            };
            out.push((tok, col));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('=', Some('=')) => (Tok::Eq, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('=', _) => (Tok::Eq, 1),
            ('!', _) => (Tok::Bang, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('^', _) => (Tok::Caret, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            _ => return Err(syntax(col, format!("unexpected character `{c}`"))),
        };
        out.push((tok, col));
        i += len;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    ctx: &'a VarContext,
}

impl<'a> Parser<'a> {
    fn new(text: &str, ctx: &'a VarContext) -> Result<Self, ParseError> {
        Ok(Parser { toks: lex(text)?, pos: 0, ctx })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), ParseError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected `{}`", t.symbol())))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        syntax(self.column(), format!("{what}, found {}", self.peek().describe()))
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.unexpected("expected end of input"))
        }
    }

    fn expr(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                acc = &acc + &self.term()?;
            } else if self.eat(&Tok::Minus) {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, ParseError> {
        let mut acc = self.signed()?;
        while self.eat(&Tok::Star) {
            acc = &acc * &self.signed()?;
        }
        Ok(acc)
    }

    fn signed(&mut self) -> Result<Polynomial, ParseError> {
        if self.eat(&Tok::Minus) {
            Ok(-self.signed()?)
        } else if self.eat(&Tok::Plus) {
            self.signed()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Polynomial, ParseError> {
        let base = self.primary()?;
        if self.eat(&Tok::Caret) {
            let col = self.column();
            match self.bump() {
                Tok::Int(e) => {
                    let e: u32 = e.try_into().map_err(|_| syntax(col, "exponent too large"))?;
                    Ok(base.pow(e))
                }
                other => {
                    Err(syntax(col, format!("expected a non-negative integer exponent, found {}", other.describe())))
                }
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Polynomial, ParseError> {
        let col = self.column();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if self.eat(&Tok::Slash) {
                    let dcol = self.column();
                    match self.bump() {
                        Tok::Int(d) if !d.is_zero() => Ok(Polynomial::constant(self.ctx, Rational::new(n, d))),
                        Tok::Int(_) => Err(syntax(dcol, "division by zero")),
                        _ => Err(syntax(dcol, "`/` is only allowed between integer literals")),
                    }
                } else {
                    Ok(Polynomial::constant(self.ctx, Rational::from_integer(n)))
                }
            }
            Tok::Ident(name) => {
                self.bump();
                match self.ctx.index_of(&name) {
                    Some(i) => Ok(Polynomial::var(self.ctx, i).expect("index from context")),
                    None => Err(ParseError::UnknownVariable { name, column: col }),
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.unexpected("expected a number, variable or `(`")),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conj()?;
        while self.eat(&Tok::OrOr) {
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.eat(&Tok::AndAnd) {
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::True => {
                self.bump();
                Ok(Formula::tt())
            }
            Tok::False => {
                self.bump();
                Ok(Formula::ff())
            }
            Tok::LParen => {
                // either a parenthesized formula or a comparison whose left
                // operand starts with `(`; try the comparison first
                let save = self.pos;
                match self.comparison() {
                    Ok(f) => Ok(f),
                    Err(cmp_err) => {
                        let cmp_reach = self.pos;
                        self.pos = save;
                        self.bump();
                        let inner = self.formula().and_then(|f| self.expect(&Tok::RParen).map(|_| f));
                        match inner {
                            Ok(f) => Ok(f),
                            Err(e) => {
                                if cmp_reach > self.pos {
                                    Err(cmp_err)
                                } else {
                                    Err(e)
                                }
                            }
                        }
                    }
                }
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.expr()?;
        let op = self.peek().clone();
        let rel = match op {
            Tok::Lt | Tok::Le | Tok::Eq | Tok::Ne | Tok::Ge | Tok::Gt => {
                self.bump();
                op
            }
            _ => return Err(self.unexpected("expected a comparison operator")),
        };
        let rhs = self.expr()?;
        let p = &lhs - &rhs;
        Ok(match rel {
            Tok::Lt => Formula::lt(p),
            Tok::Le => Formula::le(p),
            Tok::Eq => Formula::eq(p),
            Tok::Ne => Formula::ne(p),
            Tok::Ge => Formula::ge(p),
            Tok::Gt => Formula::gt(p),
            _ => unreachable!(),
        })
    }
}

/// Parses a polynomial expression in the given context.
pub fn parse_polynomial(text: &str, ctx: &VarContext) -> Result<Polynomial, ParseError> {
    let mut p = Parser::new(text, ctx)?;
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a formula, desugaring every comparison into `p < 0` / `p = 0`
/// atoms.
pub fn parse_formula(text: &str, ctx: &VarContext) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text, ctx)?;
    let f = p.formula()?;
    p.finish()?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};

    fn ctx() -> VarContext {
        VarContext::new(&["x", "y"]).unwrap()
    }

    fn poly(s: &str) -> Polynomial {
        parse_polynomial(s, &ctx()).unwrap()
    }

    #[test]
    fn polynomial_grammar() {
        let c = ctx();
        let x = Polynomial::var(&c, 0).unwrap();
        let y = Polynomial::var(&c, 1).unwrap();
        assert_eq!(poly("x^2 + y - 1"), &(&x.pow(2) + &y) - &Polynomial::one(&c));
        assert_eq!(poly("1/2*x"), x.scale(&rat(1, 2)));
        assert_eq!(poly("-x^2"), -x.pow(2));
        assert_eq!(poly("(x+y)^2"), (&x + &y).pow(2));
        assert_eq!(poly("2*3"), Polynomial::constant(&c, int(6)));
        assert_eq!(poly("4/6"), Polynomial::constant(&c, rat(2, 3)));
    }

    #[test]
    fn implicit_multiplication_is_rejected() {
        let e = parse_polynomial("2x", &ctx()).unwrap_err();
        assert_eq!(e.column(), 2);
        assert!(parse_polynomial("x y", &ctx()).is_err());
    }

    #[test]
    fn bad_exponents_and_division() {
        assert!(parse_polynomial("x^-1", &ctx()).is_err());
        assert!(parse_polynomial("x^y", &ctx()).is_err());
        assert!(parse_polynomial("x/2", &ctx()).is_err());
        assert!(parse_polynomial("1/0", &ctx()).is_err());
        assert!(parse_polynomial("0.5", &ctx()).is_err());
    }

    #[test]
    fn unknown_variable() {
        let e = parse_formula("x + z < 0", &ctx()).unwrap_err();
        assert_eq!(e, ParseError::UnknownVariable { name: "z".into(), column: 5 });
    }

    #[test]
    fn desugaring_examples() {
        let x = poly("x");
        assert_eq!(
            parse_formula("x <= 0", &ctx()).unwrap(),
            Formula::or(Formula::lt(x.clone()), Formula::eq(x.clone()))
        );
        assert_eq!(parse_formula("x != 0", &ctx()).unwrap(), Formula::or(Formula::lt(-&x), Formula::lt(x.clone())));
        assert_eq!(parse_formula("x^2 + y^2 < 1", &ctx()).unwrap(), Formula::lt(poly("x^2 + y^2 - 1")));
        assert_eq!(parse_formula("x > 0", &ctx()).unwrap(), Formula::lt(-&x));
        assert_eq!(parse_formula("x >= 0", &ctx()).unwrap(), Formula::or(Formula::lt(-&x), Formula::eq(-&x)));
        assert_eq!(parse_formula("x == y", &ctx()).unwrap(), Formula::eq(poly("x - y")));
    }

    #[test]
    fn connectives_and_parentheses() {
        let f = parse_formula("!(x < 0) && (y = 0 || true)", &ctx()).unwrap();
        let expected =
            Formula::and(Formula::not(Formula::lt(poly("x"))), Formula::or(Formula::eq(poly("y")), Formula::tt()));
        assert_eq!(f, expected);
        // parenthesized left operand of a comparison
        let g = parse_formula("(x + 1)*y < 0 && false", &ctx()).unwrap();
        assert_eq!(g, Formula::and(Formula::lt(poly("x*y + y")), Formula::ff()));
        // && binds tighter than ||
        let h = parse_formula("x < 0 || y < 0 && x = 0", &ctx()).unwrap();
        assert_eq!(
            h,
            Formula::or(Formula::lt(poly("x")), Formula::and(Formula::lt(poly("y")), Formula::eq(poly("x"))))
        );
    }

    #[test]
    fn malformed_formulas_report_a_column() {
        let e = parse_formula("x < 0 &&", &ctx()).unwrap_err();
        assert_eq!(e.column(), 9);
        let e = parse_formula("x + 1", &ctx()).unwrap_err();
        assert_eq!(e.column(), 6);
        let e = parse_formula("(x < 0", &ctx()).unwrap_err();
        assert_eq!(e.column(), 7);
        assert!(parse_formula("x < 0 # y", &ctx()).is_err());
    }

    #[test]
    fn printing_round_trips() {
        let texts = ["x <= 0 && !(y != 1/3*x^2)", "(x - y)^3 >= 2 || false", "true && x*y = 0"];
        for t in texts {
            let f = parse_formula(t, &ctx()).unwrap();
            let printed = f.to_string();
            assert_eq!(parse_formula(&printed, &ctx()).unwrap(), f, "{printed}");
        }
    }
}
