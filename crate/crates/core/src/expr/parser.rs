//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := '-' factor | base ('^' factor)?
//! base     := number | ident | '(' expr ')' | func '(' expr ')'
//! ident    := 't' | 'x'k | 'xdot'k | 'pi'
//! func     := sin | cos | tan | exp | log | sqrt | neg
//! ```
//!
//! A minus sign directly in front of a numeric literal (and not followed by
//! `^`) folds into a negative constant, so printed trees parse back
//! unchanged.

use super::ast::{BinOp, Expression, Func, Var};
use super::ExprError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let value: f64 = lit.parse().map_err(|_| ExprError::Syntax {
                pos: start,
                message: format!("malformed number '{lit}'"),
            })?;
            out.push(Token { tok: Tok::Num(value), pos: start });
        } else if c.is_ascii_alphabetic() {
            while i < bytes.len() && bytes[i].is_ascii_alphabetic() {
                i += 1;
            }
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(text[start..i].to_string()), pos: start });
        } else if "+-*/^()".contains(c) {
            out.push(Token { tok: Tok::Sym(c), pos: start });
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                pos: start,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    at: usize,
    dim: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.text.len(), |t| t.pos)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(ExprError::Syntax { pos: self.pos(), message: format!("expected '{c}'") })
        }
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_sym('+') {
                lhs = Expression::binary(BinOp::Add, lhs, self.term()?);
            } else if self.eat_sym('-') {
                lhs = Expression::binary(BinOp::Sub, lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat_sym('*') {
                lhs = Expression::binary(BinOp::Mul, lhs, self.factor()?);
            } else if self.eat_sym('/') {
                lhs = Expression::binary(BinOp::Div, lhs, self.factor()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expression, ExprError> {
        if self.eat_sym('-') {
            if let Some(Tok::Num(v)) = self.peek().cloned() {
                let followed_by_pow =
                    self.tokens.get(self.at + 1).map(|t| &t.tok) == Some(&Tok::Sym('^'));
                if !followed_by_pow {
                    self.at += 1;
                    return Ok(Expression::Const(-v));
                }
            }
            return Ok(Expression::unary(Func::Neg, self.factor()?));
        }
        let base = self.base()?;
        if self.eat_sym('^') {
            let exponent = self.factor()?;
            return Ok(Expression::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expression, ExprError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Expression::Const(v))
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let inner = self.expr()?;
                self.expect_sym(')')?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if let Some(func) = Func::from_name(&name) {
                    self.expect_sym('(')?;
                    let arg = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(Expression::unary(func, arg));
                }
                self.identifier(&name, pos)
            }
            Some(Tok::Sym(c)) => {
                Err(ExprError::Syntax { pos, message: format!("unexpected '{c}'") })
            }
            None => Err(ExprError::Syntax { pos, message: "unexpected end of input".into() }),
        }
    }

    fn identifier(&self, name: &str, pos: usize) -> Result<Expression, ExprError> {
        match name {
            "t" => return Ok(Expression::Var(Var::T)),
            "pi" => return Ok(Expression::Const(std::f64::consts::PI)),
            _ => {}
        }
        let (kind, digits) = if let Some(rest) = name.strip_prefix("xdot") {
            (Var::XDot as fn(usize) -> Var, rest)
        } else if let Some(rest) = name.strip_prefix('x') {
            (Var::X as fn(usize) -> Var, rest)
        } else {
            return Err(ExprError::UnknownIdentifier { pos, name: name.to_string() });
        };
        let index: usize = match digits.parse() {
            Ok(k) if k >= 1 => k,
            _ => return Err(ExprError::UnknownIdentifier { pos, name: name.to_string() }),
        };
        if index > self.dim {
            return Err(ExprError::IndexOutOfRange { pos, name: name.to_string(), dim: self.dim });
        }
        Ok(Expression::Var(kind(index - 1)))
    }
}

/// Parses `text` as an expression over `t`, `x1..xn`, `xdot1..xdotn`.
///
/// `dim = 0` admits only `t`.
pub fn parse(text: &str, dim: usize) -> Result<Expression, ExprError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, at: 0, dim, text };
    let expr = parser.expr()?;
    if parser.at != parser.tokens.len() {
        return Err(ExprError::Syntax { pos: parser.pos(), message: "trailing input".into() });
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_function_and_variable() {
        let e = parse("sin(t)*x2", 2).unwrap();
        assert_eq!(
            e,
            Expression::mul(Expression::unary(Func::Sin, Expression::t()), Expression::x(1))
        );
    }

    #[test]
    fn power_binds_tighter_than_sum() {
        let e = parse("x1^2 + xdot1", 1).unwrap();
        assert_eq!(
            e,
            Expression::add(Expression::powi(Expression::x(0), 2), Expression::xdot(0))
        );
    }

    #[test]
    fn index_out_of_range() {
        assert!(matches!(parse("x3", 2), Err(ExprError::IndexOutOfRange { .. })));
        assert!(matches!(parse("xdot1", 0), Err(ExprError::IndexOutOfRange { .. })));
    }

    #[test]
    fn unknown_identifier_and_syntax_errors_carry_positions() {
        match parse("1 + y", 1) {
            Err(ExprError::UnknownIdentifier { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match parse("(x1 + 2", 1) {
            Err(ExprError::Syntax { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        assert!(parse("x0", 1).is_err());
        assert!(parse("2 3", 1).is_err());
        assert!(parse("", 1).is_err());
        assert!(parse("1 # 2", 1).is_err());
    }

    #[test]
    fn unary_minus_and_scientific_literals() {
        assert_eq!(parse("-2.5e-3", 0).unwrap(), Expression::Const(-2.5e-3));
        assert_eq!(
            parse("-2^2", 0).unwrap(),
            Expression::neg(Expression::powi(Expression::Const(2.0), 2))
        );
        assert_eq!(parse("-t", 0).unwrap(), Expression::neg(Expression::t()));
    }

    #[test]
    fn left_associative_subtraction() {
        let e = parse("t - 1 - 2", 0).unwrap();
        assert_eq!(
            e,
            Expression::sub(
                Expression::sub(Expression::t(), Expression::Const(1.0)),
                Expression::Const(2.0)
            )
        );
    }
}
