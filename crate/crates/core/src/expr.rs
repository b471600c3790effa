//! Arithmetic expressions for user-defined metric components.
//!
//! Grammar (standard precedence, `^` binds tighter than unary minus):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' ['-'] integer)?
//! primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Names resolve to spatial variables `x1..xn`, to declared parameters, or to
//! the constant `pi`. Functions: `sqrt`, `sin`, `cos`, `atan2(y, x)`.
//! Exponents are integer literals only.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dual::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("undeclared variable `{name}` at offset {offset}")]
    UndeclaredVariable { name: String, offset: usize },
}

impl ExprError {
    pub fn offset(&self) -> usize {
        match self {
            ExprError::Syntax { offset, .. } | ExprError::UndeclaredVariable { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Atan2,
}

impl Func {
    fn arity(self) -> usize {
        match self {
            Func::Atan2 => 2,
            _ => 1,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan2 => "atan2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based spatial variable index (`x1` is 0).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
}

/// Names visible to an expression: `n` spatial variables plus parameters.
#[derive(Debug, Clone, Default)]
pub struct Scope {
    pub dim: usize,
    pub params: BTreeMap<String, f64>,
}

impl Scope {
    pub fn new(dim: usize) -> Self {
        Scope {
            dim,
            params: BTreeMap::new(),
        }
    }

    pub fn with_params(dim: usize, params: impl IntoIterator<Item = (String, f64)>) -> Self {
        Scope {
            dim,
            params: params.into_iter().collect(),
        }
    }
}

impl Expr {
    pub fn parse(src: &str, scope: &Scope) -> Result<Expr, ExprError> {
        let tokens = lex(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            scope,
            end: src.len(),
        };
        let e = p.expr()?;
        match p.peek() {
            None => Ok(e),
            Some(t) => Err(ExprError::Syntax {
                offset: t.offset,
                message: format!("unexpected {}", t.kind),
            }),
        }
    }

    pub fn eval<S: Scalar>(&self, vars: &[S]) -> S {
        match self {
            Expr::Const(c) => S::constant(*c),
            Expr::Var(i) => vars[*i],
            Expr::Neg(a) => -a.eval(vars),
            Expr::Add(a, b) => a.eval(vars) + b.eval(vars),
            Expr::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Expr::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Expr::Div(a, b) => a.eval(vars) / b.eval(vars),
            Expr::Pow(a, n) => a.eval(vars).powi(*n),
            Expr::Call(f, args) => match f {
                Func::Sqrt => args[0].eval(vars).sqrt(),
                Func::Sin => args[0].eval(vars).sin(),
                Func::Cos => args[0].eval(vars).cos(),
                Func::Atan2 => args[0].eval(vars).atan2(args[1].eval(vars)),
            },
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "({c})"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Name(String),
    Op(char),
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Number(v) => write!(f, "number {v}"),
            TokenKind::Name(n) => write!(f, "name `{n}`"),
            TokenKind::Op(c) => write!(f, "'{c}'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })?;
            out.push(Token {
                kind: TokenKind::Number(v),
                offset: start,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                kind: TokenKind::Name(src[start..i].to_string()),
                offset: start,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                kind: TokenKind::Op(c),
                offset: i,
            });
            i += 1;
        } else {
            return Err(ExprError::Syntax {
                offset: i,
                message: format!("unexpected character '{c}'"),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    scope: &'a Scope,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_op(&self) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Op(c),
                ..
            }) => Some(*c),
            _ => None,
        }
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn expect_op(&mut self, op: char) -> Result<(), ExprError> {
        if self.peek_op() == Some(op) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected '{op}'")))
        }
    }

    fn unexpected(&self, what: &str) -> ExprError {
        let message = match self.peek() {
            Some(t) => format!("{what}, found {}", t.kind),
            None => format!("{what}, found end of input"),
        };
        ExprError::Syntax {
            offset: self.offset(),
            message,
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Const(c) => Expr::Const(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek_op() != Some('^') {
            return Ok(base);
        }
        self.pos += 1;
        let negative = if self.peek_op() == Some('-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let offset = self.offset();
        match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Number(v)) if v.fract() == 0.0 && v.abs() <= f64::from(i32::MAX) => {
                self.pos += 1;
                let n = v as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -n } else { n }))
            }
            Some(TokenKind::Number(_)) => Err(ExprError::Syntax {
                offset,
                message: "exponent must be an integer literal".into(),
            }),
            _ => Err(self.unexpected("expected integer exponent")),
        }
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("expected operand"));
        };
        match tok.kind {
            TokenKind::Number(v) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            TokenKind::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            TokenKind::Name(name) => {
                self.pos += 1;
                if self.peek_op() == Some('(') {
                    return self.call(&name, tok.offset);
                }
                self.resolve(&name, tok.offset)
            }
            TokenKind::Op(_) => Err(self.unexpected("expected operand")),
        }
    }

    fn call(&mut self, name: &str, offset: usize) -> Result<Expr, ExprError> {
        let func = match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "atan2" => Func::Atan2,
            _ => {
                return Err(ExprError::Syntax {
                    offset,
                    message: format!("unknown function `{name}`"),
                })
            }
        };
        self.expect_op('(')?;
        let mut args = vec![self.expr()?];
        while self.peek_op() == Some(',') {
            self.pos += 1;
            args.push(self.expr()?);
        }
        self.expect_op(')')?;
        if args.len() != func.arity() {
            return Err(ExprError::Syntax {
                offset,
                message: format!(
                    "`{name}` takes {} argument(s), got {}",
                    func.arity(),
                    args.len()
                ),
            });
        }
        Ok(Expr::Call(func, args))
    }

    fn resolve(&self, name: &str, offset: usize) -> Result<Expr, ExprError> {
        if let Some(v) = self.scope.params.get(name) {
            return Ok(Expr::Const(*v));
        }
        if name == "pi" {
            return Ok(Expr::Const(std::f64::consts::PI));
        }
        if let Some(idx) = name.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
            if (1..=self.scope.dim).contains(&idx) {
                return Ok(Expr::Var(idx - 1));
            }
        }
        Err(ExprError::UndeclaredVariable {
            name: name.to_string(),
            offset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<Expr, ExprError> {
        Expr::parse(s, &Scope::with_params(2, [("A".to_string(), -1.0)]))
    }

    fn eval(s: &str, x: [f64; 2]) -> f64 {
        parse(s).unwrap().eval(&x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", [0.0; 2]), 7.0);
        assert_eq!(eval("8 / 4 / 2", [0.0; 2]), 1.0);
        assert_eq!(eval("2 - 3 - 4", [0.0; 2]), -5.0);
        assert_eq!(eval("-x1^2", [3.0, 0.0]), -9.0);
        assert_eq!(eval("(x1 + x2)^2", [1.0, 2.0]), 9.0);
        assert_eq!(eval("x1^-2", [2.0, 0.0]), 0.25);
        assert_eq!(eval("A*x1/(x1^2+x2^2)", [1.0, 0.0]), -1.0);
        assert_eq!(eval("2e-1 + 1.5E1", [0.0; 2]), 15.2);
    }

    #[test]
    fn functions_and_constants() {
        assert!((eval("atan2(x2, x1)", [0.0, 1.0]) - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(eval("sqrt(x1^2 + x2^2)", [3.0, 4.0]), 5.0);
        assert!((eval("sin(pi/2) + cos(0)", [0.0; 2]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn unary_plus_is_rejected_with_offset() {
        let err = parse("x1/+2").unwrap_err();
        assert!(matches!(err, ExprError::Syntax { offset: 3, .. }), "{err}");
    }

    #[test]
    fn reports_undeclared_names() {
        let err = parse("x1 + x3").unwrap_err();
        assert_eq!(
            err,
            ExprError::UndeclaredVariable {
                name: "x3".into(),
                offset: 5
            }
        );
        assert!(matches!(
            parse("B * x1"),
            Err(ExprError::UndeclaredVariable { offset: 0, .. })
        ));
    }

    #[test]
    fn malformed_inputs() {
        assert_eq!(parse("").unwrap_err().offset(), 0);
        assert_eq!(parse("(x1 + 1").unwrap_err().offset(), 7);
        assert_eq!(parse("x1 ^ 1.5").unwrap_err().offset(), 5);
        assert_eq!(parse("x1 ^ x2").unwrap_err().offset(), 5);
        assert_eq!(parse("sqrt(1, 2)").unwrap_err().offset(), 0);
        assert_eq!(parse("foo(1)").unwrap_err().offset(), 0);
        assert_eq!(parse("x1 $ 2").unwrap_err().offset(), 3);
        assert_eq!(parse("x1 x2").unwrap_err().offset(), 3);
    }

    proptest! {
        #[test]
        fn display_round_trips(a in -10.0f64..10.0, b in -10.0f64..10.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            let src = format!("({a})*x1^3 - sin(x2)/({b}^2 + 1) + atan2(x2, x1 - ({a}))");
            let e = parse(&src).unwrap();
            let again = parse(&e.to_string()).unwrap();
            let v1 = e.eval(&[x, y]);
            let v2 = again.eval(&[x, y]);
            prop_assert!((v1 - v2).abs() <= 1e-12 * v1.abs().max(1.0));
        }
    }
}
