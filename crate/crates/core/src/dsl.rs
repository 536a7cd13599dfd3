//! A small expression language for user-defined lifts.
//!
//! ```text
//! map      = expr ";" expr [ "inverse" expr ";" expr ] { "where" binding { "," binding } } ;
//! binding  = ident "=" expr ;                  (* constant: no x, y or parameters *)
//! expr     = term { ( "+" | "-" ) term } ;
//! term     = unary { ( "*" | "/" ) unary } ;
//! unary    = "-" unary | primary ;
//! primary  = number | "x" | "y" | "pi" | ident | func "(" expr ")" | "(" expr ")" ;
//! func     = "sin" | "cos" ;
//! ```
//!
//! Example: `x + b*sin(2*pi*(y + a*sin(2*pi*x))) ; y + a*sin(2*pi*x) where a=0.5, b=0.5`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::lift::{LiftMap, PlanePoint, Vec2};

/// Tolerance for the numeric lift checks applied by [`MapDefinition::validate`].
pub const LIFT_TOLERANCE: f64 = 1e-9;
/// Number of seeded samples used by [`MapDefinition::validate`].
pub const LIFT_CHECK_SAMPLES: usize = 1000;
const LIFT_CHECK_SEED: u64 = 0x4C49_4654;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },

    #[error("unbound parameter '{name}' at column {column}")]
    UnboundParameter { name: String, column: usize },

    #[error("function '{name}' takes {expected} argument(s), got {found} (column {column})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        column: usize,
    },

    #[error("unknown function '{name}' at column {column}")]
    UnknownFunction { name: String, column: usize },

    #[error("division by literal zero at column {column}")]
    DivisionByZero { column: usize },

    #[error("expression evaluated to a non-finite value ({value})")]
    NonFinite { value: f64 },

    #[error("not a lift: commutation error {error:e} exceeds {LIFT_TOLERANCE:e}")]
    NotALift { error: f64 },

    #[error("inverse expressions do not invert the map: error {error:e}")]
    BadInverse { error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    fn lookup(name: &str) -> Option<Func> {
        match name {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }
}

/// Syntax tree of one component of a lift.
#[derive(Debug, Clone, PartialEq)]
pub enum MapExpr {
    Num(f64),
    X,
    Y,
    Pi,
    Param(String),
    Neg(Box<MapExpr>),
    Binary(BinOp, Box<MapExpr>, Box<MapExpr>),
    Call(Func, Box<MapExpr>),
}

pub type Params = BTreeMap<String, f64>;

impl MapExpr {
    fn eval_raw(&self, x: f64, y: f64, params: &Params) -> Result<f64, DslError> {
        Ok(match self {
            MapExpr::Num(v) => *v,
            MapExpr::X => x,
            MapExpr::Y => y,
            MapExpr::Pi => PI,
            MapExpr::Param(name) => {
                *params.get(name).ok_or_else(|| DslError::UnboundParameter {
                    name: name.clone(),
                    column: 0,
                })?
            }
            MapExpr::Neg(e) => -e.eval_raw(x, y, params)?,
            MapExpr::Binary(op, l, r) => {
                let a = l.eval_raw(x, y, params)?;
                let b = r.eval_raw(x, y, params)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            MapExpr::Call(f, arg) => {
                let a = arg.eval_raw(x, y, params)?;
                match f {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                }
            }
        })
    }

    /// Replaces every parameter by its bound value.
    fn bind(&self, params: &Params) -> MapExpr {
        match self {
            MapExpr::Param(name) => params
                .get(name)
                .map_or_else(|| self.clone(), |v| MapExpr::Num(*v)),
            MapExpr::Neg(e) => MapExpr::Neg(Box::new(e.bind(params))),
            MapExpr::Binary(op, l, r) => {
                MapExpr::Binary(*op, Box::new(l.bind(params)), Box::new(r.bind(params)))
            }
            MapExpr::Call(f, a) => MapExpr::Call(*f, Box::new(a.bind(params))),
            other => other.clone(),
        }
    }

    fn uses_coordinates(&self) -> bool {
        match self {
            MapExpr::X | MapExpr::Y | MapExpr::Param(_) => true,
            MapExpr::Num(_) | MapExpr::Pi => false,
            MapExpr::Neg(e) | MapExpr::Call(_, e) => e.uses_coordinates(),
            MapExpr::Binary(_, l, r) => l.uses_coordinates() || r.uses_coordinates(),
        }
    }
}

/// Evaluates an expression; a non-finite result is an error.
pub fn eval_expr(e: &MapExpr, x: f64, y: f64, params: &Params) -> Result<f64, DslError> {
    let v = e.eval_raw(x, y, params)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DslError::NonFinite { value: v })
    }
}

/// Fully parenthesized rendering; parsing it back yields the same tree.
impl fmt::Display for MapExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapExpr::Num(v) => write!(f, "{v:?}"),
            MapExpr::X => f.write_str("x"),
            MapExpr::Y => f.write_str("y"),
            MapExpr::Pi => f.write_str("pi"),
            MapExpr::Param(name) => f.write_str(name),
            MapExpr::Neg(e) => write!(f, "(-{e})"),
            MapExpr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            MapExpr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A parsed lift: two component expressions, parameter bindings and an optional inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDefinition {
    pub fx: MapExpr,
    pub fy: MapExpr,
    pub params: Params,
    pub inverse: Option<(MapExpr, MapExpr)>,
    bound: [MapExpr; 2],
    bound_inverse: Option<[MapExpr; 2]>,
}

impl MapDefinition {
    fn new(fx: MapExpr, fy: MapExpr, params: Params, inverse: Option<(MapExpr, MapExpr)>) -> Self {
        let bound = [fx.bind(&params), fy.bind(&params)];
        let bound_inverse = inverse
            .as_ref()
            .map(|(gx, gy)| [gx.bind(&params), gy.bind(&params)]);
        Self {
            fx,
            fy,
            params,
            inverse,
            bound,
            bound_inverse,
        }
    }

    pub fn eval(&self, z: PlanePoint) -> Result<PlanePoint, DslError> {
        let empty = Params::new();
        Ok(Vec2::new(
            eval_expr(&self.bound[0], z.x, z.y, &empty)?,
            eval_expr(&self.bound[1], z.x, z.y, &empty)?,
        ))
    }

    pub fn eval_inverse(&self, z: PlanePoint) -> Option<Result<PlanePoint, DslError>> {
        let empty = Params::new();
        self.bound_inverse.as_ref().map(|[gx, gy]| {
            Ok(Vec2::new(
                eval_expr(gx, z.x, z.y, &empty)?,
                eval_expr(gy, z.x, z.y, &empty)?,
            ))
        })
    }

    pub fn has_inverse(&self) -> bool {
        self.inverse.is_some()
    }

    /// Checks the lift invariants numerically: commutation with integer
    /// translations and, when an inverse is given, `F^{-1}(F(z)) = z`.
    pub fn validate(&self) -> Result<(), DslError> {
        let lift = LiftMap::from_definition_unchecked(self.clone());
        let error =
            crate::lift::translate_commutation_check(&lift, LIFT_CHECK_SAMPLES, LIFT_CHECK_SEED)
                .expect("sample count is positive");
        if !(error <= LIFT_TOLERANCE) {
            return Err(DslError::NotALift { error });
        }
        if self.has_inverse() {
            let error = crate::lift::inverse_check(&lift, LIFT_CHECK_SAMPLES, LIFT_CHECK_SEED)
                .expect("definition has an inverse");
            if !(error <= LIFT_TOLERANCE) {
                return Err(DslError::BadInverse { error });
            }
        }
        Ok(())
    }
}

impl fmt::Display for MapDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ; {}", self.fx, self.fy)?;
        if let Some((gx, gy)) = &self.inverse {
            write!(f, " inverse {gx} ; {gy}")?;
        }
        for (i, (name, value)) in self.params.iter().enumerate() {
            let sep = if i == 0 { " where " } else { ", " };
            write!(f, "{sep}{name}={value:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, DslError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let column = i + 1;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit()
            || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit))
        {
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
            let value: f64 = text.parse().map_err(|_| DslError::Syntax {
                column,
                message: format!("malformed number '{text}'"),
            })?;
            if !value.is_finite() {
                return Err(DslError::Syntax {
                    column,
                    message: format!("number '{text}' is out of range"),
                });
            }
            out.push(Token {
                tok: Tok::Num(value),
                column,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(src[start..i].to_string()),
                column,
            });
        } else if "+-*/();,=".contains(c) {
            out.push(Token {
                tok: Tok::Sym(c),
                column,
            });
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or(c);
            return Err(DslError::Syntax {
                column,
                message: format!("unexpected character '{ch}'"),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        column: src.len() + 1,
    });
    Ok(out)
}

const KEYWORDS: [&str; 7] = ["x", "y", "pi", "sin", "cos", "where", "inverse"];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    // parameter uses, checked once the bindings are known
    uses: Vec<(String, usize)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax {
            column: self.peek().column,
            message: message.into(),
        })
    }

    fn expect_sym(&mut self, c: char) -> Result<(), DslError> {
        if self.peek().tok == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            self.syntax(format!(
                "expected '{c}', found {}",
                describe(&self.peek().tok)
            ))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    fn expr(&mut self) -> Result<MapExpr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.next();
            let rhs = self.term()?;
            lhs = MapExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<MapExpr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.next();
            let column = self.peek().column;
            let rhs = self.unary()?;
            if op == BinOp::Div && rhs == MapExpr::Num(0.0) {
                return Err(DslError::DivisionByZero { column });
            }
            lhs = MapExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<MapExpr, DslError> {
        if self.peek().tok == Tok::Sym('-') {
            self.next();
            Ok(MapExpr::Neg(Box::new(self.unary()?)))
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<MapExpr, DslError> {
        let token = self.next();
        match token.tok {
            Tok::Num(v) => Ok(MapExpr::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(MapExpr::X),
                "y" => Ok(MapExpr::Y),
                "pi" => Ok(MapExpr::Pi),
                "where" | "inverse" => Err(DslError::Syntax {
                    column: token.column,
                    message: format!("unexpected keyword '{name}'"),
                }),
                _ if self.peek().tok == Tok::Sym('(') => self.call(name, token.column),
                _ => {
                    self.uses.push((name.clone(), token.column));
                    Ok(MapExpr::Param(name))
                }
            },
            other => Err(DslError::Syntax {
                column: token.column,
                message: format!("expected an operand, found {}", describe(&other)),
            }),
        }
    }

    fn call(&mut self, name: String, column: usize) -> Result<MapExpr, DslError> {
        let func = Func::lookup(&name).ok_or_else(|| DslError::UnknownFunction {
            name: name.clone(),
            column,
        })?;
        self.expect_sym('(')?;
        let mut args = Vec::new();
        if self.peek().tok != Tok::Sym(')') {
            args.push(self.expr()?);
            while self.peek().tok == Tok::Sym(',') {
                self.next();
                args.push(self.expr()?);
            }
        }
        self.expect_sym(')')?;
        if args.len() != 1 {
            return Err(DslError::Arity {
                name,
                expected: 1,
                found: args.len(),
                column,
            });
        }
        Ok(MapExpr::Call(
            func,
            Box::new(args.pop().expect("one argument")),
        ))
    }

    fn binding(&mut self, params: &mut Params) -> Result<(), DslError> {
        let token = self.next();
        let name = match token.tok {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => name,
            other => {
                return Err(DslError::Syntax {
                    column: token.column,
                    message: format!("expected a parameter name, found {}", describe(&other)),
                })
            }
        };
        self.expect_sym('=')?;
        let column = self.peek().column;
        let mark = self.uses.len();
        let value_expr = self.expr()?;
        if value_expr.uses_coordinates() {
            self.uses.truncate(mark);
            return Err(DslError::Syntax {
                column,
                message: format!("value of '{name}' must be a constant"),
            });
        }
        let value = eval_expr(&value_expr, 0.0, 0.0, &Params::new())?;
        if params.insert(name.clone(), value).is_some() {
            return Err(DslError::Syntax {
                column: token.column,
                message: format!("parameter '{name}' bound twice"),
            });
        }
        Ok(())
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::End => "end of input".to_string(),
    }
}

/// Parses a map definition. Checks syntax and bindings only; lift validity is
/// checked separately by [`MapDefinition::validate`].
pub fn parse_map(source: &str) -> Result<MapDefinition, DslError> {
    let mut p = Parser {
        tokens: lex(source)?,
        pos: 0,
        uses: Vec::new(),
    };
    let fx = p.expr()?;
    p.expect_sym(';')?;
    let fy = p.expr()?;
    let mut inverse = None;
    if p.is_keyword("inverse") {
        p.next();
        let gx = p.expr()?;
        p.expect_sym(';')?;
        let gy = p.expr()?;
        inverse = Some((gx, gy));
    }
    let mut params = Params::new();
    while p.is_keyword("where") {
        p.next();
        p.binding(&mut params)?;
        while p.peek().tok == Tok::Sym(',') {
            p.next();
            p.binding(&mut params)?;
        }
    }
    if p.peek().tok != Tok::End {
        return p.syntax(format!("unexpected {}", describe(&p.peek().tok)));
    }
    if let Some((name, column)) = p.uses.iter().find(|(n, _)| !params.contains_key(n)) {
        return Err(DslError::UnboundParameter {
            name: name.clone(),
            column: *column,
        });
    }
    Ok(MapDefinition::new(fx, fy, params, inverse))
}

/// Parses a single expression (no `;`, no bindings).
pub fn parse_expr(source: &str) -> Result<MapExpr, DslError> {
    let mut p = Parser {
        tokens: lex(source)?,
        pos: 0,
        uses: Vec::new(),
    };
    let e = p.expr()?;
    if p.peek().tok != Tok::End {
        return p.syntax(format!("unexpected {}", describe(&p.peek().tok)));
    }
    Ok(e)
}
