//! A small expression language for time-dependent modulation functions.
//!
//! Expressions are complex-valued functions of the time variable `t` and of
//! named scalar parameters. The grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;           (* right-associative *)
//! primary = number | "i" | "pi" | "t" | ident | func "(" expr ")" | "(" expr ")" ;
//! func    = "sin" | "cos" | "tan" | "sinh" | "cosh" | "tanh"
//!         | "exp" | "ln" | "sqrt" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ]
//!         | "." digits [ exponent ] ;
//! ident   = letter { letter | digit | "_" } ;  (* any other name is a parameter *)
//! ```
//!
//! `i` is the imaginary unit and `pi` is the circle constant; both are
//! reserved, as are the function names. Precedence from tightest to loosest
//! is `^`, unary minus, `* /`, `+ -`, so `-2^2 == -4` and `2^3^2 == 512`.
//!
//! Functions use principal branches (`ln`, `sqrt`, non-integer powers).
//! [`Expr::diff`] returns the exact symbolic derivative with respect to `t`.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Built-in elementary functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == name)
    }

    fn apply(self, z: C64) -> Result<C64, EvalError> {
        let value = match self {
            Func::Sin => z.sin(),
            Func::Cos => z.cos(),
            Func::Tan => {
                let c = z.cos();
                if c == C64::new(0.0, 0.0) {
                    return Err(EvalError::Domain("tan at a pole".into()));
                }
                z.sin() / c
            }
            Func::Sinh => z.sinh(),
            Func::Cosh => z.cosh(),
            Func::Tanh => z.tanh(),
            Func::Exp => z.exp(),
            Func::Ln => {
                if z == C64::new(0.0, 0.0) {
                    return Err(EvalError::Domain("ln(0)".into()));
                }
                z.ln()
            }
            Func::Sqrt => z.sqrt(),
        };
        if is_finite(value) {
            Ok(value)
        } else {
            Err(EvalError::Domain(format!("{} overflowed", self.name())))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Numeric literal. The parser only produces finite non-negative reals;
    /// complex values appear after parameter substitution or construction.
    Num(C64),
    /// The imaginary unit `i`.
    Imag,
    /// The constant `pi`.
    Pi,
    /// The time variable `t`.
    Time,
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => {
                *offset
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Named complex parameters referenced by expressions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamMap {
    values: BTreeMap<String, C64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("parameter `{0}` bound twice")]
    Duplicate(String),
    #[error("`{0}` is reserved and cannot be used as a parameter name")]
    Reserved(String),
    #[error("`{0}` is not a valid parameter name")]
    InvalidName(String),
}

impl ParamMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a binding; names must be fresh, non-reserved identifiers.
    pub fn insert(&mut self, name: &str, value: C64) -> Result<(), ParamError> {
        if is_reserved(name) {
            return Err(ParamError::Reserved(name.to_string()));
        }
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ParamError::InvalidName(name.to_string()));
        }
        if self.values.contains_key(name) {
            return Err(ParamError::Duplicate(name.to_string()));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    /// Builder form of [`ParamMap::insert`] for known-good names.
    ///
    /// Panics on a reserved, invalid or duplicate name.
    pub fn with(mut self, name: &str, value: impl Into<C64>) -> Self {
        self.insert(name, value.into())
            .unwrap_or_else(|e| panic!("{e}"));
        self
    }

    /// Replaces an existing binding or adds a new one.
    pub fn set(&mut self, name: &str, value: C64) -> Result<(), ParamError> {
        if self.values.contains_key(name) {
            self.values.insert(name.to_string(), value);
            Ok(())
        } else {
            self.insert(name, value)
        }
    }

    pub fn get(&self, name: &str) -> Option<C64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, C64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn is_reserved(name: &str) -> bool {
    matches!(name, "i" | "t" | "pi") || Func::from_name(name).is_some()
}

fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Parses an expression.
pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    parser.skip_ws();
    if parser.at_end() {
        return Err(parser.error("empty expression"));
    }
    let expr = parser.expr()?;
    parser.skip_ws();
    if !parser.at_end() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("identifier bytes are ASCII");
                self.skip_ws();
                if self.peek() == Some(b'(') {
                    let func =
                        Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                            offset: start,
                            name: name.to_string(),
                        })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected `)` after function argument"));
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name {
                    "t" => Ok(Expr::Time),
                    "i" => Ok(Expr::Imag),
                    "pi" => Ok(Expr::Pi),
                    _ if Func::from_name(name).is_some() => Err(ParseError::Syntax {
                        offset: start,
                        message: format!("function `{name}` must be applied to an argument"),
                    }),
                    _ => Ok(Expr::Param(name.to_string())),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` or `2exp(..)`: not an exponent
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ASCII digits");
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        if !value.is_finite() {
            return Err(ParseError::Syntax {
                offset: start,
                message: format!("number `{text}` is out of range"),
            });
        }
        Ok(Expr::Num(C64::new(value, 0.0)))
    }
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        Expr::Num(C64::new(value, 0.0))
    }

    pub fn complex(value: C64) -> Expr {
        Expr::Num(value)
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    /// Evaluates at time `t`.
    pub fn eval(&self, t: f64, params: &ParamMap) -> Result<C64, EvalError> {
        let value = match self {
            Expr::Num(z) => *z,
            Expr::Imag => C64::new(0.0, 1.0),
            Expr::Pi => C64::new(std::f64::consts::PI, 0.0),
            Expr::Time => C64::new(t, 0.0),
            Expr::Param(name) => params
                .get(name)
                .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?,
            // 0 − z keeps +0 imaginary parts on the principal branch side
            Expr::Neg(e) => C64::new(0.0, 0.0) - e.eval(t, params)?,
            Expr::Bin(op, l, r) => {
                let a = l.eval(t, params)?;
                let b = r.eval(t, params)?;
                binary(*op, a, b)?
            }
            Expr::Call(f, arg) => f.apply(arg.eval(t, params)?)?,
        };
        Ok(value)
    }

    /// Names of all parameters referenced by the tree.
    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Param(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_params(out),
            Expr::Bin(_, l, r) => {
                l.collect_params(out);
                r.collect_params(out);
            }
            Expr::Num(_) | Expr::Imag | Expr::Pi | Expr::Time => {}
        }
    }

    /// Replaces every parameter with its bound value.
    pub fn substitute(&self, params: &ParamMap) -> Result<Expr, EvalError> {
        Ok(match self {
            Expr::Param(name) => Expr::Num(
                params
                    .get(name)
                    .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?,
            ),
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(params)?)),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.substitute(params)?)),
            Expr::Bin(op, l, r) => Expr::bin(*op, l.substitute(params)?, r.substitute(params)?),
            other => other.clone(),
        })
    }

    pub fn depends_on_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on_time(),
            Expr::Bin(_, l, r) => l.depends_on_time() || r.depends_on_time(),
            Expr::Num(_) | Expr::Imag | Expr::Pi | Expr::Param(_) => false,
        }
    }

    /// Symbolic derivative with respect to `t`.
    ///
    /// Only trivial zero/one folding is applied; the result is otherwise
    /// unsimplified.
    pub fn diff(&self) -> Expr {
        use BinOp::*;
        match self {
            Expr::Num(_) | Expr::Imag | Expr::Pi | Expr::Param(_) => Expr::num(0.0),
            Expr::Time => Expr::num(1.0),
            Expr::Neg(u) => neg(u.diff()),
            Expr::Bin(Add, u, v) => add(u.diff(), v.diff()),
            Expr::Bin(Sub, u, v) => sub(u.diff(), v.diff()),
            Expr::Bin(Mul, u, v) => add(mul(u.diff(), (**v).clone()), mul((**u).clone(), v.diff())),
            Expr::Bin(Div, u, v) => {
                let num = sub(mul(u.diff(), (**v).clone()), mul((**u).clone(), v.diff()));
                div(num, pow((**v).clone(), Expr::num(2.0)))
            }
            Expr::Bin(Pow, u, v) => {
                let (u, v) = (&**u, &**v);
                if !v.depends_on_time() {
                    // v * u^(v-1) * u'
                    let reduced = pow(u.clone(), sub(v.clone(), Expr::num(1.0)));
                    mul(mul(v.clone(), reduced), u.diff())
                } else {
                    // u^v * (v' ln u + v u'/u)
                    let log_term = mul(v.diff(), Expr::call(Func::Ln, u.clone()));
                    let base_term = if u.depends_on_time() {
                        div(mul(v.clone(), u.diff()), u.clone())
                    } else {
                        Expr::num(0.0)
                    };
                    mul(self.clone(), add(log_term, base_term))
                }
            }
            Expr::Call(f, u) => {
                let u = &**u;
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, u.clone()),
                    Func::Cos => neg(Expr::call(Func::Sin, u.clone())),
                    Func::Tan => div(
                        Expr::num(1.0),
                        pow(Expr::call(Func::Cos, u.clone()), Expr::num(2.0)),
                    ),
                    Func::Sinh => Expr::call(Func::Cosh, u.clone()),
                    Func::Cosh => Expr::call(Func::Sinh, u.clone()),
                    Func::Tanh => sub(
                        Expr::num(1.0),
                        pow(Expr::call(Func::Tanh, u.clone()), Expr::num(2.0)),
                    ),
                    Func::Exp => self.clone(),
                    Func::Ln => div(Expr::num(1.0), u.clone()),
                    Func::Sqrt => div(Expr::num(1.0), mul(Expr::num(2.0), self.clone())),
                };
                mul(outer, u.diff())
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => PREC_NEG,
            Expr::Num(z) if z.im != 0.0 || z.re.is_sign_negative() => PREC_ATOM - 1,
            _ => PREC_ATOM,
        }
    }
}

fn binary(op: BinOp, a: C64, b: C64) -> Result<C64, EvalError> {
    let zero = C64::new(0.0, 0.0);
    let value = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == zero {
                return Err(EvalError::Domain("division by zero".into()));
            }
            a / b
        }
        BinOp::Pow => power(a, b)?,
    };
    if is_finite(value) {
        Ok(value)
    } else {
        Err(EvalError::Domain(format!("`{}` overflowed", op.symbol())))
    }
}

fn power(base: C64, exponent: C64) -> Result<C64, EvalError> {
    let zero = C64::new(0.0, 0.0);
    if exponent.im == 0.0 && exponent.re.fract() == 0.0 && exponent.re.abs() <= 64.0 {
        let n = exponent.re as i32;
        if base == zero && n < 0 {
            return Err(EvalError::Domain("zero raised to a negative power".into()));
        }
        return Ok(base.powi(n));
    }
    if base == zero {
        return if exponent.re > 0.0 {
            Ok(zero)
        } else {
            Err(EvalError::Domain(
                "zero raised to a non-positive power".into(),
            ))
        };
    }
    Ok((exponent * base.ln()).exp())
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(z) if *z == C64::new(0.0, 0.0))
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(z) if *z == C64::new(1.0, 0.0))
}

fn neg(e: Expr) -> Expr {
    match e {
        e if is_zero(&e) => e,
        Expr::Neg(inner) => *inner,
        e => Expr::Neg(Box::new(e)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::bin(BinOp::Add, a, b)
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        neg(b)
    } else {
        Expr::bin(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::num(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else if let Expr::Neg(inner) = b {
        neg(mul(a, *inner))
    } else {
        Expr::bin(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::num(0.0)
    } else if is_one(&b) {
        a
    } else {
        Expr::bin(BinOp::Div, a, b)
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_one(&b) {
        a
    } else {
        Expr::bin(BinOp::Pow, a, b)
    }
}

fn fmt_num(z: C64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if z.im == 0.0 {
        if z.re.is_sign_negative() {
            write!(f, "(-{})", -z.re)
        } else {
            write!(f, "{}", z.re)
        }
    } else {
        let sign = if z.im.is_sign_negative() { '-' } else { '+' };
        write!(f, "({}{}{}*i)", z.re, sign, z.im.abs())
    }
}

impl fmt::Display for Expr {
    /// Prints with the minimum parentheses needed to re-parse to the same
    /// tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(z) => fmt_num(*z, f),
            Expr::Imag => f.write_str("i"),
            Expr::Pi => f.write_str("pi"),
            Expr::Time => f.write_str("t"),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(e) => {
                if e.precedence() < PREC_NEG {
                    write!(f, "-({e})")
                } else {
                    write!(f, "-{e}")
                }
            }
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                let left_paren = if *op == BinOp::Pow {
                    l.precedence() <= p
                } else {
                    l.precedence() < p
                };
                let right_paren = match op {
                    // the exponent is parsed as a unary expression
                    BinOp::Pow => r.precedence() < PREC_NEG,
                    _ => r.precedence() <= p,
                };
                if left_paren {
                    write!(f, "({l})")?;
                } else {
                    write!(f, "{l}")?;
                }
                write!(f, "{}", op.symbol())?;
                if right_paren {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
