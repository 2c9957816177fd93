//! Expression language for scalar fields over chart coordinates and `t`.
//!
//! Grammar: numbers, the coordinate names of the model, `t`, `pi`, the
//! operators `+ - * / ^` (with `^` right associative and binding tighter than
//! unary minus) and the functions `sin cos tan exp ln sqrt abs atan2 min max
//! bump smoothstep wrap`. `bump(u)` is the compactly supported bump of a
//! squared radius and `wrap(a)` maps an angle to `[0, 2π)`.
//! Differentials are computed symbolically.

use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::hamiltonian::{bump, bump_derivative, smooth_step, DynHamiltonian, Hamiltonian};
use crate::manifold::{ModelKind, Vector};
use crate::scalar::{wrap_angle, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Atan2,
    Min,
    Max,
    Bump,
    BumpPrime,
    SmoothStep,
    SmoothStepPrime,
    Wrap,
    Sign,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "atan2" => Func::Atan2,
            "min" => Func::Min,
            "max" => Func::Max,
            "bump" => Func::Bump,
            "smoothstep" => Func::SmoothStep,
            "wrap" => Func::Wrap,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Atan2 => "atan2",
            Func::Min => "min",
            Func::Max => "max",
            Func::Bump => "bump",
            Func::BumpPrime => "bump'",
            Func::SmoothStep => "smoothstep",
            Func::SmoothStepPrime => "smoothstep'",
            Func::Wrap => "wrap",
            Func::Sign => "sign",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Atan2 | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
    /// `if a ≤ b { x } else { y }`, produced by differentiating `min`/`max`.
    IfLe(Box<Expr>, Box<Expr>, Box<Expr>, Box<Expr>),
}

fn smooth_step_derivative<T: Real>(u: T) -> T {
    let psi = |v: T| if v > T::zero() { (-T::one() / v).exp() } else { T::zero() };
    let dpsi = |v: T| if v > T::zero() { psi(v) / (v * v) } else { T::zero() };
    let (a, b) = (psi(u), psi(T::one() - u));
    let s = a + b;
    (dpsi(u) * b + a * dpsi(T::one() - u)) / (s * s)
}

impl Expr {
    pub fn eval<T: Real>(&self, t: T, x: &[T]) -> T {
        match self {
            Expr::Num(v) => T::lit(*v),
            Expr::Var(i) => x[*i],
            Expr::Time => t,
            Expr::Neg(a) => -a.eval(t, x),
            Expr::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Expr::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Expr::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Expr::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Expr::Pow(a, b) => match **b {
                Expr::Num(n) if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 => a.eval(t, x).powi(n as i32),
                _ => a.eval(t, x).powf(b.eval(t, x)),
            },
            Expr::IfLe(a, b, p, q) => {
                if a.eval(t, x) <= b.eval(t, x) {
                    p.eval(t, x)
                } else {
                    q.eval(t, x)
                }
            }
            Expr::Call(f, args) => {
                let u = args[0].eval(t, x);
                match f {
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => u.tan(),
                    Func::Exp => u.exp(),
                    Func::Ln => u.ln(),
                    Func::Sqrt => u.sqrt(),
                    Func::Abs => u.abs(),
                    Func::Atan2 => u.atan2(args[1].eval(t, x)),
                    Func::Min => u.min(args[1].eval(t, x)),
                    Func::Max => u.max(args[1].eval(t, x)),
                    Func::Bump => bump(u),
                    Func::BumpPrime => bump_derivative(u),
                    Func::SmoothStep => smooth_step(u),
                    Func::SmoothStepPrime => smooth_step_derivative(u),
                    Func::Wrap => wrap_angle(u),
                    Func::Sign => {
                        if u > T::zero() {
                            T::one()
                        } else if u < T::zero() {
                            -T::one()
                        } else {
                            T::zero()
                        }
                    }
                }
            }
        }
    }

    pub fn uses_time(&self) -> bool {
        match self {
            Expr::Time => true,
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(a) => a.uses_time(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.uses_time() || b.uses_time()
            }
            Expr::Call(_, args) => args.iter().any(Expr::uses_time),
            Expr::IfLe(a, b, p, q) => a.uses_time() || b.uses_time() || p.uses_time() || q.uses_time(),
        }
    }

    fn num(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Partial derivative in coordinate `var` (or in `t` for `None`), lightly simplified.
    pub fn derivative(&self, var: Option<usize>) -> Expr {
        use Expr::*;
        let d = |e: &Expr| e.derivative(var);
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if var == Some(*i) { 1.0 } else { 0.0 }),
            Time => Num(if var.is_none() { 1.0 } else { 0.0 }),
            Neg(a) => neg(d(a)),
            Add(a, b) => add(d(a), d(b)),
            Sub(a, b) => sub(d(a), d(b)),
            Mul(a, b) => add(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
            Div(a, b) => div(
                sub(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
                Pow(b.clone(), Box::new(Num(2.0))),
            ),
            Pow(a, b) => match b.num() {
                Some(n) => mul(mul(Num(n), pow((**a).clone(), Num(n - 1.0))), d(a)),
                None => mul(
                    self.clone(),
                    add(mul(d(b), call(Func::Ln, vec![(**a).clone()])), div(mul((**b).clone(), d(a)), (**a).clone())),
                ),
            },
            IfLe(a, b, p, q) => IfLe(a.clone(), b.clone(), Box::new(d(p)), Box::new(d(q))),
            Call(f, args) => {
                let u = args[0].clone();
                let du = d(&u);
                let outer = match f {
                    Func::Sin => call(Func::Cos, vec![u]),
                    Func::Cos => neg(call(Func::Sin, vec![u])),
                    Func::Tan => div(Num(1.0), pow(call(Func::Cos, vec![u]), Num(2.0))),
                    Func::Exp => self.clone(),
                    Func::Ln => div(Num(1.0), u),
                    Func::Sqrt => div(Num(0.5), self.clone()),
                    Func::Abs => call(Func::Sign, vec![u]),
                    Func::Bump => call(Func::BumpPrime, vec![u]),
                    Func::SmoothStep => call(Func::SmoothStepPrime, vec![u]),
                    Func::Wrap => Num(1.0),
                    Func::BumpPrime | Func::SmoothStepPrime | Func::Sign => {
                        // second derivatives are not part of the language
                        return Num(f64::NAN);
                    }
                    Func::Atan2 => {
                        let v = args[1].clone();
                        let dv = d(&v);
                        let r2 = add(pow(u.clone(), Num(2.0)), pow(v.clone(), Num(2.0)));
                        return div(sub(mul(v, du), mul(u, dv)), r2);
                    }
                    Func::Min | Func::Max => {
                        let v = args[1].clone();
                        let dv = d(&v);
                        return if *f == Func::Min {
                            IfLe(Box::new(u), Box::new(v), Box::new(du), Box::new(dv))
                        } else {
                            IfLe(Box::new(u), Box::new(v), Box::new(dv), Box::new(du))
                        };
                    }
                };
                mul(outer, du)
            }
        }
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.num(), b.num()) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(z), _) if z == 0.0 => b,
        (_, Some(z)) if z == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.num(), b.num()) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (_, Some(z)) if z == 0.0 => a,
        (Some(z), _) if z == 0.0 => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.num(), b.num()) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(z), _) | (_, Some(z)) if z == 0.0 => Expr::Num(0.0),
        (Some(o), _) if o == 1.0 => b,
        (_, Some(o)) if o == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.num(), b.num()) {
        (Some(z), _) if z == 0.0 => Expr::Num(0.0),
        (_, Some(o)) if o == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match b.num() {
        Some(z) if z == 0.0 => Expr::Num(1.0),
        Some(o) if o == 1.0 => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, args: Vec<Expr>) -> Expr {
    Expr::Call(f, args)
}

/// Prints with full parenthesization; variables are printed as `x0, x1, …`
/// unless names are supplied through [`Expr::display`].
pub struct Display<'a> {
    expr: &'a Expr,
    names: &'a [&'a str],
}

impl Expr {
    pub fn display<'a>(&'a self, names: &'a [&'a str]) -> Display<'a> {
        Display { expr: self, names }
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e| Display { expr: e, names: self.names };
        match self.expr {
            Expr::Num(v) if *v < 0.0 => write!(f, "({v:?})"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => f.write_str(n),
                None => write!(f, "x{i}"),
            },
            Expr::Time => f.write_str("t"),
            Expr::Neg(a) => write!(f, "(-{})", sub(a)),
            Expr::Add(a, b) => write!(f, "({} + {})", sub(a), sub(b)),
            Expr::Sub(a, b) => write!(f, "({} - {})", sub(a), sub(b)),
            Expr::Mul(a, b) => write!(f, "({} * {})", sub(a), sub(b)),
            Expr::Div(a, b) => write!(f, "({} / {})", sub(a), sub(b)),
            Expr::Pow(a, b) => write!(f, "({} ^ {})", sub(a), sub(b)),
            Expr::IfLe(a, b, p, q) => write!(f, "[{} <= {} ? {} : {}]", sub(a), sub(b), sub(p), sub(q)),
            Expr::Call(g, args) => {
                write!(f, "{}(", g.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{}", sub(a))?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn error(position: usize, message: impl Into<String>) -> LabError {
    LabError::Expression { position, message: message.into() }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>> {
    let bytes: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = bytes[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| error(start, format!("bad number `{text}`")))?;
            out.push((start, Token::Num(v)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_alphanumeric() || bytes[i] == '_') {
                i += 1;
            }
            out.push((start, Token::Ident(bytes[start..i].iter().collect())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Token::Op(c)));
            i += 1;
        } else {
            return Err(error(i, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.0)
    }

    fn expect(&mut self, op: char) -> Result<()> {
        match self.peek() {
            Some(Token::Op(c)) if *c == op => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(error(self.here(), format!("expected `{op}`"))),
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let at = self.here();
        let mut lhs = match self.tokens.get(self.pos).cloned() {
            None => return Err(error(at, "unexpected end of input")),
            Some((_, Token::Num(v))) => {
                self.pos += 1;
                Expr::Num(v)
            }
            Some((_, Token::Op('-'))) => {
                self.pos += 1;
                neg_node(self.expr(25)?)
            }
            Some((_, Token::Op('+'))) => {
                self.pos += 1;
                self.expr(25)?
            }
            Some((_, Token::Op('('))) => {
                self.pos += 1;
                let e = self.expr(0)?;
                self.expect(')')?;
                e
            }
            Some((_, Token::Ident(name))) => {
                self.pos += 1;
                self.ident(&name, at)?
            }
            Some((_, Token::Op(c))) => return Err(error(at, format!("unexpected `{c}`"))),
        };
        loop {
            let op = match self.peek() {
                Some(Token::Op(c)) if "+-*/^".contains(*c) => *c,
                Some(Token::Op(')')) | Some(Token::Op(',')) | None => break,
                Some(_) => return Err(error(self.here(), "expected an operator")),
            };
            let (lbp, rbp) = match op {
                '+' | '-' => (10, 11),
                '*' | '/' => (20, 21),
                _ => (31, 30),
            };
            if lbp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(rbp)?;
            let (a, b) = (Box::new(lhs), Box::new(rhs));
            lhs = match op {
                '+' => Expr::Add(a, b),
                '-' => Expr::Sub(a, b),
                '*' => Expr::Mul(a, b),
                '/' => Expr::Div(a, b),
                _ => Expr::Pow(a, b),
            };
        }
        Ok(lhs)
    }

    fn ident(&mut self, name: &str, at: usize) -> Result<Expr> {
        if let Some(f) = Func::lookup(name) {
            self.expect('(')?;
            let mut args = vec![self.expr(0)?];
            while let Some(Token::Op(',')) = self.peek() {
                self.pos += 1;
                args.push(self.expr(0)?);
            }
            self.expect(')')?;
            if args.len() != f.arity() {
                return Err(error(at, format!("`{name}` takes {} argument(s), got {}", f.arity(), args.len())));
            }
            return Ok(Expr::Call(f, args));
        }
        if name == "pi" {
            return Ok(Expr::Num(std::f64::consts::PI));
        }
        if name == "t" {
            return Ok(Expr::Time);
        }
        match self.vars.iter().position(|v| *v == name) {
            Some(i) => Ok(Expr::Var(i)),
            None => Err(error(at, format!("unknown name `{name}`"))),
        }
    }
}

fn neg_node(e: Expr) -> Expr {
    Expr::Neg(Box::new(e))
}

/// Parses `src` with the given coordinate names.
pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
    let mut p = Parser { tokens: tokenize(src)?, pos: 0, vars, end: src.chars().count() };
    let e = p.expr(0)?;
    if p.pos != p.tokens.len() {
        return Err(error(p.here(), "trailing input"));
    }
    Ok(e)
}

/// A field given by an expression, with a symbolic differential.
#[derive(Debug, Clone)]
pub struct ExprHamiltonian {
    pub source: String,
    pub expr: Expr,
    pub gradient: Vec<Expr>,
    autonomous: bool,
}

impl ExprHamiltonian {
    pub fn new(src: &str, model: ModelKind) -> Result<Self> {
        let names = model.coordinate_names();
        let expr = parse(src, names)?;
        let gradient = (0..names.len()).map(|i| expr.derivative(Some(i))).collect();
        Ok(Self { source: src.to_string(), autonomous: !expr.uses_time(), expr, gradient })
    }
}

impl<T: Real> Hamiltonian<T> for ExprHamiltonian {
    fn value(&self, t: T, x: &[T]) -> T {
        self.expr.eval(t, x)
    }

    fn differential(&self, t: T, x: &[T]) -> Vector<T> {
        self.gradient.iter().map(|g| g.eval(t, x)).collect()
    }

    fn is_autonomous(&self) -> bool {
        self.autonomous
    }
}

pub fn compile_hamiltonian<T: Real>(src: &str, model: ModelKind) -> Result<DynHamiltonian<T>> {
    Ok(Arc::new(ExprHamiltonian::new(src, model)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::central_difference;
    use proptest::prelude::*;

    const V: &[&str] = &["x", "y", "z"];

    fn ev(src: &str, x: &[f64]) -> f64 {
        parse(src, V).unwrap().eval(0.5, x)
    }

    #[test]
    fn precedence_and_associativity() {
        let x = [2.0, 3.0, 0.0];
        assert_eq!(ev("1 + 2 * 3", &x), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", &x), 512.0);
        assert_eq!(ev("-x ^ 2", &x), -4.0);
        assert_eq!(ev("(1 + 2) * 3 - 4 / 2", &x), 7.0);
        assert_eq!(ev("x - y - 1", &x), -2.0);
        assert_eq!(ev("2 * t", &x), 1.0);
        assert_eq!(ev("1.5e-1 * 2E1", &x), 3.0);
        assert_eq!(ev("max(x, y) + min(x, y)", &x), 5.0);
        assert!((ev("atan2(1, 1)", &x) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((ev("wrap(-pi / 2)", &x) - 1.5 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(ev("bump(x)", &x), 0.0);
        assert_eq!(ev("bump(0)", &x), 1.0);
    }

    #[test]
    fn errors_carry_positions() {
        for (src, pos) in [("1 +", 3), ("sin(x", 5), ("foo(x)", 0), ("x $ y", 2), ("atan2(x)", 0), ("x y", 2), ("q1", 0)] {
            match parse(src, V) {
                Err(LabError::Expression { position, .. }) => assert_eq!(position, pos, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    #[test]
    fn derivatives_match_hand_computation() {
        let e = parse("x^2 * sin(y) + exp(z) / x", V).unwrap();
        let p = [1.5, 0.7, -0.3];
        let dx = e.derivative(Some(0)).eval(0.0, &p);
        let want = 2.0 * 1.5 * 0.7f64.sin() - (-0.3f64).exp() / 2.25;
        assert!((dx - want).abs() < 1e-14);
        let h = ExprHamiltonian::new("3*y*smoothstep((6 - sqrt(x^2 + y^2))/1.5)", ModelKind::R3Standard).unwrap();
        assert!(Hamiltonian::<f64>::is_autonomous(&h));
        let q = [4.0, 3.5, 0.0];
        let g = Hamiltonian::<f64>::differential(&h, 0.0, &q);
        let fd = central_difference(|x: &[f64]| Hamiltonian::<f64>::value(&h, 0.0, x), &q, 1e-4);
        for i in 0..3 {
            assert!((g[i] - fd[i]).abs() < 1e-8, "{i}: {} vs {}", g[i], fd[i]);
        }
        let td = ExprHamiltonian::new("t * theta", ModelKind::S1Circle).unwrap();
        assert!(!Hamiltonian::<f64>::is_autonomous(&td));
        assert_eq!(parse("t * x", V).unwrap().derivative(None).eval(0.0, &[2.0, 0.0, 0.0]), 2.0);
    }

    fn leaf() -> impl Strategy<Value = String> {
        prop_oneof![
            Just("x".to_string()),
            Just("y".to_string()),
            Just("z".to_string()),
            (0.1f64..3.0).prop_map(|v| format!("{v:.3}")),
        ]
    }

    fn smooth_expr() -> impl Strategy<Value = String> {
        leaf().prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (2 + sin({b})))")),
                inner.clone().prop_map(|a| format!("sin({a})")),
                inner.clone().prop_map(|a| format!("cos({a})")),
                inner.clone().prop_map(|a| format!("exp(sin({a}))")),
                inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
                inner.clone().prop_map(|a| format!("ln(2 + cos({a}))")),
                inner.clone().prop_map(|a| format!("({a})^3")),
                inner.prop_map(|a| format!("bump(sin({a})^2 / 2)")),
            ]
        })
    }

    proptest! {
        #[test]
        fn symbolic_gradient_matches_finite_differences(
            src in smooth_expr(),
            p in prop::collection::vec(-1.5f64..1.5, 3),
        ) {
            let e = parse(&src, V).unwrap();
            let v = e.eval(0.0, &p);
            prop_assume!(v.is_finite() && v.abs() < 1e6);
            let fd = central_difference(|x: &[f64]| e.eval(0.0, x), &p, 1e-4);
            for i in 0..3 {
                let g = e.derivative(Some(i)).eval(0.0, &p);
                let scale = 1.0 + g.abs().max(fd[i].abs());
                prop_assert!((g - fd[i]).abs() <= 1e-5 * scale, "{} d{}: {} vs {}", src, i, g, fd[i]);
            }
        }

        #[test]
        fn display_round_trips(src in smooth_expr(), p in prop::collection::vec(-1.5f64..1.5, 3)) {
            let e = parse(&src, V).unwrap();
            let again = parse(&e.display(V).to_string(), V).unwrap();
            let (a, b) = (e.eval(0.0, &p), again.eval(0.0, &p));
            prop_assert!(a == b || (a.is_nan() && b.is_nan()));
        }
    }
}
