//! Scalar expression language for metric components.
//!
//! ```text
//! expr    = term { ("+" | "-") term }
//! term    = factor { ("*" | "/") factor }
//! factor  = "-" factor | power
//! power   = atom [ "^" exponent ]
//! exponent= ["-"] integer | "(" ["-"] integer ")"
//! atom    = number | "pi" | ident | func "(" expr ")" | "(" expr ")"
//! func    = "exp" | "log" | "sin" | "cos" | "sinh" | "cosh" | "sqrt"
//! ident   = "x1" | "x2" | "x3" | declared parameter
//! ```

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet4;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    /// `log` and `sqrt` can fault on their argument.
    pub fn may_fault(self) -> bool {
        matches!(self, Func::Log | Func::Sqrt)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    /// Coordinate `x1..x3`, stored zero-based.
    Var(usize),
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn prec(&self) -> u8 {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => PREC_NEG,
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
            Expr::Bin(..) => PREC_MUL,
            Expr::Neg(_) => PREC_NEG,
            Expr::Pow(..) => PREC_POW,
            _ => PREC_ATOM,
        }
    }

    /// Number of leaves (numbers, constants, variables, parameters).
    pub fn leaf_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) | Expr::Param(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.leaf_count(),
            Expr::Bin(_, a, b) => a.leaf_count() + b.leaf_count(),
        }
    }

    /// Parameter names referenced by the tree.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => out.push(p.clone()),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Bin(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            _ => {}
        }
    }

    /// Whether evaluation may raise a domain fault (division, `log`, `sqrt`, negative powers).
    pub fn may_fault(&self) -> bool {
        match self {
            Expr::Bin(BinOp::Div, ..) => true,
            Expr::Pow(_, n) if *n < 0 => true,
            Expr::Call(f, a) => f.may_fault() || a.may_fault(),
            Expr::Neg(a) | Expr::Pow(a, _) => a.may_fault(),
            Expr::Bin(_, a, b) => a.may_fault() || b.may_fault(),
            _ => false,
        }
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.prec() < min_prec {
        write!(f, "({})", e)
    } else {
        write!(f, "{}", e)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{}", v),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Param(p) => write!(f, "{}", p),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, PREC_NEG)
            }
            Expr::Bin(op, a, b) => {
                let (sym, p) = match op {
                    BinOp::Add => ("+", PREC_ADD),
                    BinOp::Sub => ("-", PREC_ADD),
                    BinOp::Mul => ("*", PREC_MUL),
                    BinOp::Div => ("/", PREC_MUL),
                };
                write_child(f, a, p)?;
                write!(f, " {} ", sym)?;
                write_child(f, b, p + 1)
            }
            Expr::Pow(a, n) => {
                write_child(f, a, PREC_ATOM)?;
                write!(f, "^{}", n)
            }
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), a),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer {
            src,
            toks: Vec::new(),
        };
        lx.scan()?;
        Ok(lx.toks)
    }

    fn scan(&mut self) -> Result<()> {
        let b = self.src.as_bytes();
        let mut i = 0;
        while i < b.len() {
            let c = b[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == b'.' {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        while j < b.len() && b[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &self.src[start..i];
                let v: f64 = text.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("malformed number `{}`", text),
                })?;
                self.toks.push((Tok::Num(v), start));
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                self.toks
                    .push((Tok::Ident(self.src[start..i].to_string()), start));
            } else if b"+-*/^(),".contains(&c) {
                self.toks.push((Tok::Sym(c as char), i));
                i += 1;
            } else {
                let ch = self.src[i..].chars().next().unwrap_or('?');
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character `{}`", ch),
                });
            }
        }
        self.toks.push((Tok::End, b.len()));
        Ok(())
    }
}

struct Parser<'p> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    params: &'p [&'p str],
}

impl<'p> Parser<'p> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            self.syntax(format!("expected `{}`", c))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let paren = *self.peek() == Tok::Sym('(');
        if paren {
            self.bump();
        }
        let neg = *self.peek() == Tok::Sym('-');
        if neg {
            self.bump();
        }
        let off = self.offset();
        let n = match self.bump().0 {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => v as i32,
            _ => {
                return Err(Error::Syntax {
                    offset: off,
                    message: "exponent must be an integer literal".into(),
                })
            }
        };
        if paren {
            self.expect(')')?;
        }
        Ok(Expr::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn atom(&mut self) -> Result<Expr> {
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Sym('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::Sym('(') {
                        return self.syntax(format!("expected `(` after `{}`", name));
                    }
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Sym(',') {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    self.expect(')')?;
                    if args.len() != 1 {
                        return Err(Error::Arity {
                            name,
                            expected: 1,
                            got: args.len(),
                            offset: off,
                        });
                    }
                    return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Pi),
                    "x1" => Ok(Expr::Var(0)),
                    "x2" => Ok(Expr::Var(1)),
                    "x3" => Ok(Expr::Var(2)),
                    _ if self.params.contains(&name.as_str()) => Ok(Expr::Param(name)),
                    _ => Err(Error::UnknownIdentifier { name, offset: off }),
                }
            }
            Tok::End => Err(Error::Syntax {
                offset: off,
                message: "unexpected end of input".into(),
            }),
            Tok::Sym(c) => Err(Error::Syntax {
                offset: off,
                message: format!("unexpected `{}`", c),
            }),
        }
    }
}

/// Parses `src`, accepting the coordinates `x1..x3` and the listed parameter names.
pub fn parse_expr(src: &str, params: &[&str]) -> Result<Expr> {
    let toks = Lexer::run(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        params,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.syntax("unexpected trailing input");
    }
    Ok(e)
}

/// Parameter bindings for evaluation.
pub type Params = BTreeMap<String, f64>;

/// Evaluates `e` as a jet of the given order at `p`.
pub fn eval_jet<T: Real>(e: &Expr, p: [T; 3], params: &Params, order: usize) -> Result<Jet4<T>> {
    let order = order.min(4);
    match e {
        Expr::Num(v) => Ok(Jet4::constant(p, T::c(*v), order)),
        Expr::Pi => Ok(Jet4::constant(p, T::PI(), order)),
        Expr::Var(i) => Ok(Jet4::variable(p, *i, order)),
        Expr::Param(name) => params
            .get(name)
            .map(|v| Jet4::constant(p, T::c(*v), order))
            .ok_or_else(|| Error::UnboundParameter(name.clone())),
        Expr::Neg(a) => Ok(-&eval_jet(a, p, params, order)?),
        Expr::Bin(op, a, b) => {
            let ja = eval_jet(a, p, params, order)?;
            let jb = eval_jet(b, p, params, order)?;
            match op {
                BinOp::Add => Ok(&ja + &jb),
                BinOp::Sub => Ok(&ja - &jb),
                BinOp::Mul => ja.mul(&jb),
                BinOp::Div => ja.div(&jb).map_err(|r| fault(b, r)),
            }
        }
        Expr::Pow(a, n) => {
            let ja = eval_jet(a, p, params, order)?;
            ja.powi(*n).map_err(|r| fault(a, r))
        }
        Expr::Call(func, a) => {
            let ja = eval_jet(a, p, params, order)?;
            ja.apply(*func).map_err(|r| fault(a, r))
        }
    }
}

/// Plain value of `e` at `p` (order-0 jet).
pub fn eval_value(e: &Expr, p: [f64; 3], params: &Params) -> Result<f64> {
    Ok(eval_jet::<f64>(e, p, params, 0)?.value())
}

fn fault(sub: &Expr, reason: String) -> Error {
    Error::DomainFault {
        subtree: sub.to_string(),
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_counts_leaves() {
        let e = parse_expr("x1^2 + sinh(x2)*x3", &[]).unwrap();
        assert!(matches!(e, Expr::Bin(BinOp::Add, ..)));
        assert_eq!(e.leaf_count(), 3);
    }

    #[test]
    fn trailing_operator_reports_offset() {
        assert_eq!(
            parse_expr("2*", &[]),
            Err(Error::Syntax {
                offset: 2,
                message: "unexpected end of input".into()
            })
        );
    }

    #[test]
    fn declared_parameter_accepted() {
        let e = parse_expr("exp(-(L*x1)^2)", &["L"]).unwrap();
        assert_eq!(e.params(), vec!["L".to_string()]);
        assert!(matches!(
            parse_expr("exp(-(L*x1)^2)", &[]),
            Err(Error::UnknownIdentifier { ref name, offset: 6 }) if name == "L"
        ));
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(
            parse_expr("exp(x1, x2)", &[]),
            Err(Error::Arity { expected: 1, got: 2, offset: 0, .. })
        ));
    }

    #[test]
    fn precedence_of_unary_minus_and_power() {
        let e = parse_expr("-x1^2", &[]).unwrap();
        assert_eq!(
            e,
            Expr::Neg(Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)))
        );
        let e = parse_expr("x1 - x2 - x3", &[]).unwrap();
        assert_eq!(e.to_string(), "x1 - x2 - x3");
        let e = parse_expr("x1 - (x2 - x3)", &[]).unwrap();
        assert_eq!(e.to_string(), "x1 - (x2 - x3)");
        let e = parse_expr("x1^-2 + x2^(-1)", &[]).unwrap();
        assert_eq!(e.to_string(), "x1^-2 + x2^-1");
    }

    #[test]
    fn print_parse_is_idempotent() {
        for src in [
            "1/(c^2*x3^2)",
            "-(x1+x2)^3*cos(pi*x3)",
            "4/(c^2*(1 + x1^2 + x2^2 + x3^2)^2)",
            "exp(2*x3) - -x1",
            "sqrt(1 + 0.25*x1^2)/log(2 + x2^2)",
        ] {
            let once = parse_expr(src, &["c"]).unwrap().to_string();
            let twice = parse_expr(&once, &["c"]).unwrap().to_string();
            assert_eq!(once, twice, "{}", src);
        }
    }

    #[test]
    fn fault_flags() {
        assert!(parse_expr("1/x1", &[]).unwrap().may_fault());
        assert!(parse_expr("log(x1)", &[]).unwrap().may_fault());
        assert!(!parse_expr("exp(x1)*x2", &[]).unwrap().may_fault());
    }

    #[test]
    fn domain_fault_names_subtree() {
        let e = parse_expr("log(x1 - 1)", &[]).unwrap();
        match eval_jet::<f64>(&e, [0.5, 0.0, 0.0], &Params::new(), 2) {
            Err(Error::DomainFault { subtree, .. }) => assert_eq!(subtree, "x1 - 1"),
            other => panic!("{:?}", other),
        }
        let e = parse_expr("1/(x1 - x1)", &[]).unwrap();
        assert!(matches!(
            eval_jet::<f64>(&e, [0.5, 0.0, 0.0], &Params::new(), 2),
            Err(Error::DomainFault { .. })
        ));
    }
}
