//! Closed-form expression trees with symbolic differentiation, for patches
//! that are not polynomial (e.g. a sphere cap).

use std::fmt;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Neg(Arc<Expr>),
    /// `base^exponent` for a constant real exponent.
    Pow(Arc<Expr>, f64),
    Exp(Arc<Expr>),
}

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn c(v: f64) -> Expr {
        Expr::Const(v)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (Expr::Const(x), _) if *x == 0.0 => b,
            (_, Expr::Const(y)) if *y == 0.0 => a,
            _ => Expr::Add(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::neg(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (&a, &b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (Expr::Const(x), _) | (_, Expr::Const(x)) if *x == 0.0 => Expr::Const(0.0),
            (Expr::Const(x), _) if *x == 1.0 => b,
            (_, Expr::Const(y)) if *y == 1.0 => a,
            _ => Expr::Mul(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(-x),
            Expr::Neg(inner) => (*inner).clone(),
            other => Expr::Neg(Arc::new(other)),
        }
    }

    pub fn pow(a: Expr, p: f64) -> Expr {
        match a {
            _ if p == 0.0 => Expr::Const(1.0),
            _ if p == 1.0 => a,
            Expr::Const(x) => Expr::Const(x.powf(p)),
            other => Expr::Pow(Arc::new(other), p),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(x.exp()),
            other => Expr::Exp(Arc::new(other)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Neg(a) => -a.eval(x),
            Expr::Pow(a, p) => {
                let base = a.eval(x);
                if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
                    base.powi(*p as i32)
                } else {
                    base.powf(*p)
                }
            }
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::c(0.0),
            Expr::Var(i) => Expr::c(if *i == var { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => Expr::add(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff(var), (**b).clone()),
                Expr::mul((**a).clone(), b.diff(var)),
            ),
            Expr::Neg(a) => Expr::neg(a.diff(var)),
            Expr::Pow(a, p) => Expr::mul(
                Expr::mul(Expr::c(*p), Expr::pow((**a).clone(), p - 1.0)),
                a.diff(var),
            ),
            Expr::Exp(a) => Expr::mul(self.clone(), a.diff(var)),
        }
    }

    pub fn partial(&self, alpha: &[u32]) -> Expr {
        let mut e = self.clone();
        for (var, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                e = e.diff(var);
            }
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(v) if *v == 0.0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Mul(a, b) => write!(f, "{a}*{b}"),
            Expr::Neg(a) => write!(f, "-{a}"),
            Expr::Pow(a, p) => write!(f, "{a}^{p}"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}
