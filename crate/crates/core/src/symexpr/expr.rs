//! The expression tree and its tree-level operations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use thiserror::Error;

use super::poly::Poly;
use super::symbol::{GenericNames, Names, Symbol};

/// Exact rational constant.
pub type Q = BigRational;

/// Variable bindings for floating-point evaluation.
pub type Bindings = HashMap<Symbol, f64>;

/// Unary functions admitted in expressions.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Tanh,
    Sech,
}

impl Func {
    /// Textual name used by the parser and renderer.
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
        }
    }

    /// Looks up a function by name.
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "sech" => Func::Sech,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Ln => {
                if v <= 0.0 {
                    return Err(EvalError::Domain { func: "ln", value: v });
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err(EvalError::Domain { func: "sqrt", value: v });
                }
                v.sqrt()
            }
            Func::Tanh => v.tanh(),
            Func::Sech => 1.0 / v.cosh(),
        })
    }
}

/// Failures of floating-point evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol {0}")]
    Unbound(Symbol),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} undefined at {value}")]
    Domain { func: &'static str, value: f64 },
}

/// Immutable symbolic expression with exact rational constants.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Expr {
    Num(Q),
    Sym(Symbol),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, i64),
    Div(Box<Expr>, Box<Expr>),
    Func(Func, Box<Expr>),
}

impl Expr {
    /// Integer constant.
    pub fn int(n: i64) -> Expr {
        Expr::Num(Q::from_integer(BigInt::from(n)))
    }

    /// Rational constant `n/d`.
    pub fn rational(n: i64, d: i64) -> Expr {
        Expr::Num(Q::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Constant zero.
    pub fn zero() -> Expr {
        Expr::int(0)
    }

    /// Constant one.
    pub fn one() -> Expr {
        Expr::int(1)
    }

    /// Symbol leaf.
    pub fn sym(s: Symbol) -> Expr {
        Expr::Sym(s)
    }

    /// Unary function application.
    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::Func(f, Box::new(arg))
    }

    /// Integer power.
    pub fn pow(&self, e: i64) -> Expr {
        Expr::Pow(Box::new(self.clone()), e)
    }

    /// Sum of a list of expressions.
    pub fn sum<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let v: Vec<Expr> = items.into_iter().collect();
        match v.len() {
            0 => Expr::zero(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Add(v),
        }
    }

    /// Product of a list of expressions.
    pub fn product<I: IntoIterator<Item = Expr>>(items: I) -> Expr {
        let v: Vec<Expr> = items.into_iter().collect();
        match v.len() {
            0 => Expr::one(),
            1 => v.into_iter().next().unwrap(),
            _ => Expr::Mul(v),
        }
    }

    /// Canonical polynomial form: expanded, collected, sorted.
    pub fn normal_form(&self) -> Expr {
        Poly::from_expr(self).to_expr()
    }

    /// True if the normal form is the zero polynomial.
    pub fn is_zero(&self) -> bool {
        Poly::from_expr(self).is_zero()
    }

    /// The constant value, if the normal form is constant.
    pub fn as_rational(&self) -> Option<Q> {
        Poly::from_expr(self).as_constant()
    }

    /// Partial derivative with respect to `s`, in normal form.
    pub fn diff(&self, s: &Symbol) -> Expr {
        Poly::from_expr(self).diff(s).to_expr()
    }

    /// Replaces symbols by images, returning the normal form of the result.
    pub fn substitute(&self, images: &BTreeMap<Symbol, Expr>) -> Expr {
        self.substitute_with(&|s| images.get(s).cloned())
    }

    /// Replaces each symbol `s` for which `f(s)` is `Some`, in normal form.
    pub fn substitute_with(&self, f: &dyn Fn(&Symbol) -> Option<Expr>) -> Expr {
        let images = |s: &Symbol| f(s).map(|e| Poly::from_expr(&e));
        Poly::from_expr(self).substitute(&images).to_expr()
    }

    /// All symbols occurring in the expression.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Expr::Num(_) => {}
            Expr::Sym(s) => {
                out.insert(s.clone());
            }
            Expr::Add(v) | Expr::Mul(v) => v.iter().for_each(|e| e.collect_symbols(out)),
            Expr::Pow(b, _) => b.collect_symbols(out),
            Expr::Div(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
            Expr::Func(_, a) => a.collect_symbols(out),
        }
    }

    /// True if any symbol satisfies the predicate.
    pub fn any_symbol(&self, pred: &dyn Fn(&Symbol) -> bool) -> bool {
        self.symbols().iter().any(pred)
    }

    /// Floating-point evaluation.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        match self {
            Expr::Num(q) => Ok(q_to_f64(q)),
            Expr::Sym(s) => bindings.get(s).copied().ok_or_else(|| EvalError::Unbound(s.clone())),
            Expr::Add(v) => v.iter().try_fold(0.0, |acc, e| Ok(acc + e.eval(bindings)?)),
            Expr::Mul(v) => v.iter().try_fold(1.0, |acc, e| Ok(acc * e.eval(bindings)?)),
            Expr::Pow(b, e) => {
                let base = b.eval(bindings)?;
                if *e < 0 && base == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(base.powi(*e as i32))
            }
            Expr::Div(a, b) => {
                let den = b.eval(bindings)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                Ok(a.eval(bindings)? / den)
            }
            Expr::Func(f, a) => f.apply(a.eval(bindings)?),
        }
    }

    /// Renders the tree as text accepted by the parser.
    pub fn render(&self, names: &dyn Names) -> String {
        let mut out = String::new();
        self.write(names, &mut out, Prec::Sum);
        out
    }

    fn precedence(&self) -> Prec {
        match self {
            Expr::Num(q) => {
                if q.is_negative() {
                    Prec::Neg
                } else if q.is_integer() {
                    Prec::Atom
                } else {
                    Prec::Product
                }
            }
            Expr::Sym(_) | Expr::Func(..) => Prec::Atom,
            Expr::Add(v) if v.len() > 1 => Prec::Sum,
            Expr::Add(v) => v.first().map_or(Prec::Atom, Expr::precedence),
            Expr::Mul(v) => {
                if v.first().is_some_and(Expr::is_negative_num) {
                    Prec::Neg
                } else if v.len() == 1 {
                    v[0].precedence()
                } else {
                    Prec::Product
                }
            }
            Expr::Div(..) => Prec::Product,
            Expr::Pow(..) => Prec::Power,
        }
    }

    fn is_negative_num(&self) -> bool {
        matches!(self, Expr::Num(q) if q.is_negative())
    }

    fn write(&self, names: &dyn Names, out: &mut String, ctx: Prec) {
        if self.precedence() < ctx {
            out.push('(');
            self.write(names, out, Prec::Sum);
            out.push(')');
            return;
        }
        match self {
            Expr::Num(q) => out.push_str(&q.to_string()),
            Expr::Sym(s) => out.push_str(&s.render(names)),
            Expr::Add(v) => {
                if v.is_empty() {
                    out.push('0');
                }
                for (k, term) in v.iter().enumerate() {
                    if k == 0 {
                        term.write(names, out, Prec::Sum);
                        continue;
                    }
                    match term.negated_for_display() {
                        Some(pos) => {
                            out.push_str(" - ");
                            pos.write(names, out, Prec::Product);
                        }
                        None => {
                            out.push_str(" + ");
                            term.write(names, out, Prec::Product);
                        }
                    }
                }
            }
            Expr::Mul(v) => {
                if v.is_empty() {
                    out.push('1');
                    return;
                }
                if let Some(pos) = self.negated_for_display() {
                    out.push('-');
                    pos.write(names, out, Prec::Product);
                    return;
                }
                for (k, f) in v.iter().enumerate() {
                    if k > 0 {
                        out.push('*');
                        f.write(names, out, Prec::Power);
                    } else {
                        f.write(names, out, Prec::Product);
                    }
                }
            }
            Expr::Div(a, b) => {
                a.write(names, out, Prec::Product);
                out.push('/');
                b.write(names, out, Prec::Power);
            }
            Expr::Pow(b, e) => {
                b.write(names, out, Prec::Atom);
                out.push('^');
                out.push_str(&e.to_string());
            }
            Expr::Func(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(names, out, Prec::Sum);
                out.push(')');
            }
        }
    }

    /// For a term with a leading negative coefficient, the positive version.
    fn negated_for_display(&self) -> Option<Expr> {
        match self {
            Expr::Num(q) if q.is_negative() => Some(Expr::Num(-q.clone())),
            Expr::Mul(v) if v.first().is_some_and(Expr::is_negative_num) => {
                let Expr::Num(q) = &v[0] else { unreachable!() };
                let q = -q.clone();
                let mut rest: Vec<Expr> = Vec::with_capacity(v.len());
                if !q.is_one() {
                    rest.push(Expr::Num(q));
                }
                rest.extend(v[1..].iter().cloned());
                Some(Expr::product(rest))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Prec {
    Sum,
    Neg,
    Product,
    Power,
    Atom,
}

/// Converts an exact rational to the nearest double.
pub fn q_to_f64(q: &Q) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let scaled = (q * Q::from_integer(BigInt::from(1u64 << 53))).round();
            scaled.to_integer().to_f64().unwrap_or(f64::NAN) / (1u64 << 53) as f64
        }
    }
}

/// Exact rational for a small integer ratio.
pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&GenericNames))
    }
}

impl From<Symbol> for Expr {
    fn from(s: Symbol) -> Self {
        Expr::Sym(s)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Q> for Expr {
    fn from(q: Q) -> Self {
        Expr::Num(q)
    }
}

fn join(a: Expr, b: Expr, add: bool) -> Expr {
    let mut v = Vec::new();
    for e in [a, b] {
        match e {
            Expr::Add(items) if add => v.extend(items),
            Expr::Mul(items) if !add => v.extend(items),
            other => v.push(other),
        }
    }
    if add {
        Expr::Add(v)
    } else {
        Expr::Mul(v)
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        join(self, rhs, true)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        join(self, -rhs, true)
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        join(self, rhs, false)
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        match self {
            Expr::Num(q) => Expr::Num(-q),
            other => Expr::Mul(vec![Expr::int(-1), other]),
        }
    }
}

macro_rules! ref_ops {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { $tr::$m(self.clone(), rhs.clone()) }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr { $tr::$m(self.clone(), rhs) }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr { $tr::$m(self, rhs.clone()) }
        }
    )*};
}
ref_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -self.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multiindex::MultiIndex;

    fn u() -> Expr {
        Expr::sym(Symbol::jet(0, MultiIndex::zero(2)))
    }

    #[test]
    fn eval_basics() {
        let b: Bindings = [(Symbol::jet(0, MultiIndex::zero(2)), 3.0)].into_iter().collect();
        assert_eq!(u().pow(2).eval(&b).unwrap(), 9.0);
        assert_eq!((Expr::rational(1, 2) * u()).eval(&[(Symbol::jet(0, MultiIndex::zero(2)), 1.0)].into_iter().collect()).unwrap(), 0.5);
        assert_eq!(Expr::func(Func::Sech, Expr::zero()).eval(&Bindings::new()).unwrap(), 1.0);
    }

    #[test]
    fn eval_errors() {
        assert!(matches!(u().eval(&Bindings::new()), Err(EvalError::Unbound(_))));
        assert_eq!((Expr::one() / Expr::zero()).eval(&Bindings::new()), Err(EvalError::DivisionByZero));
        assert!(matches!(
            Expr::func(Func::Ln, Expr::int(-1)).eval(&Bindings::new()),
            Err(EvalError::Domain { func: "ln", .. })
        ));
    }

    #[test]
    fn render_signs_and_fractions() {
        let e = (Expr::rational(1, 2) * u() - Expr::int(3) * u().pow(2)).normal_form();
        assert_eq!(e.to_string(), "1/2*u - 3*u^2");
    }
}
