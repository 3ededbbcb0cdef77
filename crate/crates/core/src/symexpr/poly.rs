//! Canonical polynomial representation backing the normal form.
//!
//! A polynomial is a sparse map from monomials to nonzero rational
//! coefficients. Monomials are products of atoms raised to nonzero integer
//! powers. Atoms are symbols, unary functions of normalized arguments, and
//! multi-term polynomials that appear with negative exponents.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::expr::{Expr, Func, Q};
use super::symbol::Symbol;

/// A non-constant factor of a monomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Atom {
    Sym(Symbol),
    Func(Func, Poly),
    Group(Poly),
}

impl Atom {
    fn weight(&self) -> i64 {
        match self {
            Atom::Sym(s) => s.weight(),
            _ => 0,
        }
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Atom::Sym(s) => {
                out.insert(s.clone());
            }
            Atom::Func(_, p) | Atom::Group(p) => p.collect_symbols(out),
        }
    }
}

/// A product of atoms with nonzero integer exponents, sorted by atom.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial {
    factors: Vec<(Atom, i64)>,
}

impl Monomial {
    fn single(atom: Atom, exp: i64) -> Self {
        if exp == 0 {
            return Self::default();
        }
        Self { factors: vec![(atom, exp)] }
    }

    /// The factors of the monomial.
    pub fn factors(&self) -> &[(Atom, i64)] {
        &self.factors
    }

    fn weight(&self) -> i64 {
        self.factors.iter().map(|(a, e)| a.weight() * e).sum()
    }

    fn degree(&self) -> i64 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    fn param_only(&self) -> bool {
        self.factors
            .iter()
            .all(|(a, _)| matches!(a, Atom::Sym(s) if s.is_param()))
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, ea) = &self.factors[i];
            let (b, eb) = &other.factors[j];
            match a.cmp(b) {
                Ordering::Less => {
                    out.push((a.clone(), *ea));
                    i += 1;
                }
                Ordering::Greater => {
                    out.push((b.clone(), *eb));
                    j += 1;
                }
                Ordering::Equal => {
                    if ea + eb != 0 {
                        out.push((a.clone(), ea + eb));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    fn without(&self, idx: usize, new_exp: i64) -> Monomial {
        let mut factors = self.factors.clone();
        if new_exp == 0 {
            factors.remove(idx);
        } else {
            factors[idx].1 = new_exp;
        }
        Monomial { factors }
    }
}

/// Term order used for rendering: monomials built only from parameters (and
/// the constant) go last; the rest ascend by derivative weight, then by
/// degree, then by factor list.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.param_only(), self.weight(), self.degree())
            .cmp(&(other.param_only(), other.weight(), other.degree()))
            .then_with(|| self.factors.cmp(&other.factors))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial over atoms with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Q>,
}

impl Poly {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Self::default()
    }

    /// The constant one.
    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    /// A constant polynomial.
    pub fn constant(c: Q) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::default(), c);
        p
    }

    /// A single symbol.
    pub fn symbol(s: &Symbol) -> Self {
        Self::atom_pow(Atom::Sym(s.clone()), 1)
    }

    fn atom_pow(atom: Atom, exp: i64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::single(atom, exp), Q::one());
        p
    }

    fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// Iterates over `(monomial, coefficient)` pairs in term order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    /// Number of terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True if there are no terms.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True for the zero polynomial.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant value, if the polynomial is constant.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.factors.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Sum.
    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&-Q::one()))
    }

    /// Multiplication by a rational constant.
    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Product with full expansion.
    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Integer power; negative powers of multi-term polynomials become
    /// grouped atoms.
    pub fn powi(&self, e: i64) -> Poly {
        if e == 0 {
            return Poly::one();
        }
        if e > 0 {
            let mut result = Poly::one();
            let mut base = self.clone();
            let mut k = e;
            while k > 0 {
                if k & 1 == 1 {
                    result = result.mul(&base);
                }
                k >>= 1;
                if k > 0 {
                    base = base.mul(&base);
                }
            }
            return result;
        }
        if self.terms.len() != 1 {
            return Poly::atom_pow(Atom::Group(self.clone()), e);
        }
        let (m, c) = self.terms.iter().next().unwrap();
        let mut coef = Q::one();
        for _ in 0..(-e) {
            coef /= c;
        }
        let mut out = Poly::constant(coef);
        for (atom, ex) in &m.factors {
            let new_exp = ex * e;
            let factor = match atom {
                Atom::Group(p) if new_exp > 0 => p.powi(new_exp),
                _ => Poly::atom_pow(atom.clone(), new_exp),
            };
            out = out.mul(&factor);
        }
        out
    }

    /// Converts a tree into canonical form.
    pub fn from_expr(e: &Expr) -> Poly {
        match e {
            Expr::Num(q) => Poly::constant(q.clone()),
            Expr::Sym(s) => Poly::symbol(s),
            Expr::Add(v) => v.iter().fold(Poly::zero(), |acc, t| acc.add(&Poly::from_expr(t))),
            Expr::Mul(v) => v.iter().fold(Poly::one(), |acc, t| {
                if acc.is_zero() {
                    acc
                } else {
                    acc.mul(&Poly::from_expr(t))
                }
            }),
            Expr::Pow(b, k) => Poly::from_expr(b).powi(*k),
            Expr::Div(a, b) => Poly::from_expr(a).mul(&Poly::from_expr(b).powi(-1)),
            Expr::Func(f, a) => func_atom(*f, Poly::from_expr(a)),
        }
    }

    /// Rebuilds a tree whose shape is determined by the canonical form.
    pub fn to_expr(&self) -> Expr {
        if self.terms.is_empty() {
            return Expr::zero();
        }
        Expr::sum(self.terms.iter().map(|(m, c)| term_expr(m, c)))
    }

    /// Partial derivative with respect to a symbol.
    pub fn diff(&self, s: &Symbol) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            for (idx, (atom, e)) in m.factors.iter().enumerate() {
                let da = atom_diff(atom, s);
                if da.is_zero() {
                    continue;
                }
                let mut rest = Poly::zero();
                rest.add_term(m.without(idx, e - 1), c * Q::from_integer(BigInt::from(*e)));
                out = out.add(&rest.mul(&da));
            }
        }
        out
    }

    /// Substitutes symbols by polynomial images.
    pub fn substitute(&self, f: &dyn Fn(&Symbol) -> Option<Poly>) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut acc = Poly::constant(c.clone());
            for (atom, e) in &m.factors {
                let image = match atom {
                    Atom::Sym(s) => f(s).unwrap_or_else(|| Poly::symbol(s)),
                    Atom::Func(g, a) => func_atom(*g, a.substitute(f)),
                    Atom::Group(p) => p.substitute(f),
                };
                acc = acc.mul(&image.powi(*e));
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        out
    }

    /// All symbols occurring anywhere, including inside function arguments.
    pub fn symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Symbol>) {
        for m in self.terms.keys() {
            for (a, _) in &m.factors {
                a.collect_symbols(out);
            }
        }
    }

    /// Splits the polynomial as `Σ_s coeff_s · s + rest` over the symbols
    /// selected by `is_target`, provided it is affine in them. Returns
    /// `None` when some target occurs nonlinearly or inside an atom.
    pub fn linear_parts(
        &self,
        is_target: &dyn Fn(&Symbol) -> bool,
    ) -> Option<(BTreeMap<Symbol, Poly>, Poly)> {
        let mut coeffs: BTreeMap<Symbol, Poly> = BTreeMap::new();
        let mut rest = Poly::zero();
        for (m, c) in &self.terms {
            let mut hit: Option<usize> = None;
            for (idx, (atom, e)) in m.factors.iter().enumerate() {
                match atom {
                    Atom::Sym(s) if is_target(s) => {
                        if *e != 1 || hit.is_some() {
                            return None;
                        }
                        hit = Some(idx);
                    }
                    Atom::Sym(_) => {}
                    Atom::Func(_, p) | Atom::Group(p) => {
                        if p.symbols().iter().any(is_target) {
                            return None;
                        }
                    }
                }
            }
            match hit {
                None => rest.add_term(m.clone(), c.clone()),
                Some(idx) => {
                    let Atom::Sym(s) = &m.factors[idx].0 else { unreachable!() };
                    let mut piece = Poly::zero();
                    piece.add_term(m.without(idx, 0), c.clone());
                    let entry = coeffs.entry(s.clone()).or_default();
                    *entry = entry.add(&piece);
                }
            }
        }
        coeffs.retain(|_, p| !p.is_zero());
        Some((coeffs, rest))
    }

    /// The term with the largest derivative weight (ties broken by the
    /// term order, last wins), if any.
    pub fn leading_by_weight(&self) -> Option<(&Monomial, &Q)> {
        self.terms
            .iter()
            .max_by(|(a, _), (b, _)| a.weight().cmp(&b.weight()).then_with(|| a.cmp(b)))
    }
}

fn term_expr(m: &Monomial, c: &Q) -> Expr {
    let factors: Vec<Expr> = m
        .factors
        .iter()
        .map(|(a, e)| {
            let base = match a {
                Atom::Sym(s) => Expr::Sym(s.clone()),
                Atom::Func(f, p) => Expr::func(*f, p.to_expr()),
                Atom::Group(p) => p.to_expr(),
            };
            if *e == 1 {
                base
            } else {
                Expr::Pow(Box::new(base), *e)
            }
        })
        .collect();
    if factors.is_empty() {
        return Expr::Num(c.clone());
    }
    if c.is_one() {
        return Expr::product(factors);
    }
    let mut v = Vec::with_capacity(factors.len() + 1);
    v.push(Expr::Num(c.clone()));
    v.extend(factors);
    Expr::Mul(v)
}

/// Applies a unary function, evaluating exactly where the value is rational.
fn func_atom(f: Func, arg: Poly) -> Poly {
    if let Some(c) = arg.as_constant() {
        if c.is_zero() {
            match f {
                Func::Sin | Func::Tanh | Func::Sqrt => return Poly::zero(),
                Func::Cos | Func::Exp | Func::Sech => return Poly::one(),
                Func::Ln => {}
            }
        }
        if f == Func::Ln && c.is_one() {
            return Poly::zero();
        }
        if f == Func::Sqrt && !c.is_negative() {
            let (n, d) = (c.numer().sqrt(), c.denom().sqrt());
            if &(&n * &n) == c.numer() && &(&d * &d) == c.denom() {
                return Poly::constant(Q::new(n, d));
            }
        }
    }
    Poly::atom_pow(Atom::Func(f, arg), 1)
}

fn atom_diff(atom: &Atom, s: &Symbol) -> Poly {
    match atom {
        Atom::Sym(t) => {
            if t == s {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
        Atom::Group(p) => p.diff(s),
        Atom::Func(f, a) => {
            let da = a.diff(s);
            if da.is_zero() {
                return da;
            }
            let minus_one = -Q::one();
            let outer = match f {
                Func::Sin => func_atom(Func::Cos, a.clone()),
                Func::Cos => func_atom(Func::Sin, a.clone()).scale(&minus_one),
                Func::Exp => func_atom(Func::Exp, a.clone()),
                Func::Ln => a.powi(-1),
                Func::Sqrt => func_atom(Func::Sqrt, a.clone())
                    .powi(-1)
                    .scale(&Q::new(BigInt::from(1), BigInt::from(2))),
                Func::Tanh => func_atom(Func::Sech, a.clone()).powi(2),
                Func::Sech => func_atom(Func::Sech, a.clone())
                    .mul(&func_atom(Func::Tanh, a.clone()))
                    .scale(&minus_one),
            };
            outer.mul(&da)
        }
    }
}
