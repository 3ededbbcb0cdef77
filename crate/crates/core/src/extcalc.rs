//! Sparse exterior algebra over a finite coordinate list.
//!
//! A [`Form`] stores one coefficient per strictly increasing tuple of
//! coordinate positions. Positions refer to a shared [`CoordSystem`], so the
//! sign of a wedge product is the parity of the permutation that sorts the
//! concatenated tuples.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::jetspace::SectionExpr;
use crate::symexpr::{equal, Expr, Names, Poly, Symbol};

/// Errors raised by form operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtError {
    /// A pullback found no image for a coordinate.
    #[error("no image for coordinate `{0}`")]
    Unbound(String),
    /// A symbol is not a coordinate of the system in use.
    #[error("`{0}` is not a coordinate of this system")]
    NotACoordinate(String),
    /// Interior product of a function.
    #[error("cannot contract a 0-form")]
    ZeroDegree,
}

/// An ordered list of coordinates shared by the forms built on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordSystem {
    coords: Vec<Symbol>,
    index: HashMap<Symbol, usize>,
}

impl CoordSystem {
    /// Builds a system from distinct coordinates.
    pub fn new(coords: Vec<Symbol>) -> Arc<Self> {
        let mut index = HashMap::new();
        let mut unique = Vec::with_capacity(coords.len());
        for s in coords {
            if !index.contains_key(&s) {
                index.insert(s.clone(), unique.len());
                unique.push(s);
            }
        }
        Arc::new(Self { coords: unique, index })
    }

    /// The coordinates in order.
    pub fn coords(&self) -> &[Symbol] {
        &self.coords
    }

    /// Number of coordinates.
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    /// True for the empty system.
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Position of a coordinate.
    pub fn position(&self, s: &Symbol) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// The base coordinates `x^0, …` present in the system, in order.
    pub fn base_positions(&self) -> Vec<usize> {
        let mut out: Vec<(usize, usize)> = self
            .coords
            .iter()
            .enumerate()
            .filter_map(|(pos, s)| match s {
                Symbol::Base(i) => Some((*i, pos)),
                _ => None,
            })
            .collect();
        out.sort();
        out.into_iter().map(|(_, pos)| pos).collect()
    }
}

/// A vector field: one coefficient per coordinate direction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VectorField {
    components: BTreeMap<Symbol, Expr>,
}

impl VectorField {
    /// The zero field.
    pub fn new() -> Self {
        Self::default()
    }

    /// The coordinate field `∂/∂s`.
    pub fn coordinate(s: Symbol) -> Self {
        Self::new().with(s, Expr::one())
    }

    /// Adds `coeff · ∂/∂s`.
    pub fn with(mut self, s: Symbol, coeff: Expr) -> Self {
        let entry = self.components.entry(s).or_insert_with(Expr::zero);
        *entry = (entry.clone() + coeff).normal_form();
        self
    }

    /// The components.
    pub fn components(&self) -> &BTreeMap<Symbol, Expr> {
        &self.components
    }
}

/// A sparse exterior form with symbolic coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    coords: Arc<CoordSystem>,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sorts `key` in place and returns the permutation sign, or `None` if an
/// entry repeats.
fn sort_with_sign(key: &mut [usize]) -> Option<i64> {
    let mut sign = 1;
    for i in 1..key.len() {
        let mut j = i;
        while j > 0 && key[j - 1] > key[j] {
            key.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if key.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

impl Form {
    /// The zero form of the given degree.
    pub fn zero(coords: &Arc<CoordSystem>, degree: usize) -> Self {
        Self { coords: coords.clone(), degree, terms: BTreeMap::new() }
    }

    /// A function viewed as a 0-form.
    pub fn function(coords: &Arc<CoordSystem>, f: Expr) -> Self {
        let mut out = Self::zero(coords, 0);
        out.add_term(Vec::new(), f);
        out
    }

    /// The differential `ds` of a coordinate.
    pub fn differential(coords: &Arc<CoordSystem>, s: &Symbol) -> Result<Self, ExtError> {
        let pos = coords.position(s).ok_or_else(|| ExtError::NotACoordinate(s.to_string()))?;
        let mut out = Self::zero(coords, 1);
        out.add_term(vec![pos], Expr::one());
        Ok(out)
    }

    /// A single monomial `coeff · ds_1 ∧ … ∧ ds_k` in the listed order.
    pub fn monomial(coords: &Arc<CoordSystem>, coeff: Expr, symbols: &[Symbol]) -> Result<Self, ExtError> {
        let mut key = Vec::with_capacity(symbols.len());
        for s in symbols {
            key.push(coords.position(s).ok_or_else(|| ExtError::NotACoordinate(s.to_string()))?);
        }
        let mut out = Self::zero(coords, symbols.len());
        if let Some(sign) = sort_with_sign(&mut key) {
            out.add_term(key, Expr::int(sign) * coeff);
        }
        Ok(out)
    }

    /// The volume form `dx^0 ∧ … ∧ dx^{m−1}` over the base coordinates.
    pub fn volume(coords: &Arc<CoordSystem>) -> Self {
        let key = coords.base_positions();
        let mut out = Self::zero(coords, key.len());
        out.add_term(key, Expr::one());
        out
    }

    /// `d^{m−1}x_i = i(∂/∂x^i) d^m x`.
    pub fn volume_minus(coords: &Arc<CoordSystem>, i: usize) -> Self {
        Self::volume(coords)
            .interior(&VectorField::coordinate(Symbol::Base(i)))
            .expect("volume has positive degree")
    }

    fn add_term(&mut self, key: Vec<usize>, coeff: Expr) {
        let current = self.terms.remove(&key).unwrap_or_else(Expr::zero);
        let sum = (current + coeff).normal_form();
        if !sum.is_zero() {
            self.terms.insert(key, sum);
        }
    }

    /// The coordinate system.
    pub fn coords(&self) -> &Arc<CoordSystem> {
        &self.coords
    }

    /// The degree.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Stored terms keyed by increasing coordinate positions.
    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.terms
    }

    /// True if every coefficient vanishes.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of `ds_1 ∧ … ∧ ds_k` with the sign of the given order.
    pub fn coefficient(&self, symbols: &[Symbol]) -> Expr {
        let mut key = Vec::with_capacity(symbols.len());
        for s in symbols {
            match self.coords.position(s) {
                Some(p) => key.push(p),
                None => return Expr::zero(),
            }
        }
        match sort_with_sign(&mut key) {
            Some(sign) => self.terms.get(&key).map_or_else(Expr::zero, |c| (Expr::int(sign) * c.clone()).normal_form()),
            None => Expr::zero(),
        }
    }

    /// Sum of two forms of equal degree on the same system.
    pub fn add(&self, other: &Form) -> Form {
        assert_eq!(self.degree, other.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    /// Difference.
    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.scale(&Expr::int(-1)))
    }

    /// Multiplication by a function.
    pub fn scale(&self, f: &Expr) -> Form {
        let mut out = Form::zero(&self.coords, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * f);
        }
        out
    }

    /// Maps every coefficient through `f`.
    pub fn map_coefficients(&self, f: &dyn Fn(&Expr) -> Expr) -> Form {
        let mut out = Form::zero(&self.coords, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c));
        }
        out
    }

    /// Exterior product.
    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::zero(&self.coords, self.degree + other.degree);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let mut key: Vec<usize> = ka.iter().chain(kb).copied().collect();
                if let Some(sign) = sort_with_sign(&mut key) {
                    out.add_term(key, Expr::int(sign) * ca.clone() * cb.clone());
                }
            }
        }
        out
    }

    /// Exterior derivative; symbols that are not coordinates count as
    /// constants.
    pub fn exterior_d(&self) -> Form {
        let mut out = Form::zero(&self.coords, self.degree + 1);
        for (k, c) in &self.terms {
            let p = Poly::from_expr(c);
            for s in p.symbols() {
                let Some(pos) = self.coords.position(&s) else { continue };
                let mut key = Vec::with_capacity(k.len() + 1);
                key.push(pos);
                key.extend_from_slice(k);
                if let Some(sign) = sort_with_sign(&mut key) {
                    let partial = p.diff(&s).to_expr();
                    out.add_term(key, Expr::int(sign) * partial);
                }
            }
        }
        out
    }

    /// Interior product with a vector field, contracting the first slot.
    pub fn interior(&self, x: &VectorField) -> Result<Form, ExtError> {
        if self.degree == 0 {
            return Err(ExtError::ZeroDegree);
        }
        let mut by_pos: HashMap<usize, &Expr> = HashMap::new();
        for (s, c) in x.components() {
            let pos = self.coords.position(s).ok_or_else(|| ExtError::NotACoordinate(s.to_string()))?;
            by_pos.insert(pos, c);
        }
        let mut out = Form::zero(&self.coords, self.degree - 1);
        for (k, c) in &self.terms {
            for (slot, pos) in k.iter().enumerate() {
                if let Some(xc) = by_pos.get(pos) {
                    let mut key = k.clone();
                    key.remove(slot);
                    let sign = if slot % 2 == 0 { 1 } else { -1 };
                    out.add_term(key, Expr::int(sign) * c.clone() * (*xc).clone());
                }
            }
        }
        Ok(out)
    }

    /// Pullback along a map into this form's coordinates. `images` gives
    /// each source coordinate as an expression on `target`; coordinates
    /// without an image must themselves belong to `target`.
    pub fn pullback(&self, images: &dyn Fn(&Symbol) -> Option<Expr>, target: &Arc<CoordSystem>) -> Result<Form, ExtError> {
        let image_of = |s: &Symbol| -> Result<Expr, ExtError> {
            match images(s) {
                Some(e) => Ok(e),
                None if target.position(s).is_some() => Ok(Expr::sym(s.clone())),
                None => Err(ExtError::Unbound(s.to_string())),
            }
        };
        let differential = |s: &Symbol| -> Result<Form, ExtError> {
            let img = image_of(s)?;
            Ok(Form::function(target, img).exterior_d())
        };
        self.pullback_with(&image_of, &differential, target)
    }

    fn pullback_with(
        &self,
        image_of: &dyn Fn(&Symbol) -> Result<Expr, ExtError>,
        differential: &dyn Fn(&Symbol) -> Result<Form, ExtError>,
        target: &Arc<CoordSystem>,
    ) -> Result<Form, ExtError> {
        let substitute = |c: &Expr| -> Result<Expr, ExtError> {
            let mut map = BTreeMap::new();
            for s in c.symbols() {
                if self.coords.position(&s).is_some() {
                    map.insert(s.clone(), image_of(&s)?);
                }
            }
            Ok(c.substitute(&map))
        };
        let mut cache: HashMap<usize, Form> = HashMap::new();
        let mut out = Form::zero(target, self.degree);
        for (k, c) in &self.terms {
            let mut acc = Form::function(target, substitute(c)?);
            for pos in k {
                if acc.is_zero() {
                    break;
                }
                if !cache.contains_key(pos) {
                    cache.insert(*pos, differential(&self.coords.coords[*pos])?);
                }
                acc = acc.wedge(&cache[pos]);
            }
            if !acc.is_zero() {
                out = out.add(&acc);
            }
        }
        Ok(out)
    }

    /// Pullback to the base along a section. Components come from `s`;
    /// base coordinates map to themselves. A differential `dz` becomes
    /// `Σ_i D_i(z∘s) dx^i`, where `D_i` is `∂/∂x^i` on base coordinates and
    /// sends any other symbol left in the image to its opaque derivative.
    /// Mapping a coordinate to itself therefore yields a symbolic section.
    pub fn pullback_by_section(&self, s: &SectionExpr, base: &Arc<CoordSystem>) -> Result<Form, ExtError> {
        let image_of = |z: &Symbol| -> Result<Expr, ExtError> {
            match z {
                Symbol::Base(_) => Ok(Expr::sym(z.clone())),
                _ => s.get(z).cloned().ok_or_else(|| ExtError::Unbound(z.to_string())),
            }
        };
        let dirs: Vec<usize> = base
            .coords()
            .iter()
            .filter_map(|c| match c {
                Symbol::Base(i) => Some(*i),
                _ => None,
            })
            .collect();
        let differential = |z: &Symbol| -> Result<Form, ExtError> {
            let img = image_of(z)?;
            let mut out = Form::zero(base, 1);
            for &i in &dirs {
                let d = crate::jetspace::apply_derivation(&img, &|sym| match sym {
                    Symbol::Base(j) => (*j == i).then(Expr::one),
                    Symbol::Param(_) => None,
                    other => Some(Expr::sym(other.deriv(i))),
                });
                out.add_term(vec![base.position(&Symbol::Base(i)).expect("base coordinate")], d);
            }
            Ok(out)
        };
        self.pullback_with(&image_of, &differential, base)
    }

    /// Re-expresses the form on a larger (or reordered) system containing
    /// every coordinate of this one.
    pub fn embed(&self, target: &Arc<CoordSystem>) -> Result<Form, ExtError> {
        let mut out = Form::zero(target, self.degree);
        for (k, c) in &self.terms {
            let mut key = Vec::with_capacity(k.len());
            for pos in k {
                let s = &self.coords.coords[*pos];
                key.push(target.position(s).ok_or_else(|| ExtError::NotACoordinate(s.to_string()))?);
            }
            if let Some(sign) = sort_with_sign(&mut key) {
                out.add_term(key, Expr::int(sign) * c.clone());
            }
        }
        Ok(out)
    }

    /// Coefficientwise comparison under [`equal`]; forms on different
    /// systems are compared by coordinate names.
    pub fn equals(&self, other: &Form) -> bool {
        if self.degree != other.degree {
            return false;
        }
        let keys: std::collections::BTreeSet<Vec<Symbol>> = self
            .terms
            .keys()
            .map(|k| self.symbols_of(k))
            .chain(other.terms.keys().map(|k| other.symbols_of(k)))
            .collect();
        keys.iter().all(|k| equal(&self.coefficient(k), &other.coefficient(k)).holds())
    }

    fn symbols_of(&self, key: &[usize]) -> Vec<Symbol> {
        let mut v: Vec<Symbol> = key.iter().map(|p| self.coords.coords[*p].clone()).collect();
        v.sort();
        v
    }

    /// The matrix of the linear map `X ↦ i(X)self` in coordinate bases:
    /// one column per coordinate vector field, one row per basis
    /// `(degree−1)`-form that occurs.
    pub fn contraction_matrix(&self) -> Vec<Vec<Expr>> {
        if self.degree == 0 {
            return Vec::new();
        }
        let n = self.coords.len();
        let mut rows: BTreeMap<Vec<usize>, Vec<Expr>> = BTreeMap::new();
        for col in 0..n {
            let x = VectorField::coordinate(self.coords.coords[col].clone());
            let contracted = self.interior(&x).expect("positive degree");
            for (k, c) in contracted.terms {
                rows.entry(k).or_insert_with(|| vec![Expr::zero(); n])[col] = c;
            }
        }
        rows.into_values().collect()
    }

    /// Renders as `coeff · dz ∧ dw + …` in key order.
    pub fn render(&self, names: &dyn Names) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let basis: Vec<String> = k.iter().map(|p| format!("d{}", self.coords.coords[*p].render(names))).collect();
                if basis.is_empty() {
                    return c.render(names);
                }
                let coeff = c.render(names);
                let coeff = if matches!(c, Expr::Add(_)) { format!("({coeff})") } else { coeff };
                format!("{coeff} · {}", basis.join(" ∧ "))
            })
            .collect();
        parts.join(" + ")
    }
}
