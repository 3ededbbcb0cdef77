//! Coordinate model of jet bundles and the multimomentum spaces.
//!
//! A [`JetChart`] names the base coordinates, the fields and the constant
//! parameters, and fixes a jet order. It provides the symbol inventories of
//! the jet bundles and multimomentum bundles built over it, the coordinate
//! total derivatives, prolongation of sections and holonomy checks.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::multiindex::{self, MultiIndex};
use crate::symexpr::{equal, Expr, Names, Poly, Scope, Symbol};

/// Errors raised by jet-space operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JetError {
    /// A total derivative would need jets above the stated order cap.
    #[error("total derivative needs a jet of order {needed}, above the cap {cap}")]
    OrderOverflow { needed: u32, cap: u32 },
    /// The chart description is unusable.
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    /// A section component refers to something other than base coordinates
    /// and parameters.
    #[error("section component for `{component}` depends on `{symbol}`")]
    NotOnBase { component: String, symbol: String },
    /// A section lacks a component needed by the requested check.
    #[error("section has no component for `{0}`")]
    MissingComponent(String),
}

/// Coordinate model of `J^k π` together with its multimomentum spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JetChart {
    base: Vec<String>,
    fields: Vec<String>,
    params: Vec<String>,
    order: u32,
}

impl JetChart {
    /// Builds a chart; names must be distinct and nonempty.
    pub fn new(base: Vec<String>, fields: Vec<String>, params: Vec<String>, order: u32) -> Result<Self, JetError> {
        if base.is_empty() {
            return Err(JetError::InvalidChart("no base coordinates".into()));
        }
        if fields.is_empty() {
            return Err(JetError::InvalidChart("no fields".into()));
        }
        if order == 0 {
            return Err(JetError::InvalidChart("jet order must be at least 1".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in base.iter().chain(&fields).chain(&params) {
            if name.is_empty() || !seen.insert(name.clone()) {
                return Err(JetError::InvalidChart(format!("duplicate or empty name `{name}`")));
            }
        }
        Ok(Self { base, fields, params, order })
    }

    /// A chart with generated names (`x, y, z, …` and `u, v, w, …`).
    pub fn generic(m: usize, n: usize, order: u32) -> Self {
        let names = crate::symexpr::GenericNames;
        let base = (0..m).map(|i| names.base_name(i)).collect();
        let fields = (0..n).map(|a| names.field_name(a)).collect();
        Self { base, fields, params: Vec::new(), order: order.max(1) }
    }

    /// The same chart with a different jet order.
    pub fn with_order(&self, order: u32) -> Self {
        Self { order, ..self.clone() }
    }

    /// Base dimension `m`.
    pub fn m(&self) -> usize {
        self.base.len()
    }

    /// Fiber dimension `n`.
    pub fn n(&self) -> usize {
        self.fields.len()
    }

    /// Jet order `k`.
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Base coordinate names.
    pub fn base_names(&self) -> &[String] {
        &self.base
    }

    /// Field names.
    pub fn field_names(&self) -> &[String] {
        &self.fields
    }

    /// Name of base coordinate `i`.
    pub fn base_name(&self, i: usize) -> &str {
        &self.base[i]
    }

    /// Name of field `a`.
    pub fn field_name(&self, a: usize) -> &str {
        &self.fields[a]
    }

    /// Parameter names.
    pub fn params(&self) -> &[String] {
        &self.params
    }

    /// Parsing scope admitting jets up to `max_order`.
    pub fn scope(&self, max_order: u32) -> Scope {
        Scope {
            base: self.base.clone(),
            fields: self.fields.clone(),
            params: self.params.clone(),
            max_order,
        }
    }

    /// Base coordinate symbols.
    pub fn base_symbols(&self) -> Vec<Symbol> {
        (0..self.m()).map(Symbol::Base).collect()
    }

    /// Parameter symbols.
    pub fn param_symbols(&self) -> Vec<Symbol> {
        self.params.iter().map(|p| Symbol::param(p)).collect()
    }

    /// Jet symbols `u^α_I` with `lo ≤ |I| ≤ hi`, ordered by field and then
    /// by multi-index.
    pub fn jet_symbols(&self, lo: u32, hi: u32) -> Vec<Symbol> {
        let indices = multiindex::enumerate_range(self.m(), lo, hi);
        (0..self.n())
            .flat_map(|a| indices.iter().map(move |i| Symbol::jet(a, i.clone())))
            .collect()
    }

    /// Momentum symbols `p^I_α` with `lo ≤ |I| ≤ hi` (within `1..=2`).
    pub fn momentum_symbols(&self, lo: u32, hi: u32) -> Vec<Symbol> {
        let indices = multiindex::enumerate_range(self.m(), lo.max(1), hi.min(2));
        (0..self.n())
            .flat_map(|a| indices.iter().map(move |i| Symbol::momentum(a, i.clone())))
            .collect()
    }

    /// Coordinates of `J^k π` for the given `k`.
    pub fn jet_coordinates(&self, k: u32) -> Vec<Symbol> {
        let mut out = self.base_symbols();
        out.extend(self.jet_symbols(0, k));
        out
    }

    /// Coordinates of the restricted multimomentum bundle `J²π‡`.
    pub fn restricted_momentum_coordinates(&self) -> Vec<Symbol> {
        let mut out = self.jet_coordinates(1);
        out.extend(self.momentum_symbols(1, 2));
        out
    }

    /// Coordinates of the extended multimomentum bundle `J²π†`.
    pub fn extended_momentum_coordinates(&self) -> Vec<Symbol> {
        let mut out = self.restricted_momentum_coordinates();
        out.push(Symbol::ExtMomentum);
        out
    }

    /// Coordinates of the restricted unified space `W_r = J³π ×_{J¹π} J²π‡`.
    pub fn unified_restricted_coordinates(&self) -> Vec<Symbol> {
        let mut out = self.jet_coordinates(3);
        out.extend(self.momentum_symbols(1, 2));
        out
    }

    /// Coordinates of the extended unified space `W = J³π ×_{J¹π} J²π†`.
    pub fn unified_coordinates(&self) -> Vec<Symbol> {
        let mut out = self.unified_restricted_coordinates();
        out.push(Symbol::ExtMomentum);
        out
    }
}

impl Names for JetChart {
    fn base_name(&self, i: usize) -> String {
        self.base.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1))
    }

    fn field_name(&self, a: usize) -> String {
        self.fields.get(a).cloned().unwrap_or_else(|| format!("u{}", a + 1))
    }
}

/// Applies the derivation that sends each symbol `s` to `image(s)` (absent
/// images are zero): the result is `Σ_s ∂e/∂s · image(s)`.
pub fn apply_derivation(e: &Expr, image: &dyn Fn(&Symbol) -> Option<Expr>) -> Expr {
    let p = Poly::from_expr(e);
    let mut out = Poly::zero();
    for s in p.symbols() {
        if let Some(img) = image(&s) {
            let img = Poly::from_expr(&img);
            if !img.is_zero() {
                out = out.add(&p.diff(&s).mul(&img));
            }
        }
    }
    out.to_expr()
}

/// Image of a symbol under the coordinate total derivative `d/dx^dir`,
/// assuming jet orders have already been checked against the cap.
fn total_derivative_image(s: &Symbol, dir: usize) -> Option<Expr> {
    match s {
        Symbol::Base(i) => (*i == dir).then(Expr::one),
        Symbol::Jet { field, index } => {
            let mut e = index.entries().to_vec();
            e[dir] += 1;
            Some(Expr::sym(Symbol::jet(*field, MultiIndex::new(e))))
        }
        Symbol::Param(_) => None,
        Symbol::Momentum { .. } | Symbol::ExtMomentum | Symbol::Deriv { .. } | Symbol::Flow { .. } => {
            Some(Expr::sym(s.deriv(dir)))
        }
    }
}

/// Coordinate total derivative `d/dx^dir` on the order-`cap` chart.
///
/// Momenta, derivative symbols and multivector coefficients are treated as
/// section components: their images are opaque derivative symbols.
pub fn total_derivative(e: &Expr, dir: usize, cap: u32) -> Result<Expr, JetError> {
    let p = Poly::from_expr(e);
    if let Some(top) = p.symbols().iter().filter_map(Symbol::jet_order).max() {
        if top + 1 > cap {
            return Err(JetError::OrderOverflow { needed: top + 1, cap });
        }
    }
    Ok(apply_derivation(e, &|s| total_derivative_image(s, dir)))
}

/// Applies `d/dx^i` once for every unit of `index(i)`.
pub fn iterated_total_derivative(e: &Expr, index: &MultiIndex, cap: u32) -> Result<Expr, JetError> {
    index
        .directions()
        .into_iter()
        .try_fold(e.clone(), |acc, dir| total_derivative(&acc, dir, cap))
}

/// Components of a section over the base: each chart symbol it provides is
/// mapped to an expression in base coordinates and parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SectionExpr {
    components: BTreeMap<Symbol, Expr>,
}

impl SectionExpr {
    /// An empty section.
    pub fn new() -> Self {
        Self::default()
    }

    /// A section given by its field components only, over `m` base
    /// coordinates.
    pub fn from_fields(m: usize, fields: Vec<Expr>) -> Self {
        let mut s = Self::new();
        for (a, e) in fields.into_iter().enumerate() {
            s.set(Symbol::jet(a, MultiIndex::zero(m)), e);
        }
        s
    }

    /// Sets the component for `symbol`.
    pub fn set(&mut self, symbol: Symbol, e: Expr) {
        self.components.insert(symbol, e);
    }

    /// Builder form of [`SectionExpr::set`].
    pub fn with(mut self, symbol: Symbol, e: Expr) -> Self {
        self.set(symbol, e);
        self
    }

    /// The component for `symbol`, if provided.
    pub fn get(&self, symbol: &Symbol) -> Option<&Expr> {
        self.components.get(symbol)
    }

    /// All provided components.
    pub fn components(&self) -> &BTreeMap<Symbol, Expr> {
        &self.components
    }

    /// Checks that every component depends only on base coordinates and
    /// parameters.
    pub fn validate(&self, names: &dyn Names) -> Result<(), JetError> {
        for (sym, e) in &self.components {
            if let Some(bad) = e.symbols().into_iter().find(|s| !matches!(s, Symbol::Base(_) | Symbol::Param(_))) {
                return Err(JetError::NotOnBase { component: sym.render(names), symbol: bad.render(names) });
            }
        }
        Ok(())
    }
}

/// The `k`-th prolongation of the field components of `s`: every jet
/// component `u^α_I` with `1 ≤ |I| ≤ k` is filled by the iterated partial
/// derivative of `u^α`. Components other than jets are kept.
pub fn prolong(s: &SectionExpr, k: u32, chart: &JetChart) -> Result<SectionExpr, JetError> {
    s.validate(chart)?;
    let m = chart.m();
    let mut out = s.clone();
    for a in 0..chart.n() {
        let zero = Symbol::jet(a, MultiIndex::zero(m));
        let Some(base) = s.get(&zero).cloned() else { continue };
        let mut level: BTreeMap<MultiIndex, Expr> = BTreeMap::new();
        level.insert(MultiIndex::zero(m), base.normal_form());
        for order in 1..=k {
            for index in multiindex::enumerate(m, order) {
                let dir = index.entries().iter().position(|&e| e > 0).expect("nonzero index");
                let parent = index.sub_unit(dir).expect("positive entry");
                let value = level[&parent].diff(&Symbol::Base(dir));
                level.insert(index, value);
            }
        }
        for (index, value) in level {
            out.set(Symbol::jet(a, index), value);
        }
    }
    Ok(out)
}

/// One failed holonomy condition `ψ^α_{I+1_i} = ∂ψ^α_I/∂x^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HolonomyViolation {
    pub field: usize,
    pub index: MultiIndex,
    pub dir: usize,
}

/// Outcome of a holonomy check.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HolonomyReport {
    pub violations: Vec<HolonomyViolation>,
}

impl HolonomyReport {
    /// True when no condition failed.
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

fn component<'a>(s: &'a SectionExpr, sym: &Symbol, chart: &JetChart) -> Result<&'a Expr, JetError> {
    s.get(sym).ok_or_else(|| JetError::MissingComponent(sym.render(chart)))
}

/// Checks holonomy of type `r` in step form: `ψ^α_{I+1_i} = ∂ψ^α_I/∂x^i`
/// for every `|I| ≤ k − r`.
pub fn holonomy_check(s: &SectionExpr, r: u32, k: u32, chart: &JetChart) -> Result<HolonomyReport, JetError> {
    let m = chart.m();
    let mut report = HolonomyReport::default();
    if r > k {
        return Ok(report);
    }
    for a in 0..chart.n() {
        for index in multiindex::enumerate_range(m, 0, k - r) {
            let lower = component(s, &Symbol::jet(a, index.clone()), chart)?;
            for dir in 0..m {
                let upper_index = index.add_unit(dir).expect("direction in range");
                let upper = component(s, &Symbol::jet(a, upper_index), chart)?;
                if !equal(upper, &lower.diff(&Symbol::Base(dir))).holds() {
                    report.violations.push(HolonomyViolation { field: a, index: index.clone(), dir });
                }
            }
        }
    }
    Ok(report)
}

/// Checks holonomy of type `r` in direct form: `ψ^α_I = ∂^{|I|}ψ^α/∂x^I`
/// for every `1 ≤ |I| ≤ k − r + 1`. Violations are reported with the
/// offending index split as `I = J + 1_i`, `i` the first nonzero direction.
pub fn holonomy_check_direct(s: &SectionExpr, r: u32, k: u32, chart: &JetChart) -> Result<HolonomyReport, JetError> {
    let m = chart.m();
    let mut report = HolonomyReport::default();
    if r > k {
        return Ok(report);
    }
    for a in 0..chart.n() {
        let field = component(s, &Symbol::jet(a, MultiIndex::zero(m)), chart)?;
        for index in multiindex::enumerate_range(m, 1, k - r + 1) {
            let given = component(s, &Symbol::jet(a, index.clone()), chart)?;
            let derived = index
                .directions()
                .into_iter()
                .fold(field.clone(), |acc, dir| acc.diff(&Symbol::Base(dir)));
            if !equal(given, &derived).holds() {
                let dir = index.entries().iter().position(|&e| e > 0).expect("nonzero index");
                let lower = index.sub_unit(dir).expect("positive entry");
                report.violations.push(HolonomyViolation { field: a, index: lower, dir });
            }
        }
    }
    Ok(report)
}

/// Dimensions of the spaces built over an `(m, n)` chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    /// `dim J^k π` for the requested `k`.
    pub jet_k: u64,
    /// `dim J¹π`.
    pub jet1: u64,
    /// `dim J²π`.
    pub jet2: u64,
    /// `dim J³π`.
    pub jet3: u64,
    /// `dim Λ²_m(J¹π)`.
    pub lambda: u64,
    /// `dim J²π†`.
    pub extended_momenta: u64,
    /// `dim J²π‡`.
    pub restricted_momenta: u64,
    /// `dim W`.
    pub unified: u64,
    /// `dim W_r`.
    pub unified_restricted: u64,
}

/// `dim J^k π = m + n Σ_{r=0..k} binomial(m + r − 1, r)`.
pub fn jet_dimension(m: u64, n: u64, k: u64) -> u64 {
    m + n * (0..=k).map(|r| multiindex::binomial(m + r - 1, r)).sum::<u64>()
}

/// Dimension bookkeeping for the jet and multimomentum bundles.
pub fn dimensions(m: u64, n: u64, k: u64) -> Dimensions {
    let restricted = m + n + 2 * m * n + n * m * (m + 1) / 2;
    let unified = m + n + 2 * n * m + n * m * (m + 1) + n * m * (m + 1) * (m + 2) / 6 + 1;
    Dimensions {
        jet_k: jet_dimension(m, n, k),
        jet1: jet_dimension(m, n, 1),
        jet2: jet_dimension(m, n, 2),
        jet3: jet_dimension(m, n, 3),
        lambda: m + n + 2 * n * m + n * m * m + 1,
        extended_momenta: restricted + 1,
        restricted_momenta: restricted,
        unified,
        unified_restricted: unified - 1,
    }
}
