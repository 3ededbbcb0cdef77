//! Hamiltonian side: sections of the Legendre map, the Hamiltonian function
//! in the regular and almost-regular cases, the image submanifold of the
//! Legendre map, Hamilton-Cartan forms and Hamilton-De Donder-Weyl
//! equations.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::extcalc::{CoordSystem, ExtError, Form};
use crate::jetspace::JetChart;
use crate::multiindex::{self, sym_factor, MultiIndex};
use crate::symexpr::{equal, q, Expr, Poly, Symbol};
use crate::theory::{extended_legendre, liouville_pattern, orient, restricted_legendre, EquationSet, LagrangianProblem, TheoryError};
use crate::unified::contraction_equations;

/// Errors raised by Hamiltonian derivations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamError {
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Ext(#[from] ExtError),
    /// Composing the Legendre map with the section misses a momentum.
    #[error("section check failed for {momentum}: Legendre image composed with the section gives {found}")]
    SectionViolation { momentum: String, found: String },
    /// A momentum image is not affine in the jets of order two and three.
    #[error("Legendre image of {momentum} is not affine in the jets of order 2 and 3")]
    NotAffine { momentum: String },
    /// The automatic inversion only handles a diagonal quadratic dependence
    /// on the second-order jets.
    #[error("automatic Legendre section needs a diagonal quadratic dependence on second-order jets: {0}")]
    NotDiagonal(String),
}

/// A section of the restricted Legendre map: images of the order-2 and
/// order-3 jets in terms of `(x, u, u_i)` and momenta, or coordinates of a
/// submanifold of the momentum space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LegendreSection {
    images: BTreeMap<Symbol, Expr>,
}

impl LegendreSection {
    /// Builds a section from jet images; missing higher jets map to 0.
    pub fn new(images: BTreeMap<Symbol, Expr>) -> Self {
        Self { images: images.into_iter().map(|(s, e)| (s, e.normal_form())).collect() }
    }

    /// Image of a jet coordinate, defaulting to 0 for orders 2 and 3 and to
    /// the symbol itself otherwise.
    pub fn image(&self, s: &Symbol) -> Expr {
        if let Some(e) = self.images.get(s) {
            return e.clone();
        }
        match s.jet_order() {
            Some(2 | 3) => Expr::zero(),
            _ => Expr::sym(s.clone()),
        }
    }

    /// Explicit images.
    pub fn images(&self) -> &BTreeMap<Symbol, Expr> {
        &self.images
    }

    /// Composes an expression on `J³π` with the section.
    pub fn compose(&self, e: &Expr) -> Expr {
        e.substitute_with(&|s| match s.jet_order() {
            Some(2 | 3) => Some(self.image(s)),
            _ => None,
        })
        .normal_form()
    }

    /// Checks `FL ∘ section = embedding`: every restricted momentum image,
    /// composed with the section, equals the momentum itself or its image
    /// under `embedding` when that momentum was eliminated.
    pub fn check(&self, prob: &LagrangianProblem, embedding: &BTreeMap<Symbol, Expr>) -> Result<(), HamError> {
        let map = restricted_legendre(prob)?;
        for (p, image) in &map.restricted {
            let composed = self.compose(image);
            let expected = embedding.get(p).cloned().unwrap_or_else(|| Expr::sym(p.clone()));
            if !equal(&composed, &expected).holds() {
                return Err(HamError::SectionViolation {
                    momentum: p.render(prob.chart()),
                    found: composed.render(prob.chart()),
                });
            }
        }
        Ok(())
    }
}

/// The Hamiltonian function of a regular problem through a section `Υ`:
/// `H = p^i u_i + p^I Υ*u_I − Υ*L`.
pub fn ham_function_regular(prob: &LagrangianProblem, section: &LegendreSection) -> Result<Expr, HamError> {
    section.check(prob, &BTreeMap::new())?;
    let chart = prob.chart();
    let mut h = -section.compose(prob.lagrangian());
    for p in chart.momentum_symbols(1, 2) {
        let Symbol::Momentum { field, index } = &p else { unreachable!() };
        h = h + Expr::sym(p.clone()) * section.image(&Symbol::jet(*field, index.clone()));
    }
    Ok(h.normal_form())
}

/// The Hamiltonian function on the image submanifold: `H = −σ*(F̃L*p)`.
pub fn ham_function_almost_regular(
    prob: &LagrangianProblem,
    image: &ImageSubmanifold,
    section: &LegendreSection,
) -> Result<Expr, HamError> {
    section.check(prob, &image.embedding)?;
    let extended = extended_legendre(prob)?;
    let p = extended.extended_p.expect("extended map carries the scalar momentum");
    Ok((-section.compose(&p)).normal_form())
}

/// Inverts the Legendre map when the Lagrangian depends on each
/// second-order jet through a constant diagonal quadratic term. The
/// third-order images split each first-order momentum equally among the
/// third-order jets that enter it.
pub fn diagonal_section(prob: &LagrangianProblem) -> Result<LegendreSection, HamError> {
    let chart = prob.chart();
    let map = restricted_legendre(prob)?;
    let seconds = chart.jet_symbols(2, 2);
    let mut images = BTreeMap::new();
    for s in &seconds {
        let Symbol::Jet { field, index } = s else { unreachable!() };
        let p = Symbol::momentum(*field, index.clone());
        let poly = Poly::from_expr(&map.image(&p));
        let is_second = |t: &Symbol| t.jet_order() == Some(2);
        let (coeffs, rest) = poly
            .linear_parts(&is_second)
            .ok_or_else(|| HamError::NotDiagonal(format!("{} is not affine", p.render(chart))))?;
        let (only, coeff) = match coeffs.iter().next() {
            Some((t, c)) if coeffs.len() == 1 && t == s => (t.clone(), c.as_constant()),
            _ => return Err(HamError::NotDiagonal(format!("{} couples other second-order jets", p.render(chart)))),
        };
        let Some(c) = coeff.filter(|c| *c != q(0, 1)) else {
            return Err(HamError::NotDiagonal(format!("{} has a non-constant coefficient", p.render(chart))));
        };
        let value = (Expr::sym(p) - rest.to_expr()) * Expr::Num(q(1, 1) / c);
        images.insert(only, value.normal_form());
    }
    let partial = LegendreSection::new(images.clone());
    let is_third = |t: &Symbol| t.jet_order() == Some(3);
    let mut seen = BTreeMap::new();
    for p in chart.momentum_symbols(1, 1) {
        let composed = partial.compose_keep_third(&map.image(&p));
        let (coeffs, rest) = Poly::from_expr(&composed)
            .linear_parts(&is_third)
            .ok_or_else(|| HamError::NotDiagonal(format!("{} is not affine in third-order jets", p.render(chart))))?;
        if coeffs.is_empty() {
            return Err(HamError::NotDiagonal(format!("{} does not involve third-order jets", p.render(chart))));
        }
        let share = Expr::rational(1, coeffs.len() as i64);
        let target = Expr::sym(p.clone()) - rest.to_expr();
        for (jet, c) in coeffs {
            let c = c
                .as_constant()
                .ok_or_else(|| HamError::NotDiagonal(format!("{} has a non-constant coefficient", jet.render(chart))))?;
            if seen.insert(jet.clone(), p.clone()).is_some() {
                return Err(HamError::NotDiagonal(format!("{} enters two momentum equations", jet.render(chart))));
            }
            let value = target.clone() * share.clone() * Expr::Num(q(1, 1) / c);
            images.insert(jet, value.normal_form());
        }
    }
    Ok(LegendreSection::new(images))
}

impl LegendreSection {
    fn compose_keep_third(&self, e: &Expr) -> Expr {
        e.substitute_with(&|s| match s.jet_order() {
            Some(2) => Some(self.image(s)),
            _ => None,
        })
        .normal_form()
    }
}

/// The image of the restricted Legendre map, cut out by constraints on the
/// momentum space, with induced coordinates and the embedding images of
/// the eliminated momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSubmanifold {
    pub constraints: Vec<Expr>,
    /// Coordinates of the submanifold, a subset of the momentum-space chart.
    pub coordinates: Vec<Symbol>,
    /// Images of the eliminated momenta in the induced coordinates.
    pub embedding: BTreeMap<Symbol, Expr>,
}

impl ImageSubmanifold {
    /// Dimension of the submanifold.
    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }
}

struct Row {
    coeffs: BTreeMap<Symbol, Expr>,
    rhs: Expr,
}

/// Eliminates the jets of order two and three from the momentum images
/// `p = FL*p` by linear elimination. Relations left among `(x, u, u_i, p)`
/// are the constraints of the image; each is solved for one momentum with
/// a constant coefficient to build the embedding.
pub fn image_submanifold(prob: &LagrangianProblem) -> Result<ImageSubmanifold, HamError> {
    let chart = prob.chart();
    let map = restricted_legendre(prob)?;
    let is_high = |t: &Symbol| matches!(t.jet_order(), Some(2 | 3));
    let mut rows = Vec::new();
    for (p, image) in &map.restricted {
        let (coeffs, rest) = Poly::from_expr(image)
            .linear_parts(&is_high)
            .ok_or_else(|| HamError::NotAffine { momentum: p.render(chart) })?;
        let coeffs: BTreeMap<Symbol, Expr> = coeffs.into_iter().map(|(s, c)| (s, c.to_expr())).collect();
        if coeffs.values().any(|c| c.any_symbol(&is_high)) {
            return Err(HamError::NotAffine { momentum: p.render(chart) });
        }
        rows.push(Row { coeffs, rhs: (Expr::sym(p.clone()) - rest.to_expr()).normal_form() });
    }
    let mut pivoted = vec![false; rows.len()];
    loop {
        let choice = rows
            .iter()
            .enumerate()
            .filter(|(k, _)| !pivoted[*k])
            .flat_map(|(k, r)| r.coeffs.iter().map(move |(s, c)| (k, s.clone(), c.clone())))
            .min_by_key(|(_, _, c)| c.as_rational().is_none());
        let Some((k, var, pivot)) = choice else { break };
        pivoted[k] = true;
        for other in 0..rows.len() {
            if other == k {
                continue;
            }
            let Some(c) = rows[other].coeffs.get(&var).cloned() else { continue };
            let factor = (c / pivot.clone()).normal_form();
            let mut coeffs = rows[other].coeffs.clone();
            for (s, pc) in &rows[k].coeffs {
                let entry = coeffs.entry(s.clone()).or_insert_with(Expr::zero);
                *entry = (entry.clone() - factor.clone() * pc.clone()).normal_form();
            }
            coeffs.retain(|_, e| !e.is_zero());
            let rhs = (rows[other].rhs.clone() - factor * rows[k].rhs.clone()).normal_form();
            rows[other] = Row { coeffs, rhs };
        }
    }
    let mut constraints = Vec::new();
    let mut embedding = BTreeMap::new();
    for (k, row) in rows.iter().enumerate() {
        if pivoted[k] || row.rhs.is_zero() {
            continue;
        }
        let constraint = orient(&row.rhs);
        let (coeffs, rest) = Poly::from_expr(&constraint)
            .linear_parts(&|s| matches!(s, Symbol::Momentum { .. }) && !embedding.contains_key(s))
            .ok_or_else(|| HamError::NotAffine { momentum: constraint.render(chart) })?;
        if let Some((p, c)) = coeffs.iter().rev().find_map(|(s, c)| c.as_constant().map(|c| (s.clone(), c))) {
            let mut others = rest;
            for (s, pc) in &coeffs {
                if *s != p {
                    others = others.add(&pc.mul(&Poly::symbol(s)));
                }
            }
            embedding.insert(p, others.scale(&(q(-1, 1) / c)).to_expr());
        }
        constraints.push(constraint);
    }
    // Eliminated momenta may refer to each other; resolve the chain.
    for _ in 0..embedding.len() {
        let snapshot = embedding.clone();
        for value in embedding.values_mut() {
            *value = value.substitute(&snapshot);
        }
    }
    let coordinates = chart
        .restricted_momentum_coordinates()
        .into_iter()
        .filter(|s| !embedding.contains_key(s))
        .collect();
    Ok(ImageSubmanifold { constraints, coordinates, embedding })
}

/// The Hamilton-Cartan form `Θ_h`: the Liouville pattern with the scalar
/// momentum replaced by `−H` and eliminated momenta replaced by their
/// embedding images, on the given coordinates.
pub fn hamilton_cartan_form(
    chart: &JetChart,
    coords: &[Symbol],
    h: &Expr,
    embedding: &BTreeMap<Symbol, Expr>,
) -> Result<Form, HamError> {
    let system: Arc<CoordSystem> = CoordSystem::new(coords.to_vec());
    let momentum = |p: &Symbol| embedding.get(p).cloned().unwrap_or_else(|| Expr::sym(p.clone()));
    Ok(liouville_pattern(chart, &system, &(-h.clone()), &momentum)?)
}

/// The Hamilton-De Donder-Weyl equations on `J²π‡`, with derivatives of the
/// section components as opaque symbols:
/// `∂u/∂x^i − ∂H/∂p^i`, `Σ (1/n(ij)) ∂u_i/∂x^j − ∂H/∂p^I`,
/// `Σ_i ∂p^i/∂x^i + ∂H/∂u` and `Σ_j (1/n(ij)) ∂p^{1_i+1_j}/∂x^j + ∂H/∂u_i`.
pub fn hamilton_ddw_equations(h: &Expr, chart: &JetChart) -> EquationSet {
    let m = chart.m();
    let mut set = EquationSet::new(chart.clone());
    let d = |s: Symbol, i: usize| Expr::sym(s.deriv(i));
    let w = |i: usize, j: usize| Expr::rational(1, i64::from(sym_factor(i, j)));
    for a in 0..chart.n() {
        let u = Symbol::jet(a, MultiIndex::zero(m));
        for i in 0..m {
            let p = Symbol::momentum(a, MultiIndex::unit(m, i));
            set.push(format!("velocity[{}]", p.render(chart)), d(u.clone(), i) - h.diff(&p));
        }
        for index in multiindex::enumerate(m, 2) {
            let p = Symbol::momentum(a, index.clone());
            let mut r = -h.diff(&p);
            for (i, j) in index.unit_pairs() {
                r = r + w(i, j) * d(Symbol::jet(a, MultiIndex::unit(m, i)), j);
            }
            set.push(format!("velocity[{}]", p.render(chart)), r);
        }
        let mut balance = h.diff(&u);
        for i in 0..m {
            balance = balance + d(Symbol::momentum(a, MultiIndex::unit(m, i)), i);
        }
        set.push(format!("balance[{}]", chart.field_name(a)), balance);
        for i in 0..m {
            let ui = Symbol::jet(a, MultiIndex::unit(m, i));
            let mut r = h.diff(&ui);
            for j in 0..m {
                r = r + w(i, j) * d(Symbol::momentum(a, MultiIndex::pair(m, i, j)), j);
            }
            set.push(format!("momentum[{}]", ui.render(chart)), r);
        }
    }
    set
}

/// Hamilton-De Donder-Weyl equations by contraction: for each coordinate
/// `z` of `Θ_h`'s chart, the `d^m x` coefficient of `ψ*i(∂/∂z)Ω_h` along a
/// symbolic section, keeping the nonzero ones. Works on the image
/// submanifold as well as on the full momentum space.
pub fn hamilton_equations_via_forms(theta: &Form, chart: &JetChart) -> Result<EquationSet, HamError> {
    let omega = theta.exterior_d().scale(&Expr::int(-1));
    let mut set = EquationSet::new(chart.clone());
    for (z, e) in contraction_equations(&omega, chart)? {
        if !e.is_zero() {
            set.push(format!("contraction[{}]", z.render(chart)), orient(&e));
        }
    }
    Ok(set)
}
