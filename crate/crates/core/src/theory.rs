//! Lagrangian-side derivations for second-order problems.
//!
//! From a Lagrangian on `J²π` this module derives the Hessian and the
//! regularity verdict, the restricted and extended Legendre maps, the
//! Euler-Lagrange equations, the Poincaré-Cartan form, the unified-space
//! forms and Hamiltonian function, and the canonical pairing.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::extcalc::{CoordSystem, ExtError, Form};
use crate::jetspace::{iterated_total_derivative, total_derivative, JetChart, JetError};
use crate::multiindex::{self, sym_factor, MultiIndex};
use crate::numcheck::{self, NumError};
use crate::symexpr::{equal::random_bindings, q, Bindings, Expr, Poly, Symbol};

/// Seed used whenever a derivation samples random points.
pub const SAMPLE_SEED: u64 = 0x5EED_0002;

/// Errors raised by Lagrangian-side derivations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    /// The Lagrangian is outside the supported class.
    #[error("invalid Lagrangian: {0}")]
    InvalidLagrangian(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Ext(#[from] ExtError),
    #[error(transparent)]
    Numeric(#[from] NumError),
}

/// A second-order Lagrangian on a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianProblem {
    chart: JetChart,
    lagrangian: Expr,
}

impl LagrangianProblem {
    /// Validates that `lagrangian` lives on `J²π`: it may use base
    /// coordinates, jets of order at most two and declared parameters.
    pub fn new(chart: JetChart, lagrangian: Expr) -> Result<Self, TheoryError> {
        let chart = chart.with_order(2);
        let lagrangian = lagrangian.normal_form();
        for s in lagrangian.symbols() {
            let ok = match &s {
                Symbol::Base(i) => *i < chart.m(),
                Symbol::Jet { field, index } => *field < chart.n() && index.dim() == chart.m() && index.length() <= 2,
                Symbol::Param(name) => chart.params().iter().any(|p| p.as_str() == &**name),
                _ => false,
            };
            if !ok {
                return Err(TheoryError::InvalidLagrangian(format!(
                    "`{}` is not a coordinate of J²π or a declared parameter",
                    s.render(&chart)
                )));
            }
        }
        Ok(Self { chart, lagrangian })
    }

    /// The order-2 chart.
    pub fn chart(&self) -> &JetChart {
        &self.chart
    }

    /// The Lagrangian function.
    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    /// Base dimension.
    pub fn m(&self) -> usize {
        self.chart.m()
    }

    /// Fiber dimension.
    pub fn n(&self) -> usize {
        self.chart.n()
    }

    /// `∂L/∂s`.
    pub fn partial(&self, s: &Symbol) -> Expr {
        self.lagrangian.diff(s)
    }
}

/// A named residual: the equation reads `residual = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub name: String,
    pub residual: Expr,
}

/// An ordered collection of named residuals over a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationSet {
    pub chart: JetChart,
    pub equations: Vec<Equation>,
}

impl EquationSet {
    /// An empty set on the given chart.
    pub fn new(chart: JetChart) -> Self {
        Self { chart, equations: Vec::new() }
    }

    /// Appends a residual in normal form.
    pub fn push(&mut self, name: impl Into<String>, residual: Expr) {
        self.equations.push(Equation { name: name.into(), residual: residual.normal_form() });
    }

    /// Residuals in order.
    pub fn residuals(&self) -> Vec<Expr> {
        self.equations.iter().map(|e| e.residual.clone()).collect()
    }

    /// The residual with the given name.
    pub fn get(&self, name: &str) -> Option<&Expr> {
        self.equations.iter().find(|e| e.name == name).map(|e| &e.residual)
    }

    /// Number of equations.
    pub fn len(&self) -> usize {
        self.equations.len()
    }

    /// True if there are no equations.
    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// One `residual = 0` line per equation.
    pub fn render_lines(&self) -> Vec<String> {
        self.equations.iter().map(|e| format!("{} = 0", e.residual.render(&self.chart))).collect()
    }
}

/// Flips the sign of `e` if needed so that its highest-weight term (ties
/// broken by the term order) has a positive coefficient.
pub fn orient(e: &Expr) -> Expr {
    let p = Poly::from_expr(e);
    match p.leading_by_weight() {
        Some((_, c)) if c < &q(0, 1) => p.scale(&q(-1, 1)).to_expr(),
        _ => p.to_expr(),
    }
}

/// The Hessian `∂²L/∂u^β_I ∂u^α_K` over the second-order jets, ordered by
/// field and then by `enumerate(m, 2)`.
pub fn hessian(prob: &LagrangianProblem) -> Vec<Vec<Expr>> {
    let jets = prob.chart.jet_symbols(2, 2);
    let firsts: Vec<Expr> = jets.iter().map(|s| prob.partial(s)).collect();
    let mut h = vec![vec![Expr::zero(); jets.len()]; jets.len()];
    for r in 0..jets.len() {
        for c in r..jets.len() {
            let v = firsts[r].diff(&jets[c]);
            h[c][r] = v.clone();
            h[r][c] = v;
        }
    }
    h
}

/// Exact symbolic determinant by cofactor expansion over column subsets.
pub fn determinant(matrix: &[Vec<Expr>]) -> Expr {
    let n = matrix.len();
    assert!(n < 64, "determinant size limited to 63");
    let polys: Vec<Vec<Poly>> = matrix.iter().map(|row| row.iter().map(Poly::from_expr).collect()).collect();
    let mut memo: HashMap<u64, Poly> = HashMap::new();
    det_rec(&polys, 0, 0, &mut memo).to_expr()
}

fn det_rec(m: &[Vec<Poly>], row: usize, used: u64, memo: &mut HashMap<u64, Poly>) -> Poly {
    let n = m.len();
    if row == n {
        return Poly::one();
    }
    if let Some(v) = memo.get(&used) {
        return v.clone();
    }
    let mut acc = Poly::zero();
    let mut parity = 0;
    for col in 0..n {
        if used & (1 << col) != 0 {
            continue;
        }
        if !m[row][col].is_zero() {
            let minor = det_rec(m, row + 1, used | (1 << col), memo);
            let term = m[row][col].mul(&minor);
            acc = if parity % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        parity += 1;
    }
    memo.insert(used, acc.clone());
    acc
}

/// Regularity verdict for a Lagrangian.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularity {
    /// The Hessian is invertible. `exhaustive` is false when this rests on
    /// sampled points only.
    Regular { exhaustive: bool, determinant: Expr },
    /// The Hessian is degenerate with the given generic rank.
    Singular { rank: usize },
}

impl Regularity {
    /// True for the regular verdict.
    pub fn is_regular(&self) -> bool {
        matches!(self, Regularity::Regular { .. })
    }

    /// Short text form: `regular` or `singular (rank r)`.
    pub fn label(&self) -> String {
        match self {
            Regularity::Regular { exhaustive: true, .. } => "regular".into(),
            Regularity::Regular { exhaustive: false, .. } => "regular (on sampled points)".into(),
            Regularity::Singular { rank } => format!("singular (rank {rank})"),
        }
    }
}

fn sample_points(symbols: &[Symbol], count: usize, seed: u64) -> Vec<Bindings> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_bindings(symbols, &mut rng)).collect()
}

fn matrix_symbols(matrix: &[Vec<Expr>]) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = matrix.iter().flatten().flat_map(|e| e.symbols()).collect();
    out.sort();
    out.dedup();
    out
}

/// Classifies the Lagrangian by its Hessian: symbolic determinant first,
/// then `samples` seeded random points (at least five).
pub fn classify_regularity(prob: &LagrangianProblem, samples: usize) -> Result<Regularity, TheoryError> {
    let h = hessian(prob);
    let det = determinant(&h);
    let symbols = matrix_symbols(&h);
    let points = sample_points(&symbols, samples.max(5), SAMPLE_SEED);
    let generic_rank = |points: &[Bindings]| -> Result<usize, TheoryError> {
        let mut best = 0;
        for b in points {
            best = best.max(numcheck::numeric_rank(&h, b, numcheck::RANK_THRESHOLD)?);
        }
        Ok(best)
    };
    if let Some(c) = det.as_rational() {
        if c != q(0, 1) {
            return Ok(Regularity::Regular { exhaustive: true, determinant: det });
        }
        return Ok(Regularity::Singular { rank: generic_rank(&points)? });
    }
    let mut all_nonzero = true;
    for b in &points {
        match det.eval(b) {
            Ok(v) if v != 0.0 && v.is_finite() => {}
            _ => all_nonzero = false,
        }
    }
    if all_nonzero {
        Ok(Regularity::Regular { exhaustive: false, determinant: det })
    } else {
        Ok(Regularity::Singular { rank: generic_rank(&points)? })
    }
}

/// Images of the momentum coordinates under a Legendre map.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreMap {
    /// `p^I_α ↦ FL*p^I_α` for `1 ≤ |I| ≤ 2`, on the order-3 chart.
    pub restricted: BTreeMap<Symbol, Expr>,
    /// `F̃L*p`, present for the extended map.
    pub extended_p: Option<Expr>,
}

impl LegendreMap {
    /// The image of a momentum symbol (zero if absent).
    pub fn image(&self, s: &Symbol) -> Expr {
        match s {
            Symbol::ExtMomentum => self.extended_p.clone().unwrap_or_else(Expr::zero),
            _ => self.restricted.get(s).cloned().unwrap_or_else(Expr::zero),
        }
    }

    /// Substitution images for every momentum coordinate.
    pub fn images(&self) -> BTreeMap<Symbol, Expr> {
        let mut out = self.restricted.clone();
        if let Some(p) = &self.extended_p {
            out.insert(Symbol::ExtMomentum, p.clone());
        }
        out
    }
}

/// `FL*p^i_α = ∂L/∂u^α_i − Σ_j (1/n(ij)) d/dx^j ∂L/∂u^α_{1_i+1_j}` and
/// `FL*p^I_α = ∂L/∂u^α_I`.
pub fn restricted_legendre(prob: &LagrangianProblem) -> Result<LegendreMap, TheoryError> {
    let m = prob.m();
    let mut restricted = BTreeMap::new();
    for a in 0..prob.n() {
        for i in 0..m {
            let mut acc = prob.partial(&Symbol::jet(a, MultiIndex::unit(m, i)));
            for j in 0..m {
                let second = prob.partial(&Symbol::jet(a, MultiIndex::pair(m, i, j)));
                let d = total_derivative(&second, j, 3)?;
                acc = acc - Expr::rational(1, i64::from(sym_factor(i, j))) * d;
            }
            restricted.insert(Symbol::momentum(a, MultiIndex::unit(m, i)), acc.normal_form());
        }
        for index in multiindex::enumerate(m, 2) {
            restricted.insert(Symbol::momentum(a, index.clone()), prob.partial(&Symbol::jet(a, index)));
        }
    }
    Ok(LegendreMap { restricted, extended_p: None })
}

/// The restricted map plus `F̃L*p = L − u_i FL*p^i − u_I ∂L/∂u_I`.
pub fn extended_legendre(prob: &LagrangianProblem) -> Result<LegendreMap, TheoryError> {
    let mut map = restricted_legendre(prob)?;
    let mut p = prob.lagrangian().clone();
    for (s, image) in &map.restricted {
        let Symbol::Momentum { field, index } = s else { unreachable!("momentum keys") };
        p = p - Expr::sym(Symbol::jet(*field, index.clone())) * image.clone();
    }
    map.extended_p = Some(p.normal_form());
    Ok(map)
}

/// The Jacobian of a Legendre map with respect to the `J³π` coordinates.
/// Rows are the target coordinates (`J²π‡`, plus `p` for an extended map),
/// columns the `J³π` coordinates.
pub fn legendre_jacobian(map: &LegendreMap, chart: &JetChart) -> Vec<Vec<Expr>> {
    let mut targets = chart.restricted_momentum_coordinates();
    if map.extended_p.is_some() {
        targets.push(Symbol::ExtMomentum);
    }
    let columns = chart.jet_coordinates(3);
    targets
        .iter()
        .map(|t| {
            let image = match t {
                Symbol::Momentum { .. } | Symbol::ExtMomentum => map.image(t),
                other => Expr::sym(other.clone()),
            };
            columns.iter().map(|c| image.diff(c)).collect()
        })
        .collect()
}

/// Numeric rank of the Legendre Jacobian at a point binding every `J³π`
/// coordinate (and every parameter that occurs).
pub fn legendre_jacobian_rank(map: &LegendreMap, chart: &JetChart, point: &Bindings) -> Result<usize, TheoryError> {
    let jac = legendre_jacobian(map, chart);
    Ok(numcheck::numeric_rank(&jac, point, numcheck::RANK_THRESHOLD)?)
}

/// Seeded random points over the `J³π` coordinates and parameters.
pub fn random_jet_points(chart: &JetChart, count: usize, seed: u64) -> Vec<Bindings> {
    let mut symbols = chart.jet_coordinates(3);
    symbols.extend(chart.param_symbols());
    sample_points(&symbols, count, seed)
}

/// The raw Euler-Lagrange expressions
/// `∂L/∂u^α − d/dx^i ∂L/∂u^α_i + Σ_{|I|=2} d^I ∂L/∂u^α_I`.
pub fn euler_lagrange_raw(prob: &LagrangianProblem) -> Result<Vec<Expr>, TheoryError> {
    let m = prob.m();
    let mut out = Vec::with_capacity(prob.n());
    for a in 0..prob.n() {
        let mut acc = prob.partial(&Symbol::jet(a, MultiIndex::zero(m)));
        for i in 0..m {
            let first = prob.partial(&Symbol::jet(a, MultiIndex::unit(m, i)));
            acc = acc - total_derivative(&first, i, 4)?;
        }
        for index in multiindex::enumerate(m, 2) {
            let second = prob.partial(&Symbol::jet(a, index.clone()));
            acc = acc + iterated_total_derivative(&second, &index, 4)?;
        }
        out.push(acc.normal_form());
    }
    Ok(out)
}

/// The Euler-Lagrange equations on the order-4 chart, one per field, each
/// oriented by [`orient`].
pub fn euler_lagrange(prob: &LagrangianProblem) -> Result<EquationSet, TheoryError> {
    let mut set = EquationSet::new(prob.chart().with_order(4));
    for (a, e) in euler_lagrange_raw(prob)?.into_iter().enumerate() {
        set.push(format!("euler-lagrange[{}]", prob.chart().field_name(a)), orient(&e));
    }
    Ok(set)
}

/// The symmetrized Liouville pattern
/// `s d^m x + p^i_α du^α ∧ d^{m−1}x_i + (1/n(ij)) p^{1_i+1_j}_α du^α_i ∧ d^{m−1}x_j`
/// on `coords`, with `scalar` in place of the extended momentum and the
/// momentum coefficients given by `momentum`.
pub fn liouville_pattern(
    chart: &JetChart,
    coords: &Arc<CoordSystem>,
    scalar: &Expr,
    momentum: &dyn Fn(&Symbol) -> Expr,
) -> Result<Form, TheoryError> {
    let m = chart.m();
    let vol = Form::volume(coords);
    let mut out = vol.scale(scalar);
    let partial_volumes: Vec<Form> = (0..m).map(|i| Form::volume_minus(coords, i)).collect();
    for a in 0..chart.n() {
        let du = Form::differential(coords, &Symbol::jet(a, MultiIndex::zero(m)))?;
        for (i, dvol) in partial_volumes.iter().enumerate() {
            let p = momentum(&Symbol::momentum(a, MultiIndex::unit(m, i)));
            out = out.add(&du.wedge(dvol).scale(&p));
        }
        for i in 0..m {
            let dui = Form::differential(coords, &Symbol::jet(a, MultiIndex::unit(m, i)))?;
            for (j, dvol) in partial_volumes.iter().enumerate() {
                let p = momentum(&Symbol::momentum(a, MultiIndex::pair(m, i, j)));
                let w = Expr::rational(1, i64::from(sym_factor(i, j)));
                out = out.add(&dui.wedge(dvol).scale(&(w * p)));
            }
        }
    }
    Ok(out)
}

/// The symmetrized Liouville form `Θ₁ˢ` on `J²π†`.
pub fn liouville_form(chart: &JetChart) -> Result<Form, TheoryError> {
    let coords = CoordSystem::new(chart.extended_momentum_coordinates());
    liouville_pattern(chart, &coords, &Expr::sym(Symbol::ExtMomentum), &|s| Expr::sym(s.clone()))
}

/// The Poincaré-Cartan form `Θ_L = F̃L*Θ₁ˢ` on `J³π`, by pulling back the
/// Liouville form along the extended Legendre map.
pub fn poincare_cartan(prob: &LagrangianProblem) -> Result<Form, TheoryError> {
    let map = extended_legendre(prob)?;
    let images = map.images();
    let target = CoordSystem::new(prob.chart().jet_coordinates(3));
    let theta = liouville_form(prob.chart())?;
    Ok(theta.pullback(&|s| images.get(s).cloned(), &target)?)
}

/// The Poincaré-Cartan form from its closed coordinate expression
/// `FL*p^i (du ∧ d^{m−1}x_i − u_i d^m x)
///  + (1/n(ij)) ∂L/∂u_{1_i+1_j} (du_i ∧ d^{m−1}x_j − u_{1_i+1_j} d^m x) + L d^m x`.
pub fn poincare_cartan_closed_form(prob: &LagrangianProblem) -> Result<Form, TheoryError> {
    let chart = prob.chart();
    let m = chart.m();
    let coords = CoordSystem::new(chart.jet_coordinates(3));
    let map = restricted_legendre(prob)?;
    let vol = Form::volume(&coords);
    let mut out = vol.scale(prob.lagrangian());
    for a in 0..chart.n() {
        let du = Form::differential(&coords, &Symbol::jet(a, MultiIndex::zero(m)))?;
        for i in 0..m {
            let ui = Symbol::jet(a, MultiIndex::unit(m, i));
            let piece = du.wedge(&Form::volume_minus(&coords, i)).sub(&vol.scale(&Expr::sym(ui.clone())));
            out = out.add(&piece.scale(&map.image(&Symbol::momentum(a, MultiIndex::unit(m, i)))));
            let dui = Form::differential(&coords, &ui)?;
            for j in 0..m {
                let uij = Symbol::jet(a, MultiIndex::pair(m, i, j));
                let w = Expr::rational(1, i64::from(sym_factor(i, j)));
                let piece = dui.wedge(&Form::volume_minus(&coords, j)).sub(&vol.scale(&Expr::sym(uij.clone())));
                out = out.add(&piece.scale(&(w * prob.partial(&uij))));
            }
        }
    }
    Ok(out)
}

/// The Hamiltonian function `Ĥ = p^i_α u^α_i + p^I_α u^α_I − L` on `W_r`.
pub fn unified_hamiltonian(prob: &LagrangianProblem) -> Expr {
    let chart = prob.chart();
    let mut h = -prob.lagrangian().clone();
    for p in chart.momentum_symbols(1, 2) {
        let Symbol::Momentum { field, index } = &p else { unreachable!() };
        h = h + Expr::sym(p.clone()) * Expr::sym(Symbol::jet(*field, index.clone()));
    }
    h.normal_form()
}

/// The unified-space forms: `Θ_r` (the Liouville pattern with `p = −Ĥ`),
/// `Ω_r = −dΘ_r`, and `Ĥ`.
pub fn unified_forms(prob: &LagrangianProblem) -> Result<(Form, Form, Expr), TheoryError> {
    let h = unified_hamiltonian(prob);
    let coords = CoordSystem::new(prob.chart().unified_restricted_coordinates());
    let theta = liouville_pattern(prob.chart(), &coords, &(-h.clone()), &|s| Expr::sym(s.clone()))?;
    let omega = theta.exterior_d().scale(&Expr::int(-1));
    Ok((theta, omega, h))
}

/// The symmetrized pairing `C^s = p + p^i_α u^α_i + p^I_α u^α_I`.
pub fn pairing_cs(chart: &JetChart) -> Expr {
    let mut c = Expr::sym(Symbol::ExtMomentum);
    for p in chart.momentum_symbols(1, 2) {
        let Symbol::Momentum { field, index } = &p else { unreachable!() };
        c = c + Expr::sym(p.clone()) * Expr::sym(Symbol::jet(*field, index.clone()));
    }
    c.normal_form()
}

/// The unsymmetrized pairing `C = p + p^i u_i + p^{ij} u_{1_i+1_j}` over
/// ordered pairs, evaluated on the image of the symmetric embedding
/// `p^{ij} = p^{1_i+1_j} / n(ij)`.
pub fn pairing_via_embedding(chart: &JetChart) -> Expr {
    let m = chart.m();
    let mut c = Expr::sym(Symbol::ExtMomentum);
    for a in 0..chart.n() {
        for i in 0..m {
            let unit = MultiIndex::unit(m, i);
            c = c + Expr::sym(Symbol::momentum(a, unit.clone())) * Expr::sym(Symbol::jet(a, unit));
            for j in 0..m {
                let pair = MultiIndex::pair(m, i, j);
                let embedded = Expr::rational(1, i64::from(sym_factor(i, j))) * Expr::sym(Symbol::momentum(a, pair.clone()));
                c = c + embedded * Expr::sym(Symbol::jet(a, pair));
            }
        }
    }
    c.normal_form()
}
