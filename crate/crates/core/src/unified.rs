//! The unified formalism on `W_r`: field equations for sections and for
//! locally decomposable multivector fields, and the tangency algorithm that
//! fixes the undetermined coefficients and produces the constraint ladder.

use std::collections::{BTreeMap, BTreeSet};
use crate::extcalc::{CoordSystem, Form, VectorField};
use crate::jetspace::{apply_derivation, JetChart, SectionExpr};
use crate::multiindex::{self, sym_factor, MultiIndex};
use crate::symexpr::{equal, q, Expr, Poly, Symbol};
use crate::theory::{orient, unified_forms, EquationSet, LagrangianProblem, TheoryError};

/// Largest number of ladder levels explored before giving up.
pub const MAX_LEVELS: usize = 6;

fn pair_weight(i: usize, j: usize) -> Expr {
    Expr::rational(1, i64::from(sym_factor(i, j)))
}

fn momentum_target(s: &Symbol) -> Symbol {
    let Symbol::Momentum { field, index } = s else { unreachable!("momentum expected") };
    Symbol::jet(*field, index.clone())
}

/// Field equations for a section of `W_r → M`, with derivatives of the
/// section components written as opaque derivative symbols. Four groups:
/// `balance`, `momentum`, `algebraic` and `holonomy`.
pub fn section_equations(prob: &LagrangianProblem) -> EquationSet {
    let chart = prob.chart();
    let m = chart.m();
    let mut set = EquationSet::new(chart.with_order(3));
    let d = |s: Symbol, i: usize| Expr::sym(s.deriv(i));
    for a in 0..chart.n() {
        let field = chart.field_name(a);
        let u = Symbol::jet(a, MultiIndex::zero(m));
        let mut balance = -prob.partial(&u);
        for i in 0..m {
            balance = balance + d(Symbol::momentum(a, MultiIndex::unit(m, i)), i);
        }
        set.push(format!("balance[{field}]"), balance);
        for i in 0..m {
            let unit = MultiIndex::unit(m, i);
            let mut rel = Expr::sym(Symbol::momentum(a, unit.clone())) - prob.partial(&Symbol::jet(a, unit.clone()));
            for j in 0..m {
                rel = rel + pair_weight(i, j) * d(Symbol::momentum(a, MultiIndex::pair(m, i, j)), j);
            }
            set.push(format!("momentum[{}]", Symbol::momentum(a, unit).render(chart)), rel);
        }
        for index in multiindex::enumerate(m, 2) {
            let p = Symbol::momentum(a, index.clone());
            let r = Expr::sym(p.clone()) - prob.partial(&Symbol::jet(a, index));
            set.push(format!("algebraic[{}]", p.render(chart)), r);
        }
        for i in 0..m {
            let ui = Symbol::jet(a, MultiIndex::unit(m, i));
            set.push(format!("holonomy[{}]", ui.render(chart)), Expr::sym(ui.clone()) - d(u.clone(), i));
        }
        for index in multiindex::enumerate(m, 2) {
            let target = Symbol::jet(a, index.clone());
            let mut r = Expr::sym(target.clone());
            for (i, j) in index.unit_pairs() {
                r = r - pair_weight(i, j) * d(Symbol::jet(a, MultiIndex::unit(m, i)), j);
            }
            set.push(format!("holonomy[{}]", target.render(chart)), r);
        }
    }
    set
}

/// The section equations by the form route: for every coordinate `z` of
/// `W_r`, the coefficient of `d^m x` in `ψ*i(∂/∂z)Ω_r` along a symbolic
/// section `ψ`.
pub fn section_equations_via_forms(prob: &LagrangianProblem) -> Result<Vec<(Symbol, Expr)>, TheoryError> {
    let (_, omega, _) = unified_forms(prob)?;
    contraction_equations(&omega, prob.chart())
}

/// For each non-base coordinate `z` of the form's system, the coefficient
/// of `d^m x` in the pullback of `i(∂/∂z)Ω` along a symbolic section.
pub fn contraction_equations(omega: &Form, chart: &JetChart) -> Result<Vec<(Symbol, Expr)>, TheoryError> {
    let coords = omega.coords().clone();
    let base = CoordSystem::new(chart.base_symbols());
    let mut identity = SectionExpr::new();
    for z in coords.coords() {
        if !matches!(z, Symbol::Base(_)) {
            identity.set(z.clone(), Expr::sym(z.clone()));
        }
    }
    let volume: Vec<Symbol> = chart.base_symbols();
    let mut out = Vec::new();
    for z in coords.coords() {
        if matches!(z, Symbol::Base(_)) {
            continue;
        }
        let contracted = omega.interior(&VectorField::coordinate(z.clone()))?;
        let pulled = contracted.pullback_by_section(&identity, &base)?;
        out.push((z.clone(), pulled.coefficient(&volume)));
    }
    Ok(out)
}

/// The compatibility constraints `p^I_α − ∂L/∂u^α_I`, `|I| = 2`.
pub fn first_constraints(prob: &LagrangianProblem) -> Vec<Expr> {
    prob.chart()
        .momentum_symbols(2, 2)
        .into_iter()
        .map(|p| (Expr::sym(p.clone()) - prob.partial(&momentum_target(&p))).normal_form())
        .collect()
}

/// A locally decomposable multivector field on `W_r` with unit scale
/// factors: for each base direction `j`, the coefficient of `∂/∂z` for every
/// non-base coordinate `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVectorField {
    chart: JetChart,
    components: Vec<BTreeMap<Symbol, Expr>>,
}

impl MultiVectorField {
    /// Every coefficient is its own free symbol (`F` for jets, `G` for
    /// momenta).
    pub fn generic(chart: &JetChart) -> Self {
        let chart = chart.with_order(3);
        let targets: Vec<Symbol> = chart
            .unified_restricted_coordinates()
            .into_iter()
            .filter(|s| !matches!(s, Symbol::Base(_)))
            .collect();
        let components = (0..chart.m())
            .map(|j| targets.iter().map(|t| (t.clone(), Expr::sym(t.flow(j)))).collect())
            .collect();
        Self { chart, components }
    }

    /// The holonomic ansatz of type `r`: `F^α_{I,j} = u^α_{I+1_j}` for
    /// `|I| ≤ 3 − r`, the remaining coefficients free.
    pub fn holonomic(chart: &JetChart, r: u32) -> Self {
        let mut x = Self::generic(chart);
        for j in 0..x.chart.m() {
            for (target, coeff) in x.components[j].iter_mut() {
                if let Symbol::Jet { field, index } = target {
                    if index.length() + r <= 3 {
                        *coeff = Expr::sym(Symbol::jet(*field, index.add_unit(j).expect("direction in range")));
                    }
                }
            }
        }
        x
    }

    /// The coefficient of `∂/∂target` in factor `dir`.
    pub fn coefficient(&self, dir: usize, target: &Symbol) -> Expr {
        self.components[dir].get(target).cloned().unwrap_or_else(Expr::zero)
    }

    /// Replaces a coefficient.
    pub fn set(&mut self, dir: usize, target: Symbol, e: Expr) {
        self.components[dir].insert(target, e.normal_form());
    }

    /// Base dimension.
    pub fn m(&self) -> usize {
        self.components.len()
    }

    /// Applies the `dir`-th factor `∂/∂x^dir + Σ coeff ∂/∂z` to a function.
    pub fn apply(&self, dir: usize, e: &Expr) -> Expr {
        apply_derivation(e, &|s| match s {
            Symbol::Base(i) => (*i == dir).then(Expr::one),
            Symbol::Jet { .. } | Symbol::Momentum { .. } => self.components[dir].get(s).cloned(),
            _ => None,
        })
    }
}

/// Field equations for a multivector field: holonomy residuals
/// `F^α_j − u^α_j` and `Σ (1/n(ij)) F^α_{i,j} − u^α_I`, the balance
/// `Σ_i G^i_{α,i} − ∂L/∂u^α`, the momentum relations
/// `Σ_j (1/n(ij)) G^{1_i+1_j}_{α,j} − ∂L/∂u^α_i + p^i_α`, and the algebraic
/// constraints `p^K_α − ∂L/∂u^α_K`.
pub fn multivector_residuals(prob: &LagrangianProblem, x: &MultiVectorField) -> EquationSet {
    let chart = prob.chart();
    let m = chart.m();
    let mut set = EquationSet::new(chart.with_order(3));
    for a in 0..chart.n() {
        let field = chart.field_name(a);
        let u = Symbol::jet(a, MultiIndex::zero(m));
        for j in 0..m {
            let uj = Symbol::jet(a, MultiIndex::unit(m, j));
            set.push(format!("holonomy[{}]", uj.render(chart)), x.coefficient(j, &u) - Expr::sym(uj));
        }
        for index in multiindex::enumerate(m, 2) {
            let target = Symbol::jet(a, index.clone());
            let mut r = -Expr::sym(target.clone());
            for (i, j) in index.unit_pairs() {
                r = r + pair_weight(i, j) * x.coefficient(j, &Symbol::jet(a, MultiIndex::unit(m, i)));
            }
            set.push(format!("holonomy[{}]", target.render(chart)), r);
        }
        let mut balance = -prob.partial(&u);
        for i in 0..m {
            balance = balance + x.coefficient(i, &Symbol::momentum(a, MultiIndex::unit(m, i)));
        }
        set.push(format!("balance[{field}]"), balance);
        for i in 0..m {
            let unit = MultiIndex::unit(m, i);
            let pi = Symbol::momentum(a, unit.clone());
            let mut rel = Expr::sym(pi.clone()) - prob.partial(&Symbol::jet(a, unit));
            for j in 0..m {
                rel = rel + pair_weight(i, j) * x.coefficient(j, &Symbol::momentum(a, MultiIndex::pair(m, i, j)));
            }
            set.push(format!("momentum[{}]", pi.render(chart)), rel);
        }
        for index in multiindex::enumerate(m, 2) {
            let p = Symbol::momentum(a, index.clone());
            set.push(format!("algebraic[{}]", p.render(chart)), Expr::sym(p) - prob.partial(&Symbol::jet(a, index)));
        }
    }
    set
}

/// One failed multivector holonomy condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowViolation {
    pub target: Symbol,
    pub dir: usize,
}

/// Checks `F^α_j = u^α_j` and `F^α_{I,j} = u^α_{I+1_j}` for
/// `1 ≤ |I| ≤ 3 − r` under [`equal`].
pub fn multivector_holonomy_check(x: &MultiVectorField, r: u32) -> Vec<FlowViolation> {
    let chart = &x.chart;
    let mut out = Vec::new();
    let top = 3u32.saturating_sub(r);
    for a in 0..chart.n() {
        for index in multiindex::enumerate_range(chart.m(), 0, top) {
            let target = Symbol::jet(a, index.clone());
            for j in 0..chart.m() {
                let expected = Expr::sym(Symbol::jet(a, index.add_unit(j).expect("direction in range")));
                if !equal(&x.coefficient(j, &target), &expected).holds() {
                    out.push(FlowViolation { target: target.clone(), dir: j });
                }
            }
        }
    }
    out
}

/// A named expression on `W_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct Named {
    pub name: String,
    pub expr: Expr,
}

/// One stage of the constraint algorithm.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Level {
    /// Constraint functions defining this stage.
    pub constraints: Vec<Named>,
    /// Coefficients fixed at this stage.
    pub assignments: BTreeMap<Symbol, Expr>,
    /// Equations left on the free coefficients at this stage.
    pub conditions: Vec<Named>,
}

/// How the constraint algorithm ended.
#[derive(Debug, Clone, PartialEq)]
pub enum LadderVerdict {
    /// No new constraints appeared after the given level.
    Terminated { final_level: usize },
    /// A constraint reduced to a nonzero constant.
    Incompatible { level: usize, residual: Expr },
    /// The level cap was reached with constraints still appearing.
    CapReached,
}

/// The output of the constraint algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintLadder {
    pub levels: Vec<Level>,
    pub verdict: LadderVerdict,
    /// Holonomy type used for the multivector ansatz.
    pub holonomy_type: u32,
    /// Remarks on what the algorithm does not cover.
    pub notes: Vec<String>,
}

impl ConstraintLadder {
    /// Every assignment from every level.
    pub fn all_assignments(&self) -> BTreeMap<Symbol, Expr> {
        self.levels.iter().flat_map(|l| l.assignments.clone()).collect()
    }

    /// Finds a constraint or condition by name, with its level.
    pub fn find(&self, name: &str) -> Option<(usize, &Expr)> {
        self.levels.iter().enumerate().find_map(|(k, l)| {
            l.constraints.iter().chain(&l.conditions).find(|c| c.name == name).map(|c| (k, &c.expr))
        })
    }
}

fn is_unknown(s: &Symbol) -> bool {
    matches!(s, Symbol::Flow { .. })
}

/// Substitutes assignments until no assigned symbol remains.
fn resolve(e: &Expr, assignments: &BTreeMap<Symbol, Expr>) -> Expr {
    let mut current = e.normal_form();
    for _ in 0..=assignments.len() {
        if !current.symbols().iter().any(|s| assignments.contains_key(s)) {
            break;
        }
        current = current.substitute(assignments);
    }
    current
}

/// Looks for an unknown with a nonzero constant coefficient that the
/// expression is affine in; `pick` filters the admissible unknowns.
/// Returns the unknown and its solved value.
fn solve_for(e: &Expr, pick: &dyn Fn(&Symbol) -> bool) -> Option<(Symbol, Expr)> {
    let poly = Poly::from_expr(e);
    let (coeffs, rest) = poly.linear_parts(&|s| is_unknown(s) && pick(s))?;
    let (target, coeff) = coeffs.iter().rev().find_map(|(s, c)| c.as_constant().map(|k| (s.clone(), k)))?;
    // e = coeff·target + (others) ⇒ target = −(others)/coeff
    let mut others = rest;
    for (s, c) in &coeffs {
        if s != &target {
            others = others.add(&c.mul(&Poly::symbol(s)));
        }
    }
    let value = others.scale(&(q(-1, 1) / coeff)).to_expr();
    Some((target, value))
}

fn has_unknown(e: &Expr) -> bool {
    e.any_symbol(&is_unknown)
}

/// Runs the constraint algorithm with the holonomic multivector ansatz of
/// type `r` (1 fixes every coefficient below the top jet order).
///
/// Level 0 holds the compatibility constraints. At each level the tangency
/// of every constraint along every factor of the multivector field is
/// imposed; momentum coefficients are solved where they enter with a
/// constant coefficient. The remaining field equations are then reduced:
/// identically satisfied ones drop out, coefficient-free ones become the
/// next level's constraints, and those left on jet coefficients are
/// recorded as conditions (solved when some coefficient is constant).
pub fn run_constraint_algorithm(prob: &LagrangianProblem, r: u32) -> ConstraintLadder {
    let chart = prob.chart();
    let x = MultiVectorField::holonomic(chart, r);
    let equations = multivector_residuals(prob, &x);
    let mut assignments: BTreeMap<Symbol, Expr> = BTreeMap::new();
    let mut levels: Vec<Level> = Vec::new();
    let mut pending: Vec<Named> = Vec::new();
    let mut current = Level::default();
    for eq in &equations.equations {
        let named = Named { name: eq.name.clone(), expr: eq.residual.clone() };
        if eq.residual.is_zero() {
            continue;
        }
        if !has_unknown(&eq.residual) {
            current.constraints.push(named);
        } else if eq.name.starts_with("holonomy") {
            current.conditions.push(named);
        } else {
            pending.push(named);
        }
    }
    let mut verdict = LadderVerdict::CapReached;
    for level_index in 0..MAX_LEVELS {
        let mut next = Level::default();
        // Tangency of this level's constraints.
        for c in &current.constraints {
            for j in 0..chart.m() {
                let t = resolve(&x.apply(j, &c.expr), &assignments);
                if t.is_zero() {
                    continue;
                }
                let name = format!("tangency[{}, {}]", c.name, chart.base_name(j));
                if let Some((g, value)) = solve_for(&t, &|s| s.is_momentum_flow() && !assignments.contains_key(s)) {
                    assignments.insert(g.clone(), value.clone());
                    current.assignments.insert(g, value);
                } else if has_unknown(&t) {
                    current.conditions.push(Named { name, expr: orient(&t) });
                } else {
                    next.constraints.push(Named { name, expr: orient(&t) });
                }
            }
        }
        // Reduce the remaining field equations.
        let mut still_pending = Vec::new();
        for eq in pending {
            let reduced = resolve(&eq.expr, &assignments);
            if reduced.is_zero() {
                continue;
            }
            let open_momentum = reduced.any_symbol(&|s| s.is_momentum_flow() && !assignments.contains_key(s));
            if open_momentum {
                still_pending.push(Named { name: eq.name, expr: reduced });
            } else if has_unknown(&reduced) {
                let oriented = orient(&reduced);
                if let Some((f, value)) = solve_for(&oriented, &|s| s.is_jet_flow() && !assignments.contains_key(s)) {
                    assignments.insert(f.clone(), value.clone());
                    next.assignments.insert(f, value);
                }
                next.conditions.push(Named { name: eq.name, expr: oriented });
            } else {
                next.constraints.push(Named { name: eq.name, expr: orient(&reduced) });
            }
        }
        pending = still_pending;
        levels.push(current);
        if let Some(bad) = next.constraints.iter().find(|c| c.expr.as_rational().is_some()) {
            verdict = LadderVerdict::Incompatible { level: level_index + 1, residual: bad.expr.clone() };
            levels.push(next);
            break;
        }
        if next.constraints.is_empty() {
            let has_content = !next.conditions.is_empty() || !next.assignments.is_empty();
            if has_content {
                levels.push(next);
            }
            verdict = LadderVerdict::Terminated { final_level: levels.len() - 1 };
            break;
        }
        current = next;
    }
    let notes = vec![
        "the m equations along the base directions are omitted; they follow from the others".to_string(),
        "integrability of the multivector field is not checked".to_string(),
    ];
    ConstraintLadder { levels, verdict, holonomy_type: r, notes }
}

/// The level-2 multivector Euler-Lagrange expressions with every free
/// top-order coefficient replaced by its holonomic value
/// `F^α_{J,j} = u^α_{J+1_j}`, one per field, as found in the ladder.
pub fn ladder_euler_lagrange(ladder: &ConstraintLadder, chart: &JetChart) -> Vec<Option<Expr>> {
    (0..chart.n())
        .map(|a| {
            let name = format!("balance[{}]", chart.field_name(a));
            ladder.find(&name).map(|(_, e)| holonomic_closure(e))
        })
        .collect()
}

/// Replaces every jet coefficient `F_j(u_I)` by `u_{I+1_j}`.
pub fn holonomic_closure(e: &Expr) -> Expr {
    e.substitute_with(&|s| match s {
        Symbol::Flow { of, dir } => match &**of {
            Symbol::Jet { field, index } => Some(Expr::sym(Symbol::jet(*field, index.add_unit(*dir).ok()?))),
            _ => None,
        },
        _ => None,
    })
}

/// Jet coefficients appearing in an expression.
pub fn jet_flows(e: &Expr) -> BTreeSet<Symbol> {
    e.symbols().into_iter().filter(Symbol::is_jet_flow).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse;

    fn problem(base: [&str; 2], params: &[&str], l: &str) -> LagrangianProblem {
        let c = JetChart::new(
            base.iter().map(|s| s.to_string()).collect(),
            vec!["u".into()],
            params.iter().map(|s| s.to_string()).collect(),
            2,
        )
        .unwrap();
        let e = parse(l, &c.scope(2)).unwrap();
        LagrangianProblem::new(c, e).unwrap()
    }

    fn plate() -> LagrangianProblem {
        problem(["x", "y"], &["q"], "1/2*(u[2,0]^2 + 2*u[1,1]^2 + u[0,2]^2 - 2*q*u)")
    }

    fn kdv() -> LagrangianProblem {
        problem(["x", "t"], &[], "1/2*(u[1,0]*u[0,1] - 2*u[1,0]^3 - u[2,0]^2)")
    }

    fn e(prob: &LagrangianProblem, text: &str) -> Expr {
        parse(text, &prob.chart().scope(4)).unwrap()
    }

    fn up_to_sign(a: &Expr, b: &Expr) -> bool {
        equal(a, b).holds() || equal(a, &(-b.clone())).holds()
    }

    #[test]
    fn plate_section_equations_match_displayed_system() {
        let prob = plate();
        let set = section_equations(&prob);
        assert!(equal(set.get("balance[u]").unwrap(), &e(&prob, "d_x(p.u[1,0]) + d_y(p.u[0,1]) + q")).holds());
        assert!(equal(
            set.get("momentum[p.u[1,0]]").unwrap(),
            &e(&prob, "d_x(p.u[2,0]) + 1/2*d_y(p.u[1,1]) + p.u[1,0]")
        )
        .holds());
        assert!(equal(set.get("algebraic[p.u[1,1]]").unwrap(), &e(&prob, "p.u[1,1] - 2*u[1,1]")).holds());
        assert!(equal(
            set.get("holonomy[u[1,1]]").unwrap(),
            &e(&prob, "u[1,1] - 1/2*(d_y(u[1,0]) + d_x(u[0,1]))")
        )
        .holds());
        assert_eq!(set.len(), 11);
    }

    #[test]
    fn form_route_reproduces_section_equations() {
        for prob in [plate(), kdv()] {
            let formula = section_equations(&prob);
            let routed = section_equations_via_forms(&prob).unwrap();
            let chart = prob.chart();
            for (z, coeff) in &routed {
                let name = match z {
                    Symbol::Jet { index, .. } if index.is_zero() => "balance[u]".to_string(),
                    Symbol::Jet { index, .. } if index.length() == 1 => {
                        let Symbol::Jet { field, index } = z else { unreachable!() };
                        format!("momentum[{}]", Symbol::momentum(*field, index.clone()).render(chart))
                    }
                    Symbol::Jet { field, index } if index.length() == 2 => {
                        format!("algebraic[{}]", Symbol::momentum(*field, index.clone()).render(chart))
                    }
                    Symbol::Jet { .. } => {
                        assert!(coeff.is_zero(), "third-order jets carry no equation");
                        continue;
                    }
                    Symbol::Momentum { field, index } => {
                        format!("holonomy[{}]", Symbol::jet(*field, index.clone()).render(chart))
                    }
                    other => panic!("unexpected coordinate {other:?}"),
                };
                assert!(equal(coeff, formula.get(&name).unwrap()).holds(), "{name}");
            }
        }
    }

    #[test]
    fn kdv_ladder_follows_displayed_levels() {
        let prob = kdv();
        let ladder = run_constraint_algorithm(&prob, 1);
        assert_eq!(ladder.verdict, LadderVerdict::Terminated { final_level: 2 });
        assert_eq!(ladder.levels.len(), 3);
        let level0: Vec<Expr> = ladder.levels[0].constraints.iter().map(|c| c.expr.clone()).collect();
        for want in ["p.u[2,0] + u[2,0]", "p.u[1,1]", "p.u[0,2]"] {
            assert!(level0.iter().any(|c| up_to_sign(c, &e(&prob, want))), "{want}");
        }
        let a0 = &ladder.levels[0].assignments;
        let flow = |p: &str, j: usize| {
            let Expr::Sym(s) = e(&prob, p) else { panic!() };
            s.flow(j)
        };
        assert!(equal(&a0[&flow("p.u[2,0]", 0)], &e(&prob, "-u[3,0]")).holds());
        assert!(equal(&a0[&flow("p.u[2,0]", 1)], &e(&prob, "-u[2,1]")).holds());
        assert!(a0[&flow("p.u[1,1]", 0)].is_zero());
        let level1: Vec<Expr> = ladder.levels[1].constraints.iter().map(|c| c.expr.clone()).collect();
        assert_eq!(level1.len(), 2);
        assert!(level1.iter().any(|c| up_to_sign(c, &e(&prob, "p.u[1,0] - 1/2*u[0,1] + 3*u[1,0]^2 - u[3,0]"))));
        assert!(level1.iter().any(|c| up_to_sign(c, &e(&prob, "p.u[0,1] - 1/2*u[1,0]"))));
        let a1 = &ladder.levels[1].assignments;
        let f30x = Symbol::jet(0, MultiIndex::new(vec![3, 0])).flow(0);
        let want = e(&prob, "1/2*u[1,1] - 6*u[1,0]*u[2,0]") + Expr::sym(f30x.clone());
        assert!(equal(&a1[&flow("p.u[1,0]", 0)], &want).holds());
        assert!(equal(&a1[&flow("p.u[0,1]", 1)], &e(&prob, "1/2*u[1,1]")).holds());
        let (level, cond) = ladder.find("balance[u]").unwrap();
        assert_eq!(level, 2);
        let display = e(&prob, "u[1,1] - 6*u[1,0]*u[2,0]") + Expr::sym(f30x.clone());
        assert!(equal(cond, &display).holds());
        assert!(equal(&ladder.levels[2].assignments[&f30x], &e(&prob, "6*u[1,0]*u[2,0] - u[1,1]")).holds());
    }

    #[test]
    fn plate_ladder_ends_in_multivector_euler_lagrange() {
        let prob = plate();
        let ladder = run_constraint_algorithm(&prob, 1);
        assert_eq!(ladder.verdict, LadderVerdict::Terminated { final_level: 2 });
        let level1: Vec<Expr> = ladder.levels[1].constraints.iter().map(|c| c.expr.clone()).collect();
        assert!(level1.iter().any(|c| up_to_sign(c, &e(&prob, "p.u[1,0] + u[3,0] + u[1,2]"))));
        assert!(level1.iter().any(|c| up_to_sign(c, &e(&prob, "p.u[0,1] + u[2,1] + u[0,3]"))));
        let f = |i: Vec<u32>, j: usize| Expr::sym(Symbol::jet(0, MultiIndex::new(i)).flow(j));
        let display = f(vec![3, 0], 0) + f(vec![1, 2], 0) + f(vec![2, 1], 1) + f(vec![0, 3], 1) - e(&prob, "q");
        let (_, cond) = ladder.find("balance[u]").unwrap();
        assert!(equal(cond, &display).holds());
    }

    #[test]
    fn ladder_closure_is_euler_lagrange() {
        for prob in [plate(), kdv()] {
            let ladder = run_constraint_algorithm(&prob, 1);
            let el = crate::theory::euler_lagrange(&prob).unwrap();
            let routed = ladder_euler_lagrange(&ladder, prob.chart());
            assert!(up_to_sign(routed[0].as_ref().unwrap(), &el.equations[0].residual));
        }
    }

    #[test]
    fn holonomic_ansatz_passes_its_own_check() {
        let chart = JetChart::generic(2, 1, 2);
        for r in 1..=3 {
            assert!(multivector_holonomy_check(&MultiVectorField::holonomic(&chart, r), r).is_empty());
        }
        let generic = MultiVectorField::generic(&chart);
        assert_eq!(multivector_holonomy_check(&generic, 1).len(), 2 + 4 + 6);
    }

    #[test]
    fn first_constraints_are_algebraic_group() {
        let prob = kdv();
        let cs = first_constraints(&prob);
        assert_eq!(cs.len(), 3);
        assert!(cs.iter().any(|c| equal(c, &e(&prob, "p.u[2,0] + u[2,0]")).holds()));
    }

    #[test]
    fn first_order_ladder_ends_in_first_order_multivector_display() {
        let prob = problem(["x", "y"], &[], "1/2*u[1,0]^2 - 1/2*u[0,1]^2 + u*u[1,0]*u[0,1] + u^3");
        let ladder = run_constraint_algorithm(&prob, 3);
        assert!(ladder.levels[0].assignments.values().all(Expr::is_zero));
        assert_eq!(ladder.levels[0].assignments.len(), 6);
        let l = prob.lagrangian();
        let m = 2;
        let u = Symbol::jet(0, MultiIndex::zero(m));
        let first = |i: usize| Symbol::jet(0, MultiIndex::unit(m, i));
        let level1: Vec<Expr> = ladder.levels[1].constraints.iter().map(|c| c.expr.clone()).collect();
        for i in 0..m {
            let want = Expr::sym(Symbol::momentum(0, MultiIndex::unit(m, i))) - l.diff(&first(i));
            assert!(level1.iter().any(|c| up_to_sign(c, &want)));
        }
        // ∂L/∂u − d/dx^i ∂L/∂u_i − Σ (F_{i,j} − u_{ij}) ∂²L/∂u_i∂u_j
        let mut display = l.diff(&u);
        for i in 0..m {
            display = display - crate::jetspace::total_derivative(&l.diff(&first(i)), i, 2).unwrap();
            for j in 0..m {
                let h = l.diff(&first(i)).diff(&first(j));
                let f = Expr::sym(first(i).flow(j)) - Expr::sym(Symbol::jet(0, MultiIndex::pair(m, i, j)));
                display = display - f * h;
            }
        }
        let (level, cond) = ladder.find("balance[u]").unwrap();
        assert_eq!(level, 2);
        assert!(up_to_sign(cond, &display));
    }
}
