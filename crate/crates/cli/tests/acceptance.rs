//! Acceptance suite: one PASS/FAIL line per criterion. Expected values are
//! the published displays (as expression strings) or oracles computed in
//! this file. Runs without the test harness so the report is always
//! printed; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sofft_core::extcalc::{CoordSystem, Form, VectorField};
use sofft_core::fixtures;
use sofft_core::hamiltonian::{
    ham_function_almost_regular, ham_function_regular, hamilton_cartan_form, hamilton_ddw_equations,
    hamilton_equations_via_forms, image_submanifold,
};
use sofft_core::jetspace::{
    dimensions, holonomy_check, holonomy_check_direct, iterated_total_derivative, prolong, total_derivative, JetChart,
    SectionExpr,
};
use sofft_core::multiindex::{self, MultiIndex};
use sofft_core::numcheck::{finite_diff_validate, numeric_rank, residual, Axis, Grid, RANK_THRESHOLD};
use sofft_core::random::{random_form, random_lagrangian, random_polynomial};
use sofft_core::symexpr::{equal, equal::random_bindings, equal_with, parse, Bindings, Expr, Func, Poly, Symbol, Verdict};
use sofft_core::theory::{
    classify_regularity, euler_lagrange, extended_legendre, legendre_jacobian_rank, liouville_form, poincare_cartan,
    random_jet_points, restricted_legendre, unified_forms, LagrangianProblem, Regularity, SAMPLE_SEED,
};
use sofft_core::unified::{ladder_euler_lagrange, run_constraint_algorithm, ConstraintLadder, LadderVerdict};

type Outcome = Result<String, String>;

/// Criterion number, title and check.
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(prob: &LagrangianProblem, text: &str) -> Expr {
    parse(text, &prob.chart().scope(4)).unwrap_or_else(|err| panic!("`{text}`: {err}"))
}

fn sym(prob: &LagrangianProblem, text: &str) -> Symbol {
    match e(prob, text) {
        Expr::Sym(s) => s,
        other => panic!("{other:?} is not a symbol"),
    }
}

fn proven(a: &Expr, b: &Expr) -> bool {
    equal(a, b) == Verdict::ProvenEqual
}

/// `b = c a` for a nonzero rational `c`, proven exactly. The candidate `c`
/// is the ratio of the leading coefficients.
fn proportional(a: &Expr, b: &Expr) -> bool {
    let (pa, pb) = (Poly::from_expr(a), Poly::from_expr(b));
    match (pa.leading_by_weight(), pb.leading_by_weight()) {
        (Some((ma, ca)), Some((mb, cb))) if ma == mb => proven(&(Expr::Num(cb / ca) * a.clone()), b),
        (None, None) => true,
        _ => false,
    }
}

/// Each display is proportional to exactly one listed expression and the
/// counts agree.
fn matches_displays(prob: &LagrangianProblem, found: &[Expr], displays: &[&str], what: &str) -> Result<(), String> {
    ensure(found.len() == displays.len(), || format!("{what}: {} expressions, expected {}", found.len(), displays.len()))?;
    for display in displays {
        let want = e(prob, display);
        let hits = found.iter().filter(|f| proportional(f, &want)).count();
        ensure(hits == 1, || format!("{what}: display `{display}` matched {hits} expressions"))?;
    }
    Ok(())
}

fn within(elapsed: Duration, limit_secs: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, || {
        format!("{what} took {:.2} s, limit {limit_secs} s", elapsed.as_secs_f64())
    })
}

// 1 ------------------------------------------------------------------------

fn plate_legendre() -> Outcome {
    let start = Instant::now();
    let prob = fixtures::plate();
    let map = restricted_legendre(&prob).map_err(|err| err.to_string())?;
    let displays = [
        ("p.u[1,0]", "-u[3,0] - u[1,2]"),
        ("p.u[0,1]", "-u[2,1] - u[0,3]"),
        ("p.u[2,0]", "u[2,0]"),
        ("p.u[1,1]", "2*u[1,1]"),
        ("p.u[0,2]", "u[0,2]"),
    ];
    for (p, display) in displays {
        let image = map.image(&sym(&prob, p));
        ensure(proven(&image, &e(&prob, display)), || format!("{p}: {image:?} is not {display}"))?;
        let rendered = image.render(prob.chart());
        ensure(rendered == display, || format!("{p}: rendered `{rendered}`, golden `{display}`"))?;
    }
    within(start.elapsed(), 1.0, "plate Legendre map")?;
    Ok("five images proven equal, golden strings match".into())
}

// 2 ------------------------------------------------------------------------

fn jacobian_ranks(prob: &LagrangianProblem, extended: bool) -> Result<Vec<usize>, String> {
    let map = if extended { extended_legendre(prob) } else { restricted_legendre(prob) }.map_err(|err| err.to_string())?;
    random_jet_points(prob.chart(), 5, SAMPLE_SEED)
        .iter()
        .map(|point| legendre_jacobian_rank(&map, prob.chart(), point).map_err(|err| err.to_string()))
        .collect()
}

fn plate_regularity() -> Outcome {
    let start = Instant::now();
    let prob = fixtures::plate();
    match classify_regularity(&prob, 5).map_err(|err| err.to_string())? {
        Regularity::Regular { determinant, exhaustive } => {
            ensure(exhaustive, || "regularity rests on samples only".into())?;
            ensure(proven(&determinant, &Expr::int(2)), || format!("Hessian determinant {determinant:?}, expected 2"))?;
        }
        other => return Err(format!("verdict {other:?}, expected regular")),
    }
    let ranks = jacobian_ranks(&prob, false)?;
    ensure(ranks.iter().all(|&r| r == 10), || format!("Jacobian ranks {ranks:?}, expected 10"))?;
    within(start.elapsed(), 1.0, "plate regularity")?;
    Ok(format!("det = 2, regular, Jacobian ranks {ranks:?}"))
}

// 3 ------------------------------------------------------------------------

fn plate_euler_lagrange() -> Outcome {
    let prob = fixtures::plate();
    let set = euler_lagrange(&prob).map_err(|err| err.to_string())?;
    ensure(set.len() == 1, || format!("{} equations", set.len()))?;
    let want = e(&prob, "u[4,0] + 2*u[2,2] + u[0,4] - q");
    ensure(proven(&set.equations[0].residual, &want), || format!("{:?}", set.render_lines()))?;
    Ok(set.render_lines().join("; "))
}

// 4 ------------------------------------------------------------------------

fn kdv_legendre() -> Outcome {
    let prob = fixtures::kdv();
    let map = extended_legendre(&prob).map_err(|err| err.to_string())?;
    let displays = [
        ("p.u[1,0]", "1/2*u[0,1] - 3*u[1,0]^2 + u[3,0]"),
        ("p.u[0,1]", "1/2*u[1,0]"),
        ("p.u[2,0]", "-u[2,0]"),
        ("p.u[1,1]", "0"),
        ("p.u[0,2]", "0"),
    ];
    for (p, display) in displays {
        let image = map.image(&sym(&prob, p));
        ensure(proven(&image, &e(&prob, display)), || format!("{p}: {image:?} is not {display}"))?;
    }
    let extended = map.extended_p.clone().ok_or("no extended momentum")?;
    let display = "-1/2*u[1,0]*u[0,1] + 2*u[1,0]^3 - u[3,0]*u[1,0] + 1/2*u[2,0]^2";
    ensure(proven(&extended, &e(&prob, display)), || format!("extended momentum {extended:?}"))?;
    let restricted = jacobian_ranks(&prob, false)?;
    let extended_ranks = jacobian_ranks(&prob, true)?;
    ensure(restricted.iter().chain(&extended_ranks).all(|&r| r == 7), || {
        format!("ranks {restricted:?} / {extended_ranks:?}, expected 7")
    })?;
    let verdict = classify_regularity(&prob, 5).map_err(|err| err.to_string())?;
    ensure(!verdict.is_regular(), || format!("verdict {verdict:?}, expected singular"))?;
    Ok(format!("images and extended momentum proven equal, ranks {restricted:?}, {}", verdict.label()))
}

// 5 ------------------------------------------------------------------------

/// Soliton oracle: with `T = tanh(x − 4t)` kept as a symbol, `D_x` and
/// `D_t` act on polynomials in `T` through `T_x = 1 − T²` and
/// `T_t = −4(1 − T²)`. Substituting the resulting jets of `u = −2T` into
/// the residual gives a polynomial in `T` that must normalize to zero.
fn soliton_oracle(prob: &LagrangianProblem, residual_expr: &Expr) -> Expr {
    let t = Symbol::param("T");
    let slope = Expr::one() - Expr::sym(t.clone()).pow(2);
    let speed = [Expr::one(), Expr::int(-4)];
    let derivative = |f: &Expr, dir: usize| (f.diff(&t) * slope.clone() * speed[dir].clone()).normal_form();
    let u = Expr::int(-2) * Expr::sym(t.clone());
    let mut images = BTreeMap::new();
    for index in multiindex::enumerate_range(prob.m(), 0, 4) {
        let mut f = u.clone();
        for (dir, &count) in index.entries().iter().enumerate() {
            for _ in 0..count {
                f = derivative(&f, dir);
            }
        }
        images.insert(Symbol::jet(0, index), f);
    }
    residual_expr.substitute(&images).normal_form()
}

fn kdv_euler_lagrange() -> Outcome {
    let prob = fixtures::kdv();
    let set = euler_lagrange(&prob).map_err(|err| err.to_string())?;
    let want = e(&prob, "u[1,1] - 6*u[1,0]*u[2,0] + u[4,0]");
    ensure(set.len() == 1 && proven(&set.equations[0].residual, &want), || format!("{:?}", set.render_lines()))?;
    let grid = Grid { axes: vec![Axis::new(-5.0, 5.0, 41).unwrap(), Axis::new(0.0, 1.0, 11).unwrap()], params: BTreeMap::new() };
    let report = residual(&set, &fixtures::kdv_soliton(&prob), &grid).map_err(|err| err.to_string())?;
    let max = report[0].max_abs;
    ensure(max < 1e-9, || format!("soliton residual {max:e} on 41x11"))?;
    let oracle = soliton_oracle(&prob, &set.equations[0].residual);
    ensure(oracle.is_zero(), || format!("oracle residual {oracle:?} is not zero"))?;
    Ok(format!("equation proven equal, soliton max |residual| = {max:.2e} < 1e-9, symbolic oracle = 0"))
}

// 6 ------------------------------------------------------------------------

fn level_constraints(ladder: &ConstraintLadder, level: usize) -> Vec<Expr> {
    ladder.levels.get(level).map(|l| l.constraints.iter().map(|c| c.expr.clone()).collect()).unwrap_or_default()
}

/// Checks `assigned(G) + rest = 0` for a displayed tangency equation.
fn assignment_display(
    prob: &LagrangianProblem,
    assignments: &BTreeMap<Symbol, Expr>,
    target: &str,
    display: &str,
) -> Result<(), String> {
    let target_sym = sym(prob, target);
    let assigned = assignments.get(&target_sym).ok_or_else(|| format!("{target} is not assigned"))?;
    let image = e(prob, display).substitute(&[(target_sym, assigned.clone())].into_iter().collect());
    ensure(proven(&image, &Expr::zero()), || format!("`{display}` fails with {target} = {assigned:?}"))
}

fn terminated_at(ladder: &ConstraintLadder, level: usize) -> Result<(), String> {
    ensure(ladder.verdict == LadderVerdict::Terminated { final_level: level }, || format!("verdict {:?}", ladder.verdict))?;
    ensure(ladder.levels.len() == level + 1 && ladder.levels[level].constraints.is_empty(), || {
        "constraints beyond the last level".into()
    })
}

fn ladders() -> Outcome {
    let kdv = fixtures::kdv();
    let ladder = run_constraint_algorithm(&kdv, 1);
    matches_displays(&kdv, &level_constraints(&ladder, 0), &["p.u[2,0] + u[2,0]", "p.u[1,1]", "p.u[0,2]"], "KdV level 0")?;
    matches_displays(
        &kdv,
        &level_constraints(&ladder, 1),
        &["p.u[1,0] - 1/2*u[0,1] + 3*u[1,0]^2 - u[3,0]", "p.u[0,1] - 1/2*u[1,0]"],
        "KdV level 1",
    )?;
    let all = ladder.all_assignments();
    for (target, display) in [
        ("G_x(p.u[2,0])", "G_x(p.u[2,0]) + u[3,0]"),
        ("G_t(p.u[2,0])", "G_t(p.u[2,0]) + u[2,1]"),
        ("G_x(p.u[1,1])", "G_x(p.u[1,1])"),
        ("G_t(p.u[0,2])", "G_t(p.u[0,2])"),
        ("G_x(p.u[1,0])", "G_x(p.u[1,0]) - 1/2*u[1,1] + 6*u[1,0]*u[2,0] - F_x(u[3,0])"),
        ("G_x(p.u[0,1])", "G_x(p.u[0,1]) - 1/2*u[2,0]"),
        ("G_t(p.u[1,0])", "G_t(p.u[1,0]) - 1/2*u[0,2] + 6*u[1,0]*u[1,1] - F_t(u[3,0])"),
        ("G_t(p.u[0,1])", "G_t(p.u[0,1]) - 1/2*u[1,1]"),
    ] {
        assignment_display(&kdv, &all, target, display)?;
    }
    let f30 = ladder.levels.get(2).and_then(|l| l.assignments.get(&sym(&kdv, "F_x(u[3,0])"))).ok_or("no level-2 F assignment")?;
    ensure(proven(f30, &e(&kdv, "6*u[1,0]*u[2,0] - u[1,1]")), || format!("F_x(u[3,0]) = {f30:?}"))?;
    terminated_at(&ladder, 2)?;

    let plate = fixtures::plate();
    let ladder = run_constraint_algorithm(&plate, 1);
    matches_displays(
        &plate,
        &level_constraints(&ladder, 0),
        &["p.u[2,0] - u[2,0]", "p.u[1,1] - 2*u[1,1]", "p.u[0,2] - u[0,2]"],
        "plate level 0",
    )?;
    matches_displays(
        &plate,
        &level_constraints(&ladder, 1),
        &["p.u[1,0] + u[3,0] + u[1,2]", "p.u[0,1] + u[2,1] + u[0,3]"],
        "plate level 1",
    )?;
    let all = ladder.all_assignments();
    for (target, display) in [
        ("G_x(p.u[2,0])", "G_x(p.u[2,0]) - u[3,0]"),
        ("G_x(p.u[1,1])", "G_x(p.u[1,1]) - 2*u[2,1]"),
        ("G_x(p.u[0,2])", "G_x(p.u[0,2]) - u[1,2]"),
        ("G_y(p.u[2,0])", "G_y(p.u[2,0]) - u[2,1]"),
        ("G_y(p.u[1,1])", "G_y(p.u[1,1]) - 2*u[1,2]"),
        ("G_y(p.u[0,2])", "G_y(p.u[0,2]) - u[0,3]"),
        ("G_x(p.u[1,0])", "G_x(p.u[1,0]) + F_x(u[3,0]) + F_x(u[1,2])"),
        ("G_x(p.u[0,1])", "G_x(p.u[0,1]) + F_x(u[2,1]) + F_x(u[0,3])"),
        ("G_y(p.u[1,0])", "G_y(p.u[1,0]) + F_y(u[3,0]) + F_y(u[1,2])"),
        // The published fourth equation repeats the first direction's
        // label; the second direction is meant.
        ("G_y(p.u[0,1])", "G_y(p.u[0,1]) + F_y(u[2,1]) + F_y(u[0,3])"),
    ] {
        assignment_display(&plate, &all, target, display)?;
    }
    let conditions: Vec<Expr> = ladder.levels.get(2).map(|l| l.conditions.iter().map(|c| c.expr.clone()).collect()).unwrap_or_default();
    matches_displays(&plate, &conditions, &["F_x(u[3,0]) + F_x(u[1,2]) + F_y(u[2,1]) + F_y(u[0,3]) - q"], "plate level 2")?;
    terminated_at(&ladder, 2)?;
    Ok("KdV: 3 + 2 constraints, 8 tangency equations, F_x(u[3,0]) assignment; plate: 3 + 2 constraints, 10 tangency equations, multivector Euler-Lagrange".into())
}

// 7 ------------------------------------------------------------------------

fn two_route_euler_lagrange() -> Outcome {
    let start = Instant::now();
    let chart = JetChart::generic(2, 1, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0007);
    let mut verdicts = Vec::new();
    for k in 0..5 {
        let prob = random_lagrangian(&chart, &mut rng);
        let direct = euler_lagrange(&prob).map_err(|err| err.to_string())?.equations[0].residual.clone();
        let ladder = run_constraint_algorithm(&prob, 1);
        let routed = ladder_euler_lagrange(&ladder, prob.chart())[0].clone().ok_or("no balance residual")?;
        // An equation is compared up to its overall sign.
        let verdict = [equal_with(&routed, &direct, 40), equal_with(&routed, &(-direct.clone()), 40)]
            .into_iter()
            .find(|v| v.holds())
            .ok_or_else(|| format!("Lagrangian {k}: routes disagree"))?;
        verdicts.push(verdict);
    }
    within(start.elapsed(), 10.0, "two-route Euler-Lagrange")?;
    Ok(format!("5 random Lagrangians agree: {verdicts:?}"))
}

// 8 ------------------------------------------------------------------------

fn form_identities() -> Outcome {
    let vol = [Symbol::Base(0), Symbol::Base(1)];
    for prob in [fixtures::plate(), fixtures::kdv()] {
        let (theta, omega, _) = unified_forms(&prob).map_err(|err| err.to_string())?;
        ensure(omega.add(&theta.exterior_d()).is_zero(), || "Ω_r + dΘ_r is not zero".into())?;
        for jet in prob.chart().jet_symbols(2, 2) {
            let Symbol::Jet { field, index } = &jet else { unreachable!() };
            let contracted = omega.interior(&VectorField::coordinate(jet.clone())).map_err(|err| err.to_string())?;
            let p = Expr::sym(Symbol::momentum(*field, index.clone()));
            let want = Form::monomial(contracted.coords(), p - prob.lagrangian().diff(&jet), &vol).map_err(|err| err.to_string())?;
            ensure(contracted.sub(&want).is_zero(), || format!("contraction along {jet:?}"))?;
        }
        for jet in prob.chart().jet_symbols(3, 3) {
            let contracted = omega.interior(&VectorField::coordinate(jet.clone())).map_err(|err| err.to_string())?;
            ensure(contracted.is_zero(), || format!("contraction along {jet:?} is not zero"))?;
        }
    }
    let plate = fixtures::plate();
    let h = ham_function_regular(&plate, &fixtures::plate_section(&plate)).map_err(|err| err.to_string())?;
    let theta_h = hamilton_cartan_form(plate.chart(), &plate.chart().restricted_momentum_coordinates(), &h, &BTreeMap::new())
        .map_err(|err| err.to_string())?;
    let images = restricted_legendre(&plate).map_err(|err| err.to_string())?.images();
    let target = CoordSystem::new(plate.chart().jet_coordinates(3));
    let pulled = theta_h.pullback(&|s| images.get(s).cloned(), &target).map_err(|err| err.to_string())?;
    let theta_l = poincare_cartan(&plate).map_err(|err| err.to_string())?;
    ensure(pulled.sub(&theta_l).is_zero(), || "Legendre pullback of Θ_h differs from Θ_L".into())?;
    Ok("Ω_r + dΘ_r = 0, contractions along u_I and u_J, Legendre pullback of Θ_h = Θ_L".into())
}

// 9 ------------------------------------------------------------------------

fn kernel_dimensions(form: &Form, seed: u64, extra: &[Symbol]) -> Result<Vec<usize>, String> {
    let matrix = form.contraction_matrix();
    let mut symbols = form.coords().coords().to_vec();
    symbols.extend_from_slice(extra);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..5)
        .map(|_| {
            let point = random_bindings(&symbols, &mut rng);
            numeric_rank(&matrix, &point, RANK_THRESHOLD).map(|r| form.coords().len() - r).map_err(|err| err.to_string())
        })
        .collect()
}

fn nondegeneracy() -> Outcome {
    let plate = fixtures::plate();
    let chart = plate.chart();
    let params = chart.param_symbols();
    let omega1 = liouville_form(chart).map_err(|err| err.to_string())?.exterior_d().scale(&Expr::int(-1));
    let k1 = kernel_dimensions(&omega1, 11, &[])?;
    ensure(k1.iter().all(|&k| k == 0), || format!("Ω₁ˢ kernels {k1:?}"))?;
    let omega_l = poincare_cartan(&plate).map_err(|err| err.to_string())?.exterior_d().scale(&Expr::int(-1));
    let kl = kernel_dimensions(&omega_l, 12, &params)?;
    ensure(kl.iter().all(|&k| k > 0), || format!("Ω_L kernels {kl:?}"))?;
    let h = ham_function_regular(&plate, &fixtures::plate_section(&plate)).map_err(|err| err.to_string())?;
    let omega_h = hamilton_cartan_form(chart, &chart.restricted_momentum_coordinates(), &h, &BTreeMap::new())
        .map_err(|err| err.to_string())?
        .exterior_d()
        .scale(&Expr::int(-1));
    let kh = kernel_dimensions(&omega_h, 13, &params)?;
    ensure(kh.iter().all(|&k| k == 0), || format!("Ω_h kernels {kh:?}"))?;
    Ok(format!("kernel dims: Ω₁ˢ {k1:?}, plate Ω_L {kl:?}, plate Ω_h {kh:?}"))
}

// 10 -----------------------------------------------------------------------

/// Images of the section components of a closed-form solution: the jets of
/// `u` through order 4 and the momenta through the Legendre map.
fn lifted_components(prob: &LagrangianProblem, u: &Expr) -> BTreeMap<Symbol, Expr> {
    let chart = prob.chart();
    let mut out = BTreeMap::new();
    for index in multiindex::enumerate_range(prob.m(), 0, 4) {
        let mut f = u.clone();
        for (dir, &count) in index.entries().iter().enumerate() {
            for _ in 0..count {
                f = f.diff(&Symbol::Base(dir));
            }
        }
        out.insert(Symbol::jet(0, index), f);
    }
    let map = restricted_legendre(prob).expect("Legendre map");
    for p in chart.momentum_symbols(1, 2) {
        let image = map.image(&p).substitute(&out);
        out.insert(p, image);
    }
    out
}

/// Replaces every component `z` and derivative `∂z/∂x^i` in `e` by the
/// lifted solution.
fn along_solution(e: &Expr, lifted: &BTreeMap<Symbol, Expr>) -> Expr {
    e.substitute_with(&|s| match s {
        Symbol::Deriv { of, dir } => lifted.get(of).map(|f| f.diff(&Symbol::Base(*dir))),
        other => lifted.get(other).cloned(),
    })
}

fn max_on_grid(e: &Expr, grid: &[(f64, f64)], params: &Bindings) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for &(x, y) in grid {
        let mut b = params.clone();
        b.insert(Symbol::Base(0), x);
        b.insert(Symbol::Base(1), y);
        worst = worst.max(e.eval(&b).map_err(|err| err.to_string())?.abs());
    }
    Ok(worst)
}

fn grid_points(x: (f64, f64), y: (f64, f64), count: usize) -> Vec<(f64, f64)> {
    let step = |(lo, hi): (f64, f64), k: usize| lo + (hi - lo) * k as f64 / (count - 1) as f64;
    (0..count).flat_map(|i| (0..count).map(move |j| (step(x, i), step(y, j)))).collect()
}

fn hamiltonian_fixtures() -> Outcome {
    let plate = fixtures::plate();
    let h = ham_function_regular(&plate, &fixtures::plate_section(&plate)).map_err(|err| err.to_string())?;
    let want = e(&plate, "p.u[1,0]*u[1,0] + p.u[0,1]*u[0,1] + 1/2*p.u[2,0]^2 + 1/4*p.u[1,1]^2 + 1/2*p.u[0,2]^2 + q*u");
    ensure(proven(&h, &want), || format!("plate H = {h:?}"))?;
    let set = hamilton_ddw_equations(&h, plate.chart());
    // The balance equation is listed with the load on the left, as in the
    // unified system; the printed Hamiltonian display moves it across with
    // the opposite sign, which the lifted solution below rules out.
    let plate_displays = [
        "d_x(u) - u[1,0]",
        "d_y(u) - u[0,1]",
        "d_x(u[1,0]) - p.u[2,0]",
        "d_x(u[0,1]) + d_y(u[1,0]) - p.u[1,1]",
        "d_y(u[0,1]) - p.u[0,2]",
        "d_x(p.u[1,0]) + d_y(p.u[0,1]) + q",
        "d_x(p.u[2,0]) + 1/2*d_y(p.u[1,1]) + p.u[1,0]",
        "1/2*d_x(p.u[1,1]) + d_y(p.u[0,2]) + p.u[0,1]",
    ];
    matches_displays(&plate, &set.residuals(), &plate_displays, "plate Hamilton equations")?;
    let plate_lift = lifted_components(&plate, &e(&plate, "q*x^4/24"));
    let q_bind: Bindings = [(Symbol::param("q"), 1.5)].into_iter().collect();
    let plate_grid = grid_points((0.0, 1.0), (0.0, 1.0), 5);
    for eq in &set.equations {
        let r = max_on_grid(&along_solution(&eq.residual, &plate_lift), &plate_grid, &q_bind)?;
        ensure(r < 1e-12, || format!("plate solution violates {} by {r:e}", eq.name))?;
    }
    let printed = e(&plate, "d_x(p.u[1,0]) + d_y(p.u[0,1]) - q");
    let plate_gap = max_on_grid(&along_solution(&printed, &plate_lift), &plate_grid, &q_bind)?;
    ensure(plate_gap > 1.0, || "printed load sign is not ruled out".into())?;

    let kdv = fixtures::kdv();
    let image = image_submanifold(&kdv).map_err(|err| err.to_string())?;
    ensure(image.dim() == 7, || format!("dim P = {}", image.dim()))?;
    matches_displays(&kdv, &image.constraints, &["p.u[0,1] - 1/2*u[1,0]", "p.u[1,1]", "p.u[0,2]"], "KdV P constraints")?;
    let h = ham_function_almost_regular(&kdv, &image, &fixtures::kdv_section(&kdv)).map_err(|err| err.to_string())?;
    ensure(proven(&h, &e(&kdv, "p.u[1,0]*u[1,0] + u[1,0]^3 - 1/2*p.u[2,0]^2")), || format!("KdV H = {h:?}"))?;
    let theta = hamilton_cartan_form(kdv.chart(), &image.coordinates, &h, &image.embedding).map_err(|err| err.to_string())?;
    let system = hamilton_equations_via_forms(&theta, kdv.chart()).map_err(|err| err.to_string())?;
    // The printed second equation omits the `∂p^(2,0)/∂x` term that the
    // unified equations carry; the lifted soliton below confirms it.
    let kdv_displays = [
        "d_x(u) - u[1,0]",
        "1/2*d_t(u) - p.u[1,0] - 3*u[1,0]^2 - d_x(p.u[2,0])",
        "d_x(p.u[1,0]) + 1/2*d_t(u[1,0])",
        "d_x(u[1,0]) + p.u[2,0]",
    ];
    matches_displays(&kdv, &system.residuals(), &kdv_displays, "KdV P-system")?;
    let soliton = lifted_components(&kdv, &e(&kdv, "-2*tanh(x - 4*t)"));
    let kdv_grid = grid_points((-5.0, 5.0), (0.0, 1.0), 11);
    for eq in &system.equations {
        let r = max_on_grid(&along_solution(&eq.residual, &soliton), &kdv_grid, &Bindings::new())?;
        ensure(r < 1e-9, || format!("soliton violates {} by {r:e}", eq.name))?;
    }
    let printed = e(&kdv, "1/2*d_t(u) - p.u[1,0] - 3*u[1,0]^2");
    let kdv_gap = max_on_grid(&along_solution(&printed, &soliton), &kdv_grid, &Bindings::new())?;
    ensure(kdv_gap > 1e-3, || "printed second equation is not ruled out".into())?;
    Ok(format!(
        "plate H and 8 equations; KdV dim P = 7, 3 constraints, H, 4 equations; exact solutions satisfy both systems; printed variants miss by {plate_gap:.2} (plate) and {kdv_gap:.2} (KdV)"
    ))
}

// 11 -----------------------------------------------------------------------

fn dimension_formulas() -> Outcome {
    let d = dimensions(2, 1, 3);
    let got = (d.jet3, d.restricted_momenta, d.unified, d.unified_restricted);
    ensure(got == (12, 10, 18, 17), || format!("(m=2, n=1): {got:?}"))?;
    let one = dimensions(1, 1, 3);
    ensure(one.jet3 == one.restricted_momenta, || format!("(m=1, n=1): {} vs {}", one.jet3, one.restricted_momenta))?;
    Ok(format!("(2,1) -> {got:?}; (1,1) -> dim J3 = dim J2‡ = {}", one.jet3))
}

// 12 -----------------------------------------------------------------------

const PROPERTY_CASES: u64 = 100;

fn low_jets(chart: &JetChart) -> Vec<Symbol> {
    let mut s = chart.jet_symbols(0, 2);
    s.extend(chart.base_symbols());
    s
}

fn mixed_expr(symbols: &[Symbol], rng: &mut ChaCha8Rng) -> Expr {
    let a = random_polynomial(symbols, 2, 2, rng);
    let b = random_polynomial(symbols, 2, 2, rng);
    match rng.gen_range(0..3) {
        0 => Expr::func(Func::Tanh, a) * b,
        1 => Expr::func(Func::Sin, a) + b.pow(2),
        _ => a * b,
    }
}

fn property_suites() -> Outcome {
    let start = Instant::now();
    let chart = JetChart::generic(2, 1, 4);
    let jets = low_jets(&chart);
    let coords = CoordSystem::new(jets.iter().take(6).cloned().collect());
    for seed in 0..PROPERTY_CASES {
        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0000 + seed);
        let degree = rng.gen_range(0..4);
        let form = random_form(&coords, degree, &mut rng);
        ensure(form.exterior_d().exterior_d().is_zero(), || format!("d∘d ≠ 0 for seed {seed}"))?;

        let f = random_polynomial(&jets, 4, 3, &mut rng);
        let xy = total_derivative(&total_derivative(&f, 0, 4).unwrap(), 1, 4).unwrap();
        let yx = total_derivative(&total_derivative(&f, 1, 4).unwrap(), 0, 4).unwrap();
        ensure((xy - yx).normal_form().is_zero(), || format!("total derivatives do not commute for seed {seed}"))?;
        let via_index = iterated_total_derivative(&f, &MultiIndex::pair(2, 0, 1), 4).unwrap();
        ensure(proven(&via_index, &total_derivative(&total_derivative(&f, 0, 4).unwrap(), 1, 4).unwrap()), || {
            format!("iterated derivative mismatch for seed {seed}")
        })?;

        let field = mixed_expr(&chart.base_symbols(), &mut rng);
        let k = rng.gen_range(1..4);
        let p = prolong(&SectionExpr::from_fields(2, vec![field]), k, &chart).unwrap();
        ensure(holonomy_check(&p, 1, k, &chart).unwrap().holds(), || format!("prolongation not holonomic, seed {seed}"))?;
        ensure(holonomy_check_direct(&p, 1, k, &chart).unwrap().holds(), || format!("direct check fails, seed {seed}"))?;

        let g = mixed_expr(&jets[..4], &mut rng);
        let s = jets[rng.gen_range(0..4)].clone();
        let points: Vec<Bindings> = (0..3).map(|_| random_bindings(&jets, &mut rng)).collect();
        let err = finite_diff_validate(&g, &s, &points).map_err(|err| err.to_string())?;
        ensure(err < 1e-6, || format!("diff vs finite differences {err:e} for seed {seed}"))?;
    }
    within(start.elapsed(), 20.0, "property suites")?;
    Ok(format!("{PROPERTY_CASES} seeded instances each: d∘d = 0, commuting total derivatives, holonomic prolongations, diff vs FD < 1e-6"))
}

// -------------------------------------------------------------------------

const CRITERIA: [Criterion; 12] = [
    (1, "plate Legendre map", plate_legendre),
    (2, "plate regularity and Jacobian rank", plate_regularity),
    (3, "plate Euler-Lagrange equation", plate_euler_lagrange),
    (4, "KdV Legendre map, rank and singularity", kdv_legendre),
    (5, "KdV Euler-Lagrange equation and soliton", kdv_euler_lagrange),
    (6, "constraint ladders", ladders),
    (7, "two-route Euler-Lagrange agreement", two_route_euler_lagrange),
    (8, "form identities", form_identities),
    (9, "nondegeneracy and degeneracy", nondegeneracy),
    (10, "Hamiltonian fixtures", hamiltonian_fixtures),
    (11, "dimension formulas", dimension_formulas),
    (12, "property suites", property_suites),
];

fn main() -> ExitCode {
    let mut failures = Vec::new();
    for (id, title, run) in CRITERIA {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id:>2}] {title} ({secs:.2} s): {detail}"),
            Err(reason) => {
                println!("FAIL [{id:>2}] {title} ({secs:.2} s): {reason}");
                failures.push(id);
            }
        }
    }
    if failures.is_empty() {
        println!("acceptance: all {} criteria pass", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failures:?}");
        ExitCode::FAILURE
    }
}
