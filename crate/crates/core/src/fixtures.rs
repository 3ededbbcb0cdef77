//! The worked examples as ready-made problems: a first-order Lagrangian
//! read as a second-order one, the loaded clamped plate, and the KdV
//! Lagrangian, with the Legendre sections used on the Hamiltonian side.

use std::collections::BTreeMap;

use crate::hamiltonian::LegendreSection;
use crate::jetspace::{JetChart, SectionExpr};
use crate::symexpr::{parse, Expr, Symbol};
use crate::theory::LagrangianProblem;

fn problem(base: &[&str], params: &[&str], lagrangian: &str) -> LagrangianProblem {
    let chart = JetChart::new(
        base.iter().map(|s| s.to_string()).collect(),
        vec!["u".to_string()],
        params.iter().map(|s| s.to_string()).collect(),
        2,
    )
    .expect("fixture chart is valid");
    let l = parse(lagrangian, &chart.scope(2)).expect("fixture Lagrangian parses");
    LagrangianProblem::new(chart, l).expect("fixture Lagrangian is second order")
}

fn section(prob: &LagrangianProblem, pairs: &[(&str, &str)]) -> LegendreSection {
    let scope = prob.chart().scope(3);
    let images = pairs
        .iter()
        .map(|(jet, image)| {
            let Expr::Sym(s) = parse(jet, &scope).expect("fixture jet parses") else {
                unreachable!("fixture keys are symbols")
            };
            (s, parse(image, &scope).expect("fixture image parses"))
        })
        .collect::<BTreeMap<Symbol, Expr>>();
    LegendreSection::new(images)
}

/// Lagrangian text of the first-order sample.
pub const FIRST_ORDER_LAGRANGIAN: &str = "1/2*u[1,0]^2 - 1/2*u[0,1]^2 + u*u[1,0]*u[0,1] + u^3";
/// Lagrangian text of the loaded plate.
pub const PLATE_LAGRANGIAN: &str = "1/2*(u[2,0]^2 + 2*u[1,1]^2 + u[0,2]^2 - 2*q*u)";
/// Lagrangian text of the KdV problem.
pub const KDV_LAGRANGIAN: &str = "1/2*(u[1,0]*u[0,1] - 2*u[1,0]^3 - u[2,0]^2)";

/// A first-order Lagrangian on `(x, y)` read as a second-order one.
pub fn first_order() -> LagrangianProblem {
    problem(&["x", "y"], &[], FIRST_ORDER_LAGRANGIAN)
}

/// The loaded clamped plate on `(x, y)` with load `q`.
pub fn plate() -> LagrangianProblem {
    problem(&["x", "y"], &["q"], PLATE_LAGRANGIAN)
}

/// The KdV Lagrangian on `(x, t)`.
pub fn kdv() -> LagrangianProblem {
    problem(&["x", "t"], &[], KDV_LAGRANGIAN)
}

/// The global section of the plate's Legendre map.
pub fn plate_section(prob: &LagrangianProblem) -> LegendreSection {
    section(
        prob,
        &[
            ("u[2,0]", "p.u[2,0]"),
            ("u[1,1]", "1/2*p.u[1,1]"),
            ("u[0,2]", "p.u[0,2]"),
            ("u[3,0]", "-1/2*p.u[1,0]"),
            ("u[2,1]", "-1/2*p.u[0,1]"),
            ("u[1,2]", "-1/2*p.u[1,0]"),
            ("u[0,3]", "-1/2*p.u[0,1]"),
        ],
    )
}

/// A section of the KdV Legendre map over its image.
pub fn kdv_section(prob: &LagrangianProblem) -> LegendreSection {
    section(prob, &[("u[2,0]", "-p.u[2,0]"), ("u[3,0]", "p.u[1,0] - 1/2*u[0,1] + 3*u[1,0]^2")])
}

/// The travelling wave `u = −√c·tanh((√c/2)(x − c t))` with `c = 4`.
pub fn kdv_soliton(prob: &LagrangianProblem) -> SectionExpr {
    let u = parse("-2*tanh(x - 4*t)", &prob.chart().scope(0)).expect("soliton parses");
    SectionExpr::from_fields(prob.m(), vec![u])
}

/// The plate deflection `u = q x⁴ / 24`.
pub fn plate_solution(prob: &LagrangianProblem) -> SectionExpr {
    let u = parse("q*x^4/24", &prob.chart().scope(0)).expect("plate solution parses");
    SectionExpr::from_fields(prob.m(), vec![u])
}
