//! Seeded generators of random polynomial Lagrangians, expressions and
//! forms, for property tests and the randomized acceptance checks.

use rand::Rng;

use crate::extcalc::{CoordSystem, Form};
use crate::jetspace::JetChart;
use crate::symexpr::{Expr, Symbol};
use crate::theory::LagrangianProblem;
use std::sync::Arc;

/// A random polynomial with up to `terms` monomials, each a product of at
/// most `max_degree` factors drawn from `symbols`, with small integer
/// coefficients.
pub fn random_polynomial<R: Rng>(symbols: &[Symbol], terms: usize, max_degree: usize, rng: &mut R) -> Expr {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let coeff = loop {
            let c = rng.gen_range(-3i64..=3);
            if c != 0 {
                break c;
            }
        };
        let degree = rng.gen_range(0..=max_degree);
        let mut factors = vec![Expr::int(coeff)];
        for _ in 0..degree {
            if symbols.is_empty() {
                break;
            }
            factors.push(Expr::sym(symbols[rng.gen_range(0..symbols.len())].clone()));
        }
        out.push(Expr::product(factors));
    }
    Expr::sum(out).normal_form()
}

/// A random second-order Lagrangian on the chart: up to three factors of
/// second-order jets per term, times at most two lower-order factors.
pub fn random_lagrangian<R: Rng>(chart: &JetChart, rng: &mut R) -> LagrangianProblem {
    let seconds = chart.jet_symbols(2, 2);
    let mut lower = chart.jet_symbols(0, 1);
    lower.extend(chart.base_symbols());
    let terms = rng.gen_range(2..=5);
    let mut pieces = Vec::with_capacity(terms);
    for _ in 0..terms {
        let high = random_polynomial(&seconds, 1, 3, rng);
        let low = random_polynomial(&lower, 1, 2, rng);
        pieces.push(high * low);
    }
    let l = Expr::sum(pieces).normal_form();
    LagrangianProblem::new(chart.clone(), l).expect("generated Lagrangian stays on the chart")
}

/// A random `degree`-form on `coords` with polynomial coefficients in
/// those coordinates.
pub fn random_form<R: Rng>(coords: &Arc<CoordSystem>, degree: usize, rng: &mut R) -> Form {
    let symbols = coords.coords().to_vec();
    let mut out = Form::zero(coords, degree);
    let pieces = rng.gen_range(1..=3);
    for _ in 0..pieces {
        let mut chosen: Vec<Symbol> = Vec::with_capacity(degree);
        while chosen.len() < degree {
            let s = symbols[rng.gen_range(0..symbols.len())].clone();
            if !chosen.contains(&s) {
                chosen.push(s);
            }
        }
        let coeff = random_polynomial(&symbols, 2, 3, rng);
        let term = Form::monomial(coords, coeff, &chosen).expect("chosen symbols are coordinates");
        out = out.add(&term);
    }
    out
}
