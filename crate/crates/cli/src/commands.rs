//! The `analyze`, `check` and `dims` commands. Each returns an [`Output`]
//! carrying both the text rendering and the JSON value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};
use sofft_core::extcalc::Form;
use sofft_core::hamiltonian::{
    diagonal_section, ham_function_almost_regular, ham_function_regular, hamilton_cartan_form, hamilton_ddw_equations,
    hamilton_equations_via_forms, image_submanifold,
};
use sofft_core::jetspace::{dimensions, Dimensions, JetChart};
use sofft_core::numcheck::{residual, Axis, Grid};
use sofft_core::symexpr::{equal, Expr, Symbol};
use sofft_core::theory::{
    classify_regularity, euler_lagrange, extended_legendre, legendre_jacobian_rank, liouville_form, pairing_cs,
    pairing_via_embedding, poincare_cartan, random_jet_points, restricted_legendre, unified_forms, EquationSet,
    LagrangianProblem, LegendreMap, Regularity, SAMPLE_SEED,
};
use sofft_core::unified::{run_constraint_algorithm, ConstraintLadder, LadderVerdict, Named};

use crate::error::CliError;
use crate::problem::{parse_axis, Problem};

/// Number of seeded random points used for numeric ranks.
pub const RANK_SAMPLES: usize = 5;

/// Default `--tol` for `check`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Output format of `analyze`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// What `analyze` derives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Legendre,
    ExtendedLegendre,
    Regularity,
    EulerLagrange,
    Hamilton,
    Constraints,
    Forms,
    Dims,
    Pairing,
}

impl Emit {
    /// All selectors with their command-line names.
    pub const ALL: [(Emit, &'static str); 9] = [
        (Emit::Legendre, "legendre"),
        (Emit::ExtendedLegendre, "extended-legendre"),
        (Emit::Regularity, "regularity"),
        (Emit::EulerLagrange, "euler-lagrange"),
        (Emit::Hamilton, "hamilton"),
        (Emit::Constraints, "constraints"),
        (Emit::Forms, "forms"),
        (Emit::Dims, "dims"),
        (Emit::Pairing, "pairing"),
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(e, _)| *e == self).map(|(_, n)| *n).expect("every selector is listed")
    }
}

impl FromStr for Emit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.iter().find(|(_, n)| *n == s).map(|(e, _)| *e).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|(_, n)| *n).collect();
            format!("unknown selector `{s}`; expected one of {}", names.join(", "))
        })
    }
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A command result in both renderings.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub json: Value,
}

impl Output {
    /// The rendering selected by `format`; JSON is pretty-printed.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.clone(),
            Format::Json => serde_json::to_string_pretty(&self.json).expect("JSON values serialize"),
        }
    }
}

/// Result of `check`: the output plus the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub output: Output,
    pub passed: bool,
}

/// Runs one derivation on a loaded problem.
pub fn analyze(problem: &Problem, emit: Emit) -> Result<Output, CliError> {
    let prob = &problem.lagrangian;
    match emit {
        Emit::Legendre => Ok(legendre_output(prob.chart(), &restricted_legendre(prob).map_err(CliError::precondition)?)),
        Emit::ExtendedLegendre => {
            Ok(legendre_output(prob.chart(), &extended_legendre(prob).map_err(CliError::precondition)?))
        }
        Emit::Regularity => regularity_output(prob),
        Emit::EulerLagrange => Ok(equations_output(&euler_lagrange(prob).map_err(CliError::precondition)?)),
        Emit::Hamilton => hamilton_output(problem),
        Emit::Constraints => Ok(ladder_output(prob.chart(), &run_constraint_algorithm(prob, problem.holonomy_type))),
        Emit::Forms => forms_output(prob),
        Emit::Dims => Ok(dims_output(prob.m() as u64, prob.n() as u64)),
        Emit::Pairing => Ok(pairing_output(prob.chart())),
    }
}

fn render(e: &Expr, chart: &JetChart) -> String {
    e.render(chart)
}

fn equation_entries(set: &EquationSet) -> Vec<Value> {
    set.equations
        .iter()
        .map(|eq| json!({ "name": eq.name, "residual": render(&eq.residual, &set.chart) }))
        .collect()
}

fn equations_output(set: &EquationSet) -> Output {
    Output { text: set.render_lines().join("\n"), json: json!({ "equations": equation_entries(set) }) }
}

fn legendre_output(chart: &JetChart, map: &LegendreMap) -> Output {
    let mut lines = Vec::new();
    let mut momenta = Map::new();
    for (p, image) in &map.restricted {
        let (key, value) = (p.render(chart), render(image, chart));
        lines.push(format!("{key} = {value}"));
        momenta.insert(key, Value::String(value));
    }
    if let Some(extended) = &map.extended_p {
        let (key, value) = (Symbol::ExtMomentum.render(chart), render(extended, chart));
        lines.push(format!("{key} = {value}"));
        momenta.insert(key, Value::String(value));
    }
    Output { text: lines.join("\n"), json: json!({ "momenta": momenta }) }
}

fn regularity_output(prob: &LagrangianProblem) -> Result<Output, CliError> {
    let verdict = classify_regularity(prob, RANK_SAMPLES).map_err(CliError::precondition)?;
    let hessian_size = prob.chart().jet_symbols(2, 2).len();
    let (hessian_rank, determinant) = match &verdict {
        Regularity::Regular { determinant, .. } => (hessian_size, Some(render(determinant, prob.chart()))),
        Regularity::Singular { rank } => (*rank, None),
    };
    let map = restricted_legendre(prob).map_err(CliError::precondition)?;
    let mut ranks = Vec::new();
    for point in random_jet_points(prob.chart(), RANK_SAMPLES, SAMPLE_SEED) {
        ranks.push(legendre_jacobian_rank(&map, prob.chart(), &point).map_err(CliError::precondition)?);
    }
    let json = json!({
        "verdict": if verdict.is_regular() { "regular" } else { "singular" },
        "label": verdict.label(),
        "rank": hessian_rank,
        "hessian_size": hessian_size,
        "determinant": determinant,
        "legendre_ranks": ranks,
    });
    Ok(Output { text: verdict.label(), json })
}

/// The section used for the Hamiltonian side: the file's section if given,
/// otherwise the automatic one for regular problems and the zero section
/// for singular ones.
fn hamilton_output(problem: &Problem) -> Result<Output, CliError> {
    let prob = &problem.lagrangian;
    let chart = prob.chart();
    let verdict = classify_regularity(prob, RANK_SAMPLES).map_err(CliError::precondition)?;
    if verdict.is_regular() {
        let section = match &problem.section {
            Some(s) => s.clone(),
            None => diagonal_section(prob).map_err(|e| {
                CliError::Precondition(format!("{e}; supply a [section] block with the inverse Legendre images"))
            })?,
        };
        let h = ham_function_regular(prob, &section).map_err(CliError::precondition)?;
        let set = hamilton_ddw_equations(&h, chart);
        let mut text = vec![format!("H = {}", render(&h, chart))];
        text.extend(set.render_lines());
        let json = json!({
            "regular": true,
            "hamiltonian": render(&h, chart),
            "constraints": [],
            "dims": { "momentum_space": chart.restricted_momentum_coordinates().len() },
            "equations": equation_entries(&set),
        });
        return Ok(Output { text: text.join("\n"), json });
    }
    let image = image_submanifold(prob).map_err(CliError::precondition)?;
    let section = problem.section.clone().unwrap_or_default();
    let h = ham_function_almost_regular(prob, &image, &section).map_err(|e| {
        CliError::Precondition(format!("{e}; supply a [section] block mapping the image back to second-order jets"))
    })?;
    let theta = hamilton_cartan_form(chart, &image.coordinates, &h, &image.embedding).map_err(CliError::precondition)?;
    let set = hamilton_equations_via_forms(&theta, chart).map_err(CliError::precondition)?;
    let mut text = vec![format!("dim P = {}", image.dim())];
    text.extend(image.constraints.iter().map(|c| format!("constraint: {} = 0", render(c, chart))));
    text.extend(image.embedding.iter().map(|(p, e)| format!("on P: {} = {}", p.render(chart), render(e, chart))));
    text.push(format!("H = {}", render(&h, chart)));
    text.extend(set.render_lines());
    let embedding: Map<String, Value> =
        image.embedding.iter().map(|(p, e)| (p.render(chart), Value::String(render(e, chart)))).collect();
    let json = json!({
        "regular": false,
        "hamiltonian": render(&h, chart),
        "constraints": image.constraints.iter().map(|c| render(c, chart)).collect::<Vec<_>>(),
        "momenta": embedding,
        "dims": { "image": image.dim() },
        "coordinates": image.coordinates.iter().map(|s| s.render(chart)).collect::<Vec<_>>(),
        "equations": equation_entries(&set),
    });
    Ok(Output { text: text.join("\n"), json })
}

fn named_entries(items: &[Named], chart: &JetChart) -> Vec<Value> {
    items.iter().map(|c| json!({ "name": c.name, "expr": render(&c.expr, chart) })).collect()
}

fn ladder_output(chart: &JetChart, ladder: &ConstraintLadder) -> Output {
    let mut text = Vec::new();
    let mut levels = Vec::new();
    let mut flat = Vec::new();
    for (k, level) in ladder.levels.iter().enumerate() {
        text.push(format!("level {k}:"));
        for c in &level.constraints {
            text.push(format!("  constraint {}: {} = 0", c.name, render(&c.expr, chart)));
            flat.push(json!({ "level": k, "name": c.name, "expr": render(&c.expr, chart) }));
        }
        for (s, e) in &level.assignments {
            text.push(format!("  assign {} = {}", s.render(chart), render(e, chart)));
        }
        for c in &level.conditions {
            text.push(format!("  condition {}: {} = 0", c.name, render(&c.expr, chart)));
        }
        let assignments: Map<String, Value> =
            level.assignments.iter().map(|(s, e)| (s.render(chart), Value::String(render(e, chart)))).collect();
        levels.push(json!({
            "level": k,
            "constraints": named_entries(&level.constraints, chart),
            "assignments": assignments,
            "conditions": named_entries(&level.conditions, chart),
        }));
    }
    let verdict = match &ladder.verdict {
        LadderVerdict::Terminated { final_level } => json!({ "kind": "terminated", "final_level": final_level }),
        LadderVerdict::Incompatible { level, residual } => {
            json!({ "kind": "incompatible", "level": level, "residual": render(residual, chart) })
        }
        LadderVerdict::CapReached => json!({ "kind": "cap-reached" }),
    };
    text.push(format!("verdict: {}", verdict_label(&ladder.verdict, chart)));
    text.extend(ladder.notes.iter().map(|n| format!("note: {n}")));
    let json = json!({
        "holonomy_type": ladder.holonomy_type,
        "levels": levels,
        "constraints": flat,
        "verdict": verdict,
        "notes": ladder.notes,
    });
    Output { text: text.join("\n"), json }
}

fn verdict_label(verdict: &LadderVerdict, chart: &JetChart) -> String {
    match verdict {
        LadderVerdict::Terminated { final_level } => format!("terminated at level {final_level}"),
        LadderVerdict::Incompatible { level, residual } => {
            format!("incompatible at level {level}: {} = 0", render(residual, chart))
        }
        LadderVerdict::CapReached => "level cap reached".into(),
    }
}

/// A form as a list of `{basis, coefficient}` terms so that coefficients
/// re-parse as expressions.
fn form_json(form: &Form, chart: &JetChart) -> Value {
    let coords = form.coords().coords();
    let terms: Vec<Value> = form
        .terms()
        .iter()
        .map(|(key, c)| {
            let basis: Vec<String> = key.iter().map(|&p| coords[p].render(chart)).collect();
            json!({ "basis": basis, "coefficient": render(c, chart) })
        })
        .collect();
    json!({ "degree": form.degree(), "terms": terms })
}

fn forms_output(prob: &LagrangianProblem) -> Result<Output, CliError> {
    let chart = prob.chart();
    let liouville = liouville_form(chart).map_err(CliError::precondition)?;
    let cartan = poincare_cartan(prob).map_err(CliError::precondition)?;
    let (theta_r, _, h) = unified_forms(prob).map_err(CliError::precondition)?;
    let text = [
        format!("liouville = {}", liouville.render(chart)),
        format!("poincare-cartan = {}", cartan.render(chart)),
        format!("unified-hamiltonian = {}", render(&h, chart)),
        format!("unified = {}", theta_r.render(chart)),
    ];
    let json = json!({
        "forms": {
            "liouville": form_json(&liouville, chart),
            "poincare-cartan": form_json(&cartan, chart),
            "unified": form_json(&theta_r, chart),
        },
        "unified_hamiltonian": render(&h, chart),
    });
    Ok(Output { text: text.join("\n"), json })
}

fn pairing_output(chart: &JetChart) -> Output {
    let symmetric = pairing_cs(chart);
    let embedded = pairing_via_embedding(chart);
    let agree = equal(&symmetric, &embedded).holds();
    let text = [
        format!("symmetric = {}", render(&symmetric, chart)),
        format!("embedded = {}", render(&embedded, chart)),
        format!("agree: {agree}"),
    ];
    let json = json!({
        "symmetric": render(&symmetric, chart),
        "embedded": render(&embedded, chart),
        "agree": agree,
    });
    Output { text: text.join("\n"), json }
}

/// Dimension table for an `(m, n)` chart.
pub fn dims_output(m: u64, n: u64) -> Output {
    let d: Dimensions = dimensions(m, n, 3);
    let rows: [(&str, u64); 8] = [
        ("jet1", d.jet1),
        ("jet2", d.jet2),
        ("jet3", d.jet3),
        ("lambda", d.lambda),
        ("extended_momenta", d.extended_momenta),
        ("restricted_momenta", d.restricted_momenta),
        ("unified", d.unified),
        ("unified_restricted", d.unified_restricted),
    ];
    let text: Vec<String> = rows.iter().map(|(k, v)| format!("{k} = {v}")).collect();
    let dims: Map<String, Value> = rows.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    Output { text: text.join("\n"), json: json!({ "m": m, "n": n, "dims": dims }) }
}

/// Parses a `--grid axis=min:max:count` override.
pub fn parse_grid_override(spec: &str) -> Result<(String, Axis), CliError> {
    let (name, range) =
        spec.split_once('=').ok_or_else(|| CliError::Grid(format!("override `{spec}` must look like axis=min:max:count")))?;
    Ok((name.trim().to_string(), parse_axis(range)?))
}

/// Checks the solution block against the Euler-Lagrange equations on the
/// file's grid with the given overrides.
pub fn check(problem: &Problem, tol: f64, overrides: &[(String, Axis)]) -> Result<CheckOutcome, CliError> {
    let prob = &problem.lagrangian;
    let chart = prob.chart();
    let solution = problem
        .solution
        .as_ref()
        .ok_or_else(|| CliError::Precondition("check needs a [solution] block".into()))?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(CliError::Precondition(format!("--tol must be positive, found {tol}")));
    }
    let mut axes: BTreeMap<String, Axis> = BTreeMap::new();
    if let Some(grid) = &problem.grid {
        for (name, axis) in chart.base_names().iter().zip(grid) {
            axes.insert(name.clone(), *axis);
        }
    }
    for (name, axis) in overrides {
        if !chart.base_names().contains(name) {
            return Err(CliError::Grid(format!("override names unknown base coordinate {name}")));
        }
        axes.insert(name.clone(), *axis);
    }
    let axes: Vec<Axis> = chart
        .base_names()
        .iter()
        .map(|name| {
            axes.get(name)
                .copied()
                .ok_or_else(|| CliError::Precondition(format!("no grid axis for {name}; add a [grid] entry or --grid")))
        })
        .collect::<Result<_, _>>()?;
    for name in chart.params() {
        if !solution.params.contains_key(name) {
            return Err(CliError::Precondition(format!("solution block gives no value for parameter {name}")));
        }
    }
    let grid = Grid { axes, params: solution.params.clone() };
    let set = euler_lagrange(prob).map_err(CliError::precondition)?;
    let reports = residual(&set, &solution.section, &grid).map_err(CliError::precondition)?;
    let passed = reports.iter().all(|r| r.max_abs.is_finite() && r.max_abs <= tol);
    let mut text = vec![format!("{:<24} {:>14}  {}", "equation", "max |residual|", "symbolic zero")];
    let mut rows = Vec::new();
    for r in &reports {
        text.push(format!("{:<24} {:>14.3e}  {}", r.name, r.max_abs, r.symbolically_zero()));
        rows.push(json!({
            "name": r.name,
            "max_abs": if r.max_abs.is_finite() { json!(r.max_abs) } else { Value::Null },
            "symbolically_zero": r.symbolically_zero(),
            "substituted": render(&r.substituted, chart),
        }));
    }
    text.push(format!("{} (tol {tol:e}, {} grid points)", if passed { "PASS" } else { "FAIL" }, grid.size()));
    let json = json!({
        "passed": passed,
        "tol": tol,
        "grid_points": grid.size(),
        "equations": rows,
    });
    Ok(CheckOutcome { output: Output { text: text.join("\n"), json }, passed })
}
