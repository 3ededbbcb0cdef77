//! Problem files: TOML blocks describing the chart, the Lagrangian, and
//! optional Legendre section, closed-form solution and sampling grid.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use sofft_core::hamiltonian::LegendreSection;
use sofft_core::jetspace::{JetChart, SectionExpr};
use sofft_core::numcheck::Axis;
use sofft_core::symexpr::{parse, parse_symbol, Expr, Symbol};
use sofft_core::theory::LagrangianProblem;

use crate::error::CliError;

/// Raw file layout.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub problem: ProblemBlock,
    pub lagrangian: LagrangianBlock,
    pub section: Option<SectionBlock>,
    pub solution: Option<SolutionBlock>,
    /// Axis name to `min:max:count`.
    pub grid: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub name: String,
    pub base: Vec<String>,
    pub fields: Vec<String>,
    pub order: u32,
    #[serde(default)]
    pub params: Vec<String>,
    /// Holonomy type of the multivector ansatz in the constraint ladder.
    pub holonomy_type: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianBlock {
    #[serde(rename = "L")]
    pub density: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectionBlock {
    /// Jet coordinate to image in momentum-space coordinates.
    pub images: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionBlock {
    /// Field name to closed form in the base coordinates.
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// A loaded, validated problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub lagrangian: LagrangianProblem,
    pub holonomy_type: u32,
    pub section: Option<LegendreSection>,
    pub solution: Option<Solution>,
    pub grid: Option<Vec<Axis>>,
}

/// Closed-form field components and parameter values.
#[derive(Debug, Clone)]
pub struct Solution {
    pub section: SectionExpr,
    pub params: BTreeMap<String, f64>,
}

impl Problem {
    /// Reads and validates a problem file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read { path: path.display().to_string(), source })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Parses and validates problem-file text; `origin` labels errors.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, CliError> {
        let file: ProblemFile =
            toml::from_str(text).map_err(|source| CliError::Toml { path: origin.to_string(), source: Box::new(source) })?;
        Self::from_file(file)
    }

    fn from_file(file: ProblemFile) -> Result<Self, CliError> {
        let block = &file.problem;
        if !(1..=2).contains(&block.order) {
            return Err(CliError::Precondition(format!(
                "problem order must be 2 (or 1, read as a second-order problem), found {}",
                block.order
            )));
        }
        let chart = JetChart::new(block.base.clone(), block.fields.clone(), block.params.clone(), 2)
            .map_err(|e| CliError::Precondition(e.to_string()))?;
        let density = parse(&file.lagrangian.density, &chart.scope(block.order)).map_err(|source| CliError::Expr {
            context: "lagrangian.L".into(),
            text: file.lagrangian.density.clone(),
            source,
        })?;
        let lagrangian =
            LagrangianProblem::new(chart.clone(), density).map_err(|e| CliError::Precondition(e.to_string()))?;
        let holonomy_type = block.holonomy_type.unwrap_or(if block.order == 1 { 3 } else { 1 });
        if !(1..=3).contains(&holonomy_type) {
            return Err(CliError::Precondition(format!("holonomy_type must be 1, 2 or 3, found {holonomy_type}")));
        }
        let section = file.section.as_ref().map(|s| load_section(s, &chart)).transpose()?;
        let solution = file.solution.as_ref().map(|s| load_solution(s, &chart)).transpose()?;
        let grid = file.grid.as_ref().map(|g| load_grid(g, &chart)).transpose()?;
        Ok(Self { name: block.name.clone(), lagrangian, holonomy_type, section, solution, grid })
    }

    /// The chart of the problem.
    pub fn chart(&self) -> &JetChart {
        self.lagrangian.chart()
    }
}

fn load_section(block: &SectionBlock, chart: &JetChart) -> Result<LegendreSection, CliError> {
    let scope = chart.scope(3);
    let mut images = BTreeMap::new();
    for (key, value) in &block.images {
        let symbol = parse_symbol(key, &scope).map_err(|source| CliError::Expr {
            context: "section.images key".into(),
            text: key.clone(),
            source,
        })?;
        if !matches!(symbol.jet_order(), Some(2 | 3)) {
            return Err(CliError::Precondition(format!("section key {key} must be a jet of order 2 or 3")));
        }
        let image = parse(value, &scope).map_err(|source| CliError::Expr {
            context: format!("section.images.\"{key}\""),
            text: value.clone(),
            source,
        })?;
        images.insert(symbol, image);
    }
    Ok(LegendreSection::new(images))
}

fn load_solution(block: &SolutionBlock, chart: &JetChart) -> Result<Solution, CliError> {
    let scope = chart.scope(0);
    let mut fields: Vec<Expr> = Vec::with_capacity(chart.n());
    for name in chart.field_names() {
        let text = block
            .fields
            .get(name)
            .ok_or_else(|| CliError::Precondition(format!("solution block has no closed form for field {name}")))?;
        let e = parse(text, &scope).map_err(|source| CliError::Expr {
            context: format!("solution.fields.{name}"),
            text: text.clone(),
            source,
        })?;
        if e.any_symbol(&|s| !matches!(s, Symbol::Base(_) | Symbol::Param(_))) {
            return Err(CliError::Precondition(format!("solution for {name} may only use base coordinates and parameters")));
        }
        fields.push(e);
    }
    for name in block.fields.keys() {
        if !chart.field_names().contains(name) {
            return Err(CliError::Precondition(format!("solution names unknown field {name}")));
        }
    }
    for name in block.params.keys() {
        if !chart.params().contains(name) {
            return Err(CliError::Precondition(format!("solution sets unknown parameter {name}")));
        }
    }
    Ok(Solution { section: SectionExpr::from_fields(chart.m(), fields), params: block.params.clone() })
}

/// Parses `min:max:count`.
pub fn parse_axis(spec: &str) -> Result<Axis, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Grid(format!("axis `{spec}` must look like min:max:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Axis::new(min, max, count).map_err(|e| CliError::Grid(e.to_string()))
}

fn load_grid(block: &BTreeMap<String, String>, chart: &JetChart) -> Result<Vec<Axis>, CliError> {
    for name in block.keys() {
        if !chart.base_names().contains(name) {
            return Err(CliError::Grid(format!("grid names unknown base coordinate {name}")));
        }
    }
    chart
        .base_names()
        .iter()
        .map(|name| {
            let spec = block.get(name).ok_or_else(|| CliError::Grid(format!("grid block misses axis {name}")))?;
            parse_axis(spec)
        })
        .collect()
}
