//! Numeric validation: residuals of derived equations on closed-form
//! solutions, finite-difference checks of symbolic derivatives, and
//! numeric ranks of expression matrices.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::jetspace::{prolong, JetError, SectionExpr};
use crate::symexpr::{Bindings, EvalError, Expr, Symbol};
use crate::theory::EquationSet;

/// Relative singular-value threshold used for ranks.
pub const RANK_THRESHOLD: f64 = 1e-9;

/// Errors raised by numeric checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    /// Evaluation failed at a specific grid point.
    #[error("evaluation failed at {location}: {source}")]
    EvalAt { location: String, source: EvalError },
    #[error(transparent)]
    Jet(#[from] JetError),
    /// The grid description is unusable.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// One axis of a sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    /// Validated axis: `count ≥ 2` and `min < max`.
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self, NumError> {
        if count < 2 || min.partial_cmp(&max) != Some(std::cmp::Ordering::Less) {
            return Err(NumError::InvalidGrid(format!("axis {min}:{max}:{count} needs min < max and at least 2 points")));
        }
        Ok(Self { min, max, count })
    }

    /// The `k`-th sample point.
    pub fn point(&self, k: usize) -> f64 {
        self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
    }
}

/// A tensor-product grid over the base coordinates with parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// One axis per base coordinate, in chart order.
    pub axes: Vec<Axis>,
    /// Parameter values by name.
    pub params: BTreeMap<String, f64>,
}

impl Grid {
    /// Number of grid points.
    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// The coordinates of the point with linear index `k`.
    pub fn point(&self, mut k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            out[i] = axis.point(k % axis.count);
            k /= axis.count;
        }
        out
    }

    fn bindings(&self, coords: &[f64]) -> Bindings {
        let mut b: Bindings = coords.iter().enumerate().map(|(i, v)| (Symbol::Base(i), *v)).collect();
        for (name, v) in &self.params {
            b.insert(Symbol::param(name), *v);
        }
        b
    }
}

/// Per-equation result of a residual check.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub name: String,
    /// Largest absolute residual over the grid.
    pub max_abs: f64,
    /// The residual after substitution, in normal form.
    pub substituted: Expr,
}

impl ResidualReport {
    /// True when the substituted residual normalizes to zero.
    pub fn symbolically_zero(&self) -> bool {
        self.substituted.is_zero()
    }
}

/// Substitutes the prolonged solution into every residual and evaluates it
/// on the grid.
pub fn residual(eqs: &EquationSet, sol: &SectionExpr, grid: &Grid) -> Result<Vec<ResidualReport>, NumError> {
    if grid.axes.len() != eqs.chart.m() {
        return Err(NumError::InvalidGrid(format!(
            "grid has {} axes, chart has {} base coordinates",
            grid.axes.len(),
            eqs.chart.m()
        )));
    }
    let top = eqs
        .equations
        .iter()
        .flat_map(|e| e.residual.symbols())
        .filter_map(|s| s.jet_order())
        .max()
        .unwrap_or(0);
    let prolonged = prolong(sol, top, &eqs.chart)?;
    let mut out = Vec::with_capacity(eqs.len());
    for eq in &eqs.equations {
        let substituted = eq.residual.substitute_with(&|s| match s {
            Symbol::Jet { .. } => prolonged.get(s).cloned(),
            _ => None,
        });
        let mut max_abs = 0.0f64;
        if !substituted.is_zero() {
            for k in 0..grid.size() {
                let coords = grid.point(k);
                let v = substituted.eval(&grid.bindings(&coords)).map_err(|source| NumError::EvalAt {
                    location: format!("{coords:?} in `{}`", eq.name),
                    source,
                })?;
                max_abs = max_abs.max(v.abs());
            }
        }
        out.push(ResidualReport { name: eq.name.clone(), max_abs, substituted });
    }
    Ok(out)
}

/// Largest relative error between `∂e/∂s` and a central difference with
/// step `1e−5 · max(1, |s|)` over the given points.
pub fn finite_diff_validate(e: &Expr, s: &Symbol, points: &[Bindings]) -> Result<f64, NumError> {
    let derivative = e.diff(s);
    let mut worst = 0.0f64;
    for point in points {
        let at = point.get(s).copied().ok_or_else(|| EvalError::Unbound(s.clone()))?;
        let h = 1e-5 * at.abs().max(1.0);
        let mut shifted = point.clone();
        shifted.insert(s.clone(), at + h);
        let forward = e.eval(&shifted)?;
        shifted.insert(s.clone(), at - h);
        let backward = e.eval(&shifted)?;
        let numeric = (forward - backward) / (2.0 * h);
        let exact = derivative.eval(point)?;
        worst = worst.max((numeric - exact).abs() / exact.abs().max(1.0));
    }
    Ok(worst)
}

/// Evaluates a matrix of expressions at a point.
pub fn evaluate_matrix(matrix: &[Vec<Expr>], point: &Bindings) -> Result<DMatrix<f64>, NumError> {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let mut out = DMatrix::zeros(rows, cols);
    for (r, row) in matrix.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            out[(r, c)] = e.eval(point)?;
        }
    }
    Ok(out)
}

/// Rank by singular values above `threshold` times the largest one.
pub fn numeric_rank(matrix: &[Vec<Expr>], point: &Bindings, threshold: f64) -> Result<usize, NumError> {
    let m = evaluate_matrix(matrix, point)?;
    Ok(matrix_rank(&m, threshold))
}

/// Rank of a float matrix by relative singular-value threshold.
pub fn matrix_rank(m: &DMatrix<f64>, threshold: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let largest = sv.iter().cloned().fold(0.0f64, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > threshold * largest).count()
}
