//! Symbols: the leaves of expressions.

use std::fmt;
use std::sync::Arc;

use crate::multiindex::MultiIndex;

/// A coordinate or parameter that can appear in an expression.
///
/// The derived ordering is the fixed symbol order used by the normal form:
/// base coordinates, then jet coordinates by (field, order, lex-decreasing
/// index), then momenta, the extended momentum, parameters, and finally the
/// opaque derivative and multivector-coefficient symbols.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Symbol {
    /// Base coordinate `x^i`.
    Base(usize),
    /// Jet coordinate `u^α_I`; the zero index is the field itself.
    Jet { field: usize, index: MultiIndex },
    /// Multimomentum `p^I_α` with `1 ≤ |I| ≤ 2`.
    Momentum { field: usize, index: MultiIndex },
    /// The scalar extended momentum `p`.
    ExtMomentum,
    /// A named constant parameter.
    Param(Arc<str>),
    /// Opaque derivative `∂z/∂x^dir` of a section component `z`.
    Deriv { of: Box<Symbol>, dir: usize },
    /// Coefficient of `∂/∂z` in the `dir`-th factor of a decomposable
    /// multivector field (written `F` for jet targets, `G` for momenta).
    Flow { of: Box<Symbol>, dir: usize },
}

impl Symbol {
    /// Jet coordinate shorthand.
    pub fn jet(field: usize, index: MultiIndex) -> Self {
        Symbol::Jet { field, index }
    }

    /// Momentum shorthand.
    pub fn momentum(field: usize, index: MultiIndex) -> Self {
        Symbol::Momentum { field, index }
    }

    /// Parameter shorthand.
    pub fn param(name: &str) -> Self {
        Symbol::Param(Arc::from(name))
    }

    /// Opaque derivative of `self` along base direction `dir`.
    pub fn deriv(&self, dir: usize) -> Self {
        Symbol::Deriv { of: Box::new(self.clone()), dir }
    }

    /// Multivector coefficient on `∂/∂self` in factor `dir`.
    pub fn flow(&self, dir: usize) -> Self {
        Symbol::Flow { of: Box::new(self.clone()), dir }
    }

    /// Derivative weight: jets weigh their order, derivative and flow
    /// symbols one more than their target, everything else zero.
    pub fn weight(&self) -> i64 {
        match self {
            Symbol::Jet { index, .. } => i64::from(index.length()),
            Symbol::Deriv { of, .. } | Symbol::Flow { of, .. } => of.weight() + 1,
            _ => 0,
        }
    }

    /// Jet order if this is a jet coordinate.
    pub fn jet_order(&self) -> Option<u32> {
        match self {
            Symbol::Jet { index, .. } => Some(index.length()),
            _ => None,
        }
    }

    /// True for parameters.
    pub fn is_param(&self) -> bool {
        matches!(self, Symbol::Param(_))
    }

    /// True for `Flow` coefficients whose target is a jet coordinate.
    pub fn is_jet_flow(&self) -> bool {
        matches!(self, Symbol::Flow { of, .. } if matches!(**of, Symbol::Jet { .. }))
    }

    /// True for `Flow` coefficients whose target is a momentum.
    pub fn is_momentum_flow(&self) -> bool {
        matches!(self, Symbol::Flow { of, .. } if matches!(**of, Symbol::Momentum { .. } | Symbol::ExtMomentum))
    }

    /// Renders the symbol with the given naming context.
    pub fn render(&self, names: &dyn Names) -> String {
        match self {
            Symbol::Base(i) => names.base_name(*i),
            Symbol::Jet { field, index } => {
                if index.is_zero() {
                    names.field_name(*field)
                } else {
                    format!("{}{}", names.field_name(*field), index)
                }
            }
            Symbol::Momentum { field, index } => format!("p.{}{}", names.field_name(*field), index),
            Symbol::ExtMomentum => "p0".to_string(),
            Symbol::Param(name) => name.to_string(),
            Symbol::Deriv { of, dir } => format!("d_{}({})", names.base_name(*dir), of.render(names)),
            Symbol::Flow { of, dir } => {
                let letter = if matches!(**of, Symbol::Jet { .. }) { "F" } else { "G" };
                format!("{}_{}({})", letter, names.base_name(*dir), of.render(names))
            }
        }
    }
}

/// Naming context for rendering symbols.
pub trait Names {
    /// Name of base coordinate `i`.
    fn base_name(&self, i: usize) -> String;
    /// Name of field `a`.
    fn field_name(&self, a: usize) -> String;
}

/// Fallback names: `x, y, z, x4, …` for the base and `u, v, w, u4, …` for fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct GenericNames;

impl Names for GenericNames {
    fn base_name(&self, i: usize) -> String {
        match i {
            0 => "x".into(),
            1 => "y".into(),
            2 => "z".into(),
            _ => format!("x{}", i + 1),
        }
    }

    fn field_name(&self, a: usize) -> String {
        match a {
            0 => "u".into(),
            1 => "v".into(),
            2 => "w".into(),
            _ => format!("u{}", a + 1),
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&GenericNames))
    }
}
