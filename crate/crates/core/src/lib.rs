//! Symbolic and numeric toolkit for second-order Lagrangian field theories.
//!
//! The crate works in natural jet coordinates. Given a Lagrangian that
//! depends on jets up to order two, it derives the Legendre maps, the
//! regularity verdict, the Euler-Lagrange and Hamilton-De Donder-Weyl
//! equations, the constraint ladder of the unified formalism, and the
//! coefficients of the associated multisymplectic forms. A numeric layer
//! checks derived equations against closed-form solutions.

pub mod extcalc;
pub mod fixtures;
pub mod hamiltonian;
pub mod jetspace;
pub mod multiindex;
pub mod numcheck;
pub mod random;
pub mod symexpr;
pub mod theory;
pub mod unified;
