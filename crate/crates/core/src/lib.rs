//! Numerical tools for the distinguishability trade-off that an additive
//! conservation law imposes on a measurement interaction.
//!
//! For orthogonal system states `ψ0, ψ1`, an apparatus state `σ` and a
//! unitary `U` commuting with `L_S ⊗ 1 + 1 ⊗ L_A`, the final reduced states
//! obey
//!
//! ```text
//! |<ψ0|L_S|ψ1>| ≤ ‖L_A‖ F(ρ0^S, ρ1^S) + ‖L_S‖ F(ρ0^A, ρ1^A)
//! ```
//!
//! with `F` the (square-root) Uhlmann fidelity. The crate evaluates both
//! sides for concrete schemes ([`way`]), samples and parameterizes
//! conserving unitaries ([`conservation`]), searches for schemes that
//! saturate the bound ([`optimize`]) and builds the spin-1/2 constructions
//! ([`scenarios`]).

// `!(x > tol)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod conservation;
pub mod error;
pub mod linops;
pub mod optimize;
pub mod rng;
pub mod sampling;
pub mod scenarios;
pub mod states;
pub mod way;

pub use error::{Error, Result};
pub use linops::ComplexMatrix;
pub use rng::Seed;
pub use states::{DensityOperator, Povm, PureState};
