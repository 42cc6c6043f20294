//! Scalar automatic differentiation: a reverse-mode tape for gradients of
//! losses with respect to parameters, forward-mode duals (nestable to second
//! order), and a two-direction second-order jet for PDE residuals.

pub mod dual;
pub mod fd;
pub mod jet;
pub mod scalar;
pub mod tape;

pub use dual::{derivative, second_derivative, Dual};
pub use jet::SpacetimeJet;
pub use scalar::Scalar;
pub use tape::{gradient, GradientVector, Tape, Var};
