//! Exact solutions and bifurcation curves of the one-dimensional nonlocal
//! Kirchhoff problem
//!
//! ```text
//! -(∫_0^1 (1-x)^n u^q dx) u'' = λ u^p,   u(0) = u(1) = 0,   u > 0,
//! ```
//!
//! built on the time-map representation of the ground state `W_p` of
//! `-W'' = W^p`, a ledger of its moment constants, and independent numerical
//! oracles (singular quadrature, RK4 shooting, a discrete Newton solver).

pub mod constants;
pub mod error;
pub mod ground_state;
pub mod nonlocal;
pub mod quadrature;
pub mod verify;

pub use constants::{Method, MomentConstant, MomentKind};
pub use error::{Error, Result};
pub use ground_state::GroundState;
pub use nonlocal::{ExactSolution, ProblemSpec, Variant};
