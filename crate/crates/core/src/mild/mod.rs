//! The projected Navier-Stokes system in mild form and its Picard solver.
//!
//! Taking the divergence of the momentum equation eliminates the pressure,
//! `p = -Delta^{-1} d_i d_j (v^i v^j)`, and leaves
//!
//! ```text
//! d_t v^k = A^k_l d_j (v^j v^l) + nu Delta v^k,   A^k_l = Delta^{-1} d_k d_l - delta_kl,
//! ```
//!
//! which is solved through its Duhamel form on a fixed time grid.

mod duhamel;
mod operators;
mod picard;
mod trajectory;

pub use duhamel::{duhamel_apply, duhamel_sweep, duhamel_trajectory, Amplitude};
pub use operators::{a_multiplier, a_operator, nonlinear_term, pressure_recover, Nonlinearity, DIV_TOL};
pub use picard::{picard_solve, MildMap, PicardReport, PicardSolver, DIVERGENCE_STREAK};
pub use trajectory::{
    initial_continuity_check, momentum_residual, write_atomic, ContinuityReport, InvariantReport, Trajectory,
};
