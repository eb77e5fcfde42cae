//! Spectral incompressible Navier-Stokes on the n-torus.
//!
//! * [`field`], [`product`], [`format`]: truncated Fourier fields, their
//!   multiplier operators, exact Galerkin products and file formats.
//! * [`mild`]: pressure elimination, the mild (Duhamel) formulation and the
//!   Picard solver.
//! * [`majorant`]: coefficient-wise majorants, the scalar majorant equation
//!   and certified existence times.
//! * [`analyticity`]: decay-rate fits, complex-strip evaluation, decay to the
//!   mean and continuous-dependence experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod analyticity;
pub mod config;
pub mod error;
pub mod fft;
pub mod field;
pub mod format;
pub mod initial;
pub mod lattice;
pub mod majorant;
pub mod mild;
pub mod product;

pub use config::SolverConfig;
pub use error::{Error, Result};
pub use field::SpectralField;
pub use lattice::{Lattice, Wavevector};
pub use majorant::{CertReport, MajorantSequence, MajorantTrajectory};
pub use mild::{PicardReport, Trajectory};
pub use num_complex::Complex64;
pub use product::ProductMethod;
