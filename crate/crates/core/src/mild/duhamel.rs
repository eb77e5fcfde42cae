//! Duhamel quadrature `u(t) = S^t u0 + int_0^t S^{t - tau} f(tau) d tau` on a time grid.
//!
//! The integral is the composite trapezoid rule on the grid nodes with the
//! semigroup factor evaluated exactly at each node. It is accumulated by the
//! recursion
//!
//! ```text
//! Q_0 = 0,   Q_{i+1} = E_i Q_i + h_i / 2 (E_i f_i + f_{i+1}),   E_i = e^{-rate |k|^2 h_i}
//! ```
//!
//! which reproduces the trapezoid sum node by node in O(M) work.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::Lattice;

/// Coefficient types the quadrature can act on.
pub trait Amplitude: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {}

impl Amplitude for f64 {}
impl Amplitude for Complex64 {}

/// Node-by-node Duhamel sums for every mode of a flat coefficient array.
///
/// `initial` and every entry of `forcing` hold `components * lattice.len()`
/// coefficients; `rate` multiplies `|k|_e^2` in the exponent.
pub fn duhamel_sweep<T: Amplitude>(
    lattice: &Lattice,
    rate: f64,
    times: &[f64],
    initial: &[T],
    forcing: &[&[T]],
) -> Result<Vec<Vec<T>>> {
    if forcing.len() != times.len() {
        return Err(Error::InsufficientHistory {
            got: forcing.len(),
            need: times.len(),
        });
    }
    let width = initial.len();
    let len = lattice.len();
    if !width.is_multiple_of(len) || forcing.iter().any(|f| f.len() != width) {
        return Err(Error::Shape("forcing history does not match the initial data".into()));
    }
    check_grid(times)?;
    let modes: Vec<f64> = (0..len).map(|i| lattice.l2_sq(i)).collect();
    let t0 = times[0];
    let mut out = Vec::with_capacity(times.len());
    let mut q = vec![T::default(); width];
    out.push(initial.to_vec());
    for step in 1..times.len() {
        let h = times[step] - times[step - 1];
        let t = times[step] - t0;
        let (prev, next) = (forcing[step - 1], forcing[step]);
        let mut state = Vec::with_capacity(width);
        for slot in 0..width {
            let k2 = modes[slot % len];
            let e = (-rate * k2 * h).exp();
            q[slot] = q[slot] * e + (prev[slot] * e + next[slot]) * (0.5 * h);
            let s = (-rate * k2 * t).exp();
            state.push(initial[slot] * s + q[slot]);
        }
        out.push(state);
    }
    Ok(out)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// States `u(t_i)` at every grid node for the heat semigroup with viscosity `nu`.
pub fn duhamel_trajectory(
    initial: &SpectralField,
    forcing: &[SpectralField],
    nu: f64,
    times: &[f64],
) -> Result<Vec<SpectralField>> {
    if forcing.iter().any(|f| !f.same_shape(initial)) {
        return Err(Error::Shape("forcing history does not match the initial data".into()));
    }
    let slices: Vec<&[Complex64]> = forcing.iter().map(|f| f.coeffs()).collect();
    let states = duhamel_sweep(initial.lattice(), nu, times, initial.coeffs(), &slices)?;
    states
        .into_iter()
        .map(|c| SpectralField::from_coeffs(initial.lattice(), initial.components(), c))
        .collect()
}

/// `u(t)` at the last grid node.
pub fn duhamel_apply(
    initial: &SpectralField,
    forcing: &[SpectralField],
    nu: f64,
    times: &[f64],
) -> Result<SpectralField> {
    let mut states = duhamel_trajectory(initial, forcing, nu, times)?;
    Ok(states.pop().expect("grid is nonempty"))
}
