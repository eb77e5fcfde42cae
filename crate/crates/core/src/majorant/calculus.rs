//! Property harness for the majorant calculus.
//!
//! Each [`Property`] is an implication "if `u << U` and `v << V` then
//! `lhs << rhs`" checked coefficient-wise on truncated fields. Time-dependent
//! rows use the whole sampled history; pointwise rows are checked at every
//! node.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dominates, dominates_within, polar_within, MajorantSequence};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::{Lattice, Wavevector};
use crate::product::{convolve_direct, convolve_real_direct};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// `u + v << U + V`
    Sum,
    /// `u v << U V`
    Product,
    /// `lambda u << |lambda| U`
    Scale,
    /// `int_0^t u << 2 int_0^t U` along the real segment.
    Integral,
    /// `d_l u << D U`
    Derivative,
    /// `S^t u << U`
    Semigroup,
    /// `D(u v) << U DV + V DU`
    ProductDerivative,
    /// `Delta^{-1} u << U` on mean-free `u`.
    InverseLaplacian,
    /// `Delta^{-1} d_j d_l u << c U` with `c = 1`.
    SecondDerivative,
}

impl Property {
    pub const ALL: [Property; 9] = [
        Property::Sum,
        Property::Product,
        Property::Scale,
        Property::Integral,
        Property::Derivative,
        Property::Semigroup,
        Property::ProductDerivative,
        Property::InverseLaplacian,
        Property::SecondDerivative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Sum => "sum",
            Property::Product => "product",
            Property::Scale => "scale",
            Property::Integral => "integral",
            Property::Derivative => "derivative",
            Property::Semigroup => "semigroup",
            Property::ProductDerivative => "product_derivative",
            Property::InverseLaplacian => "inverse_laplacian",
            Property::SecondDerivative => "second_derivative",
        }
    }
}

/// Sampled scalar histories `u, v << U, V` and the row parameters.
#[derive(Clone, Debug)]
pub struct CalculusCase {
    pub times: Vec<f64>,
    pub u: Vec<SpectralField>,
    pub v: Vec<SpectralField>,
    pub big_u: Vec<MajorantSequence>,
    pub big_v: Vec<MajorantSequence>,
    pub lambda: Complex64,
    /// Axes for the derivative rows (zero-based).
    pub axes: (usize, usize),
    pub viscosity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalculusOutcome {
    pub property: Property,
    pub passed: bool,
    /// `(node, mode, lhs, rhs)` of the worst violation.
    pub witness: Option<(usize, Wavevector, f64, f64)>,
}

impl CalculusCase {
    fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n == 0 || [self.u.len(), self.v.len(), self.big_u.len(), self.big_v.len()].iter().any(|&l| l != n) {
            return Err(Error::Shape("every history needs one entry per time node".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
        }
        let lat = self.u[0].lattice();
        if self.axes.0 >= lat.dim() || self.axes.1 >= lat.dim() {
            return Err(Error::InvalidArgument(format!("axes {:?} out of range", self.axes)));
        }
        for i in 0..n {
            for f in [&self.u[i], &self.v[i]] {
                if f.components() != 1 || f.lattice() != lat {
                    return Err(Error::Shape("calculus rows act on scalar fields of one lattice".into()));
                }
            }
            for (f, m, name) in [(&self.u[i], &self.big_u[i], "u << U"), (&self.v[i], &self.big_v[i], "v << V")] {
                let d = dominates(f, m, None)?;
                if !d.holds {
                    return Err(Error::InvalidArgument(format!(
                        "precondition {name} fails at node {i}, mode {}",
                        d.worst.map(|w| w.mode.to_string()).unwrap_or_default()
                    )));
                }
            }
        }
        Ok(())
    }
}

fn seq(lat: &Arc<Lattice>, c: Vec<f64>) -> MajorantSequence {
    MajorantSequence::new(lat, c).expect("sums of nonnegative terms")
}

fn add_seq(a: &MajorantSequence, b: &MajorantSequence) -> MajorantSequence {
    seq(a.lattice(), a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + y).collect())
}

fn d_seq(a: &MajorantSequence) -> MajorantSequence {
    let lat = a.lattice();
    seq(lat, a.coeffs().iter().enumerate().map(|(i, x)| x * lat.l1(i)).collect())
}

fn mul_seq(a: &MajorantSequence, b: &MajorantSequence) -> MajorantSequence {
    seq(a.lattice(), convolve_real_direct(a.lattice(), a.coeffs(), b.coeffs()))
}

/// Trapezoid integrals `int_0^{t_i}` of a history, node by node.
fn running_trapezoid<T: Clone>(times: &[f64], xs: &[T], zero: T, axpy: impl Fn(&mut T, f64, &T)) -> Vec<T> {
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = zero;
    out.push(acc.clone());
    for i in 1..xs.len() {
        let h = 0.5 * (times[i] - times[i - 1]);
        axpy(&mut acc, h, &xs[i - 1]);
        axpy(&mut acc, h, &xs[i]);
        out.push(acc.clone());
    }
    out
}

/// Rounding slack on the conclusion: tight cases (`|u_k| = U_k`) are equalities
/// in exact arithmetic and may differ by a few ulps in floating point.
pub const CALCULUS_RTOL: f64 = 1e-12;

/// Checks one row on every node of `case`.
pub fn calculus_check(property: Property, case: &CalculusCase) -> Result<CalculusOutcome> {
    case.validate()?;
    let lat = Arc::clone(case.u[0].lattice());
    let (j, l) = case.axes;
    let mut pairs: Vec<(SpectralField, MajorantSequence)> = Vec::with_capacity(case.times.len());
    match property {
        Property::Integral => {
            let lhs = running_trapezoid(&case.times, &case.u, SpectralField::zeros(&lat, 1), |a, h, x| {
                a.axpy(h, x).expect("same shape")
            });
            let rhs = running_trapezoid(&case.times, &case.big_u, MajorantSequence::zeros(&lat), |a, h, x| {
                *a = seq(&lat, a.coeffs().iter().zip(x.coeffs()).map(|(p, q)| p + 2.0 * h * q).collect())
            });
            pairs.extend(lhs.into_iter().zip(rhs));
        }
        _ => {
            for i in 0..case.times.len() {
                let (u, v, bu, bv) = (&case.u[i], &case.v[i], &case.big_u[i], &case.big_v[i]);
                let t = case.times[i] - case.times[0];
                pairs.push(match property {
                    Property::Sum => (u + v, add_seq(bu, bv)),
                    Property::Product => (convolve_direct(u, v)?, mul_seq(bu, bv)),
                    Property::Scale => (u.scaled_complex(case.lambda), bu.scaled(case.lambda.norm())),
                    Property::Derivative => (u.derivative(l)?, d_seq(bu)),
                    Property::Semigroup => (u.heat_semigroup(t, case.viscosity)?, bu.clone()),
                    Property::ProductDerivative => (
                        convolve_direct(u, v)?.d_multiplier(),
                        add_seq(&mul_seq(bu, &d_seq(bv)), &mul_seq(bv, &d_seq(bu))),
                    ),
                    Property::InverseLaplacian => {
                        let mut free = u.clone();
                        free.set(0, lat.zero_index(), Complex64::default());
                        (free.inv_laplacian()?, bu.clone())
                    }
                    Property::SecondDerivative => {
                        let f = u.derivative(j)?.derivative(l)?;
                        let mut free = f;
                        free.set(0, lat.zero_index(), Complex64::default());
                        (free.inv_laplacian()?, bu.clone())
                    }
                    Property::Integral => unreachable!(),
                });
            }
        }
    }
    let mut outcome = CalculusOutcome {
        property,
        passed: true,
        witness: None,
    };
    let mut worst = f64::NEG_INFINITY;
    for (i, (lhs, rhs)) in pairs.iter().enumerate() {
        let d = dominates_within(lhs, rhs, None, CALCULUS_RTOL)?;
        if let Some(w) = d.worst {
            outcome.passed = false;
            if w.value - w.bound > worst {
                worst = w.value - w.bound;
                outcome.witness = Some((i, w.mode, w.value, w.bound));
            }
        }
    }
    Ok(outcome)
}

/// A random quadruple on `lat`: `U, V` with decaying nonnegative entries and
/// `|u_k| = f U_k`, `f` uniform in `[0, 1]`, with random phases; about one
/// node in three has `|u_k| = U_k` exactly on every mode.
pub fn random_case(lat: &Arc<Lattice>, nodes: usize, seed: u64) -> CalculusCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = {
        let mut t = 0.0;
        (0..nodes)
            .map(|_| {
                let now = t;
                t += rng.random_range(0.01..0.2);
                now
            })
            .collect()
    };
    let history = |rng: &mut ChaCha8Rng| {
        let mut fields = Vec::with_capacity(nodes);
        let mut bounds = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            let tight = rng.random_bool(1.0 / 3.0);
            let mut big = Vec::with_capacity(lat.len());
            let mut f = SpectralField::zeros(lat, 1);
            for i in 0..lat.len() {
                let b = rng.random::<f64>() * (-0.3 * lat.l1(i)).exp();
                let frac = if tight { 1.0 } else { rng.random::<f64>() };
                let phase = rng.random_range(0.0..std::f64::consts::TAU);
                f.set(0, i, polar_within(frac * b, phase));
                big.push(b);
            }
            fields.push(f);
            bounds.push(seq(lat, big));
        }
        (fields, bounds)
    };
    let (u, big_u) = history(&mut rng);
    let (v, big_v) = history(&mut rng);
    let n = lat.dim();
    CalculusCase {
        times,
        u,
        v,
        big_u,
        big_v,
        lambda: Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
        axes: (rng.random_range(0..n), rng.random_range(0..n)),
        viscosity: rng.random_range(0.1..2.0),
    }
}
