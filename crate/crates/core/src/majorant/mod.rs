//! Coefficient-wise majorants.
//!
//! `u << U` means `|u_k(t)| <= U_k(t)` for every mode and component. A scalar
//! nonnegative solution of
//!
//! ```text
//! V(t) = V0 + a int_0^t P_rho^{t - xi} D(V^2)(xi) d xi
//! ```
//!
//! majorates every Picard iterate of the Navier-Stokes mild map after the
//! smoothing `Lambda^t`, which turns norm bounds on `V` into certified
//! existence times.

mod calculus;
mod certify;
mod solve;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{hs_weight, lambda_factor, SpectralField};
use crate::lattice::{Lattice, Wavevector};

pub use calculus::{calculus_check, random_case, CALCULUS_RTOL, CalculusCase, CalculusOutcome, Property};
pub use certify::{
    a_dominance_trial, algebra_constant, certified_constants, certified_time, closes, contraction_bound,
    global_threshold, max_certifiable_norm, run_probe, run_scans, scan_a_dominance, scan_lemma1_c, scan_lemma1_c_brute,
    scan_rho, scan_second_derivative, time_integral_constant, CertReport, CertifiedConstants, CertifiedTime,
    ContractionBound, Grid, ProbeConfig, ProbeResult, ScanReport, ThresholdReport,
};
pub use solve::{majorant_solve, MajorantSolver};

/// Nonnegative coefficients `V_k` on the mode cube.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorantSequence {
    lattice: Arc<Lattice>,
    coeffs: Vec<f64>,
}

impl MajorantSequence {
    pub fn new(lattice: &Arc<Lattice>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                lattice.len(),
                coeffs.len()
            )));
        }
        if let Some(i) = coeffs.iter().position(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidArgument(format!(
                "majorant coefficient {} at mode {} is not a finite nonnegative number",
                coeffs[i],
                lattice.wavevector(i)
            )));
        }
        Ok(MajorantSequence {
            lattice: Arc::clone(lattice),
            coeffs,
        })
    }

    pub fn zeros(lattice: &Arc<Lattice>) -> Self {
        MajorantSequence {
            lattice: Arc::clone(lattice),
            coeffs: vec![0.0; lattice.len()],
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.coeffs[idx]
    }

    pub fn sup(&self) -> f64 {
        self.coeffs.iter().copied().fold(0.0, f64::max)
    }

    pub fn norm_hs(&self, s: f64) -> f64 {
        let lat = &self.lattice;
        self.coeffs.iter().enumerate().map(|(i, c)| c * hs_weight(lat.l1(i)).powf(s)).sum()
    }

    pub fn scaled(&self, factor: f64) -> MajorantSequence {
        assert!(factor >= 0.0);
        MajorantSequence {
            lattice: Arc::clone(&self.lattice),
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `V` as a one-component field with real coefficients.
    pub fn to_field(&self) -> SpectralField {
        let coeffs = self.coeffs.iter().map(|&c| c.into()).collect();
        SpectralField::from_coeffs(&self.lattice, 1, coeffs).expect("shape matches")
    }
}

/// Majorant values on a time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MajorantTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MajorantSequence>,
}

impl MajorantTrajectory {
    /// Largest decrease `V_k(t_i) - V_k(t_{i+1})` over modes and steps; zero
    /// when the trajectory is coefficient-wise nondecreasing in time.
    pub fn max_time_decrease(&self) -> f64 {
        let mut worst = 0.0f64;
        for w in self.states.windows(2) {
            for (a, b) in w[0].coeffs.iter().zip(&w[1].coeffs) {
                worst = worst.max(a - b);
            }
        }
        worst
    }

    pub fn sup_at(&self, node: usize) -> f64 {
        self.states[node].sup()
    }
}

/// Smallest common majorant of the components: `V0_k = max_m |v0^m_k|`.
pub fn majorize_initial(v0: &SpectralField) -> MajorantSequence {
    let lat = v0.lattice();
    let coeffs = (0..lat.len())
        .map(|i| (0..v0.components()).map(|c| v0.coeff(c, i).norm()).fold(0.0, f64::max))
        .collect();
    MajorantSequence {
        lattice: Arc::clone(lat),
        coeffs,
    }
}

/// `r e^{i phase}` with `|z| <= r` guaranteed despite rounding.
pub(crate) fn polar_within(r: f64, phase: f64) -> num_complex::Complex64 {
    let mut z = num_complex::Complex64::from_polar(r, phase);
    while z.norm() > r {
        z *= 1.0 - f64::EPSILON;
    }
    z
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Grid node, when a trajectory was checked.
    pub node: Option<usize>,
    pub component: usize,
    pub mode: Wavevector,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domination {
    pub holds: bool,
    /// Number of (node, component, mode) slots where the bound fails.
    pub violations: usize,
    /// The slot with the largest excess `value - bound`.
    pub worst: Option<Violation>,
}

impl Domination {
    fn merge(&mut self, other: Domination) {
        self.holds &= other.holds;
        self.violations += other.violations;
        let excess = |v: &Option<Violation>| v.as_ref().map_or(f64::NEG_INFINITY, |v| v.value - v.bound);
        if excess(&other.worst) > excess(&self.worst) {
            self.worst = other.worst;
        }
    }
}

/// Checks `|u_k| <= factor_k V_k` for every component, with `factor_k =
/// e^{-|k|_e t nu / 2}` when `shift = Some((t, nu))` and `1` otherwise.
pub fn dominates(u: &SpectralField, v: &MajorantSequence, shift: Option<(f64, f64)>) -> Result<Domination> {
    dominates_within(u, v, shift, 0.0)
}

/// [`dominates`] with the bound relaxed to `(1 + rtol) factor_k V_k`.
pub fn dominates_within(u: &SpectralField, v: &MajorantSequence, shift: Option<(f64, f64)>, rtol: f64) -> Result<Domination> {
    if u.lattice() != v.lattice() {
        return Err(Error::Shape("field and majorant live on different lattices".into()));
    }
    let lat = u.lattice();
    let mut out = Domination {
        holds: true,
        violations: 0,
        worst: None,
    };
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..lat.len() {
        let factor = match shift {
            Some((t, nu)) => lambda_factor(lat.l2(i), t, nu),
            None => 1.0,
        };
        let bound = factor * v.coeffs[i] * (1.0 + rtol);
        for c in 0..u.components() {
            let value = u.coeff(c, i).norm();
            if value > bound {
                out.holds = false;
                out.violations += 1;
                if value - bound > worst_excess {
                    worst_excess = value - bound;
                    out.worst = Some(Violation {
                        node: None,
                        component: c,
                        mode: lat.wavevector(i),
                        value,
                        bound,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Checks `u(t_i) << Lambda^{t_i} V(t_i)` at every node of a trajectory.
pub fn dominates_trajectory(states: &[SpectralField], majorant: &MajorantTrajectory, nu: f64) -> Result<Domination> {
    if states.len() != majorant.states.len() {
        return Err(Error::Shape(format!(
            "{} states against {} majorant nodes",
            states.len(),
            majorant.states.len()
        )));
    }
    let mut total = Domination {
        holds: true,
        violations: 0,
        worst: None,
    };
    for (i, (u, v)) in states.iter().zip(&majorant.states).enumerate() {
        let mut d = dominates(u, v, Some((majorant.times[i] - majorant.times[0], nu)))?;
        if let Some(w) = d.worst.as_mut() {
            w.node = Some(i);
        }
        total.merge(d);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial;
    use num_complex::Complex64;

    #[test]
    fn equality_dominates() {
        let lat = Lattice::new(2, 3).unwrap();
        let u = initial::random_scalar(&lat, 4);
        let v = majorize_initial(&u);
        assert!(dominates(&u, &v, None).unwrap().holds);
    }

    #[test]
    fn zero_majorant_reports_the_offending_mode() {
        let lat = Lattice::new(2, 3).unwrap();
        let u = SpectralField::single_mode(&lat, 2, 1, &[1, -2], Complex64::new(0.0, 0.3)).unwrap();
        let d = dominates(&u, &MajorantSequence::zeros(&lat), None).unwrap();
        assert!(!d.holds);
        assert_eq!(d.violations, 1);
        let w = d.worst.unwrap();
        assert_eq!(w.mode, Wavevector::new(vec![1, -2]));
        assert_eq!(w.component, 1);
    }

    #[test]
    fn smoothing_shift_tightens_the_bound() {
        let lat = Lattice::new(2, 2).unwrap();
        let u = SpectralField::single_mode(&lat, 1, 0, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        let v = majorize_initial(&u);
        assert!(dominates(&u, &v, Some((0.0, 1.0))).unwrap().holds);
        assert!(!dominates(&u, &v, Some((0.1, 1.0))).unwrap().holds);
        let smoothed = u.lambda_smoothing(0.1, 1.0).unwrap();
        assert!(dominates(&smoothed, &v, Some((0.1, 1.0))).unwrap().holds);
    }

    #[test]
    fn taylor_green_majorant() {
        let lat = Lattice::new(2, 3).unwrap();
        let v = majorize_initial(&initial::taylor_green(&lat).unwrap());
        for (i, k) in lat.iter() {
            let expect = if k.iter().all(|c| c.abs() == 1) { 0.25 } else { 0.0 };
            assert_eq!(v.get(i), expect, "{k:?}");
        }
        assert!(majorize_initial(&SpectralField::zeros(&lat, 2)).coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn single_component_majorant_is_its_modulus() {
        let lat = Lattice::new(2, 2).unwrap();
        let s = initial::random_scalar(&lat, 8);
        let mut v = SpectralField::zeros(&lat, 2);
        v.component_mut(1).copy_from_slice(s.component(0));
        let m = majorize_initial(&v);
        for i in 0..lat.len() {
            assert_eq!(m.get(i), s.coeff(0, i).norm());
        }
    }

    #[test]
    fn sequence_validation() {
        let lat = Lattice::new(2, 1).unwrap();
        assert!(MajorantSequence::new(&lat, vec![0.0; 9]).is_ok());
        assert!(MajorantSequence::new(&lat, vec![0.0; 8]).is_err());
        let mut bad = vec![0.0; 9];
        bad[3] = -1e-20;
        assert!(MajorantSequence::new(&lat, bad).is_err());
    }
}
