//! Picard iteration for the majorant equation
//! `V(t) = V0 + a int_0^t P_rho^{t - xi} D(V^2)(xi) d xi`.
//!
//! Starting from `V^(0) = V0` every iterate is nonnegative and the sequence is
//! coefficient-wise nondecreasing, so it either converges to the minimal
//! solution or grows without bound.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{MajorantSequence, MajorantTrajectory};
use crate::config::uniform_grid;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::mild::{duhamel_sweep, PicardReport};
use crate::product::{convolve_real_direct, ProductEngine, ProductMethod};

/// Consecutive residual increases that count as blow-up.
const BLOWUP_STREAK: usize = 6;

/// Coefficient size past which the iteration is abandoned.
const BLOWUP_LEVEL: f64 = 1e150;

/// Largest lattice for which the direct product is the default.
const DIRECT_LIMIT: usize = 2048;

type Squarer<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

pub struct MajorantSolver {
    a: f64,
    rho: f64,
    times: Vec<f64>,
    tol: f64,
    max_iterations: usize,
    method: Option<ProductMethod>,
}

impl MajorantSolver {
    pub fn new(a: f64, rho: f64, times: Vec<f64>) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!("a must be finite and nonnegative, got {a}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("time grid must be nonempty and strictly increasing".into()));
        }
        Ok(MajorantSolver {
            a,
            rho,
            times,
            tol: 1e-13,
            max_iterations: 1000,
            method: None,
        })
    }

    /// Relative tolerance on the sup-over-grid l1 step.
    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    /// Product route; by default direct on small lattices and FFT otherwise.
    pub fn method(mut self, method: ProductMethod) -> Self {
        self.method = Some(method);
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn forcing(&self, lat: &Arc<Lattice>, states: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let method = self
            .method
            .unwrap_or(if lat.len() <= DIRECT_LIMIT { ProductMethod::Direct } else { ProductMethod::Fft });
        let square: Squarer = match method {
            ProductMethod::Direct => Box::new(|v: &[f64]| convolve_real_direct(lat, v, v)),
            ProductMethod::Fft => {
                let engine = ProductEngine::new(lat);
                Box::new(move |v: &[f64]| {
                    let c: Vec<Complex64> = v.iter().map(|&x| x.into()).collect();
                    let phys = engine.to_physical(&c);
                    let sq = phys.iter().map(|z| z * z).collect();
                    let mut out = vec![Complex64::default(); v.len()];
                    engine.from_physical(sq, &mut out);
                    out.iter().map(|z| z.re.max(0.0)).collect()
                })
            }
        };
        states
            .par_iter()
            .map(|v| {
                let mut sq = square(v);
                for (i, x) in sq.iter_mut().enumerate() {
                    *x *= lat.l1(i);
                }
                sq
            })
            .collect()
    }

    /// One sweep `V0 + a Q[D(V^2)]` on the grid.
    pub fn apply(&self, v0: &MajorantSequence, states: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let lat = v0.lattice();
        let forcing = self.forcing(lat, states);
        let slices: Vec<&[f64]> = forcing.iter().map(Vec::as_slice).collect();
        let zero = vec![0.0; lat.len()];
        let q = duhamel_sweep(lat, self.rho, &self.times, &zero, &slices)?;
        Ok(q
            .into_iter()
            .map(|qi| v0.coeffs().iter().zip(qi).map(|(v, q)| v + self.a * q).collect())
            .collect())
    }

    pub fn solve(&self, v0: &MajorantSequence) -> Result<(MajorantTrajectory, PicardReport)> {
        let lat = v0.lattice();
        let mut states = vec![v0.coeffs().to_vec(); self.times.len()];
        let mut report = PicardReport::default();
        for _ in 0..self.max_iterations {
            let next = self.apply(v0, &states)?;
            let mut step = 0.0f64;
            let mut size = 0.0f64;
            for (x, y) in next.iter().zip(&states) {
                step = step.max(x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum());
                size = size.max(x.iter().sum());
            }
            report.push_residual(step);
            states = next;
            if !step.is_finite() || size > BLOWUP_LEVEL || streak(&report.residuals) {
                return Err(Error::Diverged {
                    iterations: report.iterations,
                    residual: step,
                });
            }
            if step <= self.tol * size.max(1.0) {
                report.converged = true;
                break;
            }
        }
        let seqs = states
            .into_iter()
            .map(|c| MajorantSequence::new(lat, c))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            MajorantTrajectory {
                times: self.times.clone(),
                states: seqs,
            },
            report,
        ))
    }
}

fn streak(r: &[f64]) -> bool {
    r.len() > BLOWUP_STREAK && r[r.len() - BLOWUP_STREAK - 1..].windows(2).all(|w| w[1] > w[0])
}

/// Solve the majorant equation on a uniform grid of `intervals` steps over `[0, horizon]`.
pub fn majorant_solve(
    v0: &MajorantSequence,
    a: f64,
    rho: f64,
    horizon: f64,
    intervals: usize,
    tol: f64,
) -> Result<(MajorantTrajectory, PicardReport)> {
    if !(horizon > 0.0) || intervals == 0 {
        return Err(Error::InvalidArgument(format!(
            "need a positive horizon and at least one interval, got {horizon} and {intervals}"
        )));
    }
    MajorantSolver::new(a, rho, uniform_grid(horizon, intervals))?.tol(tol).solve(v0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial;
    use crate::majorant::majorize_initial;

    #[test]
    fn zero_data_stays_zero() {
        let lat = Lattice::new(2, 3).unwrap();
        let (traj, rep) = majorant_solve(&MajorantSequence::zeros(&lat), 4.0, 0.5, 1.0, 8, 1e-14).unwrap();
        assert!(rep.converged);
        assert!(traj.states.iter().all(|s| s.sup() == 0.0));
    }

    #[test]
    fn a_zero_gives_constant_majorant() {
        let lat = Lattice::new(2, 3).unwrap();
        let v0 = majorize_initial(&initial::random_scalar(&lat, 2));
        let (traj, _) = majorant_solve(&v0, 0.0, 0.5, 1.0, 8, 1e-14).unwrap();
        assert!(traj.states.iter().all(|s| s == &v0));
    }

    #[test]
    fn small_data_is_monotone_in_time() {
        let lat = Lattice::new(2, 4).unwrap();
        let v0 = majorize_initial(&initial::random_hs_with_norm(&lat, 2.0, 0.005, 9).unwrap());
        let (traj, rep) = majorant_solve(&v0, 4.0, 0.5, 1.0, 16, 1e-14).unwrap();
        assert!(rep.converged);
        assert_eq!(traj.max_time_decrease(), 0.0);
        for s in &traj.states {
            for i in 0..lat.len() {
                assert!(s.get(i) >= v0.get(i));
            }
        }
    }

    #[test]
    fn fft_and_direct_agree() {
        let lat = Lattice::new(2, 4).unwrap();
        let v0 = majorize_initial(&initial::random_hs_with_norm(&lat, 2.0, 0.01, 5).unwrap());
        let times = uniform_grid(0.5, 8);
        let d = MajorantSolver::new(4.0, 0.5, times.clone()).unwrap().method(ProductMethod::Direct);
        let f = MajorantSolver::new(4.0, 0.5, times).unwrap().method(ProductMethod::Fft);
        let (a, _) = d.solve(&v0).unwrap();
        let (b, _) = f.solve(&v0).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            let dist: f64 = x.coeffs().iter().zip(y.coeffs()).map(|(p, q)| (p - q).abs()).sum();
            assert!(dist < 1e-13, "{dist}");
        }
    }

    #[test]
    fn large_data_blows_up() {
        let lat = Lattice::new(2, 3).unwrap();
        let v0 = majorize_initial(&initial::random_hs_with_norm(&lat, 2.0, 50.0, 1).unwrap());
        assert!(matches!(
            majorant_solve(&v0, 4.0, 0.5, 5.0, 20, 1e-14),
            Err(Error::Diverged { .. })
        ));
    }
}
