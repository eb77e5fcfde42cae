//! Picard iteration for the mild equation
//! `v(t) = S^t v0 + int_0^t S^{t - xi} B(v(xi)) d xi` on the whole time grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::duhamel::duhamel_trajectory;
use super::operators::{check_solenoidal, check_velocity, Nonlinearity};
use super::trajectory::Trajectory;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::Lattice;
use crate::product::ProductMethod;

/// Consecutive residual increases that count as divergence.
pub const DIVERGENCE_STREAK: usize = 3;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// Sup-over-grid l1 distance between successive iterates.
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub contraction_ratios: Vec<f64>,
    /// Richardson estimate `max_i |u_h(t_2i) - u_2h(t_2i)|_1 / 3` of the
    /// quadrature error; `None` when the grid has an odd number of intervals.
    pub quadrature_error: Option<f64>,
}

impl PicardReport {
    pub(crate) fn push_residual(&mut self, r: f64) {
        if let Some(&prev) = self.residuals.last() {
            self.contraction_ratios.push(if prev > 0.0 { r / prev } else { 0.0 });
        }
        self.residuals.push(r);
        self.iterations = self.residuals.len();
    }

    /// True when the last [`DIVERGENCE_STREAK`] steps all increased the residual.
    pub(crate) fn diverging(&self) -> bool {
        let r = &self.residuals;
        r.last().is_some_and(|x| !x.is_finite())
            || (r.len() > DIVERGENCE_STREAK
                && r[r.len() - DIVERGENCE_STREAK - 1..].windows(2).all(|w| w[1] > w[0]))
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.residuals.last().copied()
    }
}

/// The mild map `G` on a fixed grid.
pub struct MildMap {
    nonlinearity: Nonlinearity,
    viscosity: f64,
    times: Vec<f64>,
}

impl MildMap {
    pub fn new(lattice: &std::sync::Arc<Lattice>, viscosity: f64, times: Vec<f64>, method: ProductMethod) -> Self {
        MildMap {
            nonlinearity: Nonlinearity::new(lattice, method),
            viscosity,
            times,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// `B(v(t_i))` at every node, evaluated in parallel.
    pub fn forcing(&self, states: &[SpectralField]) -> Vec<SpectralField> {
        states.par_iter().map(|v| self.nonlinearity.apply_unchecked(v)).collect()
    }

    /// First iterate `S^t v0`.
    pub fn linear_part(&self, v0: &SpectralField) -> Vec<SpectralField> {
        self.times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                if i == 0 {
                    v0.clone()
                } else {
                    v0.heat_semigroup(t - self.times[0], self.viscosity).expect("t >= 0")
                }
            })
            .collect()
    }

    /// One sweep `G(v)` followed by the divergence cleanup of every node past `t_0`.
    pub fn apply(&self, v0: &SpectralField, states: &[SpectralField]) -> Result<Vec<SpectralField>> {
        let forcing = self.forcing(states);
        let mut next = duhamel_trajectory(v0, &forcing, self.viscosity, &self.times)?;
        next[0] = v0.clone();
        next[1..].par_iter_mut().for_each(|v| {
            *v = v.leray_project().expect("velocity shape checked");
        });
        Ok(next)
    }

    /// Richardson estimate of the trapezoid error for the forcing of `states`.
    pub fn quadrature_error(&self, v0: &SpectralField, states: &[SpectralField]) -> Result<Option<f64>> {
        let m = self.times.len() - 1;
        if !m.is_multiple_of(2) || m < 2 {
            return Ok(None);
        }
        let forcing = self.forcing(states);
        let fine = duhamel_trajectory(v0, &forcing, self.viscosity, &self.times)?;
        let coarse_t: Vec<f64> = self.times.iter().step_by(2).copied().collect();
        let coarse_f: Vec<SpectralField> = forcing.iter().step_by(2).cloned().collect();
        let coarse = duhamel_trajectory(v0, &coarse_f, self.viscosity, &coarse_t)?;
        let mut worst = 0.0f64;
        for (i, c) in coarse.iter().enumerate() {
            worst = worst.max(fine[2 * i].distance_l1(c)?);
        }
        Ok(Some(worst / 3.0))
    }
}

fn sup_distance(a: &[SpectralField], b: &[SpectralField]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.distance_l1(y).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

type Observer<'a> = Box<dyn FnMut(usize, &[SpectralField]) + 'a>;

/// Options beyond the [`SolverConfig`]: product route and an iterate observer.
pub struct PicardSolver<'a> {
    config: &'a SolverConfig,
    method: ProductMethod,
    observer: Option<Observer<'a>>,
}

impl<'a> PicardSolver<'a> {
    pub fn new(config: &'a SolverConfig) -> Self {
        PicardSolver {
            config,
            method: ProductMethod::Fft,
            observer: None,
        }
    }

    pub fn method(mut self, method: ProductMethod) -> Self {
        self.method = method;
        self
    }

    /// Called with `(m, v^(m))` for every iterate, starting from `v^(0) = S^t v0`.
    pub fn observe(mut self, f: impl FnMut(usize, &[SpectralField]) + 'a) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    pub fn solve(mut self, v0: &SpectralField) -> Result<(Trajectory, PicardReport)> {
        let cfg = self.config;
        cfg.validate()?;
        check_velocity(v0)?;
        if v0.dim() != cfg.dim || v0.trunc() != cfg.trunc {
            return Err(Error::Shape(format!(
                "data lives on ({}, {}), config expects ({}, {})",
                v0.dim(),
                v0.trunc(),
                cfg.dim,
                cfg.trunc
            )));
        }
        check_solenoidal(v0)?;
        let map = MildMap::new(v0.lattice(), cfg.viscosity, cfg.times(), self.method);
        let mut states = map.linear_part(v0);
        let mut report = PicardReport::default();
        if let Some(obs) = self.observer.as_mut() {
            obs(0, &states);
        }
        for m in 1..=cfg.max_iterations {
            let next = map.apply(v0, &states)?;
            let r = sup_distance(&next, &states);
            report.push_residual(r);
            states = next;
            if let Some(obs) = self.observer.as_mut() {
                obs(m, &states);
            }
            if r <= cfg.picard_tol {
                report.converged = true;
                break;
            }
            if report.diverging() {
                return Err(Error::Diverged {
                    iterations: report.iterations,
                    residual: r,
                });
            }
        }
        report.quadrature_error = map.quadrature_error(v0, &states)?;
        let traj = Trajectory::new(cfg.clone(), map.times().to_vec(), states)?;
        Ok((traj, report))
    }
}

/// Solve the mild equation on `[0, T]` by Picard iteration from `S^t v0`.
pub fn picard_solve(v0: &SpectralField, config: &SolverConfig) -> Result<(Trajectory, PicardReport)> {
    PicardSolver::new(config).solve(v0)
}
