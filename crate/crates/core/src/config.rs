use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_max_iterations() -> usize {
    200
}

/// Discretisation and tolerance parameters of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Spatial dimension `n`.
    pub dim: usize,
    /// Mode cube half-width `N`.
    pub trunc: usize,
    /// Viscosity `nu`.
    pub viscosity: f64,
    /// Smoothness index `s` of the data norm.
    pub smoothness: f64,
    /// Horizon `T`.
    pub horizon: f64,
    /// Number of time intervals `M`; the grid has `M + 1` nodes.
    pub grid_size: usize,
    /// Stop when the sup-over-grid l1 distance of successive iterates drops below this.
    pub picard_tol: f64,
    /// Accepted Richardson estimate of the quadrature error.
    pub quadrature_tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
}

impl SolverConfig {
    pub fn new(dim: usize, trunc: usize, viscosity: f64, horizon: f64, grid_size: usize) -> Self {
        SolverConfig {
            dim,
            trunc,
            viscosity,
            smoothness: 2.0,
            horizon,
            grid_size,
            picard_tol: 1e-12,
            quadrature_tol: 1e-6,
            max_iterations: default_max_iterations(),
        }
    }

    pub fn with_smoothness(mut self, s: f64) -> Self {
        self.smoothness = s;
        self
    }

    pub fn with_picard_tol(mut self, tol: f64) -> Self {
        self.picard_tol = tol;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| {
            Err(Error::Config {
                field: field.into(),
                reason: why.into(),
            })
        };
        if self.dim < 1 {
            return bad("dim", "must be at least 1");
        }
        if self.trunc < 1 {
            return bad("trunc", "must be at least 1");
        }
        if !(self.viscosity > 0.0 && self.viscosity.is_finite()) {
            return bad("viscosity", "must be positive and finite");
        }
        if !self.smoothness.is_finite() {
            return bad("smoothness", "must be finite");
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon", "must be positive and finite");
        }
        if self.grid_size < 2 {
            return bad("grid_size", "must be at least 2");
        }
        if !(self.picard_tol > 0.0) {
            return bad("picard_tol", "must be positive");
        }
        if !(self.quadrature_tol > 0.0) {
            return bad("quadrature_tol", "must be positive");
        }
        if self.max_iterations < 1 {
            return bad("max_iterations", "must be at least 1");
        }
        Ok(())
    }

    /// Uniform grid `t_i = i T / M`, `i = 0..=M`.
    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.grid_size)
    }
}

pub fn uniform_grid(horizon: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|i| horizon * i as f64 / intervals as f64).collect()
}
