//! Solution trajectories, their diagnostics and on-disk layout.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::operators::Nonlinearity;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::format;
use crate::product::ProductMethod;

/// Velocity states `v(t_i)` on a strictly increasing grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    config: SolverConfig,
    times: Vec<f64>,
    states: Vec<SpectralField>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    /// Largest `|div v|_1 / |v|_1` over the grid.
    pub max_divergence_defect: f64,
    /// Largest `|v_0(t_i) - v_0(0)|` over the grid and components.
    pub max_mean_drift: f64,
}

impl Trajectory {
    pub fn new(config: SolverConfig, times: Vec<f64>, states: Vec<SpectralField>) -> Result<Self> {
        if times.len() != states.len() || times.is_empty() {
            return Err(Error::Shape(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("times must be strictly increasing".into()));
        }
        if states.iter().any(|s| !s.same_shape(&states[0]) || s.components() != s.dim()) {
            return Err(Error::Shape("trajectory states must be velocity fields of one shape".into()));
        }
        Ok(Trajectory { config, times, states })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> &SpectralField {
        &self.states[0]
    }

    /// Index of the grid node closest to `t`.
    pub fn nearest_node(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(SpectralField::energy).collect()
    }

    pub fn invariants(&self) -> Result<InvariantReport> {
        let v0 = &self.states[0];
        let mut div = 0.0f64;
        let mut drift = 0.0f64;
        for s in &self.states {
            div = div.max(s.divergence_defect()?);
            for c in 0..s.components() {
                drift = drift.max((s.mean(c) - v0.mean(c)).norm());
            }
        }
        Ok(InvariantReport {
            max_divergence_defect: div,
            max_mean_drift: drift,
        })
    }

    /// Writes `config.json`, `times.json` and `state_XXXXX.tmf` per node.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join("config.json"), serde_json::to_string_pretty(&self.config)?.as_bytes())?;
        write_atomic(&dir.join("times.json"), serde_json::to_string(&self.times)?.as_bytes())?;
        for (i, s) in self.states.iter().enumerate() {
            write_atomic(&dir.join(state_file(i)), &format::to_binary(s))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let config: SolverConfig = serde_json::from_str(&fs::read_to_string(dir.join("config.json"))?)?;
        let times: Vec<f64> = serde_json::from_str(&fs::read_to_string(dir.join("times.json"))?)?;
        let states = (0..times.len())
            .map(|i| format::read_binary(BufReader::new(fs::File::open(dir.join(state_file(i)))?)))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(config, times, states)
    }
}

fn state_file(i: usize) -> String {
    format!("state_{i:05}.tmf")
}

/// Write to `path.tmp` and rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(fs::File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `|v_t + (v.grad)v + grad p - nu Delta v|_1` at interior nodes, with a
/// centred difference for `v_t`. Returns `(t_i, residual)` pairs.
pub fn momentum_residual(traj: &Trajectory) -> Result<Vec<(f64, f64)>> {
    let m = traj.len() - 1;
    if m < 3 {
        return Err(Error::GridTooCoarse(m));
    }
    let nu = traj.config().viscosity;
    let nl = Nonlinearity::new(traj.initial().lattice(), ProductMethod::Fft);
    let (times, states) = (traj.times(), traj.states());
    let mut out = Vec::with_capacity(m - 1);
    for i in 1..m {
        let v = &states[i];
        let mut r = (&states[i + 1] - &states[i - 1]).scaled(1.0 / (times[i + 1] - times[i - 1]));
        r.axpy(1.0, &nl.advection(v)?)?;
        r.axpy(1.0, &nl.pressure(v)?.gradient()?)?;
        r.axpy(-nu, &v.laplacian())?;
        out.push((times[i], r.norm_l1()));
    }
    Ok(out)
}

/// Early-time behaviour of `|d^kappa (v(t) - v0)|_{s - |kappa|}` and the same
/// for the pressure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub times: Vec<f64>,
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    /// Both sequences shrink as `t` decreases towards `0`.
    pub decreasing: bool,
}

fn derivative_multi(f: &SpectralField, kappa: &[u32]) -> Result<SpectralField> {
    let mut out = f.clone();
    for (axis, &order) in kappa.iter().enumerate() {
        for _ in 0..order {
            out = out.derivative(axis)?;
        }
    }
    Ok(out)
}

/// Evaluates the norms at the first `nodes` grid points after `t = 0`.
pub fn initial_continuity_check(
    traj: &Trajectory,
    kappa: &[u32],
    s: f64,
    nodes: usize,
) -> Result<ContinuityReport> {
    let v0 = traj.initial();
    if kappa.len() != v0.dim() {
        return Err(Error::Shape(format!("multi-index must have {} entries", v0.dim())));
    }
    let order: u32 = kappa.iter().sum();
    let index = s - order as f64;
    let nl = Nonlinearity::new(v0.lattice(), ProductMethod::Fft);
    let p0 = nl.pressure(v0)?;
    let count = nodes.min(traj.len() - 1);
    let mut report = ContinuityReport {
        times: Vec::with_capacity(count),
        velocity: Vec::with_capacity(count),
        pressure: Vec::with_capacity(count),
        decreasing: true,
    };
    for i in 1..=count {
        let v = &traj.states()[i];
        let dv = derivative_multi(&(v - v0), kappa)?;
        let dp = derivative_multi(&(&nl.pressure(v)? - &p0), kappa)?;
        report.times.push(traj.times()[i]);
        report.velocity.push(dv.norm_hs(index));
        report.pressure.push(dp.norm_hs(index));
    }
    let nondecreasing = |xs: &[f64]| xs.windows(2).all(|w| w[0] <= w[1]);
    report.decreasing = nondecreasing(&report.velocity) && nondecreasing(&report.pressure);
    Ok(report)
}
