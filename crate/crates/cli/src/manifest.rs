//! Versioned JSON run manifests.
//!
//! ```json
//! {
//!   "version": 1,
//!   "experiment": { "kind": "solve", "residual_bound": 1e-3 },
//!   "config": { "dim": 2, "trunc": 16, "viscosity": 1.0, "smoothness": 2.0,
//!               "horizon": 1.0, "grid_size": 128, "picard_tol": 1e-12,
//!               "quadrature_tol": 1e-6 },
//!   "initial": { "generator": "taylor-green" },
//!   "output": "runs/tg",
//!   "seed": 0
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nstorus::initial;
use nstorus::majorant::ProbeConfig;
use nstorus::{Lattice, ProductMethod, SolverConfig, SpectralField};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    pub experiment: Experiment,
    pub config: SolverConfig,
    pub initial: InitialSpec,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Initial data: a named generator or a field file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    TaylorGreen,
    /// `amplitude * P(direction) cos((mode, x))`.
    SingleMode {
        mode: Vec<i32>,
        amplitude: f64,
        direction: Vec<f64>,
    },
    /// Random solenoidal data; `norm`, when given, rescales to `||v||_s = norm`.
    RandomHs {
        s: f64,
        amplitude: f64,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        norm: Option<f64>,
    },
    /// A JSON (`.json`) or binary field file, resolved against the manifest directory.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    Solve {
        /// Required upper bound on the momentum residual.
        #[serde(default)]
        residual_bound: Option<f64>,
        #[serde(default = "yes")]
        write_trajectory: bool,
    },
    Certify {
        #[serde(default = "default_intervals")]
        intervals: usize,
        #[serde(default = "default_upper")]
        upper: f64,
        #[serde(default)]
        probe: ProbeConfig,
        #[serde(default = "yes")]
        run_probe: bool,
        #[serde(default = "default_scan_range")]
        scan_range: i32,
        #[serde(default = "default_trials")]
        trials: u64,
    },
    Decay {
        #[serde(default = "default_floor")]
        floor: f64,
        /// Multiples of the strip half-width at which to evaluate.
        #[serde(default = "default_strip_fractions")]
        strip_fractions: Vec<f64>,
        #[serde(default = "default_strip_points")]
        strip_points: Vec<usize>,
        /// Times at which the strip is sampled; defaults to `T/2` and `T`.
        #[serde(default)]
        strip_times: Option<Vec<f64>>,
    },
    Uniqueness {
        r_tilde: f64,
        t_hat: f64,
        /// Size of the perturbation in `||.||*_{r_tilde}`.
        #[serde(default = "default_delta")]
        delta: f64,
        /// Time after `t_hat` at which the perturbed gap is read off.
        #[serde(default = "default_lag")]
        lag: f64,
        #[serde(default = "default_lipschitz")]
        lipschitz_constant: f64,
    },
    MajorantCheck {
        /// Shrink the horizon to the certified time when it is shorter.
        #[serde(default = "yes")]
        certified_horizon: bool,
        #[serde(default = "default_method")]
        method: ProductMethod,
    },
    Props {
        #[serde(default = "default_cases")]
        cases: u64,
        #[serde(default = "default_nodes")]
        nodes: usize,
        /// `(n, N)` pairs on which the rows are checked.
        #[serde(default = "default_lattices")]
        lattices: Vec<(usize, usize)>,
        #[serde(default = "default_scan_range")]
        scan_range: i32,
        #[serde(default = "default_trials")]
        trials: u64,
    },
}

fn yes() -> bool {
    true
}
fn default_intervals() -> usize {
    32
}
fn default_upper() -> f64 {
    100.0
}
fn default_scan_range() -> i32 {
    30
}
fn default_trials() -> u64 {
    20
}
fn default_floor() -> f64 {
    1e-12
}
fn default_strip_fractions() -> Vec<f64> {
    vec![0.0, 0.3, 0.6, 0.9]
}
fn default_strip_points() -> Vec<usize> {
    vec![16, 32, 64]
}
fn default_delta() -> f64 {
    1e-6
}
fn default_lag() -> f64 {
    0.1
}
fn default_lipschitz() -> f64 {
    100.0
}
fn default_method() -> ProductMethod {
    ProductMethod::Direct
}
fn default_cases() -> u64 {
    100
}
fn default_nodes() -> usize {
    5
}
fn default_lattices() -> Vec<(usize, usize)> {
    vec![(2, 4), (3, 3)]
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Solve { .. } => "solve",
            Experiment::Certify { .. } => "certify",
            Experiment::Decay { .. } => "decay",
            Experiment::Uniqueness { .. } => "uniqueness",
            Experiment::MajorantCheck { .. } => "majorant-check",
            Experiment::Props { .. } => "props",
        }
    }

    fn validate(&self, config: &SolverConfig) -> CliResult<()> {
        let bad = |field: &str, message: String| Err(CliError::usage(format!("experiment.{field}"), message));
        match self {
            Experiment::Solve { residual_bound, .. } => {
                if let Some(b) = residual_bound {
                    if !(*b > 0.0) {
                        return bad("residual_bound", format!("must be positive, got {b}"));
                    }
                }
            }
            Experiment::Certify {
                intervals,
                upper,
                probe,
                scan_range,
                ..
            } => {
                if *intervals == 0 {
                    return bad("intervals", "must be at least 1".into());
                }
                if !(*upper > 0.0 && upper.is_finite()) {
                    return bad("upper", format!("must be positive and finite, got {upper}"));
                }
                if !(probe.horizon > 0.0) || probe.intervals == 0 {
                    return bad("probe", "needs a positive horizon and at least one interval".into());
                }
                if !(probe.fraction > 0.0) {
                    return bad("probe.fraction", format!("must be positive, got {}", probe.fraction));
                }
                if *scan_range < 1 {
                    return bad("scan_range", "must be at least 1".into());
                }
            }
            Experiment::Decay {
                floor,
                strip_fractions,
                strip_points,
                strip_times,
            } => {
                if !(*floor >= 0.0) {
                    return bad("floor", format!("must be nonnegative, got {floor}"));
                }
                if strip_fractions.iter().any(|f| !(*f >= 0.0 && *f < 1.0)) {
                    return bad("strip_fractions", "entries must lie in [0, 1)".into());
                }
                if strip_points.is_empty() || strip_points.iter().any(|&p| p < 2) {
                    return bad("strip_points", "needs at least one grid size >= 2".into());
                }
                if let Some(ts) = strip_times {
                    if ts.iter().any(|t| !(*t > 0.0 && *t <= config.horizon)) {
                        return bad("strip_times", "entries must lie in (0, horizon]".into());
                    }
                }
            }
            Experiment::Uniqueness {
                r_tilde,
                t_hat,
                delta,
                lag,
                lipschitz_constant,
            } => {
                if !(*r_tilde > 0.0) {
                    return bad("r_tilde", format!("must be positive, got {r_tilde}"));
                }
                if !(*t_hat > 0.0 && *t_hat <= config.horizon) {
                    return bad("t_hat", format!("must lie in (0, horizon], got {t_hat}"));
                }
                if !(*delta > 0.0) {
                    return bad("delta", format!("must be positive, got {delta}"));
                }
                if !(*lag >= 0.0 && t_hat + lag <= config.horizon * (1.0 + 1e-12)) {
                    return bad("lag", format!("t_hat + lag must not pass the horizon, got {lag}"));
                }
                if !(*lipschitz_constant > 0.0) {
                    return bad("lipschitz_constant", "must be positive".into());
                }
            }
            Experiment::MajorantCheck { .. } => {}
            Experiment::Props {
                cases,
                nodes,
                lattices,
                scan_range,
                ..
            } => {
                if *cases == 0 {
                    return bad("cases", "must be at least 1".into());
                }
                if *nodes < 2 {
                    return bad("nodes", "must be at least 2".into());
                }
                if lattices.is_empty() || lattices.iter().any(|&(n, t)| n < 1 || t < 1) {
                    return bad("lattices", "needs at least one (dim >= 1, trunc >= 1) pair".into());
                }
                if *scan_range < 1 {
                    return bad("scan_range", "must be at least 1".into());
                }
            }
        }
        Ok(())
    }
}

impl RunManifest {
    /// Parses and validates a manifest, naming the offending field on failure.
    pub fn parse(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let manifest: RunManifest = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.to_string();
            CliError::Usage {
                field: Some(offending_field(&path, &message)),
                message,
            }
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage("--manifest", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.version != MANIFEST_VERSION {
            return Err(CliError::usage(
                "version",
                format!("unsupported manifest version {}, expected {MANIFEST_VERSION}", self.version),
            ));
        }
        self.config.validate()?;
        self.experiment.validate(&self.config)?;
        if let InitialSpec::TaylorGreen = self.initial {
            if self.config.dim != 2 {
                return Err(CliError::usage(
                    "initial.generator",
                    format!("taylor-green needs dim = 2, config has dim = {}", self.config.dim),
                ));
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> CliResult<Arc<Lattice>> {
        Ok(Lattice::new(self.config.dim, self.config.trunc)?)
    }
}

/// `serde_path_to_error` points at the enclosing object for missing and
/// unknown keys; append the key named in the message.
fn offending_field(path: &str, message: &str) -> String {
    let key = ["missing field `", "unknown field `"]
        .iter()
        .find_map(|p| message.strip_prefix(p))
        .and_then(|rest| rest.split('`').next());
    match (key, path) {
        (Some(k), p) if p.rsplit('.').next() == Some(k) => p.to_string(),
        (Some(k), "." | "") => k.to_string(),
        (Some(k), p) => format!("{p}.{k}"),
        (None, "") => ".".into(),
        (None, p) => p.to_string(),
    }
}

/// Builds the initial field; `base` resolves relative file paths and `seed`
/// is used by random generators without their own seed.
pub fn generate_initial(spec: &InitialSpec, lat: &Arc<Lattice>, seed: u64, base: &Path) -> CliResult<SpectralField> {
    let field = |f: &str| format!("initial.{f}");
    match spec {
        InitialSpec::TaylorGreen => Ok(initial::taylor_green(lat)?),
        InitialSpec::SingleMode {
            mode,
            amplitude,
            direction,
        } => {
            if mode.len() != lat.dim() {
                return Err(CliError::usage(field("mode"), format!("needs {} entries", lat.dim())));
            }
            if direction.len() != lat.dim() {
                return Err(CliError::usage(field("direction"), format!("needs {} entries", lat.dim())));
            }
            if lat.index_of(mode).is_none() || mode.iter().all(|&k| k == 0) {
                return Err(CliError::usage(field("mode"), "must be nonzero and inside the mode cube"));
            }
            initial::single_mode(lat, mode, *amplitude, direction)
                .map_err(|e| CliError::usage(field("direction"), e.to_string()))
        }
        InitialSpec::RandomHs {
            s,
            amplitude,
            seed: own,
            norm,
        } => {
            if !s.is_finite() {
                return Err(CliError::usage(field("s"), "must be finite"));
            }
            if !(*amplitude > 0.0 && amplitude.is_finite()) {
                return Err(CliError::usage(field("amplitude"), "must be positive and finite"));
            }
            let v = initial::random_hs(lat, *s, *amplitude, own.unwrap_or(seed))?;
            match norm {
                Some(target) if !(*target > 0.0) => Err(CliError::usage(field("norm"), "must be positive")),
                Some(target) => Ok(v.scaled(target / v.norm_hs(*s))),
                None => Ok(v),
            }
        }
        InitialSpec::File { path } => {
            let path = if path.is_absolute() { path.clone() } else { base.join(path) };
            let read = || -> nstorus::Result<SpectralField> {
                if path.extension().is_some_and(|e| e == "json") {
                    nstorus::format::from_json(&std::fs::read_to_string(&path)?)
                } else {
                    nstorus::format::from_binary(&std::fs::read(&path)?)
                }
            };
            let v = read().map_err(|e| CliError::usage(field("path"), format!("{}: {e}", path.display())))?;
            if v.lattice().as_ref() != lat.as_ref() || v.components() != lat.dim() {
                return Err(CliError::usage(
                    field("path"),
                    format!(
                        "file holds {} components on (n = {}, N = {}), config wants (n = {}, N = {})",
                        v.components(),
                        v.lattice().dim(),
                        v.lattice().trunc(),
                        lat.dim(),
                        lat.trunc()
                    ),
                ));
            }
            Ok(v)
        }
    }
}
