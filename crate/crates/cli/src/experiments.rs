//! The six experiment pipelines.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nstorus::analyticity::{
    decay_rate_fit, deviation_from_mean, mean_decay_check, strip_evaluate, strip_width, uniqueness_gap, DecayFit,
    MeanDecay, UniquenessReport,
};
use nstorus::initial::random_hs;
use nstorus::majorant::{
    calculus_check, certified_constants, certified_time, dominates_trajectory, global_threshold, majorize_initial,
    random_case, run_scans, CertReport, Domination, MajorantSolver, Property, ScanReport,
};
use nstorus::mild::{momentum_residual, InvariantReport, PicardSolver};
use nstorus::{Error, Lattice, ProductMethod, SpectralField};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliResult;
use crate::manifest::{generate_initial, Experiment, RunManifest, MANIFEST_VERSION};
use crate::output::{num, write_csv, write_json};

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Leave run-dependent values such as timings out of every artifact.
    pub reproducible: bool,
    /// Directory against which relative initial-data paths resolve.
    pub base: PathBuf,
}

/// Written to `summary.json` and printed on standard output.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub version: u32,
    pub experiment: &'static str,
    pub passed: bool,
    pub seed: u64,
    pub output: String,
    pub artifacts: Vec<String>,
    pub result: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

struct Run<'a> {
    manifest: &'a RunManifest,
    out: PathBuf,
    seed: u64,
    artifacts: Vec<String>,
}

impl Run<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out.join(name)
    }

    fn initial(&self, base: &Path) -> CliResult<SpectralField> {
        let lat = self.manifest.lattice()?;
        generate_initial(&self.manifest.initial, &lat, self.seed, base)
    }
}

pub fn run_experiment(manifest: &RunManifest, opts: &RunOptions) -> CliResult<Summary> {
    let start = Instant::now();
    let out = opts.out.clone().unwrap_or_else(|| manifest.output.clone());
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    let mut run = Run {
        manifest,
        out,
        seed: opts.seed.unwrap_or(manifest.seed),
        artifacts: Vec::new(),
    };
    let v0 = run.initial(&opts.base)?;
    let (passed, result) = match &manifest.experiment {
        Experiment::Solve {
            residual_bound,
            write_trajectory,
        } => solve(&mut run, &v0, *residual_bound, *write_trajectory)?,
        Experiment::Certify {
            intervals,
            upper,
            probe,
            run_probe,
            scan_range,
            trials,
        } => {
            let lat = v0.lattice();
            let cfg = &manifest.config;
            let shape = majorize_initial(&v0);
            let constants = certified_constants(cfg.dim, cfg.viscosity)?;
            let time = certified_time(&shape, cfg.smoothness, &constants, *intervals, *upper)?;
            let threshold = global_threshold(lat, cfg.smoothness, &constants, probe, run_probe.then_some(&shape))?;
            let scans = run_scans(cfg.dim, cfg.viscosity, *scan_range, *trials, run.seed)?;
            let report = CertReport::new(&constants, &time, &threshold, &scans);
            write_json(&run.path("cert_report.json"), &report)?;
            write_json(&run.path("scans.json"), &scans)?;
            let passed = scans.iter().all(|s| s.passed) && report.probe.as_ref().is_none_or(|p| p.converged);
            (passed, to_value(&report)?)
        }
        Experiment::Decay {
            floor,
            strip_fractions,
            strip_points,
            strip_times,
        } => decay(&mut run, &v0, *floor, strip_fractions, strip_points, strip_times.as_deref())?,
        Experiment::Uniqueness {
            r_tilde,
            t_hat,
            delta,
            lag,
            lipschitz_constant,
        } => uniqueness(&mut run, &v0, *r_tilde, *t_hat, *delta, *lag, *lipschitz_constant)?,
        Experiment::MajorantCheck {
            certified_horizon,
            method,
        } => majorant_check(&mut run, &v0, *certified_horizon, *method)?,
        Experiment::Props {
            cases,
            nodes,
            lattices,
            scan_range,
            trials,
        } => props(&mut run, *cases, *nodes, lattices, *scan_range, *trials)?,
    };
    let summary_path = run.path("summary.json");
    let summary = Summary {
        version: MANIFEST_VERSION,
        experiment: manifest.experiment.kind(),
        passed,
        seed: run.seed,
        output: run.out.display().to_string(),
        artifacts: run.artifacts,
        result,
        elapsed_seconds: (!opts.reproducible).then(|| start.elapsed().as_secs_f64()),
    };
    write_json(&summary_path, &summary)?;
    Ok(summary)
}

fn to_value<T: Serialize>(v: &T) -> CliResult<serde_json::Value> {
    Ok(serde_json::to_value(v).map_err(Error::from)?)
}

#[derive(Serialize)]
struct SolveResult {
    converged: bool,
    iterations: usize,
    final_residual: Option<f64>,
    quadrature_error: Option<f64>,
    max_momentum_residual: Option<f64>,
    residual_bound: Option<f64>,
    invariants: InvariantReport,
    energy_nonincreasing: bool,
}

fn solve(run: &mut Run, v0: &SpectralField, bound: Option<f64>, write_trajectory: bool) -> CliResult<(bool, serde_json::Value)> {
    let cfg = &run.manifest.config;
    let (traj, report) = PicardSolver::new(cfg).solve(v0)?;
    if write_trajectory {
        traj.write_dir(&run.path("trajectory"))?;
    }
    let residual = if traj.len() > 3 { Some(momentum_residual(&traj)?) } else { None };
    if let Some(r) = &residual {
        let rows: Vec<_> = r.iter().map(|&(t, x)| vec![num(t), num(x)]).collect();
        write_csv(&run.path("residual.csv"), &["t", "residual"], &rows)?;
    }
    let energies = traj.energies();
    let rows: Vec<_> = traj.times().iter().zip(&energies).map(|(&t, &e)| vec![num(t), num(e)]).collect();
    write_csv(&run.path("energy.csv"), &["t", "energy"], &rows)?;
    let max_residual = residual.map(|r| r.iter().map(|p| p.1).fold(0.0, f64::max));
    let within = match (bound, max_residual) {
        (Some(b), Some(m)) => m <= b,
        _ => true,
    };
    let result = SolveResult {
        converged: report.converged,
        iterations: report.iterations,
        final_residual: report.final_residual(),
        quadrature_error: report.quadrature_error,
        max_momentum_residual: max_residual,
        residual_bound: bound,
        invariants: traj.invariants()?,
        // trapezoid rounding allows an O(dt^2) rise relative to the initial energy
        energy_nonincreasing: energies.windows(2).all(|w| w[1] <= w[0] + 1e-10 * energies[0]),
    };
    write_json(&run.path("picard.json"), &report)?;
    Ok((report.converged && within, to_value(&result)?))
}

#[derive(Serialize)]
struct DecayRow {
    t: f64,
    fit: Option<DecayFit>,
    /// `-nu t / 2`.
    reference_slope: f64,
    slope_ok: Option<bool>,
}

#[derive(Serialize)]
struct StripRow {
    t: f64,
    fraction: f64,
    y: f64,
    values: Vec<f64>,
    spread: f64,
    ok: bool,
}

#[derive(Serialize)]
struct DecayResult {
    converged: bool,
    fits: Vec<DecayRow>,
    slopes_ok: bool,
    strip: Vec<StripRow>,
    strip_ok: bool,
    mean_decay: Option<MeanDecay>,
    /// `0.9 nu / 2`.
    mean_rate_bound: f64,
    mean_rate_ok: bool,
}

fn decay(
    run: &mut Run,
    v0: &SpectralField,
    floor: f64,
    fractions: &[f64],
    points: &[usize],
    strip_times: Option<&[f64]>,
) -> CliResult<(bool, serde_json::Value)> {
    let cfg = &run.manifest.config;
    let nu = cfg.viscosity;
    let (traj, report) = PicardSolver::new(cfg).solve(v0)?;
    let fits: Vec<DecayRow> = traj
        .times()
        .par_iter()
        .zip(traj.states())
        .skip(1)
        .map(|(&t, v)| {
            let reference = -nu * t / 2.0;
            match decay_rate_fit(v, floor) {
                Ok(fit) => Ok(DecayRow {
                    t,
                    fit: Some(fit),
                    reference_slope: reference,
                    slope_ok: Some(fit.slope <= 0.9 * reference),
                }),
                Err(Error::TooFewModes { .. }) => Ok(DecayRow {
                    t,
                    fit: None,
                    reference_slope: reference,
                    slope_ok: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<nstorus::Result<_>>()?;
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let rows: Vec<_> = fits
        .iter()
        .map(|r| {
            vec![
                num(r.t),
                opt(r.fit.map(|f| f.slope)),
                opt(r.fit.map(|f| f.intercept)),
                opt(r.fit.map(|f| f.rms)),
                r.fit.map(|f| f.shells.to_string()).unwrap_or_default(),
                num(r.reference_slope),
            ]
        })
        .collect();
    write_csv(&run.path("decay_fit.csv"), &["t", "slope", "intercept", "rms", "shells", "reference_slope"], &rows)?;
    let fitted: Vec<bool> = fits.iter().filter_map(|r| r.slope_ok).collect();
    let slopes_ok = !fitted.is_empty() && fitted.iter().all(|&b| b);

    let default_times = [cfg.horizon / 2.0, cfg.horizon];
    let mut strip = Vec::new();
    for &t in strip_times.unwrap_or(&default_times) {
        let node = traj.nearest_node(t);
        let tn = traj.times()[node];
        let width = strip_width(tn, nu, cfg.dim);
        for &fraction in fractions {
            let y = vec![fraction * width; cfg.dim];
            let values = points
                .iter()
                .map(|&p| strip_evaluate(&traj.states()[node], &y, p))
                .collect::<nstorus::Result<Vec<f64>>>()?;
            let hi = values.iter().copied().fold(0.0, f64::max);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let spread = if hi == 0.0 { 1.0 } else { hi / lo };
            strip.push(StripRow {
                t: tn,
                fraction,
                y: fraction * width,
                ok: values.iter().all(|v| v.is_finite()) && spread < 10.0,
                values,
                spread,
            });
        }
    }
    let mut header = vec!["t".to_string(), "fraction".into(), "y".into()];
    header.extend(points.iter().map(|p| format!("max_{p}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<_> = strip
        .iter()
        .map(|r| {
            let mut row = vec![num(r.t), num(r.fraction), num(r.y)];
            row.extend(r.values.iter().map(|&v| num(v)));
            row
        })
        .collect();
    write_csv(&run.path("strip.csv"), &header, &rows)?;
    let strip_ok = strip.iter().all(|r| r.ok);

    let mean_decay = match mean_decay_check(&traj) {
        Ok(m) => Some(m),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let deviation = traj
        .times()
        .par_iter()
        .zip(traj.states())
        .map(|(&t, v)| Ok(vec![num(t), num(deviation_from_mean(v)?)]))
        .collect::<nstorus::Result<Vec<_>>>()?;
    write_csv(&run.path("mean_deviation.csv"), &["t", "deviation"], &deviation)?;
    let bound = 0.9 * nu / 2.0;
    let mean_rate_ok = mean_decay.as_ref().is_none_or(|m| m.rate >= bound);
    let result = DecayResult {
        converged: report.converged,
        fits,
        slopes_ok,
        strip,
        strip_ok,
        mean_decay,
        mean_rate_bound: bound,
        mean_rate_ok,
    };
    let passed = report.converged && slopes_ok && strip_ok && mean_rate_ok;
    Ok((passed, to_value(&result)?))
}

#[derive(Serialize)]
struct UniquenessResult {
    /// `2 picard_tol`.
    identical_bound: f64,
    identical_ok: bool,
    delta: f64,
    lag: f64,
    gap_at_lag: f64,
    lipschitz_constant: f64,
    /// `gap_at_lag / delta`.
    measured_constant: f64,
    lipschitz_ok: bool,
    identical: UniquenessReport,
    perturbed: UniquenessReport,
}

fn uniqueness(
    run: &mut Run,
    v0: &SpectralField,
    r_tilde: f64,
    t_hat: f64,
    delta: f64,
    lag: f64,
    constant: f64,
) -> CliResult<(bool, serde_json::Value)> {
    let cfg = &run.manifest.config;
    let identical = uniqueness_gap(v0, v0, r_tilde, t_hat, cfg)?;
    let direction = random_hs(v0.lattice(), cfg.smoothness, 1.0, run.seed.wrapping_add(0x9e37_79b9))?;
    let v1 = v0 + &direction.scaled(delta / direction.norm_analytic(r_tilde));
    let perturbed = uniqueness_gap(v0, &v1, r_tilde, t_hat, cfg)?;
    let target = t_hat + lag;
    let node = perturbed
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|p| p.0)
        .unwrap_or(0);
    let gap_at_lag = perturbed.gap.get(node).copied().unwrap_or(f64::NAN);
    let rows: Vec<_> = perturbed
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| vec![num(t), num(identical.gap[i]), num(perturbed.gap[i]), num(perturbed.ratio[i])])
        .collect();
    write_csv(&run.path("gap.csv"), &["t", "identical_gap", "perturbed_gap", "perturbed_ratio"], &rows)?;
    let identical_bound = 2.0 * cfg.picard_tol;
    let result = UniquenessResult {
        identical_bound,
        identical_ok: identical.k <= identical_bound,
        delta,
        lag,
        gap_at_lag,
        lipschitz_constant: constant,
        measured_constant: gap_at_lag / delta,
        lipschitz_ok: gap_at_lag <= constant * delta,
        identical,
        perturbed,
    };
    Ok((result.identical_ok && result.lipschitz_ok, to_value(&result)?))
}

#[derive(Serialize)]
struct IterateDomination {
    iteration: usize,
    #[serde(flatten)]
    domination: Domination,
}

#[derive(Serialize)]
struct MajorantCheckResult {
    horizon: f64,
    certified_time: f64,
    majorant_converged: bool,
    majorant_iterations: usize,
    picard_converged: bool,
    iterates_checked: usize,
    violations: usize,
    holds: bool,
}

fn majorant_check(
    run: &mut Run,
    v0: &SpectralField,
    certified_horizon: bool,
    method: ProductMethod,
) -> CliResult<(bool, serde_json::Value)> {
    let cfg = run.manifest.config.clone();
    let shape = majorize_initial(v0);
    let constants = certified_constants(cfg.dim, cfg.viscosity)?;
    let cert = certified_time(&shape, cfg.smoothness, &constants, cfg.grid_size, cfg.horizon)?;
    let horizon = if certified_horizon { cert.t_cert.min(cfg.horizon) } else { cfg.horizon };
    let cfg = cfg.with_horizon(horizon);
    let (majorant, mreport) = MajorantSolver::new(constants.a, constants.rho, cfg.times())?.solve(&shape)?;
    let mut per_iterate = Vec::new();
    let mut failure = None;
    let (_, preport) = PicardSolver::new(&cfg)
        .method(method)
        .observe(|iteration, states| match dominates_trajectory(states, &majorant, cfg.viscosity) {
            Ok(domination) => per_iterate.push(IterateDomination { iteration, domination }),
            Err(e) => failure = Some(e),
        })
        .solve(v0)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let rows: Vec<_> = majorant
        .times
        .iter()
        .zip(&majorant.states)
        .map(|(&t, v)| vec![num(t), num(v.sup()), num(v.norm_hs(cfg.smoothness.max(0.0)))])
        .collect();
    write_csv(&run.path("majorant.csv"), &["t", "sup", "norm_s"], &rows)?;
    write_json(&run.path("domination.json"), &per_iterate)?;
    let violations = per_iterate.iter().map(|d| d.domination.violations).sum();
    let result = MajorantCheckResult {
        horizon,
        certified_time: cert.t_cert,
        majorant_converged: mreport.converged,
        majorant_iterations: mreport.iterations,
        picard_converged: preport.converged,
        iterates_checked: per_iterate.len(),
        violations,
        holds: violations == 0,
    };
    Ok((result.holds, to_value(&result)?))
}

#[derive(Serialize)]
struct PropsRow {
    dim: usize,
    trunc: usize,
    property: &'static str,
    cases: u64,
    failures: u64,
    first_failure: Option<u64>,
}

#[derive(Serialize)]
struct PropsResult {
    rows: Vec<PropsRow>,
    scans: Vec<ScanReport>,
    all_rows_pass: bool,
    all_scans_pass: bool,
}

fn props(
    run: &mut Run,
    cases: u64,
    nodes: usize,
    lattices: &[(usize, usize)],
    scan_range: i32,
    trials: u64,
) -> CliResult<(bool, serde_json::Value)> {
    let nu = run.manifest.config.viscosity;
    let mut rows = Vec::new();
    for &(dim, trunc) in lattices {
        let lat = Lattice::new(dim, trunc)?;
        let outcomes = (0..cases)
            .into_par_iter()
            .map(|c| {
                let case = random_case(&lat, nodes, run.seed.wrapping_add(c));
                Property::ALL.map(|p| calculus_check(p, &case).map(|o| o.passed)).into_iter().collect()
            })
            .collect::<nstorus::Result<Vec<Vec<bool>>>>()?;
        for (j, p) in Property::ALL.iter().enumerate() {
            let failed: Vec<u64> = (0..cases).filter(|&c| !outcomes[c as usize][j]).collect();
            rows.push(PropsRow {
                dim,
                trunc,
                property: p.name(),
                cases,
                failures: failed.len() as u64,
                first_failure: failed.first().map(|&c| run.seed.wrapping_add(c)),
            });
        }
    }
    let dims: BTreeSet<usize> = lattices.iter().map(|p| p.0).collect();
    let mut scans = Vec::new();
    for n in dims {
        for mut s in run_scans(n, nu, scan_range, trials, run.seed)? {
            s.name = format!("{}[n={n}]", s.name);
            scans.push(s);
        }
    }
    let csv_rows: Vec<_> = rows
        .iter()
        .map(|r| {
            vec![
                r.dim.to_string(),
                r.trunc.to_string(),
                r.property.to_string(),
                r.cases.to_string(),
                r.failures.to_string(),
            ]
        })
        .collect();
    write_csv(&run.path("props.csv"), &["dim", "trunc", "property", "cases", "failures"], &csv_rows)?;
    write_json(&run.path("scans.json"), &scans)?;
    let result = PropsResult {
        all_rows_pass: rows.iter().all(|r| r.failures == 0),
        all_scans_pass: scans.iter().all(|s| s.passed),
        rows,
        scans,
    };
    Ok((result.all_rows_pass && result.all_scans_pass, to_value(&result)?))
}
