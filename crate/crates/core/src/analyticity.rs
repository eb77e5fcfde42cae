//! Empirical analyticity diagnostics: coefficient decay fits, evaluation in a
//! complex strip, decay to the mean and continuous dependence in the
//! analytic norms `||f||*_r = sum |f_k| e^{|k|_1 r}`.

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::norm_equivalence_constant;
use crate::mild::{picard_solve, Trajectory};

/// Shells needed for a fit.
pub const MIN_SHELLS: usize = 5;

/// Relative slack for the Cauchy estimate, which is an equality at `q = 1/delta`.
pub const CAUCHY_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `log max |f_k|` against `|k|_e`.
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
    /// Shells that entered the fit.
    pub shells: usize,
}

/// Ordinary least squares `y ~ slope x + intercept`; returns the rms residual too.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / n).sqrt();
    (slope, intercept, rms)
}

/// Fit over the shells `|k|_e in [q, q + 1)`, `q >= 1`, using the largest
/// coefficient of each shell (over components) at the `|k|_e` where it sits.
/// Shells whose maximum does not exceed `floor` are skipped.
pub fn decay_rate_fit(f: &SpectralField, floor: f64) -> Result<DecayFit> {
    let lat = f.lattice();
    let mut best: Vec<Option<(f64, f64)>> = Vec::new();
    for i in 0..lat.len() {
        let e = lat.l2(i);
        if e == 0.0 {
            continue;
        }
        let shell = e.floor() as usize;
        if best.len() <= shell {
            best.resize(shell + 1, None);
        }
        let m = (0..f.components()).map(|c| f.coeff(c, i).norm()).fold(0.0, f64::max);
        if best[shell].is_none_or(|(v, _)| m > v) {
            best[shell] = Some((m, e));
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &(m, e) in best.iter().flatten() {
        if m > floor {
            xs.push(e);
            ys.push(m.ln());
        }
    }
    if xs.len() < MIN_SHELLS {
        return Err(Error::TooFewModes {
            found: xs.len(),
            need: MIN_SHELLS,
        });
    }
    let (slope, intercept, rms) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        slope,
        intercept,
        rms,
        shells: xs.len(),
    })
}

/// Half-width `nu c t / 3` in `|Im x|_inf` of the strip where the solution at
/// time `t` is certified analytic, `c = 1 / sqrt(n)`.
pub fn strip_width(t: f64, nu: f64, dim: usize) -> f64 {
    nu * norm_equivalence_constant(dim) * t / 3.0
}

/// `max |f(x + i y)|` over the uniform `points^n` grid, with `|.|` the
/// Euclidean modulus over components.
pub fn strip_evaluate(f: &SpectralField, y: &[f64], points: usize) -> Result<f64> {
    let values = f.sample(points, Some(y))?;
    let len = values[0].len();
    let mut worst = 0.0f64;
    for p in 0..len {
        let m: f64 = values.iter().map(|c| c[p].norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(m);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanDecay {
    /// `-d log e(t) / dt` fitted over the tail half of the grid.
    pub rate: f64,
    /// `max_i e(t_i) e^{nu t_i / 2}`.
    pub constant: f64,
    /// `(t_i, e(t_i))` with `e(t) = max_x |v(t, x) - v_0|` on the sample grid.
    pub samples: Vec<(f64, f64)>,
}

/// Sample points per axis used for `max_x`.
fn sample_points(trunc: usize) -> usize {
    (4 * trunc).max(8)
}

/// Distance of the state from its mean, sampled on a `4N`-point grid.
pub fn deviation_from_mean(v: &SpectralField) -> Result<f64> {
    let mut dev = v.clone();
    let zero = v.lattice().zero_index();
    for c in 0..v.components() {
        dev.set(c, zero, Default::default());
    }
    strip_evaluate(&dev, &vec![0.0; v.dim()], sample_points(v.trunc()))
}

pub fn mean_decay_check(traj: &Trajectory) -> Result<MeanDecay> {
    let nu = traj.config().viscosity;
    let t0 = traj.times()[0];
    let samples = traj
        .times()
        .iter()
        .zip(traj.states())
        .map(|(&t, v)| Ok((t - t0, deviation_from_mean(v)?)))
        .collect::<Result<Vec<_>>>()?;
    let tail = &samples[samples.len() / 2..];
    if tail.len() < 2 {
        return Err(Error::GridTooCoarse(samples.len() - 1));
    }
    if tail.iter().any(|&(_, e)| !(e > 0.0)) {
        return Err(Error::Degenerate("state is already constant on the tail of the grid".into()));
    }
    let xs: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let (slope, _, _) = linear_fit(&xs, &ys);
    let constant = samples.iter().map(|&(t, e)| e * (0.5 * nu * t).exp()).fold(0.0, f64::max);
    Ok(MeanDecay {
        rate: -slope,
        constant,
        samples,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub r_tilde: f64,
    pub t_hat: f64,
    /// Admissibility product `alpha r_tilde` with `alpha = 3 / (nu c)`.
    pub alpha_r: f64,
    /// `||v1(0) - v2(0)||*_{r_tilde}`.
    pub initial_gap: f64,
    /// `K = max_{t >= t_hat} ||v1 - v2||*_{r_tilde}` over grid nodes.
    pub k: f64,
    /// Grid nodes `t_i >= t_hat`.
    pub times: Vec<f64>,
    /// `||v1 - v2||*_{r_tilde}` at those nodes.
    pub gap: Vec<f64>,
    /// `||v1 - v2||*_{r_tilde / 2} / K` at those nodes.
    pub ratio: Vec<f64>,
    /// Fitted `d log gap / dt`; zero when the gap vanishes.
    pub growth_rate: f64,
    /// No adjacent pair of gap values differs by more than a factor 10.
    pub continuous: bool,
    /// Every ratio is at most one.
    pub envelope_holds: bool,
}

/// Solves from both data and compares the trajectories on `[t_hat, T]`.
pub fn uniqueness_gap(
    v1: &SpectralField,
    v2: &SpectralField,
    r_tilde: f64,
    t_hat: f64,
    config: &SolverConfig,
) -> Result<UniquenessReport> {
    if !(r_tilde > 0.0) || !(t_hat > 0.0) {
        return Err(Error::InvalidArgument("r_tilde and t_hat must be positive".into()));
    }
    let alpha = 3.0 / (config.viscosity * norm_equivalence_constant(config.dim));
    let alpha_r = alpha * r_tilde;
    if alpha_r >= t_hat {
        return Err(Error::InvalidArgument(format!(
            "admissibility needs alpha r_tilde < t_hat, got {alpha_r} >= {t_hat}"
        )));
    }
    if t_hat > config.horizon {
        return Err(Error::InvalidArgument(format!(
            "t_hat = {t_hat} lies beyond the horizon {}",
            config.horizon
        )));
    }
    let (a, _) = picard_solve(v1, config)?;
    let (b, _) = picard_solve(v2, config)?;
    let mut report = UniquenessReport {
        r_tilde,
        t_hat,
        alpha_r,
        initial_gap: (v1 - v2).norm_analytic(r_tilde),
        k: 0.0,
        times: Vec::new(),
        gap: Vec::new(),
        ratio: Vec::new(),
        growth_rate: 0.0,
        continuous: true,
        envelope_holds: true,
    };
    let inner = Vec::from_iter(
        a.times()
            .iter()
            .zip(a.states().iter().zip(b.states()))
            .filter(|(&t, _)| t >= t_hat - 1e-12 * config.horizon)
            .map(|(&t, (x, y))| {
                let d = x - y;
                (t, d.norm_analytic(r_tilde), d.norm_analytic(0.5 * r_tilde))
            }),
    );
    report.k = inner.iter().map(|p| p.1).fold(0.0, f64::max);
    for &(t, g, h) in &inner {
        report.times.push(t);
        report.gap.push(g);
        report.ratio.push(if report.k > 0.0 { h / report.k } else { 0.0 });
    }
    report.continuous = report.gap.windows(2).all(|w| {
        let (lo, hi) = (w[0].min(w[1]), w[0].max(w[1]));
        hi <= 10.0 * lo || hi == 0.0
    });
    report.envelope_holds = report.ratio.iter().all(|&r| r <= 1.0);
    let positive: Vec<(f64, f64)> = inner.iter().filter(|p| p.1 > 0.0).map(|p| (p.0, p.1.ln())).collect();
    if positive.len() >= 2 {
        let xs: Vec<f64> = positive.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = positive.iter().map(|p| p.1).collect();
        report.growth_rate = linear_fit(&xs, &ys).0;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyCheck {
    /// `||D f||*_r`
    pub lhs: f64,
    /// `||f||*_{r + delta} / (e delta)`
    pub rhs: f64,
    pub holds: bool,
}

/// `||D f||*_r <= ||f||*_{r + delta} / (e delta)`, up to [`CAUCHY_RTOL`].
pub fn cauchy_inequality_check(f: &SpectralField, r: f64, delta: f64) -> Result<CauchyCheck> {
    if !(delta > 0.0) || !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("need r >= 0 and delta > 0, got {r} and {delta}")));
    }
    let lhs = f.d_multiplier().norm_analytic(r);
    let rhs = f.norm_analytic(r + delta) / (std::f64::consts::E * delta);
    Ok(CauchyCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + CAUCHY_RTOL),
    })
}
