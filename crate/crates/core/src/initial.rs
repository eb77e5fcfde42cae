//! Divergence-free initial data generators.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::field::{hs_weight, SpectralField};
use crate::lattice::Lattice;

/// `(sin x1 cos x2, -cos x1 sin x2)` on a 2D lattice.
pub fn taylor_green(lat: &Arc<Lattice>) -> Result<SpectralField> {
    if lat.dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "taylor-green data needs dimension 2, got {}",
            lat.dim()
        )));
    }
    let mut v = SpectralField::zeros(lat, 2);
    let q = 0.25;
    for (k1, k2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let idx = lat.index_of(&[k1, k2]).expect("trunc >= 1");
        // sin x1 cos x2 = sum over (+-1, +-1) of k1 / (4i) e^{i(k,x)}
        v.set(0, idx, Complex64::new(0.0, -q * k1 as f64));
        // -cos x1 sin x2 = sum of -k2 / (4i) e^{i(k,x)}
        v.set(1, idx, Complex64::new(0.0, q * k2 as f64));
    }
    Ok(v)
}

/// `amplitude * P(direction) cos((k, x))` with `P` the projection onto `k`-perp.
pub fn single_mode(
    lat: &Arc<Lattice>,
    k: &[i32],
    amplitude: f64,
    direction: &[f64],
) -> Result<SpectralField> {
    let n = lat.dim();
    if direction.len() != n {
        return Err(Error::Shape(format!("direction must have {n} entries")));
    }
    let idx = lat
        .index_of(k)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {k:?} outside the cube")))?;
    if idx == lat.zero_index() {
        return Err(Error::InvalidArgument("single-mode data needs k != 0".into()));
    }
    let mut v = SpectralField::zeros(lat, n);
    for (c, &d) in direction.iter().enumerate() {
        let half = Complex64::new(0.5 * amplitude * d, 0.0);
        v.set(c, idx, half);
        v.set(c, lat.neg_index(idx), half);
    }
    let p = v.leray_project()?;
    if p.norm_l1() <= 1e-14 * v.norm_l1() {
        return Err(Error::Degenerate("direction is parallel to the wavevector".into()));
    }
    Ok(p)
}

/// Real, mean-free, solenoidal random data with
/// `v_k ~ amplitude * w(k)^{-(s + n + 1)} * N(0, 1)` before projection.
pub fn random_hs(lat: &Arc<Lattice>, s: f64, amplitude: f64, seed: u64) -> Result<SpectralField> {
    let n = lat.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = SpectralField::zeros(lat, n);
    let zero = lat.zero_index();
    for idx in 0..zero {
        let scale = amplitude * hs_weight(lat.l1(idx)).powf(-(s + n as f64 + 1.0));
        for c in 0..n {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let z = Complex64::new(re, im) * scale;
            v.set(c, idx, z);
            v.set(c, lat.neg_index(idx), z.conj());
        }
    }
    v.leray_project()
}

/// Normaliser `Z = sum_k w(k)^{-(n+1)}` over the cube.
pub fn hs_normaliser(lat: &Lattice) -> f64 {
    let n = lat.dim() as f64;
    (0..lat.len()).map(|i| hs_weight(lat.l1(i)).powf(-(n + 1.0))).sum()
}

/// [`random_hs`] rescaled so that `||v||_s` equals `target`.
pub fn random_hs_with_norm(lat: &Arc<Lattice>, s: f64, target: f64, seed: u64) -> Result<SpectralField> {
    let v = random_hs(lat, s, 1.0, seed)?;
    let norm = v.norm_hs(s);
    Ok(v.scaled(target / norm))
}

/// Test helper name kept for readability at call sites.
pub fn random_solenoidal(lat: &Arc<Lattice>, amplitude: f64, s: f64, seed: u64) -> Result<SpectralField> {
    random_hs(lat, s, amplitude, seed)
}

/// Real random scalar field with all modes populated.
pub fn random_scalar(lat: &Arc<Lattice>, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::zeros(lat, 1);
    let zero = lat.zero_index();
    for idx in 0..zero {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        let z = Complex64::new(re, im);
        f.set(0, idx, z);
        f.set(0, lat.neg_index(idx), z.conj());
    }
    let m: f64 = StandardNormal.sample(&mut rng);
    f.set(0, zero, Complex64::new(m, 0.0));
    f
}
