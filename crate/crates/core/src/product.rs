//! Galerkin-truncated products of truncated Fourier series.
//!
//! The product of two fields on the cube `|k|_inf <= N` has modes up to `2N`
//! on each axis. Both routes below compute every one of those coefficients
//! exactly (no aliasing) and then discard the modes outside the cube.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{smooth_size, NdFft};
use crate::field::SpectralField;
use crate::lattice::Lattice;

/// Which convolution route to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMethod {
    /// Double loop over mode pairs.
    Direct,
    /// Zero-padded transform.
    #[default]
    Fft,
}

/// `(f g)_k = sum_{j + m = k} f_j g_m` by the double loop; restricted to the cube.
pub fn convolve_direct(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let comps = product_components(f, g)?;
    let lat = f.lattice();
    let mut out = SpectralField::zeros(lat, comps);
    for c in 0..comps {
        let a = f.component(if f.components() == 1 { 0 } else { c });
        let b = g.component(if g.components() == 1 { 0 } else { c });
        convolve_slices_direct(lat, a, b, out.component_mut(c));
    }
    Ok(out)
}

/// Fast-path product of two fields; same contract as [`convolve_direct`].
pub fn convolve(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    product_components(f, g)?;
    ProductEngine::new(f.lattice()).convolve(f, g)
}

fn product_components(f: &SpectralField, g: &SpectralField) -> Result<usize> {
    if f.lattice() != g.lattice() {
        return Err(Error::Shape("convolution of fields on different lattices".into()));
    }
    match (f.components(), g.components()) {
        (a, b) if a == b => Ok(a),
        (1, b) => Ok(b),
        (a, 1) => Ok(a),
        (a, b) => Err(Error::Shape(format!("cannot multiply {a}- and {b}-component fields"))),
    }
}

/// Compensated double loop: every product is split exactly and the sums carry
/// a running error term, so the result is accurate to a few ulps of the sum
/// of absolute values rather than growing with the number of terms.
fn convolve_slices_direct(lat: &Lattice, a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
    let zero = Complex64::default();
    let mut err = vec![zero; out.len()];
    for (ia, &ca) in a.iter().enumerate() {
        if ca == zero {
            continue;
        }
        for (ib, &cb) in b.iter().enumerate() {
            if let Some(k) = lat.sum_index(ia, ib) {
                let (s, e) = (&mut out[k], &mut err[k]);
                accumulate(&mut s.re, &mut e.re, ca.re, cb.re);
                accumulate(&mut s.re, &mut e.re, -ca.im, cb.im);
                accumulate(&mut s.im, &mut e.im, ca.re, cb.im);
                accumulate(&mut s.im, &mut e.im, ca.im, cb.re);
            }
        }
    }
    for (o, e) in out.iter_mut().zip(err) {
        *o += e;
    }
}

/// `sum += x y` with the rounding errors of the product and the sum added to `err`.
#[inline]
fn accumulate(sum: &mut f64, err: &mut f64, x: f64, y: f64) {
    let (p, pe) = two_product(x, y);
    let t = *sum + p;
    let z = t - *sum;
    *err += (*sum - (t - z)) + (p - z) + pe;
    *sum = t;
}

/// Dekker's exact product `x y = p + e`; the split overflows above about `1e300`.
#[inline]
fn two_product(x: f64, y: f64) -> (f64, f64) {
    const SPLIT: f64 = 134_217_729.0; // 2^27 + 1
    let p = x * y;
    let split = |v: f64| {
        let c = SPLIT * v;
        let hi = c - (c - v);
        (hi, v - hi)
    };
    let (xh, xl) = split(x);
    let (yh, yl) = split(y);
    let e = ((xh * yh - p) + xh * yl + xl * yh) + xl * yl;
    (p, e)
}

/// Direct product of two nonnegative real sequences on the cube.
///
/// Summation order is fixed (outer mode index, then inner), so the result is
/// reproducible and every entry is a sum of nonnegative terms.
pub fn convolve_real_direct(lat: &Lattice, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; lat.len()];
    for (ia, &ca) in a.iter().enumerate() {
        if ca == 0.0 {
            continue;
        }
        for (ib, &cb) in b.iter().enumerate() {
            if let Some(k) = lat.sum_index(ia, ib) {
                out[k] += ca * cb;
            }
        }
    }
    out
}

/// Cached padded transform for products on one lattice.
///
/// Each axis is padded to a 5-smooth size of at least `2 (2N + 1) - 1`
/// points, so the full product spectrum `|k|_inf <= 2N` is recovered exactly.
pub struct ProductEngine {
    lattice: Arc<Lattice>,
    plan: NdFft,
    slots: Vec<usize>,
}

impl ProductEngine {
    pub fn new(lattice: &Arc<Lattice>) -> Self {
        let size = smooth_size(2 * lattice.side() - 1);
        let plan = NdFft::new(lattice.dim(), size);
        let slots = (0..lattice.len())
            .map(|i| {
                lattice.mode(i).iter().fold(0usize, |acc, &c| {
                    acc * size + c.rem_euclid(size as i32) as usize
                })
            })
            .collect();
        ProductEngine {
            lattice: Arc::clone(lattice),
            plan,
            slots,
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn padded_size(&self) -> usize {
        self.plan.size()
    }

    /// Physical values of one component on the padded grid.
    pub fn to_physical(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); self.plan.len()];
        for (i, &c) in coeffs.iter().enumerate() {
            buf[self.slots[i]] = c;
        }
        self.plan.inverse(&mut buf);
        buf
    }

    /// Fourier coefficients on the cube of a physical-space buffer (consumed).
    pub fn from_physical(&self, mut buf: Vec<Complex64>, out: &mut [Complex64]) {
        self.plan.forward(&mut buf);
        let scale = 1.0 / self.plan.len() as f64;
        for (o, &slot) in out.iter_mut().zip(&self.slots) {
            *o = buf[slot] * scale;
        }
    }

    pub fn convolve(&self, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        let comps = product_components(f, g)?;
        if f.lattice() != &self.lattice {
            return Err(Error::Shape("field does not match the product engine lattice".into()));
        }
        let mut out = SpectralField::zeros(&self.lattice, comps);
        for c in 0..comps {
            let a = self.to_physical(f.component(if f.components() == 1 { 0 } else { c }));
            let b = self.to_physical(g.component(if g.components() == 1 { 0 } else { c }));
            let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
            self.from_physical(prod, out.component_mut(c));
        }
        Ok(out)
    }

    /// All products `v^j v^l` with `j <= l`, in the order of [`pair_index`].
    pub fn pair_products(&self, v: &SpectralField) -> Vec<SpectralField> {
        let m = v.components();
        let phys: Vec<Vec<Complex64>> = (0..m).map(|c| self.to_physical(v.component(c))).collect();
        let mut out = Vec::with_capacity(m * (m + 1) / 2);
        for j in 0..m {
            for l in j..m {
                let prod: Vec<Complex64> =
                    phys[j].iter().zip(&phys[l]).map(|(x, y)| x * y).collect();
                let mut field = SpectralField::zeros(&self.lattice, 1);
                self.from_physical(prod, field.component_mut(0));
                out.push(field);
            }
        }
        out
    }
}

/// Same products as [`ProductEngine::pair_products`] by the direct route.
pub fn pair_products_direct(v: &SpectralField) -> Vec<SpectralField> {
    let m = v.components();
    let lat = v.lattice();
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for j in 0..m {
        for l in j..m {
            let mut field = SpectralField::zeros(lat, 1);
            convolve_slices_direct(lat, v.component(j), v.component(l), field.component_mut(0));
            out.push(field);
        }
    }
    out
}

/// Position of the product `v^j v^l` in the upper-triangular ordering.
pub fn pair_index(m: usize, j: usize, l: usize) -> usize {
    let (a, b) = if j <= l { (j, l) } else { (l, j) };
    a * m - a * (a + 1) / 2 + b
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_field(lat: &Arc<Lattice>, comps: usize, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..comps * lat.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralField::from_coeffs(lat, comps, coeffs).unwrap()
    }

    #[test]
    fn single_modes_multiply() {
        let lat = Lattice::new(2, 3).unwrap();
        let f = SpectralField::single_mode(&lat, 1, 0, &[1, 0], c(1.0)).unwrap();
        for p in [convolve_direct(&f, &f).unwrap(), convolve(&f, &f).unwrap()] {
            assert!((p.coeff_at(0, &[2, 0]).unwrap() - c(1.0)).norm() < 1e-14);
            assert!((p.norm_l1() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn hand_convolution() {
        let lat = Lattice::new(2, 2).unwrap();
        let one = SpectralField::single_mode(&lat, 1, 0, &[0, 0], c(1.0)).unwrap();
        let ex = SpectralField::single_mode(&lat, 1, 0, &[1, 0], c(1.0)).unwrap();
        let ey = SpectralField::single_mode(&lat, 1, 0, &[0, 1], c(1.0)).unwrap();
        let f = &one + &ex;
        let p = convolve_direct(&f, &ey).unwrap();
        assert_eq!(p.coeff_at(0, &[0, 1]).unwrap(), c(1.0));
        assert_eq!(p.coeff_at(0, &[1, 1]).unwrap(), c(1.0));
        assert_eq!(p.norm_l1(), 2.0);
    }

    #[test]
    fn truncation_discards_outside_modes() {
        let lat = Lattice::new(2, 2).unwrap();
        let f = SpectralField::single_mode(&lat, 1, 0, &[2, 1], c(1.0)).unwrap();
        let g = SpectralField::single_mode(&lat, 1, 0, &[1, 0], c(1.0)).unwrap();
        assert_eq!(convolve_direct(&f, &g).unwrap().norm_l1(), 0.0);
        assert!(convolve(&f, &g).unwrap().norm_l1() < 1e-14);
    }

    #[test]
    fn fast_matches_direct_on_random_fields() {
        for (dim, n) in [(2, 8), (3, 3), (2, 1), (1, 7)] {
            let lat = Lattice::new(dim, n).unwrap();
            let f = random_field(&lat, 1, 11);
            let g = random_field(&lat, 1, 12);
            let d = convolve_direct(&f, &g).unwrap();
            let q = convolve(&f, &g).unwrap();
            let err = d.coeffs().iter().zip(q.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "dim {dim} N {n}: {err}");
        }
    }

    #[test]
    fn pair_products_agree() {
        let lat = Lattice::new(3, 2).unwrap();
        let v = random_field(&lat, 3, 5);
        let engine = ProductEngine::new(&lat);
        let fast = engine.pair_products(&v);
        let slow = pair_products_direct(&v);
        assert_eq!(fast.len(), 6);
        for (a, b) in fast.iter().zip(&slow) {
            assert!(a.distance_l1(b).unwrap() < 1e-11);
        }
        assert_eq!(pair_index(3, 0, 0), 0);
        assert_eq!(pair_index(3, 1, 0), 1);
        assert_eq!(pair_index(3, 1, 1), 3);
        assert_eq!(pair_index(3, 2, 2), 5);
    }

    #[test]
    fn broadcast_scalar_times_vector() {
        let lat = Lattice::new(2, 2).unwrap();
        let s = random_field(&lat, 1, 1);
        let v = random_field(&lat, 2, 2);
        let p = convolve_direct(&s, &v).unwrap();
        let q = convolve_direct(&s, &v.component_field(1)).unwrap();
        assert_eq!(p.component(1), q.component(0));
        let w = random_field(&lat, 3, 3);
        assert!(convolve_direct(&v, &w).is_err());
    }

    #[test]
    fn real_direct_product_is_nonnegative() {
        let lat = Lattice::new(2, 3).unwrap();
        let a: Vec<f64> = (0..lat.len()).map(|i| (i % 5) as f64 * 0.1).collect();
        let p = convolve_real_direct(&lat, &a, &a);
        assert!(p.iter().all(|&x| x >= 0.0));
        let cf = SpectralField::from_coeffs(&lat, 1, a.iter().map(|&x| c(x)).collect()).unwrap();
        let d = convolve_direct(&cf, &cf).unwrap();
        for (x, y) in p.iter().zip(d.component(0)) {
            assert!((x - y.re).abs() < 1e-12);
        }
    }
}
