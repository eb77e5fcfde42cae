//! Pressure elimination and the projected nonlinearity `A^k_l d_j (v^j v^l)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::product::{pair_index, pair_products_direct, ProductEngine, ProductMethod};

/// Relative divergence accepted on inputs that must be solenoidal.
pub const DIV_TOL: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Multiplier of `A^k_l = Delta^{-1} d_k d_l - delta_kl` at mode `q`
/// (components zero-based); on `q = 0` only `-delta_kl` survives.
#[inline]
pub fn a_multiplier(q: &[i32], l2_sq: f64, k: usize, l: usize) -> f64 {
    let delta = if k == l { 1.0 } else { 0.0 };
    if l2_sq == 0.0 {
        -delta
    } else {
        q[k] as f64 * q[l] as f64 / l2_sq - delta
    }
}

/// `A^k_l u` for a scalar field `u`.
pub fn a_operator(u: &SpectralField, k: usize, l: usize) -> Result<SpectralField> {
    if u.components() != 1 {
        return Err(Error::Shape("A^k_l acts on scalar fields".into()));
    }
    if k >= u.dim() || l >= u.dim() {
        return Err(Error::InvalidArgument(format!(
            "component indices ({k}, {l}) out of range for dimension {}",
            u.dim()
        )));
    }
    let lat = u.lattice().clone();
    Ok(u.map_real(|i| a_multiplier(lat.mode(i), lat.l2_sq(i), k, l)))
}

pub(crate) fn check_velocity(v: &SpectralField) -> Result<()> {
    if v.components() != v.dim() {
        return Err(Error::Shape(format!(
            "velocity needs {} components, got {}",
            v.dim(),
            v.components()
        )));
    }
    Ok(())
}

pub(crate) fn check_solenoidal(v: &SpectralField) -> Result<()> {
    let defect = v.divergence_defect()?;
    if defect > DIV_TOL {
        return Err(Error::NotSolenoidal { defect, tol: DIV_TOL });
    }
    Ok(())
}

/// Products `v^j v^l`, `j <= l`, by the requested route.
pub struct Nonlinearity {
    engine: ProductEngine,
    method: ProductMethod,
}

impl Nonlinearity {
    pub fn new(lattice: &std::sync::Arc<crate::lattice::Lattice>, method: ProductMethod) -> Self {
        Nonlinearity {
            engine: ProductEngine::new(lattice),
            method,
        }
    }

    pub fn method(&self) -> ProductMethod {
        self.method
    }

    pub fn pair_products(&self, v: &SpectralField) -> Vec<SpectralField> {
        match self.method {
            ProductMethod::Fft => self.engine.pair_products(v),
            ProductMethod::Direct => pair_products_direct(v),
        }
    }

    /// `B(v)^k = A^k_l d_j (v^j v^l)`, summed over `j, l`.
    ///
    /// For solenoidal `v` this is the Leray projection of `-(v . grad) v`.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        check_velocity(v)?;
        check_solenoidal(v)?;
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &SpectralField) -> SpectralField {
        let n = v.dim();
        let lat = v.lattice();
        let prods = self.pair_products(v);
        let mut out = SpectralField::zeros(lat, n);
        let mut w = vec![Complex64::default(); n];
        for i in 0..lat.len() {
            let q = lat.mode(i);
            let l2 = lat.l2_sq(i);
            if l2 == 0.0 {
                continue;
            }
            // w^l = sum_j i q_j (v^j v^l)_q
            for (l, wl) in w.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                for (j, &qj) in q.iter().enumerate() {
                    acc += prods[pair_index(n, j, l)].coeff(0, i) * qj as f64;
                }
                *wl = acc * I;
            }
            for k in 0..n {
                let mut acc = Complex64::default();
                for (l, wl) in w.iter().enumerate() {
                    acc += wl * a_multiplier(q, l2, k, l);
                }
                out.set(k, i, acc);
            }
        }
        out
    }

    /// `p = -Delta^{-1} d_i d_j (v^i v^j)` with zero mean.
    pub fn pressure(&self, v: &SpectralField) -> Result<SpectralField> {
        check_velocity(v)?;
        let n = v.dim();
        let lat = v.lattice();
        let prods = self.pair_products(v);
        let mut p = SpectralField::zeros(lat, 1);
        for i in 0..lat.len() {
            let l2 = lat.l2_sq(i);
            if l2 == 0.0 {
                continue;
            }
            let q = lat.mode(i);
            let mut acc = Complex64::default();
            for a in 0..n {
                for b in 0..n {
                    acc += prods[pair_index(n, a, b)].coeff(0, i) * (q[a] as f64 * q[b] as f64);
                }
            }
            // d_a d_b -> -q_a q_b and Delta^{-1} -> -1/|q|^2, then the leading minus
            p.set(0, i, -acc / l2);
        }
        Ok(p)
    }

    /// `(v . grad) v`, Galerkin-truncated.
    pub fn advection(&self, v: &SpectralField) -> Result<SpectralField> {
        check_velocity(v)?;
        let n = v.dim();
        let lat = v.lattice();
        let mut out = SpectralField::zeros(lat, n);
        for l in 0..n {
            let vl = v.component_field(l);
            for j in 0..n {
                let dj = vl.derivative(j)?;
                let vj = v.component_field(j);
                let prod = match self.method {
                    ProductMethod::Fft => self.engine.convolve(&vj, &dj)?,
                    ProductMethod::Direct => crate::product::convolve_direct(&vj, &dj)?,
                };
                for (o, c) in out.component_mut(l).iter_mut().zip(prod.component(0)) {
                    *o += c;
                }
            }
        }
        Ok(out)
    }
}

/// `B(v)` by the transform route.
pub fn nonlinear_term(v: &SpectralField) -> Result<SpectralField> {
    Nonlinearity::new(v.lattice(), ProductMethod::Fft).apply(v)
}

/// Pressure by the transform route, gauge `p_0 = 0`.
pub fn pressure_recover(v: &SpectralField) -> Result<SpectralField> {
    Nonlinearity::new(v.lattice(), ProductMethod::Fft).pressure(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial;
    use crate::lattice::Lattice;
    use crate::product::convolve_direct;

    #[test]
    fn a_multiplier_examples() {
        assert_eq!(a_multiplier(&[1, 0], 1.0, 0, 0), 0.0);
        assert_eq!(a_multiplier(&[0, 3], 9.0, 0, 1), 0.0);
        assert_eq!(a_multiplier(&[0, 0], 0.0, 1, 1), -1.0);
        assert_eq!(a_multiplier(&[1, 1], 2.0, 0, 1), 0.5);
    }

    #[test]
    fn a_operator_is_bounded_by_two() {
        // |q_k q_l| <= |q|_e^2 gives |A^k_l| <= 2 mode by mode
        let lat = Lattice::new(2, 50).unwrap();
        for i in 0..lat.len() {
            for k in 0..2 {
                for l in 0..2 {
                    assert!(a_multiplier(lat.mode(i), lat.l2_sq(i), k, l).abs() <= 2.0);
                }
            }
        }
        let lat = Lattice::new(2, 4).unwrap();
        let u = initial::random_scalar(&lat, 3);
        for (k, l) in [(0, 0), (0, 1), (1, 1)] {
            assert!(a_operator(&u, k, l).unwrap().norm_l1() <= 2.0 * u.norm_l1());
        }
    }

    #[test]
    fn constant_flow_has_no_nonlinearity() {
        let lat = Lattice::new(2, 4).unwrap();
        let mut v = SpectralField::zeros(&lat, 2);
        v.set(0, lat.zero_index(), Complex64::new(0.7, 0.0));
        v.set(1, lat.zero_index(), Complex64::new(-0.2, 0.0));
        assert!(nonlinear_term(&v).unwrap().norm_l1() < 1e-14);
        assert!(pressure_recover(&v).unwrap().norm_l1() < 1e-14);
        let nl = Nonlinearity::new(&lat, ProductMethod::Direct);
        assert_eq!(nl.apply(&v).unwrap().norm_l1(), 0.0);
    }

    #[test]
    fn taylor_green_is_a_nonlinear_steady_state() {
        let lat = Lattice::new(2, 8).unwrap();
        let v = initial::taylor_green(&lat).unwrap();
        let b = nonlinear_term(&v).unwrap();
        assert!(b.norm_l1() < 1e-13, "{}", b.norm_l1());
        // the advection term itself is not zero, only its projection
        assert!(Nonlinearity::new(&lat, ProductMethod::Fft).advection(&v).unwrap().norm_l1() > 0.1);
    }

    #[test]
    fn taylor_green_pressure() {
        // v = (sin x1 cos x2, -cos x1 sin x2): (v.grad)v = (sin 2x1, sin 2x2)/2, so
        // p = -Delta^{-1} div((v.grad)v) = (cos 2x1 + cos 2x2)/4
        let lat = Lattice::new(2, 4).unwrap();
        let v = initial::taylor_green(&lat).unwrap();
        let p = pressure_recover(&v).unwrap();
        for k in [[2, 0], [-2, 0], [0, 2], [0, -2]] {
            let c = p.coeff_at(0, &k).unwrap();
            assert!((c - Complex64::new(0.125, 0.0)).norm() < 1e-15, "{k:?}: {c}");
        }
        assert!((p.norm_l1() - 0.5).abs() < 1e-14);
        assert_eq!(p.mean(0), Complex64::default());
    }

    #[test]
    fn multiplier_path_matches_brute_force() {
        let lat = Lattice::new(2, 6).unwrap();
        let v = initial::random_solenoidal(&lat, 1.0, 2.0, 9).unwrap();
        let b = nonlinear_term(&v).unwrap();
        // A^k_l d_j applied to directly convolved v^j v^l
        let mut brute = SpectralField::zeros(&lat, 2);
        for k in 0..2 {
            for l in 0..2 {
                for j in 0..2 {
                    let prod = convolve_direct(&v.component_field(j), &v.component_field(l)).unwrap();
                    let term = a_operator(&prod.derivative(j).unwrap(), k, l).unwrap();
                    for (o, c) in brute.component_mut(k).iter_mut().zip(term.component(0)) {
                        *o += c;
                    }
                }
            }
        }
        assert!(b.distance_l1(&brute).unwrap() < 1e-12 * b.norm_l1().max(1.0));
        assert!(b.divergence_defect().unwrap() < 1e-12);
    }

    #[test]
    fn nonlinearity_equals_projected_advection() {
        let lat = Lattice::new(3, 3).unwrap();
        let v = initial::random_solenoidal(&lat, 1.0, 1.0, 4).unwrap();
        let nl = Nonlinearity::new(&lat, ProductMethod::Fft);
        let b = nl.apply(&v).unwrap();
        let adv = nl.advection(&v).unwrap().leray_project().unwrap().scaled(-1.0);
        assert!(b.distance_l1(&adv).unwrap() < 1e-12 * b.norm_l1());
    }

    #[test]
    fn rejects_compressible_input() {
        let lat = Lattice::new(2, 2).unwrap();
        let v = SpectralField::single_mode(&lat, 2, 0, &[1, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(nonlinear_term(&v), Err(Error::NotSolenoidal { .. })));
    }
}
