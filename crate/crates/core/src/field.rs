//! Truncated Fourier fields on the torus and their diagonal multiplier operators.

use std::ops::{Add, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::NdFft;
use crate::lattice::Lattice;

/// Relative tolerance on the mean mode accepted by [`SpectralField::inv_laplacian`].
pub const MEAN_TOL: f64 = 1e-12;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Weight `max(|k|_1, 1)` entering the `H_s` norm.
#[inline]
pub fn hs_weight(l1: f64) -> f64 {
    l1.max(1.0)
}

/// A vector-valued trigonometric polynomial `sum_k f_k e^{i(k,x)}` over the
/// mode cube `|k|_inf <= N`.
///
/// Coefficients are stored component-major: component `c`, mode index `i`
/// lives at `c * lattice.len() + i`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    lattice: Arc<Lattice>,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl SpectralField {
    pub fn zeros(lattice: &Arc<Lattice>, components: usize) -> Self {
        assert!(components >= 1);
        SpectralField {
            lattice: Arc::clone(lattice),
            components,
            coeffs: vec![Complex64::default(); components * lattice.len()],
        }
    }

    pub fn from_coeffs(
        lattice: &Arc<Lattice>,
        components: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if components == 0 {
            return Err(Error::Shape("field needs at least one component".into()));
        }
        if coeffs.len() != components * lattice.len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                components * lattice.len(),
                coeffs.len()
            )));
        }
        if let Some(pos) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coefficient at slot {pos}")));
        }
        Ok(SpectralField {
            lattice: Arc::clone(lattice),
            components,
            coeffs,
        })
    }

    /// `coeff * e^{i(k,x)}` in component `comp`, zero elsewhere.
    pub fn single_mode(
        lattice: &Arc<Lattice>,
        components: usize,
        comp: usize,
        k: &[i32],
        coeff: Complex64,
    ) -> Result<Self> {
        let idx = lattice
            .index_of(k)
            .ok_or_else(|| Error::InvalidArgument(format!("mode {k:?} outside the cube")))?;
        if comp >= components {
            return Err(Error::Shape(format!("component {comp} of {components}")));
        }
        let mut f = SpectralField::zeros(lattice, components);
        f.set(comp, idx, coeff);
        Ok(f)
    }

    /// Stack scalar fields into one vector field.
    pub fn stack(parts: &[SpectralField]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Shape("nothing to stack".into()))?;
        let mut coeffs = Vec::with_capacity(parts.len() * first.lattice.len());
        for p in parts {
            if p.lattice != first.lattice {
                return Err(Error::Shape("stacked fields live on different lattices".into()));
            }
            coeffs.extend_from_slice(&p.coeffs);
        }
        let components = coeffs.len() / first.lattice.len();
        Ok(SpectralField {
            lattice: Arc::clone(&first.lattice),
            components,
            coeffs,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn trunc(&self) -> usize {
        self.lattice.trunc()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, comp: usize, idx: usize) -> Complex64 {
        self.coeffs[comp * self.lattice.len() + idx]
    }

    pub fn set(&mut self, comp: usize, idx: usize, value: Complex64) {
        let len = self.lattice.len();
        self.coeffs[comp * len + idx] = value;
    }

    pub fn coeff_at(&self, comp: usize, k: &[i32]) -> Option<Complex64> {
        self.lattice.index_of(k).map(|i| self.coeff(comp, i))
    }

    pub fn component(&self, comp: usize) -> &[Complex64] {
        let len = self.lattice.len();
        &self.coeffs[comp * len..(comp + 1) * len]
    }

    pub fn component_mut(&mut self, comp: usize) -> &mut [Complex64] {
        let len = self.lattice.len();
        &mut self.coeffs[comp * len..(comp + 1) * len]
    }

    pub fn component_field(&self, comp: usize) -> SpectralField {
        SpectralField {
            lattice: Arc::clone(&self.lattice),
            components: 1,
            coeffs: self.component(comp).to_vec(),
        }
    }

    pub fn same_shape(&self, other: &SpectralField) -> bool {
        self.components == other.components && self.lattice == other.lattice
    }

    pub fn check_same_shape(&self, other: &SpectralField) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "fields differ: ({}, {}, {}) vs ({}, {}, {})",
                self.dim(),
                self.trunc(),
                self.components,
                other.dim(),
                other.trunc(),
                other.components
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Mean value of component `comp`, i.e. its `k = 0` coefficient.
    pub fn mean(&self, comp: usize) -> Complex64 {
        self.coeff(comp, self.lattice.zero_index())
    }

    /// Largest `|f(-k) - conj(f(k))|`; zero exactly for real-valued fields.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let len = self.lattice.len();
        let mut worst = 0.0f64;
        for c in 0..self.components {
            let comp = self.component(c);
            for i in 0..len {
                worst = worst.max((comp[len - 1 - i] - comp[i].conj()).norm());
            }
        }
        worst
    }

    pub fn is_real_valued(&self, tol: f64) -> bool {
        self.conjugate_symmetry_defect() <= tol
    }

    /// `sum |f_k|` over all modes and components.
    pub fn norm_l1(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// `sum |f_k|^2` over all modes and components.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `||f||_s = sum |f_k| max(|k|_1, 1)^s`.
    pub fn norm_hs(&self, s: f64) -> f64 {
        let lat = &self.lattice;
        let weights: Vec<f64> = (0..lat.len()).map(|i| hs_weight(lat.l1(i)).powf(s)).collect();
        self.coeffs
            .chunks_exact(lat.len())
            .map(|comp| comp.iter().zip(&weights).map(|(c, w)| c.norm() * w).sum::<f64>())
            .sum()
    }

    /// `||f||*_r = sum |f_k| e^{|k|_1 r}`.
    pub fn norm_analytic(&self, r: f64) -> f64 {
        let lat = &self.lattice;
        let weights: Vec<f64> = (0..lat.len()).map(|i| (lat.l1(i) * r).exp()).collect();
        self.coeffs
            .chunks_exact(lat.len())
            .map(|comp| comp.iter().zip(&weights).map(|(c, w)| c.norm() * w).sum::<f64>())
            .sum()
    }

    /// Apply a mode-wise multiplier to every component.
    pub fn map_modes(&self, mut multiplier: impl FnMut(usize) -> Complex64) -> SpectralField {
        let len = self.lattice.len();
        let factors: Vec<Complex64> = (0..len).map(&mut multiplier).collect();
        let mut out = self.clone();
        for comp in out.coeffs.chunks_exact_mut(len) {
            for (c, f) in comp.iter_mut().zip(&factors) {
                *c *= f;
            }
        }
        out
    }

    /// Same as [`map_modes`](Self::map_modes) with a real multiplier.
    pub fn map_real(&self, mut multiplier: impl FnMut(usize) -> f64) -> SpectralField {
        self.map_modes(|i| Complex64::new(multiplier(i), 0.0))
    }

    /// `d/dx_axis`, multiplying mode `k` by `i k_axis`. Axes are zero-based.
    pub fn derivative(&self, axis: usize) -> Result<SpectralField> {
        if axis >= self.dim() {
            return Err(Error::InvalidArgument(format!(
                "axis {axis} out of range for dimension {}",
                self.dim()
            )));
        }
        let lat = Arc::clone(&self.lattice);
        Ok(self.map_modes(|i| I * lat.mode(i)[axis] as f64))
    }

    pub fn divergence(&self) -> Result<SpectralField> {
        let n = self.dim();
        if self.components != n {
            return Err(Error::Shape(format!(
                "divergence needs {n} components, got {}",
                self.components
            )));
        }
        let lat = &self.lattice;
        let mut out = SpectralField::zeros(lat, 1);
        for i in 0..lat.len() {
            let k = lat.mode(i);
            let mut acc = Complex64::default();
            for (j, &kj) in k.iter().enumerate() {
                acc += I * kj as f64 * self.coeff(j, i);
            }
            out.coeffs[i] = acc;
        }
        Ok(out)
    }

    pub fn gradient(&self) -> Result<SpectralField> {
        if self.components != 1 {
            return Err(Error::Shape(format!(
                "gradient needs a scalar field, got {} components",
                self.components
            )));
        }
        let parts: Vec<SpectralField> =
            (0..self.dim()).map(|j| self.derivative(j)).collect::<Result<_>>()?;
        SpectralField::stack(&parts)
    }

    pub fn laplacian(&self) -> SpectralField {
        let lat = Arc::clone(&self.lattice);
        self.map_real(|i| -lat.l2_sq(i))
    }

    /// Inverse Laplacian on zero-mean fields: mode `k != 0` is divided by `-|k|_e^2`.
    pub fn inv_laplacian(&self) -> Result<SpectralField> {
        let tol = MEAN_TOL * self.norm_l1();
        for c in 0..self.components {
            let m = self.mean(c).norm();
            if m > tol {
                return Err(Error::NonZeroMean { mean: m, tol });
            }
        }
        let lat = Arc::clone(&self.lattice);
        let zero = lat.zero_index();
        Ok(self.map_real(|i| if i == zero { 0.0 } else { -1.0 / lat.l2_sq(i) }))
    }

    /// Heat semigroup `S^tau`: mode `k` times `e^{-nu |k|_e^2 tau}`.
    pub fn heat_semigroup(&self, tau: f64, nu: f64) -> Result<SpectralField> {
        check_time(tau)?;
        if !(nu > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {nu}")));
        }
        let lat = Arc::clone(&self.lattice);
        Ok(self.map_real(|i| (-nu * lat.l2_sq(i) * tau).exp()))
    }

    /// The semigroup `P_rho^lambda`: mode `k` times `e^{-lambda |k|_e^2 rho}`.
    pub fn p_semigroup(&self, lambda: f64, rho: f64) -> Result<SpectralField> {
        check_time(lambda)?;
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        let lat = Arc::clone(&self.lattice);
        Ok(self.map_real(|i| (-lambda * lat.l2_sq(i) * rho).exp()))
    }

    /// `Lambda^t`: mode `k` times `e^{-|k|_e t nu / 2}`.
    pub fn lambda_smoothing(&self, t: f64, nu: f64) -> Result<SpectralField> {
        check_time(t)?;
        let lat = Arc::clone(&self.lattice);
        Ok(self.map_real(|i| lambda_factor(lat.l2(i), t, nu)))
    }

    /// `D`: mode `k` times `|k|_1`.
    pub fn d_multiplier(&self) -> SpectralField {
        let lat = Arc::clone(&self.lattice);
        self.map_real(|i| lat.l1(i))
    }

    /// Leray projection `v_k - k (k . v_k) / |k|_e^2`; the mean is left untouched.
    pub fn leray_project(&self) -> Result<SpectralField> {
        let n = self.dim();
        if self.components != n {
            return Err(Error::Shape(format!(
                "projection needs {n} components, got {}",
                self.components
            )));
        }
        let lat = &self.lattice;
        let len = lat.len();
        let zero = lat.zero_index();
        let mut out = self.clone();
        for i in 0..len {
            if i == zero {
                continue;
            }
            let k = lat.mode(i);
            let mut dot = Complex64::default();
            for (j, &kj) in k.iter().enumerate() {
                dot += kj as f64 * self.coeffs[j * len + i];
            }
            let scale = dot / lat.l2_sq(i);
            for (j, &kj) in k.iter().enumerate() {
                out.coeffs[j * len + i] -= scale * kj as f64;
            }
        }
        Ok(out)
    }

    /// `||div f||_1 / ||f||_1`, or zero for the zero field.
    pub fn divergence_defect(&self) -> Result<f64> {
        let total = self.norm_l1();
        let div = self.divergence()?.norm_l1();
        Ok(if total == 0.0 { 0.0 } else { div / total })
    }

    pub fn scaled(&self, factor: f64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    pub fn scaled_complex(&self, factor: Complex64) -> SpectralField {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &SpectralField) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * alpha;
        }
        Ok(())
    }

    /// `sum |f_k - g_k|`.
    pub fn distance_l1(&self, other: &SpectralField) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm()).sum())
    }

    /// Value of the truncated series at the complex point `x + i y`, per component.
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if x.len() != n || y.len() != n {
            return Err(Error::Shape(format!("evaluation point must have {n} coordinates")));
        }
        let lat = &self.lattice;
        let mut out = vec![Complex64::default(); self.components];
        for i in 0..lat.len() {
            let k = lat.mode(i);
            let (mut phase, mut growth) = (0.0, 0.0);
            for d in 0..n {
                phase += k[d] as f64 * x[d];
                growth -= k[d] as f64 * y[d];
            }
            let basis = Complex64::from_polar(growth.exp(), phase);
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.coeff(c, i) * basis;
            }
        }
        Ok(out)
    }

    /// Values on the uniform grid `x_j = 2 pi j / points` shifted into the
    /// complex domain by `i y`.
    ///
    /// Returns one vector per component, laid out like [`NdFft`] buffers
    /// (last axis contiguous). The sum is exact for every grid size since
    /// congruent modes are accumulated before the transform.
    pub fn sample(&self, points: usize, y: Option<&[f64]>) -> Result<Vec<Vec<Complex64>>> {
        let n = self.dim();
        if let Some(y) = y {
            if y.len() != n {
                return Err(Error::Shape(format!("shift must have {n} coordinates")));
            }
        }
        if points == 0 {
            return Err(Error::InvalidArgument("sample grid must be nonempty".into()));
        }
        let plan = NdFft::new(n, points);
        let lat = &self.lattice;
        let growth: Vec<f64> = (0..lat.len())
            .map(|i| match y {
                Some(y) => {
                    let k = lat.mode(i);
                    (-(0..n).map(|d| k[d] as f64 * y[d]).sum::<f64>()).exp()
                }
                None => 1.0,
            })
            .collect();
        let slots: Vec<usize> = (0..lat.len())
            .map(|i| {
                lat.mode(i).iter().fold(0usize, |acc, &c| {
                    acc * points + c.rem_euclid(points as i32) as usize
                })
            })
            .collect();
        let mut out = Vec::with_capacity(self.components);
        for c in 0..self.components {
            let mut buf = vec![Complex64::default(); plan.len()];
            for (i, coeff) in self.component(c).iter().enumerate() {
                buf[slots[i]] += coeff * growth[i];
            }
            plan.inverse(&mut buf);
            out.push(buf);
        }
        Ok(out)
    }
}

#[inline]
pub fn lambda_factor(l2: f64, t: f64, nu: f64) -> f64 {
    (-l2 * t * nu / 2.0).exp()
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time argument must be nonnegative, got {t}")))
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.same_shape(rhs), "adding fields of different shapes");
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert!(self.same_shape(rhs), "subtracting fields of different shapes");
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
        out
    }
}
