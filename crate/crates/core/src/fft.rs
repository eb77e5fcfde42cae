//! Separable n-dimensional complex FFT over a cubic grid of `size^dim` points.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct NdFft {
    dim: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl NdFft {
    pub fn new(dim: usize, size: usize) -> Self {
        let mut planner = FftPlanner::new();
        NdFft {
            dim,
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.size.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalised `sum_x u(x) e^{-i k x}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.forward);
    }

    /// Unnormalised `sum_k u_k e^{+i k x}`, i.e. evaluation of a trigonometric sum.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.inverse);
    }

    fn run(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.len());
        let n = self.size;
        let total = buf.len();
        let mut line = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // the last axis is contiguous; stride grows towards the first axis
        let mut stride = 1;
        for _ in 0..self.dim {
            if stride == 1 {
                for chunk in buf.chunks_exact_mut(n) {
                    fft.process_with_scratch(chunk, &mut scratch);
                }
            } else {
                let block = stride * n;
                for base in (0..total).step_by(block) {
                    for off in 0..stride {
                        let start = base + off;
                        for (j, v) in line.iter_mut().enumerate() {
                            *v = buf[start + j * stride];
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (j, v) in line.iter().enumerate() {
                            buf[start + j * stride] = *v;
                        }
                    }
                }
            }
            stride *= n;
        }
    }
}

/// Smallest 5-smooth integer `>= n`.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
