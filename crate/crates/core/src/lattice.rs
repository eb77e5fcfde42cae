//! Integer wavevectors and the truncated mode cube `|k|_inf <= N` in `Z^n`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An integer wavevector `k` in `Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Wavevector(pub Vec<i32>);

impl Wavevector {
    pub fn new(k: impl Into<Vec<i32>>) -> Self {
        Wavevector(k.into())
    }

    pub fn zero(dim: usize) -> Self {
        Wavevector(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn norm_l1(&self) -> f64 {
        norm_l1(&self.0)
    }

    pub fn norm_l2(&self) -> f64 {
        norm_l2_sq(&self.0).sqrt()
    }

    pub fn norm_linf(&self) -> i32 {
        norm_linf(&self.0)
    }
}

impl fmt::Display for Wavevector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

pub fn norm_l1(k: &[i32]) -> f64 {
    k.iter().map(|&c| (c as f64).abs()).sum()
}

pub fn norm_l2_sq(k: &[i32]) -> f64 {
    k.iter().map(|&c| (c as f64) * (c as f64)).sum()
}

pub fn norm_linf(k: &[i32]) -> i32 {
    k.iter().map(|c| c.abs()).max().unwrap_or(0)
}

/// The sharp constant `c` with `c |k|_1 <= |k|_e` in dimension `n`.
pub fn norm_equivalence_constant(dim: usize) -> f64 {
    1.0 / (dim as f64).sqrt()
}

/// The cube of modes `|k|_inf <= trunc` in `dim` dimensions.
///
/// Modes are stored in lexicographic order of `k` with the first axis most
/// significant, running from `-trunc` to `trunc` on each axis. The mode `-k`
/// of the mode at index `i` sits at index `len - 1 - i`.
#[derive(Debug, PartialEq)]
pub struct Lattice {
    dim: usize,
    trunc: usize,
    side: usize,
    len: usize,
    modes: Vec<i32>,
    l1: Vec<f64>,
    l2_sq: Vec<f64>,
}

impl Lattice {
    pub fn new(dim: usize, trunc: usize) -> Result<Arc<Lattice>> {
        if dim < 1 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if trunc < 1 {
            return Err(Error::InvalidArgument("truncation must be at least 1".into()));
        }
        let side = 2 * trunc + 1;
        let len = side
            .checked_pow(dim as u32)
            .filter(|&l| l <= 1 << 26)
            .ok_or_else(|| Error::InvalidArgument(format!("lattice {dim}x{side} too large")))?;
        let mut modes = Vec::with_capacity(len * dim);
        let mut l1 = Vec::with_capacity(len);
        let mut l2_sq = Vec::with_capacity(len);
        let mut k = vec![0i32; dim];
        for idx in 0..len {
            let mut rem = idx;
            for d in (0..dim).rev() {
                k[d] = (rem % side) as i32 - trunc as i32;
                rem /= side;
            }
            modes.extend_from_slice(&k);
            l1.push(norm_l1(&k));
            l2_sq.push(norm_l2_sq(&k));
        }
        Ok(Arc::new(Lattice {
            dim,
            trunc,
            side,
            len,
            modes,
            l1,
            l2_sq,
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    /// Points per axis, `2N + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn mode(&self, idx: usize) -> &[i32] {
        &self.modes[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn wavevector(&self, idx: usize) -> Wavevector {
        Wavevector(self.mode(idx).to_vec())
    }

    pub fn l1(&self, idx: usize) -> f64 {
        self.l1[idx]
    }

    pub fn l2_sq(&self, idx: usize) -> f64 {
        self.l2_sq[idx]
    }

    pub fn l2(&self, idx: usize) -> f64 {
        self.l2_sq[idx].sqrt()
    }

    pub fn zero_index(&self) -> usize {
        self.len / 2
    }

    pub fn neg_index(&self, idx: usize) -> usize {
        self.len - 1 - idx
    }

    /// Index of `k`, or `None` when `k` lies outside the cube.
    pub fn index_of(&self, k: &[i32]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let n = self.trunc as i32;
        let mut idx = 0usize;
        for &c in k {
            if c < -n || c > n {
                return None;
            }
            idx = idx * self.side + (c + n) as usize;
        }
        Some(idx)
    }

    /// Index of `k_a + k_b` given both indices; `None` outside the cube.
    pub fn sum_index(&self, a: usize, b: usize) -> Option<usize> {
        let n = self.trunc as i32;
        let (ka, kb) = (self.mode(a), self.mode(b));
        let mut idx = 0usize;
        for d in 0..self.dim {
            let c = ka[d] + kb[d];
            if c < -n || c > n {
                return None;
            }
            idx = idx * self.side + (c + n) as usize;
        }
        Some(idx)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &[i32])> + '_ {
        (0..self.len).map(move |i| (i, self.mode(i)))
    }
}
