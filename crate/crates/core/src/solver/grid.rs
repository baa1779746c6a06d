use crate::scalar::Real;
use crate::tensor::{zero_vec, Vec3};

use super::SolverError;

/// Largest supported points per axis in 1D and 2D.
pub const MAX_POINTS_1D: usize = 2048;
pub const MAX_POINTS_2D: usize = 256;

/// Periodic square grid. Points are stored row-major with `x` contiguous:
/// flat index `p = iy·n + ix`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    n: usize,
    length: T,
    spacing: T,
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, n: usize, length: T) -> Result<Self, SolverError> {
        if !(1..=2).contains(&dim) {
            return Err(SolverError::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        let cap = if dim == 1 { MAX_POINTS_1D } else { MAX_POINTS_2D };
        if n < 8 || n > cap {
            return Err(SolverError::InvalidGrid(format!(
                "points per axis must be in [8, {cap}] for dim {dim}, got {n}"
            )));
        }
        if !(length > T::zero() && length.is_finite()) {
            return Err(SolverError::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        Ok(Self {
            dim,
            n,
            length,
            spacing: length / T::from_usize_lossy(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn n_points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Volume element `spacing^dim`.
    pub fn cell_volume(&self) -> T {
        self.spacing.powi(self.dim as i32)
    }

    /// Per-axis indices of flat point `p`.
    pub fn axes(&self, p: usize) -> [usize; 2] {
        [p % self.n, p / self.n]
    }

    /// Flat index from per-axis indices (missing axes are zero).
    pub fn flat(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.dim || idx.iter().any(|&i| i >= self.n) {
            return None;
        }
        Some(if self.dim == 1 { idx[0] } else { idx[1] * self.n + idx[0] })
    }

    pub fn coords(&self, p: usize) -> Vec3<T> {
        let a = self.axes(p);
        let mut x = zero_vec();
        for (d, xi) in x.iter_mut().enumerate().take(self.dim) {
            *xi = T::from_usize_lossy(a[d]) * self.spacing;
        }
        x
    }

    /// Angular wavenumber of FFT bin `m` (negative frequencies above `n/2`).
    /// The Nyquist bin of an even grid maps to `0` when `zero_nyquist` is set.
    pub fn wavenumber(&self, m: usize, zero_nyquist: bool) -> T {
        let two_pi_over_l = T::lit(2.0) * T::PI() / self.length;
        if self.n.is_multiple_of(2) && m == self.n / 2 {
            return if zero_nyquist {
                T::zero()
            } else {
                two_pi_over_l * T::from_usize_lossy(m)
            };
        }
        let signed = if m <= self.n / 2 {
            T::from_usize_lossy(m)
        } else {
            -T::from_usize_lossy(self.n - m)
        };
        two_pi_over_l * signed
    }

    /// Minimum-image displacement `x − c` on the periodic domain.
    pub fn periodic_offset(&self, x: &Vec3<T>, c: &Vec3<T>) -> Vec3<T> {
        let mut d = zero_vec();
        let half = self.length * T::lit(0.5);
        for k in 0..self.dim {
            let mut v = x[k] - c[k];
            v = v - (v / self.length).round() * self.length;
            if v > half {
                v = v - self.length;
            }
            d[k] = v;
        }
        d
    }
}
