//! Discrete gradient and divergence on periodic grids.
//!
//! Both discretizations satisfy `div = −gradᵀ` (in the grid inner product),
//! so the semi-discrete system keeps the energy structure of the continuum
//! equations.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

use super::grid::Grid;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spatial {
    /// Fourier pseudo-spectral; Nyquist bin of the derivative is dropped.
    Spectral,
    /// Forward-difference gradient, backward-difference divergence.
    FD2,
}

#[derive(Clone)]
pub struct SpatialOps<T: Real> {
    grid: Grid<T>,
    kind: Spatial,
    fwd: Option<Arc<dyn Fft<T>>>,
    inv: Option<Arc<dyn Fft<T>>>,
    k: Vec<T>,
}

impl<T: Real> std::fmt::Debug for SpatialOps<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpatialOps")
            .field("grid", &self.grid)
            .field("kind", &self.kind)
            .finish()
    }
}

impl<T: Real> SpatialOps<T> {
    pub fn new(grid: Grid<T>, kind: Spatial) -> Self {
        let n = grid.n();
        let (fwd, inv) = match kind {
            Spatial::Spectral => {
                let mut planner = FftPlanner::new();
                (Some(planner.plan_fft_forward(n)), Some(planner.plan_fft_inverse(n)))
            }
            Spatial::FD2 => (None, None),
        };
        let k = (0..n).map(|m| grid.wavenumber(m, true)).collect();
        Self { grid, kind, fwd, inv, k }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn kind(&self) -> Spatial {
        self.kind
    }

    /// Eigenvalue of `∂_axis` acting on the Fourier mode with bin `m`.
    pub fn gradient_symbol(&self, m: usize) -> Complex<T> {
        match self.kind {
            Spatial::Spectral => Complex::new(T::zero(), self.k[m]),
            Spatial::FD2 => {
                let h = self.grid.spacing();
                let theta = self.grid.wavenumber(m, false) * h;
                Complex::new(theta.cos() - T::one(), theta.sin()) / h
            }
        }
    }

    /// Eigenvalue of `div ∘ grad` on the mode with per-axis bins `m`.
    pub fn laplacian_symbol(&self, m: &[usize]) -> T {
        m.iter()
            .take(self.grid.dim())
            .map(|&b| match self.kind {
                Spatial::Spectral => -self.k[b] * self.k[b],
                Spatial::FD2 => -self.gradient_symbol(b).norm_sqr(),
            })
            .sum()
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let plan = if inverse { self.inv.as_ref() } else { self.fwd.as_ref() }.expect("spectral plan");
        let n = self.grid.n();
        plan.process(data);
        if self.grid.dim() == 2 {
            let mut t = vec![Complex::new(T::zero(), T::zero()); n * n];
            for iy in 0..n {
                for ix in 0..n {
                    t[ix * n + iy] = data[iy * n + ix];
                }
            }
            plan.process(&mut t);
            for iy in 0..n {
                for ix in 0..n {
                    data[iy * n + ix] = t[ix * n + iy];
                }
            }
        }
    }

    fn wavenumber_along(&self, p: usize, axis: usize) -> T {
        self.k[self.grid.axes(p)[axis]]
    }

    /// Forward transform of a real field.
    pub fn forward(&self, f: &[T]) -> Vec<Complex<T>> {
        let mut c: Vec<Complex<T>> = f.iter().map(|&x| Complex::new(x, T::zero())).collect();
        self.transform(&mut c, false);
        c
    }

    /// Inverse transform, real part, including the `1/N` normalization.
    pub fn inverse_real(&self, mut c: Vec<Complex<T>>) -> Vec<T> {
        self.transform(&mut c, true);
        let scale = T::one() / T::from_usize_lossy(c.len());
        c.into_iter().map(|z| z.re * scale).collect()
    }

    fn stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.grid.n()
        }
    }

    fn shifted(&self, p: usize, axis: usize, forward: bool) -> usize {
        let n = self.grid.n();
        let a = self.grid.axes(p)[axis];
        let s = self.stride(axis);
        if forward {
            if a + 1 == n {
                p + s - n * s
            } else {
                p + s
            }
        } else if a == 0 {
            p + n * s - s
        } else {
            p - s
        }
    }

    /// `∂_a f` for every grid axis `a`.
    pub fn gradient(&self, f: &[T]) -> Vec<Vec<T>> {
        let dim = self.grid.dim();
        match self.kind {
            Spatial::Spectral => {
                let fh = self.forward(f);
                (0..dim)
                    .map(|a| {
                        let d: Vec<Complex<T>> = fh
                            .iter()
                            .enumerate()
                            .map(|(p, z)| Complex::new(-z.im, z.re) * self.wavenumber_along(p, a))
                            .collect();
                        self.inverse_real(d)
                    })
                    .collect()
            }
            Spatial::FD2 => {
                let inv_h = T::one() / self.grid.spacing();
                (0..dim)
                    .map(|a| {
                        (0..f.len())
                            .map(|p| (f[self.shifted(p, a, true)] - f[p]) * inv_h)
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// `Σ_a ∂_a g_a`; `g[a]` is the flux along axis `a`.
    pub fn divergence(&self, g: &[&[T]]) -> Vec<T> {
        let dim = self.grid.dim();
        assert_eq!(g.len(), dim, "one flux component per axis");
        let np = self.grid.n_points();
        match self.kind {
            Spatial::Spectral => {
                let mut acc = vec![Complex::new(T::zero(), T::zero()); np];
                for (a, ga) in g.iter().enumerate() {
                    let gh = self.forward(ga);
                    for (p, z) in gh.iter().enumerate() {
                        acc[p] = acc[p] + Complex::new(-z.im, z.re) * self.wavenumber_along(p, a);
                    }
                }
                self.inverse_real(acc)
            }
            Spatial::FD2 => {
                let inv_h = T::one() / self.grid.spacing();
                let mut out = vec![T::zero(); np];
                for (a, ga) in g.iter().enumerate() {
                    for (p, o) in out.iter_mut().enumerate() {
                        *o = *o + (ga[p] - ga[self.shifted(p, a, false)]) * inv_h;
                    }
                }
                out
            }
        }
    }

    pub fn laplacian(&self, f: &[T]) -> Vec<T> {
        let g = self.gradient(f);
        let refs: Vec<&[T]> = g.iter().map(|v| v.as_slice()).collect();
        self.divergence(&refs)
    }
}
