//! Small dense tensors with a runtime shape and fixed `3`-wide storage.
//!
//! Indices are `[i][j][k][l]`; only the leading `shape` block of the storage
//! is meaningful, everything outside it stays zero.

use crate::scalar::Real;

pub const MAX_DIM: usize = 3;

pub type Vec3<T> = [T; MAX_DIM];
pub type Mat3<T> = [[T; MAX_DIM]; MAX_DIM];

#[inline]
pub fn zero_vec<T: Real>() -> Vec3<T> {
    [T::zero(); MAX_DIM]
}

#[inline]
pub fn zero_mat<T: Real>() -> Mat3<T> {
    [[T::zero(); MAX_DIM]; MAX_DIM]
}

/// Rank-2 tensor with shape `[rows, cols]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor2<T> {
    pub shape: [usize; 2],
    pub data: Mat3<T>,
}

impl<T: Real> Tensor2<T> {
    pub fn zeros(shape: [usize; 2]) -> Self {
        debug_assert!(shape.iter().all(|&s| s <= MAX_DIM));
        Self {
            shape,
            data: zero_mat(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros([n, n]);
        for i in 0..n {
            t.data[i][i] = T::one();
        }
        t
    }

    pub fn from_fn(shape: [usize; 2], mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut t = Self::zeros(shape);
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                t.data[i][j] = f(i, j);
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i][j]
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.shape[0] {
            for j in 0..self.shape[1] {
                m = m.max(self.data[i][j].abs());
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == T::zero()
    }

    /// Matrix-vector product over the active block.
    pub fn apply(&self, v: &Vec3<T>) -> Vec3<T> {
        let mut out = zero_vec();
        for (i, o) in out.iter_mut().enumerate().take(self.shape[0]) {
            let mut s = T::zero();
            for (j, vj) in v.iter().enumerate().take(self.shape[1]) {
                s = s + self.data[i][j] * *vj;
            }
            *o = s;
        }
        out
    }

    /// `vᵀ A v` over the active block.
    pub fn quad_form(&self, v: &Vec3<T>) -> T {
        let av = self.apply(v);
        (0..self.shape[0]).map(|i| av[i] * v[i]).sum()
    }

    /// Active block as a row-major `Vec<Vec<T>>`.
    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.shape[0])
            .map(|i| (0..self.shape[1]).map(|j| self.data[i][j]).collect())
            .collect()
    }
}

/// Rank-4 tensor with shape `[a, b, c, d]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor4<T> {
    pub shape: [usize; 4],
    pub data: [[[[T; MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl<T: Real> Tensor4<T> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        debug_assert!(shape.iter().all(|&s| s <= MAX_DIM));
        Self {
            shape,
            data: [[[[T::zero(); MAX_DIM]; MAX_DIM]; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Self {
        let mut t = Self::zeros(shape);
        for (i, j, k, l) in t.indices() {
            t.data[i][j][k][l] = f(i, j, k, l);
        }
        t
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.data[i][j][k][l]
    }

    /// All index tuples of the active block in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize, usize, usize)> {
        let [a, b, c, d] = self.shape;
        (0..a).flat_map(move |i| {
            (0..b).flat_map(move |j| (0..c).flat_map(move |k| (0..d).map(move |l| (i, j, k, l))))
        })
    }

    pub fn max_abs(&self) -> T {
        self.indices()
            .map(|(i, j, k, l)| self.data[i][j][k][l].abs())
            .fold(T::zero(), T::max)
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut t = *self;
        for (i, j, k, l) in self.indices() {
            t.data[i][j][k][l] = t.data[i][j][k][l] * s;
        }
        t
    }

    /// `out_ij = Σ_kl T_ijkl m_kl` (contraction over the trailing pair).
    pub fn contract_right(&self, m: &Mat3<T>) -> Mat3<T> {
        let [a, b, c, d] = self.shape;
        let mut out = zero_mat();
        for i in 0..a {
            for j in 0..b {
                let mut s = T::zero();
                for k in 0..c {
                    for l in 0..d {
                        s = s + self.data[i][j][k][l] * m[k][l];
                    }
                }
                out[i][j] = s;
            }
        }
        out
    }

    /// `out_kl = Σ_ij m_ij T_ijkl` (contraction over the leading pair).
    pub fn contract_left(&self, m: &Mat3<T>) -> Mat3<T> {
        let [a, b, c, d] = self.shape;
        let mut out = zero_mat();
        for i in 0..a {
            for j in 0..b {
                let mij = m[i][j];
                if mij == T::zero() {
                    continue;
                }
                for k in 0..c {
                    for l in 0..d {
                        out[k][l] = out[k][l] + mij * self.data[i][j][k][l];
                    }
                }
            }
        }
        out
    }

    /// `out_ik = Σ_jl T_ijkl q_j q_l`.
    pub fn acoustic(&self, q: &Vec3<T>) -> Mat3<T> {
        let [a, b, c, d] = self.shape;
        let mut out = zero_mat();
        for i in 0..a {
            for k in 0..c {
                let mut s = T::zero();
                for j in 0..b {
                    for l in 0..d {
                        s = s + self.data[i][j][k][l] * q[j] * q[l];
                    }
                }
                out[i][k] = s;
            }
        }
        out
    }

    /// Row-major nested vectors of the active block.
    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<T>>>> {
        let [a, b, c, d] = self.shape;
        (0..a)
            .map(|i| {
                (0..b)
                    .map(|j| {
                        (0..c)
                            .map(|k| (0..d).map(|l| self.data[i][j][k][l]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

/// Double contraction `a : b` over the `[rows, cols]` block.
#[inline]
pub fn ddot<T: Real>(a: &Mat3<T>, b: &Mat3<T>, rows: usize, cols: usize) -> T {
    let mut s = T::zero();
    for i in 0..rows {
        for j in 0..cols {
            s = s + a[i][j] * b[i][j];
        }
    }
    s
}

#[inline]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>, n: usize) -> T {
    (0..n).map(|i| a[i] * b[i]).sum()
}
