//! Material tensors of the phonon–phason model.
//!
//! Index conventions (parallel dimension `p = n_par`, perpendicular `r = n_perp`):
//!
//! | tensor   | shape          | meaning of the index pairs                                   |
//! |----------|----------------|--------------------------------------------------------------|
//! | `C`      | `[p, p, p, p]` | phonon stress ← phonon distortion                            |
//! | `D`      | `[p, p, r, p]` | phonon stress ← phason distortion (field comp. × gradient)   |
//! | `E`      | `[r, p, r, p]` | phason stress ← phason distortion                            |
//! | friction | `[r, r]`       | phason force ← phason velocity                               |
//!
//! Required symmetries: `C_ijkl = C_klij = C_ijlk = C_jikl`, `D_ijkl = D_jikl`,
//! `E_ijkl = E_klij`, friction symmetric and positive semi-definite.
//!
//! Only one mass density enters the kinetic energy. A separate effective
//! phason density would scale the phason rows of the kinetic term; it is not
//! modelled here. The phason kinetic coefficient of hydrodynamic theories has
//! the units of the inverse friction coefficient.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::linalg::{self, Dense};
use crate::scalar::Real;
use crate::tensor::{Tensor2, Tensor4, MAX_DIM};

pub type Nested4<T> = Vec<Vec<Vec<Vec<T>>>>;
pub type Nested2<T> = Vec<Vec<T>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("dimensions out of range: n_par={n_par}, n_perp={n_perp} (each must be 1..=3)")]
    InvalidDims { n_par: usize, n_perp: usize },
    #[error("tensor {tensor}: expected shape {expected:?}, found {found}")]
    ShapeMismatch {
        tensor: &'static str,
        expected: Vec<usize>,
        found: String,
    },
    #[error("tensor {tensor}: symmetry violated at index {index:?} by {magnitude:e} (relative)")]
    SymmetryViolation {
        tensor: &'static str,
        index: Vec<usize>,
        magnitude: f64,
    },
    #[error("mass density must be positive and finite, got {0}")]
    NonPositiveDensity(f64),
    #[error("friction tensor is indefinite (min eigenvalue {min_eigenvalue:e})")]
    IndefiniteFriction { min_eigenvalue: f64 },
    #[error("friction tensor is not positive definite; no finite damping time")]
    SingularFriction,
    #[error("parameter {name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("tensor {0} contains a non-finite entry")]
    NonFinite(&'static str),
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// Dimensions of parallel (physical) and perpendicular space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n_par: usize,
    pub n_perp: usize,
}

impl Dims {
    pub fn new(n_par: usize, n_perp: usize) -> Result<Self, MaterialError> {
        if !(1..=MAX_DIM).contains(&n_par) || !(1..=MAX_DIM).contains(&n_perp) {
            return Err(MaterialError::InvalidDims { n_par, n_perp });
        }
        Ok(Self { n_par, n_perp })
    }

    /// `n_perp = n_par`.
    pub fn matching(n: usize) -> Result<Self, MaterialError> {
        Self::new(n, n)
    }

    pub fn c_shape(&self) -> [usize; 4] {
        let p = self.n_par;
        [p, p, p, p]
    }

    pub fn d_shape(&self) -> [usize; 4] {
        let (p, r) = (self.n_par, self.n_perp);
        [p, p, r, p]
    }

    pub fn e_shape(&self) -> [usize; 4] {
        let (p, r) = (self.n_par, self.n_perp);
        [r, p, r, p]
    }

    /// Total number of displacement components `n_par + n_perp`.
    pub fn n_fields(&self) -> usize {
        self.n_par + self.n_perp
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions<T> {
    /// Relative tolerance for symmetry violations; smaller deviations are
    /// averaged away, larger ones are rejected.
    pub symmetry_tol: T,
}

impl<T: Real> Default for BuildOptions<T> {
    fn default() -> Self {
        Self {
            symmetry_tol: T::default_symmetry_tol(),
        }
    }
}

/// Validated material: density, `C`, `D`, `E` and the friction tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialSpec<T> {
    dims: Dims,
    rho: T,
    c: Tensor4<T>,
    d: Tensor4<T>,
    e: Tensor4<T>,
    friction: Tensor2<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdReport<T> {
    pub is_pd: bool,
    pub min_eigenvalue: T,
}

/// `τ_ij = 2ρ (friction⁻¹)_ij`, in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharTimeTensor<T>(pub Tensor2<T>);

type IndexMap = fn([usize; 4]) -> [usize; 4];

const C_GENERATORS: [IndexMap; 3] = [
    |[i, j, k, l]| [k, l, i, j],
    |[i, j, k, l]| [j, i, k, l],
    |[i, j, k, l]| [i, j, l, k],
];
const D_GENERATORS: [IndexMap; 1] = [|[i, j, k, l]| [j, i, k, l]];
const E_GENERATORS: [IndexMap; 1] = [|[i, j, k, l]| [k, l, i, j]];

fn orbit(idx: [usize; 4], gens: &[IndexMap]) -> BTreeSet<[usize; 4]> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![idx];
    while let Some(x) = stack.pop() {
        if seen.insert(x) {
            stack.extend(gens.iter().map(|g| g(x)));
        }
    }
    seen
}

/// Averages every entry over its symmetry orbit; returns the symmetrized
/// tensor or the worst violation if it exceeds `tol` (relative to max |entry|).
fn symmetrize4<T: Real>(
    t: &Tensor4<T>,
    gens: &[IndexMap],
    tol: T,
    name: &'static str,
) -> Result<Tensor4<T>, MaterialError> {
    let scale = t.max_abs();
    let mut out = *t;
    let mut worst: Option<([usize; 4], T)> = None;
    for (i, j, k, l) in t.indices() {
        let members = orbit([i, j, k, l], gens);
        let n = T::from_usize_lossy(members.len());
        // Mean taken as an offset from a fixed member so that an already
        // symmetric orbit is left bit-for-bit unchanged.
        let base = members.iter().min().expect("orbit contains its seed");
        let x0 = t.data[base[0]][base[1]][base[2]][base[3]];
        let avg = x0
            + members
                .iter()
                .map(|m| t.data[m[0]][m[1]][m[2]][m[3]] - x0)
                .sum::<T>()
                / n;
        let dev = if scale > T::zero() {
            (t.data[i][j][k][l] - avg).abs() / scale
        } else {
            T::zero()
        };
        if worst.is_none_or(|(_, w)| dev > w) {
            worst = Some(([i, j, k, l], dev));
        }
        out.data[i][j][k][l] = avg;
    }
    match worst {
        Some((index, dev)) if dev > tol => Err(MaterialError::SymmetryViolation {
            tensor: name,
            index: index.to_vec(),
            magnitude: dev.to_f64_lossy(),
        }),
        _ => Ok(out),
    }
}

fn tensor4_from_nested<T: Real>(
    name: &'static str,
    shape: [usize; 4],
    v: &Nested4<T>,
) -> Result<Tensor4<T>, MaterialError> {
    let mismatch = |found: String| MaterialError::ShapeMismatch {
        tensor: name,
        expected: shape.to_vec(),
        found,
    };
    if v.len() != shape[0] {
        return Err(mismatch(format!("outer length {}", v.len())));
    }
    let mut t = Tensor4::zeros(shape);
    for (i, a) in v.iter().enumerate() {
        if a.len() != shape[1] {
            return Err(mismatch(format!("[{i}] has length {}", a.len())));
        }
        for (j, b) in a.iter().enumerate() {
            if b.len() != shape[2] {
                return Err(mismatch(format!("[{i}][{j}] has length {}", b.len())));
            }
            for (k, c) in b.iter().enumerate() {
                if c.len() != shape[3] {
                    return Err(mismatch(format!("[{i}][{j}][{k}] has length {}", c.len())));
                }
                for (l, x) in c.iter().enumerate() {
                    if !x.is_finite() {
                        return Err(MaterialError::NonFinite(name));
                    }
                    t.data[i][j][k][l] = *x;
                }
            }
        }
    }
    Ok(t)
}

fn tensor2_from_nested<T: Real>(
    name: &'static str,
    shape: [usize; 2],
    v: &Nested2<T>,
) -> Result<Tensor2<T>, MaterialError> {
    let mismatch = |found: String| MaterialError::ShapeMismatch {
        tensor: name,
        expected: shape.to_vec(),
        found,
    };
    if v.len() != shape[0] {
        return Err(mismatch(format!("outer length {}", v.len())));
    }
    let mut t = Tensor2::zeros(shape);
    for (i, row) in v.iter().enumerate() {
        if row.len() != shape[1] {
            return Err(mismatch(format!("[{i}] has length {}", row.len())));
        }
        for (j, x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(MaterialError::NonFinite(name));
            }
            t.data[i][j] = *x;
        }
    }
    Ok(t)
}

fn tensor2_to_dense<T: Real>(t: &Tensor2<T>) -> Dense<T> {
    Dense::from_fn(t.shape[0], |i, j| t.data[i][j])
}

/// Orthonormal basis of symmetric `n×n` matrices (Mandel convention).
fn symmetric_basis<T: Real>(n: usize) -> Vec<[[T; MAX_DIM]; MAX_DIM]> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut b = [[T::zero(); MAX_DIM]; MAX_DIM];
        b[i][i] = T::one();
        out.push(b);
    }
    let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut b = [[T::zero(); MAX_DIM]; MAX_DIM];
            b[i][j] = h;
            b[j][i] = h;
            out.push(b);
        }
    }
    out
}

/// Unit basis of general `rows×cols` matrices.
fn full_basis<T: Real>(rows: usize, cols: usize) -> Vec<[[T; MAX_DIM]; MAX_DIM]> {
    let mut out = Vec::new();
    for k in 0..rows {
        for l in 0..cols {
            let mut b = [[T::zero(); MAX_DIM]; MAX_DIM];
            b[k][l] = T::one();
            out.push(b);
        }
    }
    out
}

fn bilinear<T: Real>(
    a: &[[T; MAX_DIM]; MAX_DIM],
    t: &Tensor4<T>,
    b: &[[T; MAX_DIM]; MAX_DIM],
) -> T {
    let tb = t.contract_right(b);
    crate::tensor::ddot(a, &tb, t.shape[0], t.shape[1])
}

impl<T: Real> MaterialSpec<T> {
    /// Builds a material from raw nested arrays.
    ///
    /// Symmetry deviations below `opts.symmetry_tol` are averaged away over
    /// the symmetry orbit of each entry; larger ones are rejected.
    pub fn build(
        dims: Dims,
        rho: T,
        c: &Nested4<T>,
        d: &Nested4<T>,
        e: &Nested4<T>,
        friction: &Nested2<T>,
        opts: BuildOptions<T>,
    ) -> Result<Self, MaterialError> {
        let c = tensor4_from_nested("C", dims.c_shape(), c)?;
        let d = tensor4_from_nested("D", dims.d_shape(), d)?;
        let e = tensor4_from_nested("E", dims.e_shape(), e)?;
        let f = tensor2_from_nested("friction", [dims.n_perp, dims.n_perp], friction)?;
        Self::from_tensors(dims, rho, c, d, e, f, opts)
    }

    /// Same as [`MaterialSpec::build`] for already-shaped tensors.
    pub fn from_tensors(
        dims: Dims,
        rho: T,
        c: Tensor4<T>,
        d: Tensor4<T>,
        e: Tensor4<T>,
        friction: Tensor2<T>,
        opts: BuildOptions<T>,
    ) -> Result<Self, MaterialError> {
        let dims = Dims::new(dims.n_par, dims.n_perp)?;
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(MaterialError::NonPositiveDensity(rho.to_f64_lossy()));
        }
        let check_shape = |name: &'static str, got: [usize; 4], want: [usize; 4]| {
            if got != want {
                Err(MaterialError::ShapeMismatch {
                    tensor: name,
                    expected: want.to_vec(),
                    found: format!("{got:?}"),
                })
            } else {
                Ok(())
            }
        };
        check_shape("C", c.shape, dims.c_shape())?;
        check_shape("D", d.shape, dims.d_shape())?;
        check_shape("E", e.shape, dims.e_shape())?;
        if friction.shape != [dims.n_perp, dims.n_perp] {
            return Err(MaterialError::ShapeMismatch {
                tensor: "friction",
                expected: vec![dims.n_perp, dims.n_perp],
                found: format!("{:?}", friction.shape),
            });
        }
        let tol = opts.symmetry_tol;
        let c = symmetrize4(&c, &C_GENERATORS, tol, "C")?;
        let d = symmetrize4(&d, &D_GENERATORS, tol, "D")?;
        let e = symmetrize4(&e, &E_GENERATORS, tol, "E")?;

        let scale = friction.max_abs();
        let mut f = friction;
        let mut worst = ([0usize; 2], T::zero());
        for i in 0..dims.n_perp {
            for j in 0..dims.n_perp {
                let avg = (friction.data[i][j] + friction.data[j][i]) * T::lit(0.5);
                if scale > T::zero() {
                    let dev = (friction.data[i][j] - avg).abs() / scale;
                    if dev > worst.1 {
                        worst = ([i, j], dev);
                    }
                }
                f.data[i][j] = avg;
            }
        }
        if worst.1 > tol {
            return Err(MaterialError::SymmetryViolation {
                tensor: "friction",
                index: worst.0.to_vec(),
                magnitude: worst.1.to_f64_lossy(),
            });
        }
        if scale > T::zero() {
            let min = linalg::min_symmetric_eigenvalue(&tensor2_to_dense(&f))?;
            if min < -tol * scale {
                return Err(MaterialError::IndefiniteFriction {
                    min_eigenvalue: min.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            dims,
            rho,
            c,
            d,
            e,
            friction: f,
        })
    }

    /// One-dimensional telegraph material: `C = E = ρc²`, `D = 0`,
    /// friction `2ρ/τ_tel`. `tau_tel = +∞` gives the undamped wave model.
    pub fn scalar_model(c: T, tau_tel: T, rho: T) -> Result<Self, MaterialError> {
        for (name, v) in [("c", c), ("tau_tel", tau_tel), ("rho", rho)] {
            if !(v > T::zero()) || v.is_nan() {
                return Err(MaterialError::NonPositiveParameter {
                    name,
                    value: v.to_f64_lossy(),
                });
            }
        }
        if !c.is_finite() || !rho.is_finite() {
            return Err(MaterialError::NonPositiveParameter {
                name: if c.is_finite() { "rho" } else { "c" },
                value: f64::INFINITY,
            });
        }
        let dims = Dims::matching(1)?;
        let stiff = rho * c * c;
        let c4 = Tensor4::from_fn([1, 1, 1, 1], |_, _, _, _| stiff);
        let friction = Tensor2::from_fn([1, 1], |_, _| T::lit(2.0) * rho / tau_tel);
        Self::from_tensors(
            dims,
            rho,
            c4,
            Tensor4::zeros(dims.d_shape()),
            c4,
            friction,
            BuildOptions::default(),
        )
    }

    /// Builds a material from a symmetric energy matrix in the basis used
    /// by [`MaterialSpec::energy_matrix`].
    pub fn from_energy_matrix(
        dims: Dims,
        rho: T,
        energy: &Dense<T>,
        friction: Tensor2<T>,
    ) -> Result<Self, MaterialError> {
        let dims = Dims::new(dims.n_par, dims.n_perp)?;
        let sym = symmetric_basis::<T>(dims.n_par);
        let full = full_basis::<T>(dims.n_perp, dims.n_par);
        let ns = sym.len();
        let expected = ns + full.len();
        if energy.dim() != expected {
            return Err(MaterialError::ShapeMismatch {
                tensor: "energy matrix",
                expected: vec![expected, expected],
                found: format!("{0}x{0}", energy.dim()),
            });
        }
        let mut c = Tensor4::zeros(dims.c_shape());
        let mut d = Tensor4::zeros(dims.d_shape());
        let mut e = Tensor4::zeros(dims.e_shape());
        for (i, j, k, l) in c.indices() {
            let mut s = T::zero();
            for (a, ba) in sym.iter().enumerate() {
                for (b, bb) in sym.iter().enumerate() {
                    s = s + energy[(a, b)] * ba[i][j] * bb[k][l];
                }
            }
            c.data[i][j][k][l] = s;
        }
        for (i, j, k, l) in d.indices() {
            let mut s = T::zero();
            for (a, ba) in sym.iter().enumerate() {
                for (m, bm) in full.iter().enumerate() {
                    s = s + energy[(a, ns + m)] * ba[i][j] * bm[k][l];
                }
            }
            d.data[i][j][k][l] = s;
        }
        for (i, j, k, l) in e.indices() {
            let mut s = T::zero();
            for (m, bm) in full.iter().enumerate() {
                for (n, bn) in full.iter().enumerate() {
                    s = s + energy[(ns + m, ns + n)] * bm[i][j] * bn[k][l];
                }
            }
            e.data[i][j][k][l] = s;
        }
        Self::from_tensors(dims, rho, c, d, e, friction, BuildOptions::default())
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }
    pub fn rho(&self) -> T {
        self.rho
    }
    pub fn c(&self) -> &Tensor4<T> {
        &self.c
    }
    pub fn d(&self) -> &Tensor4<T> {
        &self.d
    }
    pub fn e(&self) -> &Tensor4<T> {
        &self.e
    }
    pub fn friction(&self) -> &Tensor2<T> {
        &self.friction
    }

    pub fn is_undamped(&self) -> bool {
        self.friction.is_zero()
    }

    /// Copy with the friction tensor multiplied by `s ≥ 0`.
    pub fn with_friction_scaled(&self, s: T) -> Self {
        let mut m = self.clone();
        for i in 0..self.dims.n_perp {
            for j in 0..self.dims.n_perp {
                m.friction.data[i][j] = self.friction.data[i][j] * s;
            }
        }
        m
    }

    /// Copy with a new friction tensor (validated).
    pub fn with_friction(&self, friction: Tensor2<T>) -> Result<Self, MaterialError> {
        Self::from_tensors(
            self.dims,
            self.rho,
            self.c,
            self.d,
            self.e,
            friction,
            BuildOptions::default(),
        )
    }

    /// Symmetric matrix of the elastic energy `W = ½ xᵀ S x` where `x`
    /// stacks the phonon distortion in an orthonormal basis of symmetric
    /// matrices followed by all phason distortion components `(k, l)` in
    /// row-major order.
    ///
    /// `C` only sees the symmetric part of the phonon distortion, so the
    /// rotational part is left out of the basis.
    pub fn energy_matrix(&self) -> Dense<T> {
        let sym = symmetric_basis::<T>(self.dims.n_par);
        let full = full_basis::<T>(self.dims.n_perp, self.dims.n_par);
        let ns = sym.len();
        let n = ns + full.len();
        let mut s = Dense::zeros(n);
        for (a, ba) in sym.iter().enumerate() {
            for (b, bb) in sym.iter().enumerate() {
                s[(a, b)] = bilinear(ba, &self.c, bb);
            }
            for (m, bm) in full.iter().enumerate() {
                let v = bilinear(ba, &self.d, bm);
                s[(a, ns + m)] = v;
                s[(ns + m, a)] = v;
            }
        }
        for (m, bm) in full.iter().enumerate() {
            for (k, bk) in full.iter().enumerate() {
                s[(ns + m, ns + k)] = bilinear(bm, &self.e, bk);
            }
        }
        s
    }

    /// Positive-definiteness report of the elastic energy form.
    pub fn check_energy_pd(&self) -> Result<PdReport<T>, MaterialError> {
        let min = linalg::min_symmetric_eigenvalue(&self.energy_matrix())?;
        Ok(PdReport {
            is_pd: min > T::zero(),
            min_eigenvalue: min,
        })
    }

    /// Characteristic damping times `2ρ·friction⁻¹`.
    pub fn char_time_tensor(&self) -> Result<CharTimeTensor<T>, MaterialError> {
        let f = tensor2_to_dense(&self.friction);
        let scale = self.friction.max_abs();
        if scale == T::zero() {
            return Err(MaterialError::SingularFriction);
        }
        let min = linalg::min_symmetric_eigenvalue(&f)?;
        if min <= scale * T::epsilon() * T::lit(16.0) {
            return Err(MaterialError::SingularFriction);
        }
        let inv = linalg::inverse(&f).map_err(|_| MaterialError::SingularFriction)?;
        let n = self.dims.n_perp;
        let two_rho = T::lit(2.0) * self.rho;
        let mut tau = Tensor2::from_fn([n, n], |i, j| two_rho * inv[(i, j)]);
        for i in 0..n {
            for j in 0..i {
                let s = (tau.data[i][j] + tau.data[j][i]) * T::lit(0.5);
                tau.data[i][j] = s;
                tau.data[j][i] = s;
            }
        }
        Ok(CharTimeTensor(tau))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n4(shape: [usize; 4], f: impl Fn(usize, usize, usize, usize) -> f64) -> Nested4<f64> {
        Tensor4::from_fn(shape, f).to_nested()
    }

    fn delta(a: usize, b: usize) -> f64 {
        if a == b {
            1.0
        } else {
            0.0
        }
    }

    fn isotropic_c(lambda: f64, mu: f64) -> impl Fn(usize, usize, usize, usize) -> f64 {
        move |i, j, k, l| {
            lambda * delta(i, j) * delta(k, l) + mu * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k))
        }
    }

    #[test]
    fn scalar_1d_builds() {
        let dims = Dims::matching(1).unwrap();
        let one = vec![vec![vec![vec![1.0]]]];
        let zero = vec![vec![vec![vec![0.0]]]];
        let m = MaterialSpec::build(dims, 1.0, &one, &zero, &one, &vec![vec![1.0]], BuildOptions::default())
            .unwrap();
        assert_eq!(m.c().get(0, 0, 0, 0), 1.0);
        assert!(m.check_energy_pd().unwrap().is_pd);
    }

    #[test]
    fn rejects_minor_symmetry_violation() {
        let dims = Dims::matching(2).unwrap();
        let mut c = Tensor4::from_fn(dims.c_shape(), isotropic_c(1.0, 0.5));
        c.data[0][1][0][1] = 0.7; // C_1212 != C_2112
        let err = MaterialSpec::build(
            dims,
            1.0,
            &c.to_nested(),
            &n4(dims.d_shape(), |_, _, _, _| 0.0),
            &n4(dims.e_shape(), |i, j, k, l| delta(i, k) * delta(j, l)),
            &vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            BuildOptions::default(),
        )
        .unwrap_err();
        match err {
            MaterialError::SymmetryViolation { tensor, magnitude, .. } => {
                assert_eq!(tensor, "C");
                assert!(magnitude > 0.01);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tiny_violation_is_symmetrized() {
        let dims = Dims::matching(2).unwrap();
        let mut e = Tensor4::from_fn(dims.e_shape(), |i, j, k, l| delta(i, k) * delta(j, l));
        e.data[0][1][1][0] = 1e-15;
        let m = MaterialSpec::build(
            dims,
            1.0,
            &n4(dims.c_shape(), isotropic_c(1.0, 0.5)),
            &n4(dims.d_shape(), |_, _, _, _| 0.0),
            &e.to_nested(),
            &vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            BuildOptions::default(),
        )
        .unwrap();
        assert_eq!(m.e().get(0, 1, 1, 0), m.e().get(1, 0, 0, 1));
    }

    #[test]
    fn cubic_3d_energy_is_pd() {
        let dims = Dims::matching(3).unwrap();
        let m = MaterialSpec::build(
            dims,
            1.0,
            &n4(dims.c_shape(), isotropic_c(1.0, 0.5)),
            &n4(dims.d_shape(), |_, _, _, _| 0.0),
            &n4(dims.e_shape(), |i, j, k, l| delta(i, k) * delta(j, l)),
            &Tensor2::<f64>::identity(3).to_rows(),
            BuildOptions::default(),
        )
        .unwrap();
        let r = m.check_energy_pd().unwrap();
        assert!(r.is_pd);
        // Symmetric-strain eigenvalues: 3λ+2μ = 4 and 2μ = 1; E block: 1.
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-12);
        let (vals, _) = linalg::symmetric_eigen(&m.energy_matrix()).unwrap();
        assert!((vals.last().unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn identity_pattern_min_eigenvalue_one() {
        let dims = Dims::matching(2).unwrap();
        let c_id = |i, j, k, l| 0.5 * (delta(i, k) * delta(j, l) + delta(i, l) * delta(j, k));
        let m = MaterialSpec::build(
            dims,
            1.0,
            &n4(dims.c_shape(), c_id),
            &n4(dims.d_shape(), |_, _, _, _| 0.0),
            &n4(dims.e_shape(), |i, j, k, l| delta(i, k) * delta(j, l)),
            &Tensor2::<f64>::identity(2).to_rows(),
            BuildOptions::default(),
        )
        .unwrap();
        let r = m.check_energy_pd().unwrap();
        assert!(r.is_pd);
        assert!((r.min_eigenvalue - 1.0).abs() < 1e-14);
    }

    #[test]
    fn strong_coupling_is_not_pd() {
        let dims = Dims::matching(1).unwrap();
        let m = MaterialSpec::build(
            dims,
            1.0,
            &vec![vec![vec![vec![1.0f64]]]],
            &vec![vec![vec![vec![2.0]]]],
            &vec![vec![vec![vec![1.0]]]],
            &vec![vec![1.0]],
            BuildOptions::default(),
        )
        .unwrap();
        let r = m.check_energy_pd().unwrap();
        assert!(!r.is_pd);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-14);
    }

    #[test]
    fn char_time_isotropic() {
        let dims = Dims::matching(3).unwrap();
        let m = MaterialSpec::build(
            dims,
            1.0,
            &n4(dims.c_shape(), isotropic_c(1.0, 0.5)),
            &n4(dims.d_shape(), |_, _, _, _| 0.0),
            &n4(dims.e_shape(), |i, j, k, l| delta(i, k) * delta(j, l)),
            &Tensor2::from_fn([3, 3], |i, j| 4.0 * delta(i, j)).to_rows(),
            BuildOptions::default(),
        )
        .unwrap();
        let tau = m.char_time_tensor().unwrap().0;
        for i in 0..3 {
            for j in 0..3 {
                assert!((tau.get(i, j) - 0.5 * delta(i, j)).abs() < 1e-15);
            }
        }
        let unit = m.with_friction(Tensor2::identity(3)).unwrap();
        assert_eq!(unit.char_time_tensor().unwrap().0.get(1, 1), 2.0);
        let undamped = m.with_friction_scaled(0.0);
        assert_eq!(undamped.char_time_tensor(), Err(MaterialError::SingularFriction));
    }

    #[test]
    fn scalar_model_coefficients() {
        let m = MaterialSpec::scalar_model(1.0, 2.0, 1.0).unwrap();
        assert_eq!(m.c().get(0, 0, 0, 0), 1.0);
        assert_eq!(m.e().get(0, 0, 0, 0), 1.0);
        assert_eq!(m.friction().get(0, 0), 1.0);
        let m = MaterialSpec::scalar_model(2.0, 1.0, 3.0).unwrap();
        assert_eq!(m.c().get(0, 0, 0, 0), 12.0);
        assert_eq!(m.friction().get(0, 0), 6.0);
        let m = MaterialSpec::scalar_model(1.0, f64::INFINITY, 1.0).unwrap();
        assert!(m.is_undamped());
        assert!(MaterialSpec::scalar_model(-1.0, 1.0, 1.0).is_err());
        assert!(MaterialSpec::scalar_model(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rejects_bad_shapes_and_density() {
        let dims = Dims::matching(1).unwrap();
        let one = vec![vec![vec![vec![1.0]]]];
        let bad = vec![vec![vec![vec![1.0, 2.0]]]];
        assert!(matches!(
            MaterialSpec::build(dims, 1.0, &bad, &one, &one, &vec![vec![1.0]], BuildOptions::default()),
            Err(MaterialError::ShapeMismatch { tensor: "C", .. })
        ));
        assert!(matches!(
            MaterialSpec::build(dims, 0.0, &one, &one, &one, &vec![vec![1.0]], BuildOptions::default()),
            Err(MaterialError::NonPositiveDensity(_))
        ));
        assert!(matches!(
            MaterialSpec::build(dims, 1.0, &one, &one, &one, &vec![vec![-1.0]], BuildOptions::default()),
            Err(MaterialError::IndefiniteFriction { .. })
        ));
        assert!(Dims::new(0, 1).is_err());
        assert!(Dims::new(2, 4).is_err());
    }

    #[test]
    fn energy_matrix_round_trip() {
        let dims = Dims::new(2, 1).unwrap();
        let n = 3 + 2;
        let s = Dense::from_fn(n, |i, j| if i == j { 2.0 + i as f64 } else { 0.1 * (i + j) as f64 });
        let m = MaterialSpec::from_energy_matrix(dims, 1.0, &s, Tensor2::identity(1)).unwrap();
        let back = m.energy_matrix();
        for i in 0..n {
            for j in 0..n {
                assert!((back[(i, j)] - s[(i, j)]).abs() < 1e-14);
            }
        }
    }
}
