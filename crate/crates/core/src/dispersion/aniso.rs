//! Plane-wave dispersion of the coupled phonon–phason system.
//!
//! Substituting `u = U exp(i(q·x − ωt))` into the equations of motion gives
//!
//! ```text
//! M(ω, q) = [ −ρω² I + K∥      K_c                ]
//!           [  K_cᵀ            −ρω² I − iωF + K⊥  ]
//! K∥_ik = C_ijkl q_j q_l,  K_c,ik = D_ijkl q_j q_l,  K⊥_ik = E_ijkl q_j q_l
//! ```
//!
//! and `det M = 0` is a quadratic eigenvalue problem in `ω`. With `λ = −iω`
//! the pencil becomes `ρλ² + λF + K`, which has real coefficients; its first
//! companion form is solved with a dense real eigensolver. Modes are null
//! vectors of `M(ω)`.

use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, Dense, LinalgError};
use crate::material::{Dims, MaterialSpec};
use crate::scalar::Real;
use crate::tensor::{Mat3, Tensor2, Vec3, MAX_DIM};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DispersionError {
    #[error("wavevector has {found} components, material expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("eigensolver failure: {0}")]
    EigensolverFailure(#[from] LinalgError),
    #[error("wavevector path is empty")]
    EmptyPath,
}

/// Blocks of the plane-wave symbol at a fixed wavevector.
#[derive(Clone, Debug, PartialEq)]
pub struct AcousticSymbol<T> {
    pub dims: Dims,
    pub rho: T,
    pub q: Vec3<T>,
    /// `n_par × n_par`
    pub k_par: Mat3<T>,
    /// `n_par × n_perp`
    pub k_coupling: Mat3<T>,
    /// `n_perp × n_perp`
    pub k_perp: Mat3<T>,
    pub friction: Tensor2<T>,
}

impl<T: Real> AcousticSymbol<T> {
    pub fn size(&self) -> usize {
        self.dims.n_fields()
    }

    /// Symmetric stiffness `[[K∥, K_c], [K_cᵀ, K⊥]]`.
    pub fn stiffness(&self) -> Dense<T> {
        let p = self.dims.n_par;
        Dense::from_fn(self.size(), |a, b| match (a < p, b < p) {
            (true, true) => self.k_par[a][b],
            (true, false) => self.k_coupling[a][b - p],
            (false, true) => self.k_coupling[b][a - p],
            (false, false) => self.k_perp[a - p][b - p],
        })
    }

    /// Friction embedded in the full field space (zero phonon block).
    pub fn damping(&self) -> Dense<T> {
        let p = self.dims.n_par;
        Dense::from_fn(self.size(), |a, b| {
            if a >= p && b >= p {
                self.friction.data[a - p][b - p]
            } else {
                T::zero()
            }
        })
    }

    /// `M(ω)`.
    pub fn evaluate(&self, omega: Complex<T>) -> Dense<Complex<T>> {
        let k = self.stiffness();
        let f = self.damping();
        let n = self.size();
        let rho_w2 = omega * omega * self.rho;
        let i_omega = Complex::new(T::zero(), T::one()) * omega;
        Dense::from_fn(n, |a, b| {
            let mut v = Complex::new(k[(a, b)], T::zero()) - i_omega * f[(a, b)];
            if a == b {
                v = v - rho_w2;
            }
            v
        })
    }

    /// `dM/dω = −2ρω I − iF`.
    fn derivative(&self, omega: Complex<T>) -> Dense<Complex<T>> {
        let f = self.damping();
        let two_rho_w = omega * self.rho * T::lit(2.0);
        let i = Complex::new(T::zero(), T::one());
        Dense::from_fn(self.size(), |a, b| {
            let mut v = -(i * f[(a, b)]);
            if a == b {
                v = v - two_rho_w;
            }
            v
        })
    }
}

pub fn assemble_symbol<T: Real>(mat: &MaterialSpec<T>, q: &[T]) -> Result<AcousticSymbol<T>, DispersionError> {
    let dims = mat.dims();
    if q.len() != dims.n_par {
        return Err(DispersionError::ShapeMismatch {
            expected: dims.n_par,
            found: q.len(),
        });
    }
    let mut qv = [T::zero(); MAX_DIM];
    qv[..q.len()].copy_from_slice(q);
    Ok(AcousticSymbol {
        dims,
        rho: mat.rho(),
        q: qv,
        k_par: mat.c().acoustic(&qv),
        k_coupling: mat.d().acoustic(&qv),
        k_perp: mat.e().acoustic(&qv),
        friction: *mat.friction(),
    })
}

/// All `2(n_par + n_perp)` plane-wave branches at one wavevector.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchSet<T> {
    pub q: Vec<T>,
    pub roots: Vec<Complex<T>>,
    /// Polarization over `(u∥, u⊥)`; largest component normalized to `1`.
    pub modes: Vec<Vec<Complex<T>>>,
    /// `‖M(ω)x‖ / (‖M(ω)‖_F ‖x‖)` per branch.
    pub residuals: Vec<T>,
}

impl<T: Real> BranchSet<T> {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn max_imag(&self) -> T {
        self.roots.iter().map(|r| r.im).fold(T::neg_infinity(), T::max)
    }

    /// Whether branch `i` oscillates (`Re ω ≠ 0` beyond `tol`).
    pub fn is_propagating(&self, i: usize, tol: T) -> bool {
        self.roots[i].re.abs() > tol
    }
}

fn cnorm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|c| c.norm_sqr()).sum::<T>().sqrt()
}

fn mat_vec<T: Real>(m: &Dense<Complex<T>>, x: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = m.dim();
    (0..n)
        .map(|i| {
            m.row(i)
                .iter()
                .zip(x)
                .fold(Complex::new(T::zero(), T::zero()), |s, (a, b)| s + *a * *b)
        })
        .collect()
}

fn frob<T: Real>(m: &Dense<Complex<T>>) -> T {
    let n = m.dim();
    (0..n)
        .flat_map(|i| m.row(i).iter().map(|c| c.norm_sqr()).collect::<Vec<_>>())
        .sum::<T>()
        .sqrt()
}

fn relative_residual<T: Real>(sym: &AcousticSymbol<T>, omega: Complex<T>, x: &[Complex<T>]) -> T {
    let m = sym.evaluate(omega);
    let r = cnorm(&mat_vec(&m, x));
    let denom = frob(&m) * cnorm(x);
    if denom > T::zero() {
        r / denom
    } else {
        r
    }
}

fn normalize_mode<T: Real>(x: &mut [Complex<T>]) {
    let (idx, _) = x
        .iter()
        .enumerate()
        .fold((0, T::zero()), |acc, (i, c)| if c.norm() > acc.1 { (i, c.norm()) } else { acc });
    let pivot = x[idx];
    if pivot.norm() > T::zero() {
        for c in x.iter_mut() {
            *c = *c / pivot;
        }
        x[idx] = Complex::new(T::one(), T::zero());
    }
}

const NULL_TOL: f64 = 1e-10;

/// Newton correction on `xᵀM(ω)x = 0` (M is complex symmetric, so `xᵀ` is a
/// left null vector).
fn refine_root<T: Real>(sym: &AcousticSymbol<T>, omega: Complex<T>) -> Complex<T> {
    let mut best = omega;
    let mut best_res = {
        let x = &linalg::complex_null_space(&sym.evaluate(omega), T::lit(NULL_TOL), 1)[0];
        relative_residual(sym, omega, x)
    };
    let mut w = omega;
    for _ in 0..3 {
        let m = sym.evaluate(w);
        let x = &linalg::complex_null_space(&m, T::lit(NULL_TOL), 1)[0];
        let num = x
            .iter()
            .zip(mat_vec(&m, x))
            .fold(Complex::new(T::zero(), T::zero()), |s, (a, b)| s + *a * b);
        let dm = sym.derivative(w);
        let den = x
            .iter()
            .zip(mat_vec(&dm, x))
            .fold(Complex::new(T::zero(), T::zero()), |s, (a, b)| s + *a * b);
        if den.norm() <= T::epsilon() * (T::one() + num.norm()) {
            break;
        }
        w = w - num / den;
        let xn = &linalg::complex_null_space(&sym.evaluate(w), T::lit(NULL_TOL), 1)[0];
        let res = relative_residual(sym, w, xn);
        if res < best_res {
            best = w;
            best_res = res;
        } else {
            break;
        }
    }
    best
}

fn order_roots<T: Real>(a: &Complex<T>, b: &Complex<T>) -> std::cmp::Ordering {
    b.re.partial_cmp(&a.re)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(b.im.partial_cmp(&a.im).unwrap_or(std::cmp::Ordering::Equal))
}

/// Roots and modes of the plane-wave problem at wavevector `q`.
pub fn solve_branches<T: Real>(mat: &MaterialSpec<T>, q: &[T]) -> Result<BranchSet<T>, DispersionError> {
    let sym = assemble_symbol(mat, q)?;
    let m = sym.size();
    let k = sym.stiffness();
    let f = sym.damping();
    let inv_rho = T::one() / sym.rho;
    let companion = Dense::from_fn(2 * m, |a, b| match (a < m, b < m) {
        (true, true) => T::zero(),
        (true, false) => {
            if b - m == a {
                T::one()
            } else {
                T::zero()
            }
        }
        (false, true) => -k[(a - m, b)] * inv_rho,
        (false, false) => -f[(a - m, b - m)] * inv_rho,
    });
    let lambdas = linalg::real_eigenvalues(&companion)?;
    let i = Complex::new(T::zero(), T::one());
    let mut roots: Vec<Complex<T>> = lambdas.into_iter().map(|l| i * l).collect();

    let scale = roots.iter().map(|r| r.norm()).fold(T::one(), T::max);
    let cluster_tol = T::lit(1e-7) * scale;
    // Refine isolated roots only; clustered ones are left as computed.
    let snapshot = roots.clone();
    for (a, r) in roots.iter_mut().enumerate() {
        let isolated = snapshot
            .iter()
            .enumerate()
            .all(|(b, s)| a == b || (*s - *r).norm() > cluster_tol);
        if isolated {
            *r = refine_root(&sym, *r);
        }
    }
    roots.sort_by(order_roots);

    let mut modes = vec![Vec::new(); roots.len()];
    let mut a = 0;
    while a < roots.len() {
        let mut members = vec![a];
        for b in (a + 1)..roots.len() {
            if (roots[b] - roots[a]).norm() <= cluster_tol {
                members.push(b);
            }
        }
        let anchor = roots[a];
        let ns = linalg::complex_null_space(&sym.evaluate(anchor), T::lit(NULL_TOL), members.len().min(m));
        for (n, &idx) in members.iter().enumerate() {
            if modes[idx].is_empty() {
                let mut v = ns[n % ns.len()].clone();
                if idx != a {
                    let own = linalg::complex_null_space(&sym.evaluate(roots[idx]), T::lit(NULL_TOL), members.len().min(m));
                    v = own[n % own.len()].clone();
                }
                normalize_mode(&mut v);
                modes[idx] = v;
            }
        }
        a += 1;
        while a < roots.len() && !modes[a].is_empty() {
            a += 1;
        }
    }
    let residuals = roots
        .iter()
        .zip(&modes)
        .map(|(w, x)| relative_residual(&sym, *w, x))
        .collect();
    Ok(BranchSet {
        q: q.to_vec(),
        roots,
        modes,
        residuals,
    })
}

/// Minimum-cost perfect assignment for a square cost matrix (Hungarian
/// method with potentials). Returns `assign[row] = col`.
pub fn hungarian<T: Real>(cost: &[Vec<T>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = T::infinity();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

/// Matches `current` roots to `previous` ones; returns `perm` such that
/// `current[perm[b]]` continues branch `b`.
///
/// Greedy nearest neighbour when every choice is clear-cut (runner-up at
/// least twice as far), otherwise a full minimum-distance assignment.
pub fn match_branches<T: Real>(previous: &[Complex<T>], current: &[Complex<T>]) -> Vec<usize> {
    let n = previous.len();
    let dist: Vec<Vec<T>> = previous
        .iter()
        .map(|a| current.iter().map(|b| (*a - *b).norm()).collect())
        .collect();
    let mut greedy = Vec::with_capacity(n);
    let mut taken = vec![false; n];
    let mut ambiguous = false;
    for row in &dist {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| row[x].partial_cmp(&row[y]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        if n > 1 && row[order[1]] < T::lit(2.0) * row[best] {
            ambiguous = true;
        }
        if taken[best] {
            ambiguous = true;
        }
        taken[best] = true;
        greedy.push(best);
    }
    if ambiguous {
        hungarian(&dist)
    } else {
        greedy
    }
}

/// One row of a dispersion sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub point: usize,
    pub q: Vec<T>,
    pub branch: usize,
    pub omega: Complex<T>,
    pub mode: Vec<Complex<T>>,
}

#[derive(Clone, Debug)]
pub struct SweepTable<T> {
    pub rows: Vec<SweepRow<T>>,
    /// Points whose solve failed, with the error.
    pub failures: Vec<(usize, DispersionError)>,
}

impl<T: Real> SweepTable<T> {
    /// Branch `b` as a sequence of `(point, ω)`.
    pub fn branch(&self, b: usize) -> Vec<(usize, Complex<T>)> {
        self.rows
            .iter()
            .filter(|r| r.branch == b)
            .map(|r| (r.point, r.omega))
            .collect()
    }

    /// Largest `|Δω|` between consecutive points along any branch.
    pub fn max_jump(&self) -> T {
        let nb = self.rows.iter().map(|r| r.branch + 1).max().unwrap_or(0);
        let mut m = T::zero();
        for b in 0..nb {
            let br = self.branch(b);
            for w in br.windows(2) {
                if w[1].0 == w[0].0 + 1 {
                    m = m.max((w[1].1 - w[0].1).norm());
                }
            }
        }
        m
    }
}

/// Solves every wavevector on the path (in parallel) and links the roots into
/// continuous branches.
pub fn sweep<T: Real>(mat: &MaterialSpec<T>, q_path: &[Vec<T>]) -> Result<SweepTable<T>, DispersionError> {
    if q_path.is_empty() {
        return Err(DispersionError::EmptyPath);
    }
    let solved: Vec<Result<BranchSet<T>, DispersionError>> =
        q_path.par_iter().map(|q| solve_branches(mat, q)).collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut prev: Option<Vec<Complex<T>>> = None;
    for (point, res) in solved.into_iter().enumerate() {
        match res {
            Ok(set) => {
                let perm = match &prev {
                    Some(p) if p.len() == set.roots.len() => match_branches(p, &set.roots),
                    _ => (0..set.roots.len()).collect(),
                };
                let ordered: Vec<Complex<T>> = perm.iter().map(|&j| set.roots[j]).collect();
                for (branch, &j) in perm.iter().enumerate() {
                    rows.push(SweepRow {
                        point,
                        q: set.q.clone(),
                        branch,
                        omega: set.roots[j],
                        mode: set.modes[j].clone(),
                    });
                }
                prev = Some(ordered);
            }
            Err(e) => failures.push((point, e)),
        }
    }
    Ok(SweepTable { rows, failures })
}
