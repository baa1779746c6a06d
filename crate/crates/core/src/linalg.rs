//! Dense linear algebra for the small matrices that show up here (at most
//! 15×15 for energy forms and 12×12 for the dispersion companion matrix).
//!
//! Everything is generic over [`Real`] so the same code serves `f32` and
//! `f64`.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("eigenvalue iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },
    #[error("matrix is singular to working precision")]
    Singular,
}

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Copy + num_traits::Zero> Dense<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl<T> std::ops::Index<(usize, usize)> for Dense<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Dense<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

impl<T: Real> Dense<T> {
    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| *a * *b).sum())
            .collect()
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|x| *x * *x).sum::<T>().sqrt()
    }

    pub fn max_asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn symmetric_eigen<T: Real>(a: &Dense<T>) -> Result<(Vec<T>, Dense<T>), LinalgError> {
    let n = a.dim();
    let mut m = a.clone();
    // Work on the exactly symmetric part.
    for i in 0..n {
        for j in 0..i {
            let s = (m[(i, j)] + m[(j, i)]) * T::lit(0.5);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    let mut v = Dense::<T>::identity(n);
    let scale = m.frobenius();
    if n <= 1 || scale == T::zero() {
        let vals = (0..n).map(|i| m[(i, i)]).collect();
        return Ok((vals, v));
    }
    let max_sweeps = 100;
    let mut converged = false;
    for _ in 0..max_sweeps {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<T>()
            .sqrt();
        if off <= T::epsilon() * T::lit(0.01) * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        // One more convergence test after the final sweep.
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<T>()
            .sqrt();
        if off > T::epsilon() * T::lit(100.0) * scale {
            return Err(LinalgError::NoConvergence {
                iterations: max_sweeps,
            });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.iter().map(|&i| m[(i, i)]).collect();
    let vecs = Dense::from_fn(n, |r, c| v[(r, order[c])]);
    Ok((vals, vecs))
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_symmetric_eigenvalue<T: Real>(a: &Dense<T>) -> Result<T, LinalgError> {
    let (vals, _) = symmetric_eigen(a)?;
    Ok(vals.first().copied().unwrap_or_else(T::zero))
}

/// Reduces `h` in place to upper Hessenberg form by Householder similarity
/// transformations.
fn hessenberg<T: Real>(h: &mut Dense<T>) {
    let n = h.dim();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![T::zero(); n];
    for m in 1..high {
        let scale: T = (m..=high).map(|i| h[(i, m - 1)].abs()).sum();
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh = hh + ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh = hh - ort[m] * g;
        ort[m] = ort[m] - g;
        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f = f + ort[i] * h[(i, j)];
            }
            f = f / hh;
            for i in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f = f + ort[j] * h[(i, j)];
            }
            f = f / hh;
            for j in m..=high {
                h[(i, j)] = h[(i, j)] - f * ort[j];
            }
        }
        ort[m] = scale * ort[m];
        h[(m, m - 1)] = scale * g;
    }
}

/// All eigenvalues of a real (generally nonsymmetric) matrix.
///
/// Hessenberg reduction followed by Francis double-shift QR iterations.
/// Complex eigenvalues come out in conjugate pairs.
pub fn real_eigenvalues<T: Real>(a: &Dense<T>) -> Result<Vec<Complex<T>>, LinalgError> {
    let nn = a.dim();
    if nn == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    hessenberg(&mut h);

    let two = T::lit(2.0);
    let eps = T::epsilon();
    let mut d = vec![T::zero(); nn];
    let mut e = vec![T::zero(); nn];
    let mut exshift = T::zero();
    let (mut p, mut q, mut r) = (T::zero(), T::zero(), T::zero());
    let (mut s, mut z);
    let (mut w, mut x, mut y);

    let mut norm = T::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm = norm + h[(i, j)].abs();
        }
    }
    if norm == T::zero() {
        return Ok(vec![Complex::new(T::zero(), T::zero()); nn]);
    }

    let max_iter = 60 * nn.max(2);
    let mut total_iter = 0usize;
    let mut iter = 0usize;
    let mut n = nn as isize - 1;
    let low: isize = 0;
    while n >= low {
        let nu = n as usize;
        // Look for a single small sub-diagonal element.
        let mut l = n;
        while l > low {
            let lu = l as usize;
            s = h[(lu - 1, lu - 1)].abs() + h[(lu, lu)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(lu, lu - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One root found.
            h[(nu, nu)] = h[(nu, nu)] + exshift;
            d[nu] = h[(nu, nu)];
            e[nu] = T::zero();
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // Two roots found.
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) / two;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] = h[(nu, nu)] + exshift;
            h[(nu - 1, nu - 1)] = h[(nu - 1, nu - 1)] + exshift;
            x = h[(nu, nu)];
            if q >= T::zero() {
                z = if p >= T::zero() { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != T::zero() {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = T::zero();
                e[nu] = T::zero();
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // No convergence yet; form the shift.
            x = h[(nu, nu)];
            y = T::zero();
            w = T::zero();
            if l < n {
                y = h[(nu - 1, nu - 1)];
                w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            }
            // Exceptional shifts.
            if iter == 10 {
                exshift = exshift + x;
                for i in (low as usize)..=nu {
                    h[(i, i)] = h[(i, i)] - x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) / two;
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / two + s);
                    for i in (low as usize)..=nu {
                        h[(i, i)] = h[(i, i)] - s;
                    }
                    exshift = exshift + s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total_iter += 1;
            if total_iter > max_iter {
                return Err(LinalgError::NoConvergence {
                    iterations: total_iter,
                });
            }

            // Look for two consecutive small sub-diagonal elements.
            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h[(mu, mu)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(mu + 1, mu)] + h[(mu, mu + 1)];
                q = h[(mu + 1, mu + 1)] - z - r - s;
                r = h[(mu + 2, mu + 1)];
                s = p.abs() + q.abs() + r.abs();
                p = p / s;
                q = q / s;
                r = r / s;
                if m == l {
                    break;
                }
                if h[(mu, mu - 1)].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[(mu - 1, mu - 1)].abs() + z.abs() + h[(mu + 1, mu + 1)].abs()))
                {
                    break;
                }
                m -= 1;
            }
            let mu = m as usize;
            for i in (mu + 2)..=nu {
                h[(i, i - 2)] = T::zero();
                if i > mu + 2 {
                    h[(i, i - 3)] = T::zero();
                }
            }

            // Double QR step on rows l..=n and columns m..=n.
            let mut k = mu;
            while k < nu {
                let notlast = k != nu - 1;
                let mut skip = false;
                if k != mu {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        skip = true;
                    } else {
                        p = p / x;
                        q = q / x;
                        r = r / x;
                    }
                }
                if !skip {
                    s = (p * p + q * q + r * r).sqrt();
                    if p < T::zero() {
                        s = -s;
                    }
                    if s != T::zero() {
                        if k != mu {
                            h[(k, k - 1)] = -s * x;
                        } else if l != m {
                            h[(k, k - 1)] = -h[(k, k - 1)];
                        }
                        p = p + s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q = q / p;
                        r = r / p;
                        for j in k..nn {
                            p = h[(k, j)] + q * h[(k + 1, j)];
                            if notlast {
                                p = p + r * h[(k + 2, j)];
                                h[(k + 2, j)] = h[(k + 2, j)] - p * z;
                            }
                            h[(k, j)] = h[(k, j)] - p * x;
                            h[(k + 1, j)] = h[(k + 1, j)] - p * y;
                        }
                        for i in 0..=nu.min(k + 3) {
                            p = x * h[(i, k)] + y * h[(i, k + 1)];
                            if notlast {
                                p = p + z * h[(i, k + 2)];
                                h[(i, k + 2)] = h[(i, k + 2)] - p * r;
                            }
                            h[(i, k)] = h[(i, k)] - p;
                            h[(i, k + 1)] = h[(i, k + 1)] - p * q;
                        }
                    }
                }
                k += 1;
            }
        }
    }
    Ok(d.into_iter().zip(e).map(|(re, im)| Complex::new(re, im)).collect())
}

/// Solves `a x = b` for a small real system by Gaussian elimination with
/// partial pivoting.
pub fn solve<T: Real>(a: &Dense<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    let n = a.dim();
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|i| (i, m[(i, col)].abs()))
            .fold((col, T::zero()), |acc, c| if c.1 > acc.1 { c } else { acc });
        if pmax <= scale * T::epsilon() * T::from_usize_lossy(n) || pmax == T::zero() {
            return Err(LinalgError::Singular);
        }
        if piv != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            x.swap(col, piv);
        }
        for i in (col + 1)..n {
            let f = m[(i, col)] / m[(col, col)];
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                m[(i, j)] = m[(i, j)] - f * m[(col, j)];
            }
            x[i] = x[i] - f * x[col];
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s = s - m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Ok(x)
}

/// Inverse of a small real matrix.
pub fn inverse<T: Real>(a: &Dense<T>) -> Result<Dense<T>, LinalgError> {
    let n = a.dim();
    let mut inv = Dense::zeros(n);
    for c in 0..n {
        let mut e = vec![T::zero(); n];
        e[c] = T::one();
        let col = solve(a, &e)?;
        for r in 0..n {
            inv[(r, c)] = col[r];
        }
    }
    Ok(inv)
}

/// Null-space vectors of a small complex matrix from Gaussian elimination with
/// complete pivoting.
///
/// Pivots below `rel_tol · max|a|` count as zero. At least `min_count`
/// vectors are returned: the trailing pivots are dropped if needed, which
/// yields approximate null vectors of a nearly singular matrix.
pub fn complex_null_space<T: Real>(
    a: &Dense<Complex<T>>,
    rel_tol: T,
    min_count: usize,
) -> Vec<Vec<Complex<T>>> {
    let n = a.dim();
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let amax = m.data.iter().fold(T::zero(), |acc, v| acc.max(v.norm()));
    let thresh = amax * rel_tol;
    let mut rank = 0;
    for step in 0..n {
        let mut best = (step, step, T::zero());
        for i in step..n {
            for j in step..n {
                let v = m[(i, j)].norm();
                if v > best.2 {
                    best = (i, j, v);
                }
            }
        }
        if best.2 <= thresh || best.2 == T::zero() {
            break;
        }
        let (pi, pj, _) = best;
        if pi != step {
            for j in 0..n {
                let tmp = m[(step, j)];
                m[(step, j)] = m[(pi, j)];
                m[(pi, j)] = tmp;
            }
        }
        if pj != step {
            for i in 0..n {
                let tmp = m[(i, step)];
                m[(i, step)] = m[(i, pj)];
                m[(i, pj)] = tmp;
            }
            perm.swap(step, pj);
        }
        let pivot = m[(step, step)];
        for i in (step + 1)..n {
            let f = m[(i, step)] / pivot;
            for j in step..n {
                let upd = m[(step, j)] * f;
                m[(i, j)] = m[(i, j)] - upd;
            }
        }
        rank += 1;
    }
    let nullity = (n - rank).max(min_count.min(n));
    let rank = n - nullity;
    let zero = Complex::new(T::zero(), T::zero());
    (rank..n)
        .map(|free| {
            let mut y = vec![zero; n];
            y[free] = Complex::new(T::one(), T::zero());
            for i in (0..rank).rev() {
                let mut s = zero;
                for j in (i + 1)..n {
                    s = s + m[(i, j)] * y[j];
                }
                y[i] = -s / m[(i, i)];
            }
            let mut x = vec![zero; n];
            for (j, &pj) in perm.iter().enumerate() {
                x[pj] = y[j];
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Complex<f64>>) -> Vec<Complex<f64>> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    #[test]
    fn jacobi_two_by_two() {
        let a = Dense::<f64>::from_fn(2, |i, j| if i == j { 1.0 } else { 2.0 });
        let (vals, vecs) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
        // A v = λ v
        let v0 = [vecs[(0, 0)], vecs[(1, 0)]];
        let av = a.mul_vec(&v0);
        assert!((av[0] + v0[0]).abs() < 1e-14 && (av[1] + v0[1]).abs() < 1e-14);
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        let n = 7;
        let a = Dense::from_fn(n, |i, j| {
            let (a, b) = (i.min(j) as f64, i.max(j) as f64);
            (1.3 * a + 0.7 * b).sin() + if i == j { 2.0 } else { 0.0 }
        });
        let (vals, v) = symmetric_eigen(&a).unwrap();
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| v[(i, k)] * vals[k] * v[(j, k)]).sum();
                assert!((r - a[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn companion_of_cubic() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let a = Dense::from_fn(3, |i, j| match (i, j) {
            (0, 0) => 6.0,
            (0, 1) => -11.0,
            (0, 2) => 6.0,
            (1, 0) | (2, 1) => 1.0,
            _ => 0.0,
        });
        let ev = sorted(real_eigenvalues(&a).unwrap());
        for (e, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e.re - want).abs() < 1e-12 && e.im.abs() < 1e-12, "{e}");
        }
    }

    #[test]
    fn rotation_has_complex_pair() {
        let a = Dense::from_fn(2, |i, j| match (i, j) {
            (0, 1) => -1.0,
            (1, 0) => 1.0,
            _ => 0.0,
        });
        let ev = sorted(real_eigenvalues(&a).unwrap());
        assert!((ev[0].im + 1.0).abs() < 1e-14 && (ev[1].im - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nonsymmetric_eigenvalues_match_characteristic_polynomial() {
        let n = 9;
        let a = Dense::from_fn(n, |i, j| ((i * 7 + j * 3) as f64 * 0.37).cos() + 0.1 * (i as f64 - j as f64));
        let ev = real_eigenvalues(&a).unwrap();
        assert_eq!(ev.len(), n);
        // Each λ makes A - λI singular: check via null space residual.
        for lam in ev {
            let m = Dense::from_fn(n, |i, j| {
                Complex::new(a[(i, j)], 0.0) - if i == j { lam } else { Complex::new(0.0, 0.0) }
            });
            let x = &complex_null_space(&m, 1e-13, 1)[0];
            let xn: f64 = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let res: f64 = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| m[(i, j)] * x[j])
                        .fold(Complex::new(0.0, 0.0), |s, v| s + v)
                        .norm_sqr()
                })
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-10 * xn * m.data.iter().map(|c| c.norm()).fold(0.0, f64::max));
        }
    }

    #[test]
    fn solve_and_inverse() {
        let a = Dense::from_fn(3, |i, j| if i == j { 4.0 } else { 1.0 / (1.0 + (i + j) as f64) });
        let inv = inverse(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[(i, k)] * inv[(k, j)]).sum();
                assert!((s - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert_eq!(solve(&Dense::<f64>::zeros(2), &[1.0, 1.0]), Err(LinalgError::Singular));
    }

    #[test]
    fn null_space_of_rank_one() {
        let a = Dense::from_fn(3, |i, j| Complex::new((i + 1) as f64 * (j + 1) as f64, 0.0));
        let ns = complex_null_space(&a, 1e-12, 0);
        assert_eq!(ns.len(), 2);
        for x in ns {
            for i in 0..3 {
                let s = (0..3).map(|j| a[(i, j)] * x[j]).fold(Complex::new(0.0, 0.0), |s, v| s + v);
                assert!(s.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let a = Dense::from_fn(2, |i, j| if i == j { 2.0f32 } else { 1.0 });
        let (vals, _) = symmetric_eigen(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-6 && (vals[1] - 3.0).abs() < 1e-6);
    }
}
