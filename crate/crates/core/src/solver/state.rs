use num_complex::Complex;

use crate::dispersion::aniso::solve_branches;
use crate::material::{Dims, MaterialSpec};
use crate::scalar::Real;
use crate::tensor::Vec3;

use super::grid::Grid;
use super::SolverError;

/// Gridded displacements and total velocities. `u_par[k][p]` is component
/// `k` at flat point `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub dims: Dims,
    pub u_par: Vec<Vec<T>>,
    pub u_perp: Vec<Vec<T>>,
    pub w_par: Vec<Vec<T>>,
    pub w_perp: Vec<Vec<T>>,
    pub t: T,
}

impl<T: Real> SimState<T> {
    pub fn zeros(dims: Dims, grid: &Grid<T>) -> Self {
        let np = grid.n_points();
        let f = |n| vec![vec![T::zero(); np]; n];
        Self {
            dims,
            u_par: f(dims.n_par),
            u_perp: f(dims.n_perp),
            w_par: f(dims.n_par),
            w_perp: f(dims.n_perp),
            t: T::zero(),
        }
    }

    pub fn check_shape(&self, dims: Dims, grid: &Grid<T>) -> Result<(), SolverError> {
        let np = grid.n_points();
        let ok = self.dims == dims
            && self.u_par.len() == dims.n_par
            && self.w_par.len() == dims.n_par
            && self.u_perp.len() == dims.n_perp
            && self.w_perp.len() == dims.n_perp
            && self.all_fields().all(|(_, f)| f.len() == np);
        if ok {
            Ok(())
        } else {
            Err(SolverError::ShapeMismatch(format!(
                "state does not match dims {dims:?} on {np} grid points"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.all_fields().all(|(_, f)| f.iter().all(|v| v.is_finite()))
    }

    /// Every field with its snapshot name (`u_par0`, `w_perp1`, ...).
    pub fn all_fields(&self) -> impl Iterator<Item = (String, &Vec<T>)> {
        let named = |prefix: &'static str, v: &'static str| move |(k, f)| (format!("{prefix}_{v}{k}"), f);
        self.u_par
            .iter()
            .enumerate()
            .map(named("u", "par"))
            .chain(self.u_perp.iter().enumerate().map(named("u", "perp")))
            .chain(self.w_par.iter().enumerate().map(named("w", "par")))
            .chain(self.w_perp.iter().enumerate().map(named("w", "perp")))
    }

    /// Bit patterns of every value; used for determinism checks.
    pub fn bits(&self) -> Vec<u64> {
        std::iter::once(self.t.to_f64_lossy().to_bits())
            .chain(self.all_fields().flat_map(|(_, f)| f.iter().map(|v| v.to_f64_lossy().to_bits())))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    #[serde(alias = "phonon")]
    Par,
    #[serde(alias = "phason")]
    Perp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeShape {
    /// `u = A cos(q·x)`, `w = 0`.
    Standing,
    /// Travelling plane wave of the least-damped forward branch dominated
    /// by the chosen component.
    Eigen,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition<T> {
    Zero,
    SingleMode {
        /// Integer mode numbers per grid axis; `q = 2π k / L`.
        k: [i64; 2],
        amplitude: T,
        sector: Sector,
        component: usize,
        shape: ModeShape,
    },
    Gaussian {
        center: Vec3<T>,
        width: T,
        amplitude: T,
        sector: Sector,
        component: usize,
    },
}

fn check_component(dims: Dims, sector: Sector, component: usize) -> Result<usize, SolverError> {
    let (n, offset) = match sector {
        Sector::Par => (dims.n_par, 0),
        Sector::Perp => (dims.n_perp, dims.n_par),
    };
    if component >= n {
        return Err(SolverError::InvalidConfig(format!(
            "component {component} out of range for {sector:?} sector with {n} components"
        )));
    }
    Ok(offset + component)
}

fn slot<T>(s: &mut SimState<T>, field: usize, velocity: bool) -> &mut Vec<T> {
    let p = s.dims.n_par;
    match (field < p, velocity) {
        (true, false) => &mut s.u_par[field],
        (true, true) => &mut s.w_par[field],
        (false, false) => &mut s.u_perp[field - p],
        (false, true) => &mut s.w_perp[field - p],
    }
}

/// Wavevector of integer mode `k` on `grid`, padded to `n_par` components.
pub fn mode_wavevector<T: Real>(grid: &Grid<T>, k: [i64; 2], n_par: usize) -> Vec<T> {
    let base = T::lit(2.0) * T::PI() / grid.length();
    (0..n_par)
        .map(|a| if a < grid.dim() { base * T::lit(k[a] as f64) } else { T::zero() })
        .collect()
}

pub fn build_initial<T: Real>(
    ic: &InitialCondition<T>,
    mat: &MaterialSpec<T>,
    grid: &Grid<T>,
) -> Result<SimState<T>, SolverError> {
    let dims = mat.dims();
    let mut s = SimState::zeros(dims, grid);
    let np = grid.n_points();
    match *ic {
        InitialCondition::Zero => {}
        InitialCondition::SingleMode {
            k,
            amplitude,
            sector,
            component,
            shape,
        } => {
            let field = check_component(dims, sector, component)?;
            let q = mode_wavevector(grid, k, dims.n_par);
            let phase = |p: usize| {
                let x = grid.coords(p);
                (0..grid.dim()).fold(T::zero(), |acc, a| acc + q[a] * x[a])
            };
            match shape {
                ModeShape::Standing => {
                    let u = slot(&mut s, field, false);
                    for (p, v) in u.iter_mut().enumerate() {
                        *v = amplitude * phase(p).cos();
                    }
                }
                ModeShape::Eigen => {
                    let set = solve_branches(mat, &q).map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
                    let weight = |i: usize| {
                        let m = &set.modes[i];
                        let max = m.iter().map(|c| c.norm()).fold(T::zero(), T::max);
                        if max > T::zero() {
                            m[field].norm() / max
                        } else {
                            T::zero()
                        }
                    };
                    let best_w = (0..set.len()).map(weight).fold(T::zero(), T::max);
                    if best_w <= T::zero() {
                        return Err(SolverError::InvalidConfig("no branch carries the requested component".into()));
                    }
                    let scale = set.roots.iter().map(|r| r.norm()).fold(T::one(), T::max);
                    // Root-finding noise on standing branches must not outrank damping.
                    let re = |i: usize| {
                        let r = set.roots[i].re;
                        if r.abs() <= T::lit(1e-9) * scale {
                            T::zero()
                        } else {
                            r
                        }
                    };
                    let pick = (0..set.len())
                        .filter(|&i| weight(i) >= T::lit(0.5) * best_w)
                        .max_by(|&a, &b| {
                            let (ra, rb) = (set.roots[a], set.roots[b]);
                            re(a)
                                .partial_cmp(&re(b))
                                .unwrap_or(std::cmp::Ordering::Equal)
                                .then(ra.im.partial_cmp(&rb.im).unwrap_or(std::cmp::Ordering::Equal))
                        })
                        .expect("non-empty branch set");
                    let omega = set.roots[pick];
                    let mode: Vec<Complex<T>> = {
                        let m = &set.modes[pick];
                        let pivot = m[field];
                        m.iter().map(|c| *c / pivot * amplitude).collect()
                    };
                    let minus_i_omega = Complex::new(omega.im, -omega.re);
                    for p in 0..np {
                        let e = Complex::from_polar(T::one(), phase(p));
                        for (f, mf) in mode.iter().enumerate() {
                            let z = *mf * e;
                            slot(&mut s, f, false)[p] = z.re;
                            slot(&mut s, f, true)[p] = (minus_i_omega * z).re;
                        }
                    }
                }
            }
        }
        InitialCondition::Gaussian {
            center,
            width,
            amplitude,
            sector,
            component,
        } => {
            let field = check_component(dims, sector, component)?;
            if !(width > T::zero()) {
                return Err(SolverError::InvalidConfig("gaussian width must be positive".into()));
            }
            let u = slot(&mut s, field, false);
            for (p, v) in u.iter_mut().enumerate() {
                let d = grid.periodic_offset(&grid.coords(p), &center);
                let r2 = d.iter().fold(T::zero(), |a, x| a + *x * *x);
                *v = amplitude * (-r2 / (T::lit(2.0) * width * width)).exp();
            }
        }
    }
    Ok(s)
}

/// Complex amplitude of the Fourier mode `k` in `field`, normalized so a
/// pure `A cos(q·x + φ)` returns `A e^{iφ}`.
pub fn modal_amplitude<T: Real>(grid: &Grid<T>, field: &[T], k: [i64; 2]) -> Complex<T> {
    let q = mode_wavevector(grid, k, grid.dim());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (p, v) in field.iter().enumerate() {
        let x = grid.coords(p);
        let ph = (0..grid.dim()).fold(T::zero(), |a, d| a + q[d] * x[d]);
        acc = acc + Complex::from_polar(*v, -ph);
    }
    acc * (T::lit(2.0) / T::from_usize_lossy(field.len()))
}

/// Position of the grid point nearest to `x` (periodic).
pub fn nearest_point<T: Real>(grid: &Grid<T>, x: &Vec3<T>) -> usize {
    let mut idx = [0usize; 2];
    for (a, i) in idx.iter_mut().enumerate().take(grid.dim()) {
        let r = (x[a] / grid.spacing()).round().to_f64_lossy() as i64;
        *i = r.rem_euclid(grid.n() as i64) as usize;
    }
    grid.flat(&idx[..grid.dim()]).unwrap_or(0)
}
