//! Pointwise constitutive relations.
//!
//! With elastic distortions `β∥`, `β⊥` and elastic velocities `v∥`, `v⊥`:
//!
//! ```text
//! σ∥_ij = C_ijkl β∥_kl + D_ijkl β⊥_kl
//! σ⊥_ij = D_klij β∥_kl + E_ijkl β⊥_kl
//! p = ρ v
//! W = ½ β∥:C:β∥ + β∥:D:β⊥ + ½ β⊥:E:β⊥
//! T = ½ ρ (|v∥|² + |v⊥|²)
//! R = ½ v⊥·F·v⊥,   f_fr = −F v⊥
//! ```
//!
//! The phason stress is reported as computed; it is not symmetric in general.

use thiserror::Error;

use crate::material::{Dims, MaterialSpec};
use crate::scalar::Real;
use crate::tensor::{ddot, dot, zero_mat, zero_vec, Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("state dims {state:?} do not match material dims {material:?}")]
pub struct ShapeMismatch {
    pub state: Dims,
    pub material: Dims,
}

/// Elastic distortions and velocities at one point.
///
/// `beta_par` is `n_par × n_par`, `beta_perp` is `n_perp × n_par`
/// (field component × gradient direction).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointState<T> {
    pub dims: Dims,
    pub beta_par: Mat3<T>,
    pub beta_perp: Mat3<T>,
    pub v_par: Vec3<T>,
    pub v_perp: Vec3<T>,
}

impl<T: Real> PointState<T> {
    pub fn zero(dims: Dims) -> Self {
        Self {
            dims,
            beta_par: zero_mat(),
            beta_perp: zero_mat(),
            v_par: zero_vec(),
            v_perp: zero_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressPair<T> {
    pub sigma_par: Mat3<T>,
    pub sigma_perp: Mat3<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown<T> {
    pub kinetic: T,
    pub elastic: T,
    /// `2R`, the local rate of energy dissipation.
    pub dissipation_rate: T,
}

fn check<T: Real>(state: &PointState<T>, mat: &MaterialSpec<T>) -> Result<(), ShapeMismatch> {
    if state.dims != mat.dims() {
        return Err(ShapeMismatch {
            state: state.dims,
            material: mat.dims(),
        });
    }
    Ok(())
}

/// Stresses from distortions only; no shape check. Used in the solver's
/// inner loop.
#[inline]
pub fn stresses_unchecked<T: Real>(
    beta_par: &Mat3<T>,
    beta_perp: &Mat3<T>,
    mat: &MaterialSpec<T>,
) -> StressPair<T> {
    let mut sigma_par = mat.c().contract_right(beta_par);
    let coupling = mat.d().contract_right(beta_perp);
    let mut sigma_perp = mat.e().contract_right(beta_perp);
    let back = mat.d().contract_left(beta_par);
    let Dims { n_par, n_perp } = mat.dims();
    for i in 0..n_par {
        for j in 0..n_par {
            sigma_par[i][j] = sigma_par[i][j] + coupling[i][j];
        }
    }
    for i in 0..n_perp {
        for j in 0..n_par {
            sigma_perp[i][j] = sigma_perp[i][j] + back[i][j];
        }
    }
    StressPair {
        sigma_par,
        sigma_perp,
    }
}

/// Elastic energy density from distortions only; no shape check.
#[inline]
pub fn elastic_energy_unchecked<T: Real>(
    beta_par: &Mat3<T>,
    beta_perp: &Mat3<T>,
    mat: &MaterialSpec<T>,
) -> T {
    let Dims { n_par, n_perp } = mat.dims();
    let half = T::lit(0.5);
    let cb = mat.c().contract_right(beta_par);
    let db = mat.d().contract_right(beta_perp);
    let eb = mat.e().contract_right(beta_perp);
    half * ddot(beta_par, &cb, n_par, n_par)
        + ddot(beta_par, &db, n_par, n_par)
        + half * ddot(beta_perp, &eb, n_perp, n_par)
}

pub fn stresses<T: Real>(state: &PointState<T>, mat: &MaterialSpec<T>) -> Result<StressPair<T>, ShapeMismatch> {
    check(state, mat)?;
    Ok(stresses_unchecked(&state.beta_par, &state.beta_perp, mat))
}

/// Phonon and phason momenta `ρ v`.
pub fn momenta<T: Real>(state: &PointState<T>, mat: &MaterialSpec<T>) -> (Vec3<T>, Vec3<T>) {
    let rho = mat.rho();
    (state.v_par.map(|v| rho * v), state.v_perp.map(|v| rho * v))
}

/// Dissipative function `R = ½ F_ij v⊥_i v⊥_j`.
pub fn dissipative_function<T: Real>(v_perp: &Vec3<T>, mat: &MaterialSpec<T>) -> T {
    T::lit(0.5) * mat.friction().quad_form(v_perp)
}

pub fn energy_density<T: Real>(
    state: &PointState<T>,
    mat: &MaterialSpec<T>,
) -> Result<EnergyBreakdown<T>, ShapeMismatch> {
    check(state, mat)?;
    let Dims { n_par, n_perp } = mat.dims();
    let kinetic = T::lit(0.5)
        * mat.rho()
        * (dot(&state.v_par, &state.v_par, n_par) + dot(&state.v_perp, &state.v_perp, n_perp));
    Ok(EnergyBreakdown {
        kinetic,
        elastic: elastic_energy_unchecked(&state.beta_par, &state.beta_perp, mat),
        dissipation_rate: T::lit(2.0) * dissipative_function(&state.v_perp, mat),
    })
}

/// Phason friction force density `−F v⊥`.
pub fn friction_force<T: Real>(v_perp: &Vec3<T>, mat: &MaterialSpec<T>) -> Vec3<T> {
    mat.friction().apply(v_perp).map(|x| -x)
}
