//! Dispersion of the one-dimensional diffusion and telegraph equations for
//! plane waves `A exp(i(qz − ωt))` with real wavenumber and complex
//! frequency.
//!
//! Telegraph: `ω² + (2i/τ)ω − c²q² = 0`. With `q₀ = 1/(cτ)`:
//!
//! * `q > q₀`: `ω = −i/τ ± √(c²q² − 1/τ²)`, damped travelling waves;
//! * `q < q₀`: `ω = −iθ`, `θ = 1/τ ± √(1/τ² − c²q²)`, two damped standing modes;
//! * `q = q₀`: double root `−i/τ`.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

/// Relative band around `q₀` treated as the critical case.
pub const CRITICAL_REL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarDispersionError {
    #[error("parameter {name} out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("phase velocity requires c·q > 1/τ (q = {q}, q0 = {q0})")]
    OutOfRegime { q: f64, q0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Propagating,
    Standing,
    Critical,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Propagating => "propagating",
            Regime::Standing => "standing",
            Regime::Critical => "critical",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionRoot<T> {
    pub omega: Complex<T>,
    pub regime: Regime,
    /// `1/|Im ω|`; infinite for a non-decaying mode.
    pub relaxation_time: Option<T>,
    pub phase_velocity: Option<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds<T> {
    pub q0: T,
    pub lambda0: T,
}

fn require_nonneg<T: Real>(name: &'static str, v: T) -> Result<(), ScalarDispersionError> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(ScalarDispersionError::InvalidParameter {
            name,
            value: v.to_f64_lossy(),
        })
    }
}

fn require_pos<T: Real>(name: &'static str, v: T, allow_inf: bool) -> Result<(), ScalarDispersionError> {
    if v > T::zero() && (allow_inf || v.is_finite()) {
        Ok(())
    } else {
        Err(ScalarDispersionError::InvalidParameter {
            name,
            value: v.to_f64_lossy(),
        })
    }
}

fn relaxation<T: Real>(rate: T) -> Option<T> {
    Some(if rate > T::zero() {
        T::one() / rate
    } else {
        T::infinity()
    })
}

/// `ω = −i D q²`, a damped standing wave with `1/τ = D q²`.
pub fn diffusion_dispersion<T: Real>(q: T, d_dif: T) -> Result<DispersionRoot<T>, ScalarDispersionError> {
    require_nonneg("q", q)?;
    require_pos("d_dif", d_dif, false)?;
    let rate = d_dif * q * q;
    Ok(DispersionRoot {
        omega: Complex::new(T::zero(), -rate),
        regime: Regime::Standing,
        relaxation_time: relaxation(rate),
        phase_velocity: None,
    })
}

/// `q₀ = 1/(cτ)` and `λ₀ = 2πcτ`.
pub fn critical_thresholds<T: Real>(c: T, tau_tel: T) -> Result<Thresholds<T>, ScalarDispersionError> {
    require_pos("c", c, false)?;
    require_pos("tau_tel", tau_tel, true)?;
    Ok(Thresholds {
        q0: T::one() / (c * tau_tel),
        lambda0: T::lit(2.0) * T::PI() * c * tau_tel,
    })
}

pub fn classify_regime_with_tol<T: Real>(q: T, c: T, tau_tel: T, rel_tol: T) -> Result<Regime, ScalarDispersionError> {
    require_nonneg("q", q)?;
    let q0 = critical_thresholds(c, tau_tel)?.q0;
    Ok(if (q - q0).abs() <= rel_tol * q0 {
        Regime::Critical
    } else if q > q0 {
        Regime::Propagating
    } else {
        Regime::Standing
    })
}

pub fn classify_regime<T: Real>(q: T, c: T, tau_tel: T) -> Result<Regime, ScalarDispersionError> {
    classify_regime_with_tol(q, c, tau_tel, T::lit(CRITICAL_REL_TOL))
}

/// `c_p = c √(1 − 1/(c²τ²q²))`, defined only in the propagating regime.
pub fn phase_velocity<T: Real>(q: T, c: T, tau_tel: T) -> Result<T, ScalarDispersionError> {
    let regime = classify_regime(q, c, tau_tel)?;
    if regime != Regime::Propagating {
        return Err(ScalarDispersionError::OutOfRegime {
            q: q.to_f64_lossy(),
            q0: (T::one() / (c * tau_tel)).to_f64_lossy(),
        });
    }
    let x = T::one() / (c * tau_tel * q);
    Ok(c * ((T::one() - x) * (T::one() + x)).sqrt())
}

/// Both roots of the telegraph dispersion relation, ordered by `Re ω`
/// descending then `Im ω` descending.
pub fn telegraph_dispersion<T: Real>(
    q: T,
    c: T,
    tau_tel: T,
) -> Result<(DispersionRoot<T>, DispersionRoot<T>), ScalarDispersionError> {
    let regime = classify_regime(q, c, tau_tel)?;
    let inv_tau = T::one() / tau_tel;
    let cq = c * q;
    let roots = match regime {
        Regime::Propagating => {
            let re = ((cq - inv_tau) * (cq + inv_tau)).sqrt();
            let cp = Some(phase_velocity(q, c, tau_tel)?);
            let mk = |re: T| DispersionRoot {
                omega: Complex::new(re, -inv_tau),
                regime,
                relaxation_time: relaxation(inv_tau),
                phase_velocity: cp,
            };
            (mk(re), mk(-re))
        }
        Regime::Standing => {
            let disc = ((inv_tau - cq) * (inv_tau + cq)).sqrt();
            let fast = inv_tau + disc;
            // Product of the rates is c²q²; avoids cancellation for small q.
            let slow = if fast > T::zero() { cq * cq / fast } else { T::zero() };
            let mk = |rate: T| DispersionRoot {
                omega: Complex::new(T::zero(), -rate),
                regime,
                relaxation_time: relaxation(rate),
                phase_velocity: None,
            };
            (mk(slow), mk(fast))
        }
        Regime::Critical => {
            let r = DispersionRoot {
                omega: Complex::new(T::zero(), -inv_tau),
                regime,
                relaxation_time: relaxation(inv_tau),
                phase_velocity: None,
            };
            (r, r)
        }
    };
    Ok(roots)
}

/// Residual of the telegraph dispersion polynomial at `ω`.
pub fn telegraph_residual<T: Real>(omega: Complex<T>, q: T, c: T, tau_tel: T) -> T {
    let two_i_over_tau = Complex::new(T::zero(), T::lit(2.0) / tau_tel);
    (omega * omega + two_i_over_tau * omega - Complex::new(c * c * q * q, T::zero())).norm()
}
