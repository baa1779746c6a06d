//! Body forces and plastic (eigenstrain) source fields.

use std::fmt;
use std::sync::Arc;

use crate::scalar::Real;
use crate::tensor::{zero_mat, zero_vec, Mat3, Vec3};

/// Vector-valued field of position and time.
pub trait VectorField<T>: Send + Sync {
    fn value(&self, x: &Vec3<T>, t: T) -> Vec3<T>;
    /// Analytic time derivative, when known.
    fn rate(&self, _x: &Vec3<T>, _t: T) -> Option<Vec3<T>> {
        None
    }
}

/// Rank-2 field of position and time.
pub trait TensorField<T>: Send + Sync {
    fn value(&self, x: &Vec3<T>, t: T) -> Mat3<T>;
    fn rate(&self, _x: &Vec3<T>, _t: T) -> Option<Mat3<T>> {
        None
    }
}

/// How time derivatives of plastic fields are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateRule {
    /// Use [`VectorField::rate`] / [`TensorField::rate`].
    Analytic,
    /// `(s(t + dt) − s(t − dt)) / 2dt` with the run's step.
    CenteredDifference,
}

/// Spatial profile of a preset source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile<T> {
    Uniform,
    /// `sin(k·x + phase)`.
    Sine { k: Vec3<T>, phase: T },
    /// `exp(−|x − c|²/(2w²))` with periodic distance.
    Gaussian { center: Vec3<T>, width: T, length: T },
    /// `1` inside the axis-aligned box `[lo, hi)`, `0` outside.
    Box { lo: Vec3<T>, hi: Vec3<T>, dim: usize },
}

impl<T: Real> Profile<T> {
    pub fn eval(&self, x: &Vec3<T>) -> T {
        match *self {
            Profile::Uniform => T::one(),
            Profile::Sine { k, phase } => (k[0] * x[0] + k[1] * x[1] + k[2] * x[2] + phase).sin(),
            Profile::Gaussian { center, width, length } => {
                let half = length * T::lit(0.5);
                let mut r2 = T::zero();
                for d in 0..3 {
                    let mut v = x[d] - center[d];
                    v = v - (v / length).round() * length;
                    if v > half {
                        v = v - length;
                    }
                    r2 = r2 + v * v;
                }
                (-r2 / (T::lit(2.0) * width * width)).exp()
            }
            Profile::Box { lo, hi, dim } => {
                if (0..dim).all(|d| x[d] >= lo[d] && x[d] < hi[d]) {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Time modulation of a preset source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Temporal<T> {
    Constant,
    /// `cos(ωt + phase)`.
    Cos { omega: T, phase: T },
    /// Linear from `0` at `t = 0` to `1` at `t = duration`, then constant.
    Ramp { duration: T },
}

impl<T: Real> Temporal<T> {
    pub fn eval(&self, t: T) -> T {
        match *self {
            Temporal::Constant => T::one(),
            Temporal::Cos { omega, phase } => (omega * t + phase).cos(),
            Temporal::Ramp { duration } => (t / duration).max(T::zero()).min(T::one()),
        }
    }

    pub fn rate(&self, t: T) -> T {
        match *self {
            Temporal::Constant => T::zero(),
            Temporal::Cos { omega, phase } => -omega * (omega * t + phase).sin(),
            Temporal::Ramp { duration } => {
                if t >= T::zero() && t < duration {
                    T::one() / duration
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Separable source `amplitude · profile(x) · temporal(t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Preset<T, A> {
    pub profile: Profile<T>,
    pub temporal: Temporal<T>,
    pub amplitude: A,
}

impl<T: Real> VectorField<T> for Preset<T, Vec3<T>> {
    fn value(&self, x: &Vec3<T>, t: T) -> Vec3<T> {
        let s = self.profile.eval(x) * self.temporal.eval(t);
        self.amplitude.map(|a| a * s)
    }

    fn rate(&self, x: &Vec3<T>, t: T) -> Option<Vec3<T>> {
        let s = self.profile.eval(x) * self.temporal.rate(t);
        Some(self.amplitude.map(|a| a * s))
    }
}

impl<T: Real> TensorField<T> for Preset<T, Mat3<T>> {
    fn value(&self, x: &Vec3<T>, t: T) -> Mat3<T> {
        let s = self.profile.eval(x) * self.temporal.eval(t);
        self.amplitude.map(|r| r.map(|a| a * s))
    }

    fn rate(&self, x: &Vec3<T>, t: T) -> Option<Mat3<T>> {
        let s = self.profile.eval(x) * self.temporal.rate(t);
        Some(self.amplitude.map(|r| r.map(|a| a * s)))
    }
}

type VFn<T> = dyn Fn(&Vec3<T>, T) -> Vec3<T> + Send + Sync;
type MFn<T> = dyn Fn(&Vec3<T>, T) -> Mat3<T> + Send + Sync;

/// Vector field from closures.
pub struct FnVector<T> {
    pub value: Box<VFn<T>>,
    pub rate: Option<Box<VFn<T>>>,
}

impl<T: Real> VectorField<T> for FnVector<T> {
    fn value(&self, x: &Vec3<T>, t: T) -> Vec3<T> {
        (self.value)(x, t)
    }

    fn rate(&self, x: &Vec3<T>, t: T) -> Option<Vec3<T>> {
        self.rate.as_ref().map(|r| r(x, t))
    }
}

/// Tensor field from closures.
pub struct FnTensor<T> {
    pub value: Box<MFn<T>>,
    pub rate: Option<Box<MFn<T>>>,
}

impl<T: Real> TensorField<T> for FnTensor<T> {
    fn value(&self, x: &Vec3<T>, t: T) -> Mat3<T> {
        (self.value)(x, t)
    }

    fn rate(&self, x: &Vec3<T>, t: T) -> Option<Mat3<T>> {
        self.rate.as_ref().map(|r| r(x, t))
    }
}

/// Everything that drives the equations of motion besides the initial
/// state. Absent members count as zero.
#[derive(Clone, Default)]
pub struct SourceSet<T> {
    pub f_par: Option<Arc<dyn VectorField<T>>>,
    pub f_perp: Option<Arc<dyn VectorField<T>>>,
    pub beta_p_par: Option<Arc<dyn TensorField<T>>>,
    pub beta_p_perp: Option<Arc<dyn TensorField<T>>>,
    pub v_p_par: Option<Arc<dyn VectorField<T>>>,
    pub v_p_perp: Option<Arc<dyn VectorField<T>>>,
    /// Required whenever a plastic velocity is present.
    pub rate_rule: Option<RateRule>,
}

impl<T> fmt::Debug for SourceSet<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceSet")
            .field("f_par", &self.f_par.is_some())
            .field("f_perp", &self.f_perp.is_some())
            .field("beta_p_par", &self.beta_p_par.is_some())
            .field("beta_p_perp", &self.beta_p_perp.is_some())
            .field("v_p_par", &self.v_p_par.is_some())
            .field("v_p_perp", &self.v_p_perp.is_some())
            .field("rate_rule", &self.rate_rule)
            .finish()
    }
}

impl<T: Real> SourceSet<T> {
    pub fn none() -> Self {
        Self {
            f_par: None,
            f_perp: None,
            beta_p_par: None,
            beta_p_perp: None,
            v_p_par: None,
            v_p_perp: None,
            rate_rule: None,
        }
    }

    pub fn has_plastic(&self) -> bool {
        self.beta_p_par.is_some() || self.beta_p_perp.is_some() || self.v_p_par.is_some() || self.v_p_perp.is_some()
    }

    pub fn has_forces(&self) -> bool {
        self.f_par.is_some() || self.f_perp.is_some()
    }

    pub fn has_plastic_velocity(&self) -> bool {
        self.v_p_par.is_some() || self.v_p_perp.is_some()
    }

    pub fn forces_only(&self) -> Self {
        Self {
            f_par: self.f_par.clone(),
            f_perp: self.f_perp.clone(),
            ..Self::none()
        }
    }
}

/// Sampled vector source: `out[k][p]` for component `k` at point `p`.
pub(crate) fn sample_vector<T: Real>(
    field: Option<&Arc<dyn VectorField<T>>>,
    points: &[Vec3<T>],
    n_comp: usize,
    t: T,
    out: &mut [Vec<T>],
) {
    for o in out.iter_mut() {
        o.iter_mut().for_each(|v| *v = T::zero());
    }
    if let Some(f) = field {
        for (p, x) in points.iter().enumerate() {
            let v = f.value(x, t);
            for k in 0..n_comp {
                // Accumulating onto +0 keeps a zero source from flipping
                // signed zeros in the state.
                out[k][p] = out[k][p] + v[k];
            }
        }
    }
}

pub(crate) fn vector_rate<T: Real>(
    field: &Arc<dyn VectorField<T>>,
    rule: RateRule,
    x: &Vec3<T>,
    t: T,
    dt: T,
) -> Option<Vec3<T>> {
    match rule {
        RateRule::Analytic => field.rate(x, t),
        RateRule::CenteredDifference => {
            let a = field.value(x, t + dt);
            let b = field.value(x, t - dt);
            let inv = T::one() / (T::lit(2.0) * dt);
            let mut r = zero_vec();
            for k in 0..3 {
                r[k] = (a[k] - b[k]) * inv;
            }
            Some(r)
        }
    }
}

/// Rate of a plastic distortion. Falls back to a centered difference when no
/// analytic rate is available, since it only enters energy diagnostics.
pub(crate) fn tensor_rate<T: Real>(
    field: &Arc<dyn TensorField<T>>,
    rule: Option<RateRule>,
    x: &Vec3<T>,
    t: T,
    dt: T,
) -> Mat3<T> {
    if rule != Some(RateRule::CenteredDifference) {
        if let Some(r) = field.rate(x, t) {
            return r;
        }
    }
    let a = field.value(x, t + dt);
    let b = field.value(x, t - dt);
    let inv = T::one() / (T::lit(2.0) * dt);
    let mut r = zero_mat();
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = (a[i][j] - b[i][j]) * inv;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temporal_rates_match_difference() {
        let cases = [
            Temporal::<f64>::Constant,
            Temporal::Cos { omega: 2.0, phase: 0.3 },
            Temporal::Ramp { duration: 4.0 },
        ];
        for tm in cases {
            let t = 1.3;
            let h = 1e-6;
            let fd = (tm.eval(t + h) - tm.eval(t - h)) / (2.0 * h);
            assert!((tm.rate(t) - fd).abs() < 1e-8, "{tm:?}");
        }
    }

    #[test]
    fn profiles() {
        let g = Profile::Gaussian {
            center: [0.1, 0.0, 0.0],
            width: 0.2,
            length: 1.0,
        };
        assert_eq!(g.eval(&[0.1, 0.0, 0.0]), 1.0);
        assert!((g.eval(&[0.9, 0.0, 0.0]) - (-0.04f64 / 0.08).exp()).abs() < 1e-14);
        let b = Profile::Box {
            lo: [0.25, 0.0, 0.0],
            hi: [0.5, 0.0, 0.0],
            dim: 1,
        };
        assert_eq!(b.eval(&[0.3, 0.0, 0.0]), 1.0);
        assert_eq!(b.eval(&[0.5, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn zero_amplitude_samples_positive_zero() {
        let p: Arc<dyn VectorField<f64>> = Arc::new(Preset {
            profile: Profile::Sine {
                k: [1.0, 0.0, 0.0],
                phase: 0.0,
            },
            temporal: Temporal::Constant,
            amplitude: [0.0; 3],
        });
        let pts = vec![[4.0, 0.0, 0.0]];
        let mut out = vec![vec![1.0]];
        sample_vector(Some(&p), &pts, 1, 0.0, &mut out);
        assert_eq!(out[0][0].to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn centered_difference_rule() {
        let p: Arc<dyn VectorField<f64>> = Arc::new(Preset {
            profile: Profile::Uniform,
            temporal: Temporal::Cos { omega: 1.0, phase: 0.0 },
            amplitude: [1.0, 0.0, 0.0],
        });
        let r = vector_rate(&p, RateRule::CenteredDifference, &[0.0; 3], 0.5, 1e-4).unwrap();
        assert!((r[0] + 0.5f64.sin()).abs() < 1e-8);
        let f = Arc::new(FnVector::<f64> {
            value: Box::new(|_, t| [t, 0.0, 0.0]),
            rate: None,
        }) as Arc<dyn VectorField<f64>>;
        assert!(vector_rate(&f, RateRule::Analytic, &[0.0; 3], 0.0, 0.1).is_none());
    }
}
