//! Small fitting and signal utilities for time series produced by runs.

use num_complex::Complex;

/// Least-squares line `y = slope·x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn linear_regression(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (slope * a + intercept);
            r * r
        })
        .sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(LineFit { slope, intercept, r2 })
}

/// Local maxima of `y` on a uniform grid `t`, refined by a parabola through
/// the three neighbouring samples.
pub fn local_maxima(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            let (a, b, c) = (y[i - 1], y[i], y[i + 1]);
            let denom = a - 2.0 * b + c;
            let h = t[i + 1] - t[i];
            if denom.abs() > 0.0 {
                let off = 0.5 * (a - c) / denom;
                out.push((t[i] + off * h, b - 0.25 * (a - c) * off));
            } else {
                out.push((t[i], b));
            }
        }
    }
    out
}

/// Decay time `τ` of an envelope `A e^{−t/τ}` from its samples.
pub fn envelope_decay_time(points: &[(f64, f64)]) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(_, v)| *v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .unzip();
    let fit = linear_regression(&x, &y)?;
    if fit.slope < 0.0 {
        Some(-1.0 / fit.slope)
    } else {
        None
    }
}

/// Two decay rates `θ₁ ≤ θ₂` of `y(t) = a e^{−θ₁t} + b e^{−θ₂t}` sampled at
/// uniform spacing `dt`, from the least-squares linear recurrence
/// `y_{k+2} = c₁ y_{k+1} + c₀ y_k` (Prony's method).
pub fn prony_two_rates(y: &[f64], dt: f64) -> Option<(f64, f64)> {
    if y.len() < 4 {
        return None;
    }
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..y.len() - 2 {
        let (a, b, c) = (y[k + 1], y[k], y[k + 2]);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        r1 += a * c;
        r2 += b * c;
    }
    let det = s11 * s22 - s12 * s12;
    if det == 0.0 {
        return None;
    }
    let c1 = (r1 * s22 - r2 * s12) / det;
    let c0 = (s11 * r2 - s12 * r1) / det;
    let disc = c1 * c1 + 4.0 * c0;
    if disc < 0.0 {
        return None;
    }
    let z1 = 0.5 * (c1 + disc.sqrt());
    let z2 = 0.5 * (c1 - disc.sqrt());
    if z1 <= 0.0 || z2 <= 0.0 {
        return None;
    }
    let (a, b) = (-z1.ln() / dt, -z2.ln() / dt);
    Some((a.min(b), a.max(b)))
}

/// Fit of `y = e^{−t/τ}(a + b t)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalFit {
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    /// `‖y − fit‖₂ / ‖y‖₂`.
    pub relative_residual: f64,
}

fn critical_ls(t: &[f64], y: &[f64], tau: f64) -> (f64, f64, f64) {
    let (mut s00, mut s01, mut s11, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&ti, &yi) in t.iter().zip(y) {
        let e = (-ti / tau).exp();
        let (p, q) = (e, e * ti);
        s00 += p * p;
        s01 += p * q;
        s11 += q * q;
        r0 += p * yi;
        r1 += q * yi;
    }
    let det = s00 * s11 - s01 * s01;
    let a = (r0 * s11 - r1 * s01) / det;
    let b = (s00 * r1 - s01 * r0) / det;
    let res: f64 = t
        .iter()
        .zip(y)
        .map(|(&ti, &yi)| {
            let r = yi - (-ti / tau).exp() * (a + b * ti);
            r * r
        })
        .sum();
    (a, b, res.sqrt())
}

/// Fits `τ` by golden-section search in `[tau_lo, tau_hi]`, with `a`, `b`
/// solved by linear least squares for each trial `τ`.
pub fn fit_critical(t: &[f64], y: &[f64], tau_lo: f64, tau_hi: f64) -> CriticalFit {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let f = |tau: f64| critical_ls(t, y, tau).2;
    // Coarse scan first so the golden section starts in the right basin.
    let m = 64;
    let mut best = (tau_lo, f64::INFINITY);
    for i in 0..=m {
        let tau = tau_lo + (tau_hi - tau_lo) * i as f64 / m as f64;
        let r = f(tau);
        if r < best.1 {
            best = (tau, r);
        }
    }
    let step = (tau_hi - tau_lo) / m as f64;
    let (mut lo, mut hi) = ((best.0 - step).max(tau_lo), (best.0 + step).min(tau_hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let tau = 0.5 * (lo + hi);
    let (a, b, res) = critical_ls(t, y, tau);
    CriticalFit {
        tau,
        a,
        b,
        relative_residual: if norm > 0.0 { res / norm } else { res },
    }
}

/// `‖a − b‖₂ / ‖b‖₂`.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

/// Number of sign flips, ignoring exact zeros.
pub fn sign_changes(y: &[f64]) -> usize {
    let nz: Vec<f64> = y.iter().copied().filter(|v| *v != 0.0).collect();
    nz.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

/// Continuous phase of a complex sequence.
pub fn unwrapped_phase(z: &[Complex<f64>]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(z.len());
    let two_pi = 2.0 * std::f64::consts::PI;
    for c in z {
        let raw = c.arg();
        let v = match out.last() {
            Some(&prev) => raw + two_pi * ((prev - raw) / two_pi).round(),
            None => raw,
        };
        out.push(v);
    }
    out
}

/// Convergence order from errors at step sizes `h` and `h/ratio`.
pub fn observed_order(err_coarse: f64, err_fine: f64, ratio: f64) -> f64 {
    (err_coarse / err_fine).ln() / ratio.ln()
}
