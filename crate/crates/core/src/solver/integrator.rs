//! Kick–drift–kick time stepping with a trapezoidal friction solve.
//!
//! One step of length `h` from `(u, w)` at `t`:
//!
//! ```text
//! kick   (ρ + h/4 F) w⊥' = (ρ − h/4 F) w⊥ + h/2 G⊥(u, t)      w∥' = w∥ + h/(2ρ) G∥(u, t)
//! drift  u ← u + h w'
//! kick   same as above with G(u, t + h)
//! ```
//!
//! where `G` collects the divergence of the elastic stress, body forces,
//! `ρ ∂t vᴾ` and (phasons) `F vᴾ⊥`. In the undamped case this is
//! velocity Verlet; the friction solve is unconditionally stable.

use crate::constitutive::stresses_unchecked;
use crate::linalg::{self, Dense};
use crate::material::MaterialSpec;
use crate::scalar::Real;
use crate::tensor::{ddot, zero_mat, Mat3, Tensor2, Vec3};

use super::sources::{sample_vector, tensor_rate, vector_rate, RateRule, SourceSet};
use super::spatial::SpatialOps;
use super::state::SimState;
use super::{Scheme, SolverConfig, SolverError};

/// Fields and integrals derived from `(u, t)`.
#[derive(Clone, Debug)]
struct Eval<T> {
    force_par: Vec<Vec<T>>,
    force_perp: Vec<Vec<T>>,
    f_par: Vec<Vec<T>>,
    f_perp: Vec<Vec<T>>,
    vp_par: Vec<Vec<T>>,
    vp_perp: Vec<Vec<T>>,
    beta_par: Vec<Mat3<T>>,
    beta_perp: Vec<Mat3<T>>,
    sigma_par: Vec<Mat3<T>>,
    sigma_perp: Vec<Mat3<T>>,
    elastic: T,
    /// `∫ σ:(∇vᴾ − ∂t βᴾ)`.
    plastic_power: T,
}

/// Energy bookkeeping at the current step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyReport<T> {
    pub step: usize,
    pub t: T,
    pub kinetic: T,
    pub elastic: T,
    pub dissipated_cumulative: T,
    pub work_cumulative: T,
    /// `|Δ(T+W) + dissipated − work|` relative to the energy scale of the run.
    pub balance_residual: T,
    /// Staggered energy `½ w½ᵀM₀w½ + ½ Σ σ(uₙ₋₁):β(uₙ)`; non-increasing
    /// step to step for unforced runs under the semi-implicit scheme.
    pub discrete_energy: T,
}

pub struct Integrator<'a, T: Real> {
    mat: &'a MaterialSpec<T>,
    sources: &'a SourceSet<T>,
    ops: SpatialOps<T>,
    scheme: Scheme,
    dt: T,
    points: Vec<Vec3<T>>,
    /// `(ρI + h/4 F)⁻¹`
    a_inv: Tensor2<T>,
    /// `ρI − h/4 F`
    b: Tensor2<T>,
    /// `ρI + h²F²/(16ρ)`
    m0: Tensor2<T>,
    cache: Option<Eval<T>>,
    t0: T,
    step: usize,
    dissipated: T,
    work: T,
    last_rates: Option<(T, T)>,
    initial_total: Option<T>,
    energy_scale: T,
    discrete_energy: T,
}

fn mat_tensor<T: Real>(n: usize, f: impl Fn(usize, usize) -> T) -> Tensor2<T> {
    Tensor2::from_fn([n, n], f)
}

impl<'a, T: Real> Integrator<'a, T> {
    pub fn new(
        mat: &'a MaterialSpec<T>,
        grid: super::Grid<T>,
        sources: &'a SourceSet<T>,
        cfg: &SolverConfig<T>,
    ) -> Result<Self, SolverError> {
        cfg.validate_basic()?;
        if grid.dim() > mat.dims().n_par {
            return Err(SolverError::InvalidConfig(format!(
                "grid dimension {} exceeds the material's physical dimension {}",
                grid.dim(),
                mat.dims().n_par
            )));
        }
        if cfg.scheme == Scheme::Explicit {
            let bound = super::stability_bound(mat, &grid, cfg.spatial, cfg.scheme);
            if cfg.dt > bound {
                return Err(SolverError::UnstableTimeStep {
                    dt: cfg.dt.to_f64_lossy(),
                    bound: bound.to_f64_lossy(),
                });
            }
        }
        if sources.has_plastic_velocity() && sources.rate_rule.is_none() {
            return Err(SolverError::MissingSourceDerivative {
                field: if sources.v_p_par.is_some() { "v_p_par" } else { "v_p_perp" },
            });
        }
        let r = mat.dims().n_perp;
        let rho = mat.rho();
        let h = cfg.dt;
        let fr = mat.friction();
        let q = h * T::lit(0.25);
        let eye = |i: usize, j: usize| if i == j { T::one() } else { T::zero() };
        let a = Dense::from_fn(r, |i, j| rho * eye(i, j) + q * fr.get(i, j));
        let a_inv_d = linalg::inverse(&a).map_err(|e| SolverError::InvalidConfig(format!("friction solve: {e}")))?;
        let a_inv = mat_tensor(r, |i, j| a_inv_d[(i, j)]);
        let b = mat_tensor(r, |i, j| rho * eye(i, j) - q * fr.get(i, j));
        let m0 = mat_tensor(r, |i, j| {
            let f2: T = (0..r).map(|k| fr.get(i, k) * fr.get(k, j)).sum();
            rho * eye(i, j) + h * h * f2 / (T::lit(16.0) * rho)
        });
        let points = (0..grid.n_points()).map(|p| grid.coords(p)).collect();
        Ok(Self {
            mat,
            sources,
            ops: SpatialOps::new(grid, cfg.spatial),
            scheme: cfg.scheme,
            dt: cfg.dt,
            points,
            a_inv,
            b,
            m0,
            cache: None,
            t0: T::zero(),
            step: 0,
            dissipated: T::zero(),
            work: T::zero(),
            last_rates: None,
            initial_total: None,
            energy_scale: T::zero(),
            discrete_energy: T::nan(),
        })
    }

    pub fn ops(&self) -> &SpatialOps<T> {
        &self.ops
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    fn rate_rule(&self) -> RateRule {
        self.sources.rate_rule.unwrap_or(RateRule::Analytic)
    }

    fn evaluate(&self, u_par: &[Vec<T>], u_perp: &[Vec<T>], t: T) -> Result<Eval<T>, SolverError> {
        let mat = self.mat;
        let dims = mat.dims();
        let (np_, nr) = (dims.n_par, dims.n_perp);
        let grid = *self.ops.grid();
        let dim = grid.dim();
        let n = grid.n_points();
        let dv = grid.cell_volume();
        let src = self.sources;

        let mut beta_par = vec![zero_mat::<T>(); n];
        let mut beta_perp = vec![zero_mat::<T>(); n];
        for (k, u) in u_par.iter().enumerate() {
            for (l, g) in self.ops.gradient(u).into_iter().enumerate() {
                for p in 0..n {
                    beta_par[p][k][l] = g[p];
                }
            }
        }
        for (k, u) in u_perp.iter().enumerate() {
            for (l, g) in self.ops.gradient(u).into_iter().enumerate() {
                for p in 0..n {
                    beta_perp[p][k][l] = g[p];
                }
            }
        }
        // Plastic distortions; a +0 accumulator keeps zero sources bit-neutral.
        let bp_par: Vec<Mat3<T>> = sample_tensor(src.beta_p_par.as_deref(), &self.points, t);
        let bp_perp: Vec<Mat3<T>> = sample_tensor(src.beta_p_perp.as_deref(), &self.points, t);
        for p in 0..n {
            for k in 0..np_ {
                for l in 0..np_ {
                    beta_par[p][k][l] = beta_par[p][k][l] - bp_par[p][k][l];
                }
            }
            for k in 0..nr {
                for l in 0..np_ {
                    beta_perp[p][k][l] = beta_perp[p][k][l] - bp_perp[p][k][l];
                }
            }
        }

        let mut sigma_par = Vec::with_capacity(n);
        let mut sigma_perp = Vec::with_capacity(n);
        let mut elastic = T::zero();
        for p in 0..n {
            let s = stresses_unchecked(&beta_par[p], &beta_perp[p], mat);
            elastic = elastic
                + ddot(&s.sigma_par, &beta_par[p], np_, np_)
                + ddot(&s.sigma_perp, &beta_perp[p], nr, np_);
            sigma_par.push(s.sigma_par);
            sigma_perp.push(s.sigma_perp);
        }
        elastic = elastic * T::lit(0.5) * dv;

        let div_rows = |sig: &[Mat3<T>], i: usize| -> Vec<T> {
            let fluxes: Vec<Vec<T>> = (0..dim).map(|j| sig.iter().map(|s| s[i][j]).collect()).collect();
            let refs: Vec<&[T]> = fluxes.iter().map(|v| v.as_slice()).collect();
            self.ops.divergence(&refs)
        };

        let mut f_par = vec![vec![T::zero(); n]; np_];
        let mut f_perp = vec![vec![T::zero(); n]; nr];
        sample_vector(src.f_par.as_ref(), &self.points, np_, t, &mut f_par);
        sample_vector(src.f_perp.as_ref(), &self.points, nr, t, &mut f_perp);
        let mut vp_par = vec![vec![T::zero(); n]; np_];
        let mut vp_perp = vec![vec![T::zero(); n]; nr];
        sample_vector(src.v_p_par.as_ref(), &self.points, np_, t, &mut vp_par);
        sample_vector(src.v_p_perp.as_ref(), &self.points, nr, t, &mut vp_perp);
        let mut vdot_par = vec![vec![T::zero(); n]; np_];
        let mut vdot_perp = vec![vec![T::zero(); n]; nr];
        let rule = self.rate_rule();
        for (field, out, name, nc) in [
            (src.v_p_par.as_ref(), &mut vdot_par, "v_p_par", np_),
            (src.v_p_perp.as_ref(), &mut vdot_perp, "v_p_perp", nr),
        ] {
            if let Some(f) = field {
                for (p, x) in self.points.iter().enumerate() {
                    let r = vector_rate(f, rule, x, t, self.dt).ok_or(SolverError::MissingSourceDerivative { field: name })?;
                    for k in 0..nc {
                        out[k][p] = out[k][p] + r[k];
                    }
                }
            }
        }

        let rho = mat.rho();
        let fr = mat.friction();
        let mut force_par = Vec::with_capacity(np_);
        for i in 0..np_ {
            let mut d = div_rows(&sigma_par, i);
            for p in 0..n {
                d[p] = d[p] + f_par[i][p] + rho * vdot_par[i][p];
            }
            force_par.push(d);
        }
        let mut force_perp = Vec::with_capacity(nr);
        for i in 0..nr {
            let mut d = div_rows(&sigma_perp, i);
            for p in 0..n {
                let fv: T = (0..nr).fold(T::zero(), |acc, j| acc + fr.get(i, j) * vp_perp[j][p]);
                d[p] = d[p] + f_perp[i][p] + rho * vdot_perp[i][p] + fv;
            }
            force_perp.push(d);
        }

        let plastic_power = if src.has_plastic() {
            self.plastic_power(&sigma_par, &sigma_perp, &vp_par, &vp_perp, t)
        } else {
            T::zero()
        };

        Ok(Eval {
            force_par,
            force_perp,
            f_par,
            f_perp,
            vp_par,
            vp_perp,
            beta_par,
            beta_perp,
            sigma_par,
            sigma_perp,
            elastic,
            plastic_power,
        })
    }

    fn plastic_power(
        &self,
        sigma_par: &[Mat3<T>],
        sigma_perp: &[Mat3<T>],
        vp_par: &[Vec<T>],
        vp_perp: &[Vec<T>],
        t: T,
    ) -> T {
        let dims = self.mat.dims();
        let n = self.points.len();
        let mut rate_par = vec![zero_mat::<T>(); n];
        let mut rate_perp = vec![zero_mat::<T>(); n];
        for (k, v) in vp_par.iter().enumerate() {
            for (l, g) in self.ops.gradient(v).into_iter().enumerate() {
                for p in 0..n {
                    rate_par[p][k][l] = g[p];
                }
            }
        }
        for (k, v) in vp_perp.iter().enumerate() {
            for (l, g) in self.ops.gradient(v).into_iter().enumerate() {
                for p in 0..n {
                    rate_perp[p][k][l] = g[p];
                }
            }
        }
        for (field, out) in [
            (self.sources.beta_p_par.as_ref(), &mut rate_par),
            (self.sources.beta_p_perp.as_ref(), &mut rate_perp),
        ] {
            if let Some(f) = field {
                for (p, x) in self.points.iter().enumerate() {
                    let r = tensor_rate(f, self.sources.rate_rule, x, t, self.dt);
                    for i in 0..3 {
                        for j in 0..3 {
                            out[p][i][j] = out[p][i][j] - r[i][j];
                        }
                    }
                }
            }
        }
        let s: T = (0..n)
            .map(|p| {
                ddot(&sigma_par[p], &rate_par[p], dims.n_par, dims.n_par)
                    + ddot(&sigma_perp[p], &rate_perp[p], dims.n_perp, dims.n_par)
            })
            .sum();
        s * self.ops.grid().cell_volume()
    }

    fn kick(&self, state: &mut SimState<T>, ev: &Eval<T>) {
        let rho = self.mat.rho();
        let half = self.dt * T::lit(0.5);
        let c = half / rho;
        for (w, f) in state.w_par.iter_mut().zip(&ev.force_par) {
            for (wp, fp) in w.iter_mut().zip(f) {
                *wp = *wp + c * *fp;
            }
        }
        let r = self.mat.dims().n_perp;
        let n = self.points.len();
        let fr = self.mat.friction();
        for p in 0..n {
            let mut w = [T::zero(); 3];
            let mut g = [T::zero(); 3];
            for i in 0..r {
                w[i] = state.w_perp[i][p];
                g[i] = ev.force_perp[i][p];
            }
            let new = match self.scheme {
                Scheme::SemiImplicit => {
                    let bw = self.b.apply(&w);
                    let mut rhs = [T::zero(); 3];
                    for i in 0..r {
                        rhs[i] = bw[i] + half * g[i];
                    }
                    self.a_inv.apply(&rhs)
                }
                Scheme::Explicit => {
                    // Heun: explicit trapezoid on the friction term.
                    let fw = fr.apply(&w);
                    let mut pred = [T::zero(); 3];
                    for i in 0..r {
                        pred[i] = w[i] + c * (g[i] - fw[i]);
                    }
                    let fp = fr.apply(&pred);
                    let mut out = [T::zero(); 3];
                    for i in 0..r {
                        out[i] = w[i] + c * (g[i] - T::lit(0.5) * (fw[i] + fp[i]));
                    }
                    out
                }
            };
            for i in 0..r {
                state.w_perp[i][p] = new[i];
            }
        }
    }

    /// `(dissipation rate, work rate)` at a state whose derived fields are `ev`.
    fn rates(&self, state: &SimState<T>, ev: &Eval<T>) -> (T, T) {
        let dims = self.mat.dims();
        let n = self.points.len();
        let fr = self.mat.friction();
        let mut diss = T::zero();
        let mut work = T::zero();
        for p in 0..n {
            let mut v = [T::zero(); 3];
            for i in 0..dims.n_perp {
                v[i] = state.w_perp[i][p] - ev.vp_perp[i][p];
                work = work + ev.f_perp[i][p] * v[i];
            }
            diss = diss + fr.quad_form(&v);
            for i in 0..dims.n_par {
                work = work + ev.f_par[i][p] * (state.w_par[i][p] - ev.vp_par[i][p]);
            }
        }
        let dv = self.ops.grid().cell_volume();
        (diss * dv, work * dv + ev.plastic_power)
    }

    fn kinetic(&self, state: &SimState<T>, ev: &Eval<T>) -> T {
        let mut s = T::zero();
        for (w, vp) in state.w_par.iter().zip(&ev.vp_par).chain(state.w_perp.iter().zip(&ev.vp_perp)) {
            for (a, b) in w.iter().zip(vp) {
                let v = *a - *b;
                s = s + v * v;
            }
        }
        T::lit(0.5) * self.mat.rho() * s * self.ops.grid().cell_volume()
    }

    fn ensure_cache(&mut self, state: &SimState<T>) -> Result<(), SolverError> {
        if self.cache.is_none() {
            state.check_shape(self.mat.dims(), self.ops.grid())?;
            let ev = self.evaluate(&state.u_par, &state.u_perp, state.t)?;
            self.t0 = state.t;
            let total = self.kinetic(state, &ev) + ev.elastic;
            self.initial_total = Some(total);
            self.energy_scale = self.energy_scale.max(total.abs());
            self.last_rates = Some(self.rates(state, &ev));
            self.discrete_energy = self.staggered_kinetic(state) + ev.elastic;
            self.cache = Some(ev);
        }
        Ok(())
    }

    fn staggered_kinetic(&self, state: &SimState<T>) -> T {
        let r = self.mat.dims().n_perp;
        let n = self.points.len();
        let rho = self.mat.rho();
        let mut s = T::zero();
        for w in &state.w_par {
            for v in w {
                s = s + rho * *v * *v;
            }
        }
        for p in 0..n {
            let mut w = [T::zero(); 3];
            for i in 0..r {
                w[i] = state.w_perp[i][p];
            }
            s = s + self.m0.quad_form(&w);
        }
        T::lit(0.5) * s * self.ops.grid().cell_volume()
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &mut SimState<T>) -> Result<(), SolverError> {
        self.ensure_cache(state)?;
        let old = self.cache.take().expect("cache primed");
        self.kick(state, &old);
        let kin_half = self.staggered_kinetic(state);
        let h = self.dt;
        for (u, w) in state
            .u_par
            .iter_mut()
            .zip(&state.w_par)
            .chain(state.u_perp.iter_mut().zip(&state.w_perp))
        {
            for (up, wp) in u.iter_mut().zip(w) {
                *up = *up + h * *wp;
            }
        }
        self.step += 1;
        state.t = self.t0 + T::from_usize_lossy(self.step) * h;
        let new = self.evaluate(&state.u_par, &state.u_perp, state.t)?;
        let dims = self.mat.dims();
        let cross: T = (0..self.points.len())
            .map(|p| {
                ddot(&old.sigma_par[p], &new.beta_par[p], dims.n_par, dims.n_par)
                    + ddot(&old.sigma_perp[p], &new.beta_perp[p], dims.n_perp, dims.n_par)
            })
            .sum();
        self.discrete_energy = kin_half + T::lit(0.5) * cross * self.ops.grid().cell_volume();
        self.kick(state, &new);
        if !state.is_finite() {
            return Err(SolverError::NumericalBlowup { step: self.step });
        }
        let (d1, w1) = self.rates(state, &new);
        let (d0, w0) = self.last_rates.unwrap_or((d1, w1));
        let half_h = h * T::lit(0.5);
        self.dissipated = self.dissipated + half_h * (d0 + d1);
        self.work = self.work + half_h * (w0 + w1);
        self.last_rates = Some((d1, w1));
        let total = self.kinetic(state, &new) + new.elastic;
        self.energy_scale = self.energy_scale.max(total.abs()).max(self.work.abs());
        self.cache = Some(new);
        Ok(())
    }

    /// Energy bookkeeping at the state last passed to [`Integrator::step`]
    /// (or the initial state before any step).
    pub fn energy_report(&mut self, state: &SimState<T>) -> Result<EnergyReport<T>, SolverError> {
        self.ensure_cache(state)?;
        let ev = self.cache.as_ref().expect("cache primed");
        let kinetic = self.kinetic(state, ev);
        let elastic = ev.elastic;
        let e0 = self.initial_total.unwrap_or(T::zero());
        let defect = (kinetic + elastic - e0 + self.dissipated - self.work).abs();
        let scale = self.energy_scale;
        let balance_residual = if scale > T::zero() { defect / scale } else { defect };
        Ok(EnergyReport {
            step: self.step,
            t: state.t,
            kinetic,
            elastic,
            dissipated_cumulative: self.dissipated,
            work_cumulative: self.work,
            balance_residual,
            discrete_energy: self.discrete_energy,
        })
    }

    /// `max |div σ + f|` over the grid: the residual of static equilibrium
    /// (plastic-velocity terms included when present).
    pub fn equilibrium_residual(&self, state: &SimState<T>) -> Result<T, SolverError> {
        let ev = self.evaluate(&state.u_par, &state.u_perp, state.t)?;
        Ok(ev
            .force_par
            .iter()
            .chain(&ev.force_perp)
            .flat_map(|f| f.iter())
            .fold(T::zero(), |m, v| m.max(v.abs())))
    }
}

fn sample_tensor<T: Real>(
    field: Option<&dyn super::sources::TensorField<T>>,
    points: &[Vec3<T>],
    t: T,
) -> Vec<Mat3<T>> {
    let mut out = vec![zero_mat::<T>(); points.len()];
    if let Some(f) = field {
        for (p, x) in points.iter().enumerate() {
            let v = f.value(x, t);
            for i in 0..3 {
                for j in 0..3 {
                    out[p][i][j] = out[p][i][j] + v[i][j];
                }
            }
        }
    }
    out
}
