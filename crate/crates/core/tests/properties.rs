mod common;

use num_complex::Complex;
use proptest::prelude::*;
use qcwave::constitutive::{
    dissipative_function, elastic_energy_unchecked, energy_density, friction_force, stresses, PointState,
};
use qcwave::dispersion::scalar::telegraph_residual;
use qcwave::dispersion::{classify_regime, critical_thresholds, solve_branches, sweep, telegraph_dispersion, Regime};
use qcwave::io::{material_to_json, parse_material, MaterialFile};
use qcwave::solver::{max_wave_speed, run, stability_bound, Grid, Scheme, SimState, SolverConfig, SourceSet, Spatial};
use qcwave::tensor::dot;
use rand::Rng;

fn combine(a: &PointState<f64>, b: &PointState<f64>, x: f64, y: f64) -> PointState<f64> {
    let mut s = *a;
    for i in 0..3 {
        for j in 0..3 {
            s.beta_par[i][j] = x * a.beta_par[i][j] + y * b.beta_par[i][j];
            s.beta_perp[i][j] = x * a.beta_perp[i][j] + y * b.beta_perp[i][j];
        }
        s.v_par[i] = x * a.v_par[i] + y * b.v_par[i];
        s.v_perp[i] = x * a.v_perp[i] + y * b.v_perp[i];
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stresses_are_linear(seed in any::<u64>(), x in -3.0f64..3.0, y in -3.0f64..3.0) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let a = common::random_point_state(&mut rng, dims);
        let b = common::random_point_state(&mut rng, dims);
        let sa = stresses(&a, &mat).unwrap();
        let sb = stresses(&b, &mat).unwrap();
        let sc = stresses(&combine(&a, &b, x, y), &mat).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = x * sa.sigma_par[i][j] + y * sb.sigma_par[i][j];
                prop_assert!((sc.sigma_par[i][j] - want).abs() <= 1e-12 * (1.0 + want.abs()));
                let want = x * sa.sigma_perp[i][j] + y * sb.sigma_perp[i][j];
                prop_assert!((sc.sigma_perp[i][j] - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }
    }

    #[test]
    fn stresses_are_energy_gradients(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let s = common::random_point_state(&mut rng, dims);
        let sig = stresses(&s, &mat).unwrap();
        let h = 1e-4;
        let w = |p: &PointState<f64>| elastic_energy_unchecked(&p.beta_par, &p.beta_perp, &mat);
        for i in 0..dims.n_par {
            for j in 0..dims.n_par {
                let (mut up, mut dn) = (s, s);
                up.beta_par[i][j] += h;
                dn.beta_par[i][j] -= h;
                let fd = (w(&up) - w(&dn)) / (2.0 * h);
                prop_assert!((fd - sig.sigma_par[i][j]).abs() <= 1e-8 * (1.0 + fd.abs()));
            }
        }
        for i in 0..dims.n_perp {
            for j in 0..dims.n_par {
                let (mut up, mut dn) = (s, s);
                up.beta_perp[i][j] += h;
                dn.beta_perp[i][j] -= h;
                let fd = (w(&up) - w(&dn)) / (2.0 * h);
                prop_assert!((fd - sig.sigma_perp[i][j]).abs() <= 1e-8 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn phonon_stress_is_symmetric(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let s = common::random_point_state(&mut rng, dims);
        let sig = stresses(&s, &mat).unwrap();
        for i in 0..dims.n_par {
            for j in 0..i {
                prop_assert!((sig.sigma_par[i][j] - sig.sigma_par[j][i]).abs() <= 1e-12 * (1.0 + sig.sigma_par[i][j].abs()));
            }
        }
    }

    #[test]
    fn elastic_energy_is_nonnegative(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let s = common::random_point_state(&mut rng, dims);
        let e = energy_density(&s, &mat).unwrap();
        prop_assert!(e.elastic >= -1e-12);
        prop_assert!(e.kinetic >= 0.0);
        prop_assert!(e.dissipation_rate >= -1e-12);
    }

    #[test]
    fn friction_power_is_twice_dissipation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let s = common::random_point_state(&mut rng, dims);
        let f = friction_force(&s.v_perp, &mat);
        let power = dot(&f, &s.v_perp, dims.n_perp);
        let r = dissipative_function(&s.v_perp, &mat);
        prop_assert!((power + 2.0 * r).abs() <= 1e-13 * (1.0 + r.abs()));
        prop_assert!(power <= 1e-15);
    }

    #[test]
    fn plane_wave_roots_are_passive_and_paired(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let q: Vec<f64> = (0..dims.n_par).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let set = solve_branches(&mat, &q).unwrap();
        prop_assert_eq!(set.len(), 2 * (dims.n_par + dims.n_perp));
        for r in &set.residuals {
            prop_assert!(*r <= 1e-8);
        }
        prop_assert!(set.max_imag() <= 1e-10);
        // Real coefficients: ω and −conj(ω) are both roots.
        let scale = set.roots.iter().map(|r| r.norm()).fold(1.0f64, f64::max);
        for r in &set.roots {
            let mirror = Complex::new(-r.re, r.im);
            let d = set.roots.iter().map(|s| (s - mirror).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-6 * scale, "missing mirror of {r}: {d}");
        }
    }

    #[test]
    fn sweep_branches_are_continuous(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let points = 200;
        let q_max = 3.0;
        let dq = q_max / (points - 1) as f64;
        let path: Vec<Vec<f64>> = (0..points)
            .map(|i| {
                let mut q = vec![0.0; dims.n_par];
                q[0] = i as f64 * dq;
                q
            })
            .collect();
        let table = sweep(&mat, &path).unwrap();
        prop_assert!(table.failures.is_empty());
        let c = max_wave_speed(&mat, 1);
        let fmax = mat.friction().max_abs() * dims.n_perp as f64;
        // Smooth branches move by about c·Δq; near a branch point by
        // √(c Δq F/ρ).
        let bound = 4.0 * (c * dq + (c * dq * fmax / mat.rho()).sqrt()) + 1e-9;
        prop_assert!(table.max_jump() <= bound, "jump {} > {}", table.max_jump(), bound);
    }

    #[test]
    fn material_json_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let text = material_to_json(&mat);
        let back = parse_material(&text).unwrap();
        prop_assert_eq!(MaterialFile::from_material(&back), MaterialFile::from_material(&mat));
        prop_assert_eq!(material_to_json(&back), text);
    }

    #[test]
    fn telegraph_roots_solve_dispersion(q in 0.0f64..10.0, c in 0.1f64..5.0, tau in 0.05f64..20.0) {
        let (a, b) = telegraph_dispersion(q, c, tau).unwrap();
        let scale = (c * q).powi(2) + 1.0 / (tau * tau);
        for r in [a, b] {
            prop_assert!(telegraph_residual(r.omega, q, c, tau) <= 1e-12 * scale);
            prop_assert!(r.omega.im <= 0.0);
            prop_assert_eq!(r.regime, a.regime);
        }
        let q0 = critical_thresholds(c, tau).unwrap().q0;
        let regime = classify_regime(q, c, tau).unwrap();
        if q > q0 * (1.0 + 1e-6) {
            prop_assert_eq!(regime, Regime::Propagating);
            prop_assert!((a.omega.im + 1.0 / tau).abs() <= 1e-12 / tau);
            prop_assert!(a.phase_velocity.unwrap() < c);
        } else if q < q0 * (1.0 - 1e-6) {
            prop_assert_eq!(regime, Regime::Standing);
            prop_assert_eq!(a.omega.re, 0.0);
            // Product of the two decay rates is c²q².
            let prod = a.omega.im * b.omega.im;
            prop_assert!((prod - (c * q).powi(2)).abs() <= 1e-12 * scale);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn discrete_energy_never_increases(seed in any::<u64>(), frac in 0.1f64..1.0) {
        let mut rng = common::rng(seed);
        let dims = common::random_dims(&mut rng);
        let mat = common::random_material(&mut rng, dims);
        let grid = Grid::new(1, 32, 2.0).unwrap();
        let mut s = SimState::zeros(dims, &grid);
        for f in s.u_par.iter_mut().chain(&mut s.u_perp).chain(&mut s.w_par).chain(&mut s.w_perp) {
            for v in f.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        let bound = stability_bound(&mat, &grid, Spatial::Spectral, Scheme::SemiImplicit);
        let cfg = SolverConfig::new(frac * bound, 60);
        let out = run(&s, &mat, &grid, &SourceSet::none(), &cfg).unwrap();
        let scale = out.energy[1].discrete_energy.abs().max(1e-300);
        for w in out.energy[1..].windows(2) {
            prop_assert!(
                w[1].discrete_energy <= w[0].discrete_energy + 1e-12 * scale,
                "step {}: {} -> {}", w[1].step, w[0].discrete_energy, w[1].discrete_energy
            );
        }
    }
}
