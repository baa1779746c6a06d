#![allow(dead_code)]

use qcwave::constitutive::PointState;
use qcwave::linalg::Dense;
use qcwave::material::{Dims, MaterialSpec};
use qcwave::tensor::{zero_mat, zero_vec, Tensor2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A Aᵀ/n + shift·I` with entries of `A` uniform in `[-1, 1]`.
pub fn random_spd(rng: &mut impl Rng, n: usize, shift: f64) -> Dense<f64> {
    let a = Dense::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    Dense::from_fn(n, |i, j| {
        let s: f64 = (0..n).map(|k| a[(i, k)] * a[(j, k)]).sum();
        s / n as f64 + if i == j { shift } else { 0.0 }
    })
}

pub fn random_dims(rng: &mut impl Rng) -> Dims {
    let n_par = rng.gen_range(1..=3);
    let n_perp = rng.gen_range(1..=3);
    Dims::new(n_par, n_perp).unwrap()
}

fn energy_size(d: Dims) -> usize {
    d.n_par * (d.n_par + 1) / 2 + d.n_par * d.n_perp
}

/// Positive definite material with PD friction.
pub fn random_material(rng: &mut impl Rng, dims: Dims) -> MaterialSpec<f64> {
    let energy = random_spd(rng, energy_size(dims), 0.2);
    let fr = random_spd(rng, dims.n_perp, 0.1);
    let friction = Tensor2::from_fn([dims.n_perp, dims.n_perp], |i, j| fr[(i, j)]);
    let rho = rng.gen_range(0.5..2.0);
    MaterialSpec::from_energy_matrix(dims, rho, &energy, friction).unwrap()
}

pub fn random_point_state(rng: &mut impl Rng, dims: Dims) -> PointState<f64> {
    let mut s = PointState {
        dims,
        beta_par: zero_mat(),
        beta_perp: zero_mat(),
        v_par: zero_vec(),
        v_perp: zero_vec(),
    };
    for i in 0..dims.n_par {
        for j in 0..dims.n_par {
            s.beta_par[i][j] = rng.gen_range(-1.0..1.0);
        }
        s.v_par[i] = rng.gen_range(-1.0..1.0);
    }
    for i in 0..dims.n_perp {
        for j in 0..dims.n_par {
            s.beta_perp[i][j] = rng.gen_range(-1.0..1.0);
        }
        s.v_perp[i] = rng.gen_range(-1.0..1.0);
    }
    s
}
