//! Elastodynamics of wave-telegraph type for quasicrystals.
//!
//! Phonon displacements obey a damping-free wave equation, phason
//! displacements a telegraph equation with an anisotropic friction tensor,
//! and the two are coupled through the rank-4 tensor `D`. The crate covers
//!
//! * [`material`]: tensor construction, symmetry checks, energy positivity,
//!   characteristic damping times;
//! * [`constitutive`]: pointwise stresses, momenta, energies and friction;
//! * [`dispersion`]: closed-form scalar dispersion and the anisotropic
//!   plane-wave eigenproblem;
//! * [`solver`]: time integration on periodic 1D/2D grids with plastic
//!   (eigenstrain) sources and energy bookkeeping;
//! * [`limits`]: the undamped-wave and diffusion limit studies;
//! * [`io`] and [`config`]: file formats and run configuration.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

// Index loops mirror the tensor notation.
#![allow(clippy::needless_range_loop)]
// `!(x > 0)` deliberately rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod constitutive;
pub mod dispersion;
pub mod io;
pub mod limits;
pub mod linalg;
pub mod material;
pub mod scalar;
pub mod solver;
pub mod tensor;

pub use scalar::Real;

/// Version of every emitted file schema (CSV headers, snapshot sidecars,
/// material files).
pub const FORMAT_VERSION: u32 = 1;

pub type Dims = material::Dims;
pub type MaterialSpec = material::MaterialSpec<f64>;
pub type PointState = constitutive::PointState<f64>;
pub type StressPair = constitutive::StressPair<f64>;
pub type DispersionRoot = dispersion::scalar::DispersionRoot<f64>;
pub type BranchSet = dispersion::aniso::BranchSet<f64>;
pub type Grid = solver::Grid<f64>;
pub type SimState = solver::SimState<f64>;
pub type SourceSet = solver::SourceSet<f64>;
pub type SolverConfig = solver::SolverConfig<f64>;
