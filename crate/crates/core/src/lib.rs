//! Determinantal point fields on the line: kernels, Nyström spectra, exact
//! sampling, correlation and density checks, Dyson-type dynamics and capacity
//! estimates.

pub mod capacity;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod kernels;
pub mod qmc;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod spectral;
pub mod statistics;

pub use error::{Error, Result};
pub use geometry::{Interval, Region};
pub use kernels::{construct_kernel, validate_kernel, Kernel, KernelSpec};
pub use rng::RngStream;
pub use sampler::{restrict, sample_dpp, sample_log_gas, sample_poisson, Configuration};
pub use spectral::{nystrom_decompose, SpectralDecomposition};
pub use capacity::{estimate_I_eps, pair_energy, CapacityEstimate, Variant};
pub use dynamics::{collision_probe, integrate_sde, HittingStats, Trajectory};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
