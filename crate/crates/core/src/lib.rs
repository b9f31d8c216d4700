//! Gaussian covariance dynamics of a gain/loss waveguide pair with
//! squeezing: closed-form evolution, entanglement and intensity
//! observables, spectral regime analysis and a Monte Carlo oracle.

// Index loops mirror the matrix formulas; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod propagator;
pub mod real;
pub mod spectrum;
pub mod stochastic_oracle;

pub use error::{Error, Result};
pub use linalg::{Mat4, Vec4};
pub use model::{
    build_diffusion_matrix, build_dynamic_matrix, initial_state, CoherentInput, DiffusionMatrix, DynamicMatrix,
    GaussianState, Placement, SystemConfig,
};
pub use num_complex::Complex64;
pub use observables::{
    correlation_function, detect_esd, log_negativity, observe, observe_series, photon_number, physicality_margin,
    EntanglementReport, EsdReport, Mode, Observation,
};
pub use propagator::{
    evolve_covariance, evolve_covariance_ode, evolve_series, evolve_series_direct, matrix_exp, state_at,
    EvolutionRecord, TimeGrid,
};
pub use real::{Extended, Real};
pub use spectrum::{classify_regime, eigenvalues, exceptional_scan, RegimeClass, RegimeLabel};
pub use stochastic_oracle::{sample_trajectories, McEstimate, McScheme, McSettings};
