//! Variational computation of the Liouvillian gap of Markovian open spin systems.
//!
//! A density matrix is flattened onto a doubled ("bi-base") spin lattice, where the
//! Lindblad generator becomes an ordinary non-Hermitian operator. A restricted
//! Boltzmann machine parametrizes a traceless trial state that is evolved in real
//! time with stochastic reconfiguration until it settles on the slowest decay
//! modes; the gap is then read off as `-Re <L>`.
//!
//! The crate also ships the oracles used to validate that procedure on small
//! systems: dense exact diagonalization ([`exact`]), the closed-form XXZ results
//! and Bethe-ansatz magnon spectra ([`analytic`]), and the mean-field steady state
//! of the dissipative XYZ model.

pub mod analytic;
pub mod error;
pub mod exact;
pub mod model;
pub mod optimizer;
pub mod rbm;
pub mod sampler;

pub use error::{Error, Result};
pub use model::{BiBaseConfig, Boundary, Lattice, LindbladModel, VectorizedLiouvillian};
pub use optimizer::{OptimizerConfig, RunTrace};
pub use rbm::{AncillaryState, LogDerivativeVariant, RbmParameters, TrialState};
pub use sampler::{ChainConfig, EstimatorBundle};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
