//! Condensed and normal phases of sign-free qubit Hamiltonians.
//!
//! A Hamiltonian `H = ΓK + V` on N qubits is split along a partition of the
//! configurations into a condensed and a normal block. This crate provides
//!
//! * [`configspace`]: configurations, the single-flip hopping graph,
//!   partitions, boundaries and link counts;
//! * [`exactthermo`]: dense spectra of `H`, `H_cond`, `H_norm` with free
//!   energies, thermodynamics, occupation probabilities and the bound checks;
//! * [`eprmc`]: exact path sampling of `⟨n|e^{-Ht}|n⟩` with transit counters;
//! * [`models`]: Grover and Ising-chain models with closed forms;
//! * [`phasediagram`]: critical surfaces `F_cond = F_norm`;
//! * [`modelfile`]: model definition files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod configspace;
pub mod eprmc;
pub mod error;
pub mod exactthermo;
pub mod modelfile;
pub mod models;
pub mod phasediagram;
pub mod scalar;

pub use configspace::{Configuration, Hopping, ModelSpec, Partition, Potential, Side};
pub use error::{Error, Result};
pub use scalar::Real;

/// Exact link statistics.
pub type Rational = num_rational::Ratio<u64>;

pub type ThermoPoint64 = exactthermo::ThermoPoint<f64>;
pub type ThermoPoint32 = exactthermo::ThermoPoint<f32>;
pub type GroverThermo64 = models::GroverThermo<f64>;
pub type GroverFamily64 = phasediagram::GroverFamily<f64>;
pub type CriticalCurve64 = phasediagram::CriticalCurve<f64>;
pub type RootOptions64 = phasediagram::RootOptions<f64>;
