//! Sparse random factor-graph models with prescribed degree distributions.
//!
//! The crate covers four layers:
//!
//! * [`sampling`]: degree sequences, the pairing (configuration) model, and the
//!   null, planted (teacher-student) and Nishimori graph ensembles, including the
//!   pruned variant with cavities and pinning.
//! * [`exact`]: brute-force oracles for desk-sized instances (partition
//!   functions, Boltzmann samples, ensemble averages, the Nishimori identity,
//!   mutual-information estimators) and instance-level belief propagation.
//! * [`bethe`]: the Bethe free-entropy functional over distributions on the
//!   spin simplex, population dynamics, the annealed free entropy and the
//!   resulting mutual-information and threshold estimates.
//! * [`assumptions`] and [`models`]: executable model hypotheses and the
//!   concrete LDGM, stochastic block model / Potts and diluted k-spin families.
//!
//! Everything here is `no_std` + `alloc`. Randomised routines take a `u64` seed
//! and derive counter-split substreams (see [`rng`]), so results do not depend
//! on how a caller distributes work across threads.
#![no_std]

extern crate alloc;

pub mod assumptions;
pub mod bethe;
pub mod degree;
pub mod error;
pub mod exact;
pub mod family;
pub mod graph;
pub mod math;
pub mod model;
pub mod models;
pub mod rng;
pub mod sampling;
pub mod stats;

pub use degree::DegreeSpec;
pub use error::{Error, Result};
pub use family::{ArityFamily, WeightFamily, WeightTable};
pub use graph::{Assignment, DegreeSequence, Factor, FactorGraph, Pin};
pub use model::{ModelKind, ModelSpec};
