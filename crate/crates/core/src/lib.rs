//! A desk-scale laboratory for objective-collapse dynamics: exact unitary
//! evolution interleaved with Born-rule collapses, and the quantitative
//! models built on that alternation.

pub mod blackhole;
pub mod classical;
pub mod error;
pub mod gas;
pub mod info;
pub mod numerics;
pub mod perturbation;
pub mod quantum;
pub mod rng;
pub mod scheduler;
pub mod screen;
pub mod spectral;
pub mod table;

pub use error::{Error, Result};
pub use numerics::{Complex, Real};

/// Double-precision aliases for the common types.
pub type StateVector = quantum::StateVector<f64>;
pub type DensityMatrix = quantum::DensityMatrix<f64>;
pub type HermitianOperator = quantum::HermitianOperator<f64>;
pub type Basis = quantum::Basis<f64>;
pub type PhaseSpacePoint = classical::PhaseSpacePoint<f64>;
pub type HamiltonianSystem = classical::HamiltonianSystem<f64>;
pub type EnergyEnsemble = gas::EnergyEnsemble<f64>;
pub type JointDistribution = info::JointDistribution<f64>;
pub type BlackHoleParams = blackhole::BlackHoleParams<f64>;
