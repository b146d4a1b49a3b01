//! Quantum iterated function systems on density matrices: invariant states,
//! entropy, the Ruelle operator and pressure, classical Markov embeddings,
//! Holevo quantities and Monte-Carlo estimators.

pub mod error;
pub mod holevo;
pub mod markov;
pub mod matcore;
pub mod qifs;
pub mod random;
pub mod sim;
pub mod solvers;
pub mod thermo;

pub use error::{QifsError, Result};
pub use holevo::{Ensemble, Povm};
pub use markov::EmbeddingKind;
pub use matcore::{ComplexMatrix, ComplexVector, DensityMatrix, DistanceKind, EntropyScalar, Tolerances};
pub use qifs::{KrausFamily, LinearFunctional, QifsModel, Word};
pub use sim::{EmpiricalMeasure, SimConfig, Trajectory};
pub use solvers::{EigenResult, FixedPoint, SolveConfig};
pub use thermo::{PressureForm, PressureReport, StochasticMatrix};

pub use nalgebra;
pub use num_complex;
