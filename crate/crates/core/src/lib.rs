//! Constrained gentlest ascent dynamics for saddle points of prescribed
//! Morse index, with a sine-pseudospectral Gross-Pitaevskii application.

pub mod analytic;
pub mod bec;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod fieldio;
pub mod manifold;
pub mod spectral;
pub mod toy;

pub use analytic::{ModeIndex, PotentialKind};
pub use bec::{GpeProblem, SolveRecord, SolverSettings, SpectrumReport};
pub use dynamics::{CgadRhs, CgadState, MultiplierSet, StabilityReport};
pub use error::{Error, Result};
pub use manifold::{GramData, SaddleProblem};
pub use spectral::{Axis, Grid, GridField};
pub use toy::QuadraticSphere;
