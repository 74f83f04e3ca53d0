//! Morse and Maslov indices for discretized matrix Schrödinger operators on the box [−1,1]^d.
//!
//! The crate assembles the operators L_{s,G}(τ) along the rescaling path Γ, computes
//! Dirichlet-to-Neumann maps and the Lagrangian path of boundary traces, and counts
//! the Maslov index both by crossing forms and by spectral flow of the Souriau map.

pub mod assembly;
pub mod asymptotics;
pub mod dtn;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod linalg;
pub mod maslov;
pub mod potential;
pub mod symplectic;

pub use assembly::{BoundaryCondition, BoundaryOperator, GammaPath, Model, PathPoint, SchrodingerPencil, Segment};
pub use error::{MaslovError, Result};
pub use experiment::{emit_report, run_experiment, Experiment, ExperimentConfig, Format, VerificationReport};
pub use grid::{build_square_grid, dirichlet_box_spectrum, GridDomain};
pub use potential::{PolyTerm, PotentialField};
