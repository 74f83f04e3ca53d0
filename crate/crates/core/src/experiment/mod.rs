//! Named verification experiments driven by a JSON configuration, and their reports.

mod config;
mod report;
mod run;

pub use config::{AsymptoticsSpec, BcSpec, BuiltinPotential, DomainSpec, DtnSpec, ExperimentConfig, LambdaSpec, PathSpec, PotentialSpec, TermSpec};
pub use report::{emit_report, Check, DtnRow, Format, Quantity, SegmentSummary, Tables, VerificationReport};
pub use run::{run_experiment, Experiment};
