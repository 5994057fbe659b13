//! Experiment configuration, presets, sweep execution, result tables and
//! the small-instance oracle suite.

pub mod config;
pub mod emit;
pub mod presets;
pub mod run;
pub mod validate;

pub use config::{ExperimentConfig, ExperimentKind};
pub use emit::{ResultRow, ResultTable};
pub use presets::{list_presets, preset};
pub use run::{run, run_all};
pub use validate::{validate, OracleCheck, ValidationReport};
