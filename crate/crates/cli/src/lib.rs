//! Configuration-driven experiment runner.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod plotdata;
pub mod runner;
pub mod schema;

pub use config::{ExperimentConfig, Task};
pub use output::{Manifest, ManifestEntry};
pub use plotdata::emit_plotdata;
pub use runner::{run, RunSummary};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;

/// Exit status for a failed command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    let validation = err
        .chain()
        .filter_map(|e| e.downcast_ref::<qdx_core::Error>())
        .any(|e| e.is_validation());
    if validation {
        EXIT_VALIDATION
    } else {
        EXIT_COMPUTATION
    }
}
