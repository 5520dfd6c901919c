//! Spec-file loading, command dispatch and reports for the `nielsen` tool.

pub mod commands;
pub mod expr;
pub mod report;
pub mod specfile;

pub use commands::{run_args, Outcome};
