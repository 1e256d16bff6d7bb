//! File formats, run configuration and the command implementations behind the CLI.

pub mod commands;
pub mod config;
pub mod load;
pub mod table;
pub mod traces;

pub use commands::{cmd_evaluate, cmd_fit, cmd_report, cmd_simulate, Evaluation};
pub use config::{EdgeSpec, RunConfig, ViewSpec};
pub use traces::{read_trace_dir, RunManifest, TraceBundle};
