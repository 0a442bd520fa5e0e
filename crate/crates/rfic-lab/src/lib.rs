//! Experiment harness and reporting layer on top of [`rfic_core`].
//!
//! This crate owns everything that needs the standard library: the rayon
//! task farm for replica and grid parallelism, the sweep and verification
//! experiments, configuration loading, and CSV/JSON/SVG artifact emission.
//! All parallel reductions collect per-task results in task order before
//! folding, so outputs are byte-identical across worker counts.

pub mod config;
pub mod experiments;
pub mod parallel;
pub mod report;
pub mod run;
pub mod svg;

pub use config::{ConfigError, ResolvedConfig};
pub use run::execute;
