//! Run configuration, orchestration, CSV output and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod output;
pub mod run;

pub use config::RunConfig;
pub use output::Table;
pub use run::{magic_check, run, CriterionRow, MagicRow, Report};
