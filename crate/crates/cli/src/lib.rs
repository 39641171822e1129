//! The `mfs` command-line tool: config parsing, evaluation and CSV/JSON output.

pub mod config;
pub mod descriptor;
pub mod report;
