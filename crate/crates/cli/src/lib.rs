//! Benchmark runners behind the `bwl` command-line tool.

pub mod bench;
pub mod config;
pub mod output;
pub mod plot;
pub mod sysid;
pub mod timeseries;
