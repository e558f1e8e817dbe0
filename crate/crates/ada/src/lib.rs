//! File formats, configuration, worker pool and command-line front end for
//! `ada-core`.

pub mod cli;
pub mod config;
pub mod exec;
pub mod formats;
pub mod report;
pub mod store;
