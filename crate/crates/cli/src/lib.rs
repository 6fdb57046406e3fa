//! Configuration parsing and experiment orchestration behind the `ris`
//! binary.

pub mod config;
pub mod run;
