//! Benchmark instance generation, experiment running and result tables.

pub mod generate;
pub mod record;
pub mod run;
