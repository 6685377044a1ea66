//! Experiment harness for the timelike minimal surface toolkit: run
//! configuration, data generation, verification suites and report emission.

pub mod config;
pub mod gen;
pub mod report;
pub mod suites;
