//! Batch driver for the compser numerical lab: suite runner, table emitter
//! and configuration handling.

pub mod config;
pub mod report;
pub mod suites;
pub mod tables;
