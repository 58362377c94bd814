//! Library surface of the pairspec CLI: configuration schema and the
//! experiment orchestration used by the `pairspec` binary and its tests.

pub mod config;
pub mod experiment;
