//! Library behind the `roict` binary: experiment configuration, the sweep
//! driver and PNG rendering.

pub mod config;
pub mod experiment;
pub mod render;
