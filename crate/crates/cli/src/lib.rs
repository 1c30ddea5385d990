//! Experiment drivers behind the `fullcp` command.

pub mod bench;
pub mod config;
pub mod fuzziness;
pub mod predict;
pub mod report;
pub mod runner;
pub mod validate;
pub mod welch;
