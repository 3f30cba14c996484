//! Command-line front end for the third-person imitation lab: configuration
//! files, binary banks and checkpoints, metrics CSV, SVG plots and the
//! numerical self-checks.

pub mod bank_io;
pub mod checkpoint;
pub mod cli;
pub mod config_file;
pub mod metrics;
pub mod plot;
pub mod selftest;
