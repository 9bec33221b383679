//! Library half of the command-line front end: scenario loading, the two
//! built-in protocols, CSV trace output and the sweep driver. The binary in
//! `main.rs` is a thin argument parser over these functions so every code
//! path is testable in-process.

pub mod builtins;
pub mod commands;
pub mod csv;
pub mod error;
