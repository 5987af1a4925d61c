//! Library surface of the `mechsim` command-line driver: argument structs,
//! config handling, report serialization, and the command implementations.
//! The binary in `main.rs` is a thin dispatcher over these.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
