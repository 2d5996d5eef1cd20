//! Command-line surface for the fair division solver: `solve`, `verify`,
//! `gen` and `bench` subcommands over stable JSON file formats.

pub mod commands;
pub mod io;
pub mod suite;

pub use commands::{run, Cli, EXIT_INPUT_ERROR, EXIT_OK, EXIT_PROPERTY_FAILED};
