//! Library surface of the `tilesr` command-line tool: run configuration,
//! dataset directory I/O, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod dataset_io;
