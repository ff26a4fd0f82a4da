//! Command-line front end for `mustring`: subcommands emitting CSV/JSON and the
//! acceptance suite behind `mustring verify`.

mod app;
pub mod output;
pub mod verify;

pub use app::{run, CliError, THREADS_ENV};
