//! Seeded multi-run experiments over the `mogd-core` solvers.
//!
//! [`run_benchmark`] runs every requested method from the same initial points,
//! [`summarize`] aggregates the records per (problem, method), and the `csv` and
//! `front` modules write plot-ready files.

pub mod csv_io;
mod error;
pub mod front;
mod records;
mod runner;
pub mod seeds;

pub use error::{BenchError, Result};
pub use front::{nondominated_filter, write_fronts};
pub use records::{summarize, RunRecord, Summary};
pub use runner::{expand_names, parse_methods, run_benchmark, run_benchmark_with, Plan};
