//! File formats, evaluation plumbing and the command-line front end for
//! `afapprox-core`.

pub mod cli;
pub mod dataset;
pub mod docs;
pub mod error;
pub mod eval;
pub mod manifest;

pub use afapprox_core as core;
pub use error::{Error, Result};
