//! Run configuration, file formats, run directories and the command-line
//! front end for [`eprbound_core`].

pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod manifest;
pub mod parallel;
pub mod ut1;

pub use error::{Error, Result};
