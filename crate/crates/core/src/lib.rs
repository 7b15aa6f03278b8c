pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod io;
pub mod model;
pub mod report;
pub mod simgen;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
