pub mod banded;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod monitor;
pub mod par;
pub mod prescription;
mod real;
pub mod solver;
pub mod symmetric;

pub use error::{Error, Result};
