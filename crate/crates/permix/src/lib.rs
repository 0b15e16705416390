//! Permutation mixtures: exact permanents, χ² series, elementary symmetric
//! polynomial bounds, capacity functionals and χ² upper bounds.

pub mod bounds;
pub mod capacity;
pub mod cli;
pub mod config;
pub mod error;
pub mod esp;
pub mod gaussian_demo;
pub mod mixtures;
pub mod permanent;
pub mod report;
pub mod suite;

pub use error::{Error, Result};
