pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod experiment;
pub mod landscape;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod special;
pub mod verification;

pub use error::{Error, Result};
