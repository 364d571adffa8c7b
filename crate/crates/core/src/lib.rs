#![no_std]
extern crate alloc;

pub use nalgebra;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod distributions;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod grid;
pub mod product_prior;
pub mod stats;
pub mod levy_process;
pub mod forward_models;
pub mod bayes_core;
pub mod inference;
pub mod metrics;
