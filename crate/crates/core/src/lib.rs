//! von Mises quasi-process regression for angle-valued outputs.
//!
//! Posterior sampling of unobserved angles uses a Gaussian augmentation that
//! turns the coupled cosine interactions into independent one-dimensional
//! von Mises conditionals. Parameters are learned with exchange moves that
//! never touch the intractable normalizer.

pub mod circular;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gibbs;
pub mod inference;
pub mod kernels;
pub mod model;
pub mod synthetic;

pub use error::{Error, Result};
