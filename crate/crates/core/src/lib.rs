//! Analytic frequency response of a damped Euler-Bernoulli beam driven through a
//! spring-mass shaker, and data-driven rational models fitted to sampled responses
//! with the Loewner framework.
//!
//! The pipeline is: [`beam::sample_grid`] -> [`noise::perturb`] (optional) ->
//! [`loewner::conjugate_close`] -> [`loewner::partition`] -> [`loewner::build_pencil`]
//! -> [`loewner::realify`] -> [`loewner::svd_augmented`] -> [`loewner::reduce`], and the
//! resulting [`rom::ReducedModel`] is scored with [`rom::poles`] and [`rom::error_report`].

pub mod beam;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod loewner;
pub mod noise;
pub mod rom;

pub use error::{Error, Result};
pub use num_complex::Complex64;
