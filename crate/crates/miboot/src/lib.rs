//! Bootstrap confidence intervals for multiply imputed data.
//!
//! This crate implements the statistical core of a resampling-inference
//! engine: deterministic splittable random streams, multiple-imputation
//! engines (bootstrap-EM multivariate normal and approximate Bayesian
//! bootstrap), analysis estimators (OLS, Cox proportional hazards, the
//! sequential g-formula), Rubin's combining rules, and six confidence
//! interval constructors that combine bootstrapping with multiple
//! imputation in different nesting orders.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all floating
//! point transcendentals go through `libm` so results are bit-identical
//! with and without the `std` feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod combining;
pub mod data;
pub mod estimators;
pub mod imputation;
pub mod intervals;
pub mod longitudinal;
pub mod math;
pub mod matrix;
pub mod rng;
pub mod sampling;
