//! Model-based imputation of establishment occupational wage distributions.
//!
//! The pipeline fits a stratified discrete proportional-hazards model to the
//! wage-interval counts of responding establishments, with strata from a
//! regression tree on NAICS codes, then draws multinomial counts for the
//! nonrespondents. Estimators, a synthetic population generator and a
//! missingness simulator sit on top.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod error;
pub mod estimators;
pub mod hazard;
pub mod imputer;
pub mod io;
pub mod model;
pub mod preprocess;
pub mod rng;
pub mod simulator;
pub mod synthgen;
pub mod tree;

pub use error::{Error, Result};
