//! Imputation engine for data missing at random, with analytic test beds.
//!
//! The crate couples an iterated conditional-modeling imputer (the
//! fit-and-draw sweep popularized by `mice`) with a catalogue of synthetic
//! missingness mechanisms whose joint laws are known in closed form. The
//! catalogue powers two things the usual benchmark setups lack: quadrature
//! checkers that decide which flavor of MAR a mechanism satisfies, and
//! oracle samplers that give imputation methods a ground-truth baseline.

pub mod bench;
pub mod data;
pub mod error;
pub mod eval;
pub mod fcs;
pub mod mar;
pub mod mechanisms;
pub mod models;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
