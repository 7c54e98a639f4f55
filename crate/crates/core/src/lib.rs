//! Fuzzy nutrient dosing for recirculating hydroponics.
//!
//! The crate is `no_std` (it needs `alloc`) and is organised bottom-up:
//!
//! - [`fis`]: a domain-independent Mamdani kernel. Piecewise-linear
//!   membership functions, min conjunction, min implication, max
//!   aggregation, and centroid defuzzification on a sampled grid.
//! - [`dsl`]: the line-oriented rulebank format (`.fzb`), its parser,
//!   canonical serializer and static checks.
//! - [`hydro`]: the pH/TDS controller built on the kernel, input clamping,
//!   normal-band tests and the AB-mix universe fit.
//! - [`sim`]: a reservoir twin with perfect-mixing dilution and a buffered
//!   acid/base model, plus least-squares calibration of dosing constants.
//! - [`control`]: the sense, infer, dose, settle loop against a device
//!   abstraction, water-level hysteresis and telemetry scheduling.
//! - [`validation`]: RMSE style comparison of simulated and reference
//!   pump durations.
//!
//! File formats other than the rulebank, the CLI and all IO live in the
//! `fuzzydose` companion crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod control;
pub mod dsl;
pub mod fis;
pub mod hydro;
pub mod sim;
pub mod validation;

mod math;

pub use fis::{FisDefinition, FisError};
pub use hydro::{DoseCommand, HydroController, NormalBand, NutrientReading};
