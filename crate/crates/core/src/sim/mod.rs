//! Reservoir twin.
//!
//! A [`ReservoirState`] is a value: every operation takes a state and
//! returns the next one. Doses mix perfectly and instantly; the controller's
//! settle time is modelled by [`ReservoirState::advance_time`], which only
//! applies the configured drift.
//!
//! pH is derived from the net strong-acid concentration `acid_eq` (mol/L,
//! negative for net base) and a constant buffer capacity `β` (mol/L per pH
//! unit) by solving
//!
//! ```text
//! β·(7 − pH) + 10^−pH − 10^(pH − 14) = acid_eq
//! ```
//!
//! With `β = 0` this is plain strong acid/base chemistry with water
//! autoionization. The default `β` of 5e-4 gives the gentle per-step pH
//! moves seen on real nutrient solutions, which carry phosphate and
//! carbonate buffers.

mod calibrate;
mod level;
mod reservoir;

pub use calibrate::{
    calibrate_dose_params, Calibration, CalibrationError, CalibrationSetup, FitTargets, Observation, ObservationResidual,
};
pub use level::LevelSensorModel;
pub use reservoir::{
    acid_for_ph, ph_for_acid, DoseParams, ReservoirState, DEFAULT_BUFFER_CAPACITY, DEFAULT_VOLUME_L, MAX_VOLUME_L,
    SETTLE_S,
};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("overflow: adding {added_l} L to {volume_l} L exceeds the {MAX_VOLUME_L} L reservoir")]
    Overflow { volume_l: f64, added_l: f64 },
    #[error("invalid {what}: {value}")]
    InvalidQuantity { what: &'static str, value: f64 },
    #[error("level sensor distance {0} cm is outside the measurable range")]
    LevelOutOfRange(f64),
}
