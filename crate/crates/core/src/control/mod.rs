//! Closed-loop control against a [`Device`].
//!
//! One control step reads pH and TDS, computes a dose, commands the pumps,
//! waits [`SETTLE_S`](crate::sim::SETTLE_S) seconds on the device clock and
//! reads again. [`ControlLoop::run_until_normal`] repeats that until the
//! reading enters the normal band. [`Supervisor`] adds water-level
//! hysteresis and periodic telemetry on a fixed cycle.
//!
//! Everything here is single-threaded: a loop owns its device for the
//! duration of a call.

mod device;
mod step;
mod supervisor;
mod telemetry;
mod water;

use alloc::string::String;

use serde::{Deserialize, Serialize};

pub use device::{FaultInjection, PumpEvent, SimulatedDevice, DEFAULT_TOP_UP_L_PER_S};
pub use step::{ControlLoop, RunOutcome, StepTrace, DEFAULT_MAX_STEPS};
pub use supervisor::{Supervisor, SupervisorReport};
pub use telemetry::{MemorySink, PumpFlags, TelemetryError, TelemetryRecord, TelemetryScheduler, TelemetrySink, DEFAULT_CADENCE_S};
pub use water::{water_pump_next, WaterLevelController, WATER_OFF_AT_L, WATER_ON_BELOW_L};

use crate::fis::FisError;
use crate::hydro::{DoseCommand, SensorFault};
use crate::sim::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DosingPump {
    PhUp,
    PhDown,
    AbMix,
}

impl DosingPump {
    pub const ALL: [DosingPump; 3] = [DosingPump::PhUp, DosingPump::PhDown, DosingPump::AbMix];

    pub fn as_str(self) -> &'static str {
        match self {
            DosingPump::PhUp => "ph_up",
            DosingPump::PhDown => "ph_down",
            DosingPump::AbMix => "ab",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DeviceError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("actuator failure: {0}")]
    Actuator(String),
}

/// Sensors, actuators and clock of one reservoir.
pub trait Device {
    fn read_ph(&mut self) -> Result<f64, SensorFault>;
    fn read_tds(&mut self) -> Result<f64, SensorFault>;
    /// Ultrasonic echo distance to the solution surface, cm.
    fn read_level_distance(&mut self) -> Result<f64, SensorFault>;
    /// Run a dosing pump for `duration_ms`. A zero duration does nothing.
    fn run_pump(&mut self, pump: DosingPump, duration_ms: f64) -> Result<(), DeviceError>;
    fn set_water_pump(&mut self, on: bool) -> Result<(), DeviceError>;
    fn sleep(&mut self, seconds: f64) -> Result<(), DeviceError>;
    fn now_s(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error(transparent)]
    Sensor(#[from] SensorFault),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Inference(#[from] FisError),
    #[error("telemetry cadence must be positive, got {0} s")]
    InvalidCadence(f64),
    #[error("interlock: refusing to run pH Up and pH Down together ({0:?})")]
    Interlock(DoseCommand),
}
