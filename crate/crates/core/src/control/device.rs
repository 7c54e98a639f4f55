use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Device, DeviceError, DosingPump};
use crate::hydro::{DoseCommand, SensorFault};
use crate::sim::{DoseParams, LevelSensorModel, ReservoirState, MAX_VOLUME_L};

/// Fill rate of the water pump, L/s (360 L/h).
pub const DEFAULT_TOP_UP_L_PER_S: f64 = 0.1;

/// Forced sensor values. A non-finite value turns reads into faults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaultInjection {
    pub ph: Option<f64>,
    pub tds: Option<f64>,
    pub level_cm: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PumpEvent {
    Dose { t_s: f64, pump: DosingPump, duration_ms: f64 },
    Water { t_s: f64, on: bool },
}

/// A [`Device`] backed by a [`ReservoirState`].
///
/// Doses commanded since the last sleep are applied together as one mixing
/// event when the clock next advances. While the water pump is on, sleeping
/// adds water at `top_up_l_per_s`, stopping at the tank capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedDevice {
    pub state: ReservoirState,
    pub params: DoseParams,
    pub level: LevelSensorModel,
    pub top_up_l_per_s: f64,
    pub faults: FaultInjection,
    water_on: bool,
    pending: DoseCommand,
    log: Vec<PumpEvent>,
}

impl SimulatedDevice {
    pub fn new(state: ReservoirState, params: DoseParams) -> Self {
        Self {
            state,
            params,
            level: LevelSensorModel::default(),
            top_up_l_per_s: DEFAULT_TOP_UP_L_PER_S,
            faults: FaultInjection::default(),
            water_on: false,
            pending: DoseCommand::ZERO,
            log: Vec::new(),
        }
    }

    pub fn with_level_model(mut self, level: LevelSensorModel) -> Self {
        self.level = level;
        self
    }

    pub fn water_pump_on(&self) -> bool {
        self.water_on
    }

    /// Every pump command in order.
    pub fn log(&self) -> &[PumpEvent] {
        &self.log
    }

    fn forced(value: Option<f64>, quantity: &'static str) -> Option<Result<f64, SensorFault>> {
        value.map(|v| if v.is_finite() { Ok(v) } else { Err(SensorFault { quantity, value: v }) })
    }

    fn flush(&mut self) -> Result<(), DeviceError> {
        if !self.pending.is_zero() {
            self.state = self.state.apply_dose(&self.pending, &self.params)?;
            self.pending = DoseCommand::ZERO;
        }
        Ok(())
    }
}

impl Device for SimulatedDevice {
    fn read_ph(&mut self) -> Result<f64, SensorFault> {
        Self::forced(self.faults.ph, "pH").unwrap_or_else(|| Ok(self.state.ph()))
    }

    fn read_tds(&mut self) -> Result<f64, SensorFault> {
        Self::forced(self.faults.tds, "TDS").unwrap_or(Ok(self.state.tds_ppm))
    }

    fn read_level_distance(&mut self) -> Result<f64, SensorFault> {
        if let Some(r) = Self::forced(self.faults.level_cm, "level") {
            return r;
        }
        self.level
            .volume_to_level(self.state.volume_l)
            .map_err(|_| SensorFault { quantity: "level", value: f64::NAN })
    }

    fn run_pump(&mut self, pump: DosingPump, duration_ms: f64) -> Result<(), DeviceError> {
        if !(duration_ms >= 0.0) || !duration_ms.is_finite() {
            return Err(DeviceError::Actuator(alloc::format!("invalid duration {duration_ms} ms for {}", pump.as_str())));
        }
        if duration_ms == 0.0 {
            return Ok(());
        }
        match pump {
            DosingPump::PhUp => self.pending.ph_up_ms += duration_ms,
            DosingPump::PhDown => self.pending.ph_down_ms += duration_ms,
            DosingPump::AbMix => self.pending.ab_mix_ms += duration_ms,
        }
        self.log.push(PumpEvent::Dose { t_s: self.state.sim_time_s, pump, duration_ms });
        Ok(())
    }

    fn set_water_pump(&mut self, on: bool) -> Result<(), DeviceError> {
        if on != self.water_on {
            self.water_on = on;
            self.log.push(PumpEvent::Water { t_s: self.state.sim_time_s, on });
        }
        Ok(())
    }

    fn sleep(&mut self, seconds: f64) -> Result<(), DeviceError> {
        self.flush()?;
        if self.water_on && seconds > 0.0 {
            let add = (self.top_up_l_per_s * seconds).min(MAX_VOLUME_L - self.state.volume_l).max(0.0);
            self.state = self.state.top_up_water(add)?;
        }
        self.state = self.state.advance_time(seconds, &self.params)?;
        Ok(())
    }

    fn now_s(&self) -> f64 {
        self.state.sim_time_s
    }
}
