use super::{Device, DeviceError};
use crate::sim::LevelSensorModel;

pub const WATER_ON_BELOW_L: f64 = 19.0;
pub const WATER_OFF_AT_L: f64 = 20.0;

/// Hysteresis: on below 19 L, off from 20 L, otherwise hold.
pub fn water_pump_next(on: bool, volume_l: f64) -> bool {
    if volume_l < WATER_ON_BELOW_L {
        true
    } else if volume_l >= WATER_OFF_AT_L {
        false
    } else {
        on
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterLevelController {
    pub model: LevelSensorModel,
    on: bool,
    toggles: usize,
}

impl WaterLevelController {
    pub fn new(model: LevelSensorModel) -> Self {
        Self { model, on: false, toggles: 0 }
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    pub fn toggles(&self) -> usize {
        self.toggles
    }

    /// Read the level and drive the water pump. An unreadable or
    /// out-of-range level forces the pump off.
    pub fn tick<D: Device + ?Sized>(&mut self, device: &mut D) -> Result<bool, DeviceError> {
        let volume = device.read_level_distance().ok().and_then(|d| self.model.level_to_volume(d).ok());
        let next = match volume {
            Some(v) => water_pump_next(self.on, v),
            None => false,
        };
        if next != self.on {
            self.toggles += 1;
        }
        self.on = next;
        device.set_water_pump(next)?;
        Ok(next)
    }
}
