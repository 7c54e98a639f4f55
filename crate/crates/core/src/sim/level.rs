use serde::{Deserialize, Serialize};

use super::SimError;

/// Ultrasonic level sensor mounted above the tank, pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelSensorModel {
    /// Tank cross-section, cm².
    pub area_cm2: f64,
    /// Distance from the sensor to the tank floor, cm.
    pub offset_cm: f64,
}

impl Default for LevelSensorModel {
    fn default() -> Self {
        Self { area_cm2: 700.0, offset_cm: 40.0 }
    }
}

impl LevelSensorModel {
    pub const MIN_DISTANCE_CM: f64 = 2.0;
    pub const MAX_DISTANCE_CM: f64 = 400.0;

    pub fn new(area_cm2: f64, offset_cm: f64) -> Option<Self> {
        let ok = area_cm2.is_finite() && area_cm2 > 0.0 && offset_cm.is_finite() && offset_cm >= Self::MIN_DISTANCE_CM;
        ok.then_some(Self { area_cm2, offset_cm })
    }

    /// Litres of solution for an echo distance.
    pub fn level_to_volume(&self, distance_cm: f64) -> Result<f64, SimError> {
        let in_range = (Self::MIN_DISTANCE_CM..=Self::MAX_DISTANCE_CM).contains(&distance_cm) && distance_cm <= self.offset_cm;
        if !in_range {
            return Err(SimError::LevelOutOfRange(distance_cm));
        }
        Ok(self.area_cm2 * (self.offset_cm - distance_cm) / 1000.0)
    }

    pub fn volume_to_level(&self, volume_l: f64) -> Result<f64, SimError> {
        let d = self.offset_cm - volume_l * 1000.0 / self.area_cm2;
        if !(volume_l >= 0.0) || !(Self::MIN_DISTANCE_CM..=Self::MAX_DISTANCE_CM).contains(&d) {
            return Err(SimError::InvalidQuantity { what: "volume for level sensor", value: volume_l });
        }
        Ok(d)
    }
}
