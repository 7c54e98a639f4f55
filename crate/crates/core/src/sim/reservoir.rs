use serde::{Deserialize, Serialize};

use super::SimError;
use crate::hydro::{DoseCommand, NutrientReading};
use crate::math::{exp10, log10, sqrt};

pub const MAX_VOLUME_L: f64 = 25.0;
pub const DEFAULT_VOLUME_L: f64 = 20.0;
pub const DEFAULT_BUFFER_CAPACITY: f64 = 5e-4;
/// Mixing delay after each control step, s.
pub const SETTLE_S: f64 = 60.0;

const KW: f64 = 1e-14;

/// Net strong-acid concentration giving `ph` at buffer capacity `beta`.
pub fn acid_for_ph(ph: f64, beta: f64) -> f64 {
    beta * (7.0 - ph) + exp10(-ph) - exp10(ph - 14.0)
}

/// Inverse of [`acid_for_ph`]. The left side is strictly decreasing in pH,
/// so bisection always converges.
pub fn ph_for_acid(acid_eq: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        // h = (a + sqrt(a² + 4Kw)) / 2, rearranged for net base to avoid cancellation
        let root = sqrt(acid_eq * acid_eq + 4.0 * KW);
        let h = if acid_eq >= 0.0 { (acid_eq + root) / 2.0 } else { 2.0 * KW / (root - acid_eq) };
        return -log10(h);
    }
    let (mut lo, mut hi) = (-2.0_f64, 16.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if acid_for_ph(mid, beta) > acid_eq {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn check(what: &'static str, value: f64, ok: bool) -> Result<(), SimError> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(SimError::InvalidQuantity { what, value })
    }
}

/// Dosing hardware and chemistry constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseParams {
    pub pump_flow_ml_per_s: f64,
    /// TDS of the AB stock, ppm.
    pub c_ab_ppm: f64,
    /// Base strength of the pH-Up concentrate, mol/L.
    pub c_up_eq: f64,
    /// Acid strength of the pH-Down concentrate, mol/L.
    pub c_down_eq: f64,
    /// pH change per 60 s, never positive.
    pub drift_ph_per_step: f64,
    /// TDS change per 60 s, ppm.
    pub drift_tds_per_step: f64,
}

impl Default for DoseParams {
    /// Constants fitted to the bundled observations at 20 L and the default
    /// buffer capacity.
    fn default() -> Self {
        Self {
            pump_flow_ml_per_s: 55.56,
            c_ab_ppm: 86_433.0,
            c_up_eq: 0.2890,
            c_down_eq: 0.2584,
            drift_ph_per_step: 0.0,
            drift_tds_per_step: 0.0,
        }
    }
}

impl DoseParams {
    pub fn validate(&self) -> Result<(), SimError> {
        check("pump flow", self.pump_flow_ml_per_s, self.pump_flow_ml_per_s > 0.0)?;
        check("AB concentration", self.c_ab_ppm, self.c_ab_ppm > 1400.0)?;
        check("pH-Up strength", self.c_up_eq, self.c_up_eq > 0.0)?;
        check("pH-Down strength", self.c_down_eq, self.c_down_eq > 0.0)?;
        check("pH drift", self.drift_ph_per_step, self.drift_ph_per_step <= 0.0)?;
        check("TDS drift", self.drift_tds_per_step, true)
    }

    /// Volume pumped in `ms`, litres.
    pub fn pumped_l(&self, ms: f64) -> f64 {
        ms / 1000.0 * self.pump_flow_ml_per_s / 1000.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirState {
    pub volume_l: f64,
    pub tds_ppm: f64,
    /// Net strong-acid concentration, mol/L; negative means net base.
    pub acid_eq: f64,
    pub sim_time_s: f64,
    /// mol/L per pH unit, treated as constant over the small dose volumes.
    pub buffer_capacity: f64,
}

impl ReservoirState {
    pub fn new(volume_l: f64, tds_ppm: f64, acid_eq: f64, buffer_capacity: f64) -> Result<Self, SimError> {
        let s = Self { volume_l, tds_ppm, acid_eq, sim_time_s: 0.0, buffer_capacity };
        s.validate()?;
        Ok(s)
    }

    /// State whose pH and TDS equal `reading`.
    pub fn from_reading(reading: &NutrientReading, volume_l: f64, buffer_capacity: f64) -> Result<Self, SimError> {
        check("pH", reading.ph, (0.0..=14.0).contains(&reading.ph))?;
        Self::new(volume_l, reading.tds, acid_for_ph(reading.ph, buffer_capacity), buffer_capacity)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check("volume", self.volume_l, self.volume_l > 0.0 && self.volume_l <= MAX_VOLUME_L)?;
        check("TDS", self.tds_ppm, self.tds_ppm >= 0.0)?;
        check("acid concentration", self.acid_eq, true)?;
        check("simulation time", self.sim_time_s, self.sim_time_s >= 0.0)?;
        check("buffer capacity", self.buffer_capacity, self.buffer_capacity >= 0.0)
    }

    pub fn ph(&self) -> f64 {
        ph_for_acid(self.acid_eq, self.buffer_capacity)
    }

    pub fn reading(&self) -> NutrientReading {
        NutrientReading { ph: self.ph(), tds: self.tds_ppm }
    }

    fn headroom(&self, added_l: f64) -> Result<(), SimError> {
        if self.volume_l + added_l > MAX_VOLUME_L {
            Err(SimError::Overflow { volume_l: self.volume_l, added_l })
        } else {
            Ok(())
        }
    }

    /// All three pumps as one mixing event.
    pub fn apply_dose(&self, dose: &DoseCommand, params: &DoseParams) -> Result<Self, SimError> {
        for (what, ms) in [("pH-Up duration", dose.ph_up_ms), ("pH-Down duration", dose.ph_down_ms), ("AB duration", dose.ab_mix_ms)] {
            check(what, ms, ms >= 0.0)?;
        }
        let v_up = params.pumped_l(dose.ph_up_ms);
        let v_down = params.pumped_l(dose.ph_down_ms);
        let v_ab = params.pumped_l(dose.ab_mix_ms);
        let v_total = v_up + v_down + v_ab;
        if v_total == 0.0 {
            return Ok(*self);
        }
        self.headroom(v_total)?;
        let v = self.volume_l;
        let v_new = v + v_total;
        Ok(Self {
            volume_l: v_new,
            tds_ppm: (self.tds_ppm * v + params.c_ab_ppm * v_ab) / v_new,
            acid_eq: (self.acid_eq * v + params.c_down_eq * v_down - params.c_up_eq * v_up) / v_new,
            ..*self
        })
    }

    /// Let `dt_s` seconds pass, applying drift pro rata.
    pub fn advance_time(&self, dt_s: f64, params: &DoseParams) -> Result<Self, SimError> {
        check("time step", dt_s, dt_s >= 0.0)?;
        if dt_s == 0.0 {
            return Ok(*self);
        }
        let steps = dt_s / SETTLE_S;
        let mut next = Self { sim_time_s: self.sim_time_s + dt_s, ..*self };
        if params.drift_ph_per_step != 0.0 {
            let ph = self.ph() + params.drift_ph_per_step * steps;
            next.acid_eq = acid_for_ph(ph, self.buffer_capacity);
        }
        if params.drift_tds_per_step != 0.0 {
            next.tds_ppm = (self.tds_ppm + params.drift_tds_per_step * steps).max(0.0);
        }
        Ok(next)
    }

    /// Add `v_l` litres of zero-TDS neutral water.
    pub fn top_up_water(&self, v_l: f64) -> Result<Self, SimError> {
        check("top-up volume", v_l, v_l >= 0.0)?;
        if v_l == 0.0 {
            return Ok(*self);
        }
        self.headroom(v_l)?;
        let v_new = self.volume_l + v_l;
        let f = self.volume_l / v_new;
        Ok(Self { volume_l: v_new, tds_ppm: self.tds_ppm * f, acid_eq: self.acid_eq * f, ..*self })
    }
}
