//! Run configuration.
//!
//! A flat TOML table; every key is optional.
//!
//! ```toml
//! rulebank = "hydro.fzb"        # relative to this file; built-in system if absent
//! u_ab_ms = 7733.0              # upper bound of the ab_mix range
//! pump_flow_ml_per_s = 55.56
//! c_ab_ppm = 86433.0
//! c_up_eq = 0.289
//! c_down_eq = 0.2584
//! buffer_capacity = 0.0005      # mol/L per pH unit
//! drift_ph_per_step = 0.0       # per 60 s, <= 0
//! drift_tds_per_step = 0.0
//! volume_l = 20.0
//! ph_lo = 5.5
//! ph_hi = 6.5
//! tds_lo = 1050.0
//! tds_hi = 1400.0
//! telemetry_cadence_s = 300.0
//! max_steps = 10
//! level_area_cm2 = 700.0
//! level_offset_cm = 40.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use fuzzydose_core::control::{DEFAULT_CADENCE_S, DEFAULT_MAX_STEPS};
use fuzzydose_core::dsl::{RulebankDocument, Severity};
use fuzzydose_core::hydro::{HydroController, NormalBand, DEFAULT_U_AB_MS};
use fuzzydose_core::sim::{DoseParams, LevelSensorModel, DEFAULT_BUFFER_CAPACITY, DEFAULT_VOLUME_L, MAX_VOLUME_L};
use serde::{Deserialize, Serialize};

use crate::error::{config_err, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rulebank: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_ab_ms: Option<f64>,
    pub pump_flow_ml_per_s: f64,
    pub c_ab_ppm: f64,
    pub c_up_eq: f64,
    pub c_down_eq: f64,
    pub buffer_capacity: f64,
    pub drift_ph_per_step: f64,
    pub drift_tds_per_step: f64,
    pub volume_l: f64,
    pub ph_lo: f64,
    pub ph_hi: f64,
    pub tds_lo: f64,
    pub tds_hi: f64,
    pub telemetry_cadence_s: f64,
    pub max_steps: usize,
    pub level_area_cm2: f64,
    pub level_offset_cm: f64,
}

impl Default for Config {
    fn default() -> Self {
        let p = DoseParams::default();
        let band = NormalBand::default();
        let level = LevelSensorModel::default();
        Self {
            rulebank: None,
            u_ab_ms: None,
            pump_flow_ml_per_s: p.pump_flow_ml_per_s,
            c_ab_ppm: p.c_ab_ppm,
            c_up_eq: p.c_up_eq,
            c_down_eq: p.c_down_eq,
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            drift_ph_per_step: p.drift_ph_per_step,
            drift_tds_per_step: p.drift_tds_per_step,
            volume_l: DEFAULT_VOLUME_L,
            ph_lo: band.ph_lo,
            ph_hi: band.ph_hi,
            tds_lo: band.tds_lo,
            tds_hi: band.tds_hi,
            telemetry_cadence_s: DEFAULT_CADENCE_S,
            max_steps: DEFAULT_MAX_STEPS,
            level_area_cm2: level.area_cm2,
            level_offset_cm: level.offset_cm,
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let c: Config = toml::from_str(text).map_err(|e| config_err("config", e))?;
        c.validate()?;
        Ok(c)
    }

    /// Load and validate; a relative `rulebank` is resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| config_err(path.display(), e))?;
        let mut c = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let (Some(rb), Some(dir)) = (&c.rulebank, path.parent()) {
            if rb.is_relative() {
                c.rulebank = Some(dir.join(rb));
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |what: &str| Err(CliError::Config(format!("config: invalid {what}")));
        self.dose_params().validate().map_err(|e| config_err("config", e))?;
        if !(self.buffer_capacity >= 0.0 && self.buffer_capacity.is_finite()) {
            return bad("buffer_capacity");
        }
        if !(self.volume_l > 0.0 && self.volume_l <= MAX_VOLUME_L) {
            return bad("volume_l");
        }
        if NormalBand::new(self.ph_lo, self.ph_hi, self.tds_lo, self.tds_hi).is_none() {
            return bad("normal band");
        }
        if !(self.telemetry_cadence_s > 0.0 && self.telemetry_cadence_s.is_finite()) {
            return bad("telemetry_cadence_s");
        }
        if self.max_steps == 0 {
            return bad("max_steps");
        }
        if LevelSensorModel::new(self.level_area_cm2, self.level_offset_cm).is_none() {
            return bad("level sensor model");
        }
        Ok(())
    }

    pub fn dose_params(&self) -> DoseParams {
        DoseParams {
            pump_flow_ml_per_s: self.pump_flow_ml_per_s,
            c_ab_ppm: self.c_ab_ppm,
            c_up_eq: self.c_up_eq,
            c_down_eq: self.c_down_eq,
            drift_ph_per_step: self.drift_ph_per_step,
            drift_tds_per_step: self.drift_tds_per_step,
        }
    }

    pub fn band(&self) -> NormalBand {
        NormalBand { ph_lo: self.ph_lo, ph_hi: self.ph_hi, tds_lo: self.tds_lo, tds_hi: self.tds_hi }
    }

    pub fn level_model(&self) -> LevelSensorModel {
        LevelSensorModel { area_cm2: self.level_area_cm2, offset_cm: self.level_offset_cm }
    }

    /// Controller from `rulebank` (overriding the configured one) or the
    /// built-in system, with `u_ab_ms` applied when set. Rulebank
    /// diagnostics are returned as printable lines.
    pub fn controller(&self, rulebank: Option<&Path>) -> Result<(HydroController, Vec<String>), CliError> {
        let path = rulebank.or(self.rulebank.as_deref());
        let mut notes = Vec::new();
        let base = match path {
            None => HydroController::builtin(self.u_ab_ms.unwrap_or(DEFAULT_U_AB_MS)).map_err(|e| config_err("u_ab_ms", e))?,
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| config_err(p.display(), e))?;
                let doc = RulebankDocument::parse(&text).map_err(|e| config_err(p.display(), e))?;
                for d in doc.diagnostics() {
                    if d.diagnostic.severity >= Severity::Warning {
                        let level = if d.diagnostic.severity == Severity::Error { "error" } else { "warning" };
                        notes.push(format!("{}:{}:{}: {level}: {}", p.display(), d.line, d.column, d.diagnostic.message));
                    }
                }
                let c = HydroController::new(doc.into_definition()).map_err(|e| config_err(p.display(), e))?;
                match self.u_ab_ms {
                    Some(u) => c.with_ab_universe(u).map_err(|e| config_err("u_ab_ms", e))?,
                    None => c,
                }
            }
        };
        Ok((base, notes))
    }
}
