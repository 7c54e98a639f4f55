//! CSV inputs and the trace / telemetry writers.
//!
//! Scenario file header:
//!
//! ```text
//! name,ph,tds,volume_l,ph_lo,ph_hi,tds_lo,tds_hi,drift_ph_per_step,drift_tds_per_step,expected_steps,expected_ph_ms,tolerance_ms
//! ```
//!
//! Only `name`, `ph` and `tds` are required; empty cells fall back to the
//! run configuration. `expected_ph_ms` lists the expected pH-pump duration
//! of each step separated by `;` and is checked to within `tolerance_ms`
//! (100 ms when empty).
//!
//! Validation fixture header: `label,ph,tds,output,reference_ms`, with
//! `output` one of `ph_up`, `ph_down`, `ab_mix`.
//!
//! Observation file header:
//! `ph_before,tds_before,volume_l,ph_up_ms,ph_down_ms,ab_ms,ph_after,tds_after`.

use std::io::{Read, Write};
use std::path::Path;

use fuzzydose_core::control::{StepTrace, TelemetryError, TelemetryRecord, TelemetrySink};
use fuzzydose_core::hydro::{DoseCommand, NormalBand, NutrientReading, OUT_AB_MIX, OUT_PH_DOWN, OUT_PH_UP};
use fuzzydose_core::sim::Observation;
use serde::Deserialize;

use crate::config::Config;
use crate::error::{config_err, CliError};

pub const DEFAULT_TOLERANCE_MS: f64 = 100.0;
pub const TRACE_HEADER: [&str; 8] = ["step", "ph_before", "tds_before", "ph_up_ms", "ph_down_ms", "ab_ms", "ph_after", "tds_after"];

#[derive(Debug, Deserialize)]
struct ScenarioRow {
    name: String,
    ph: f64,
    tds: f64,
    volume_l: Option<f64>,
    ph_lo: Option<f64>,
    ph_hi: Option<f64>,
    tds_lo: Option<f64>,
    tds_hi: Option<f64>,
    drift_ph_per_step: Option<f64>,
    drift_tds_per_step: Option<f64>,
    expected_steps: Option<usize>,
    expected_ph_ms: Option<String>,
    tolerance_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub start: NutrientReading,
    pub volume_l: f64,
    pub band: NormalBand,
    pub drift_ph_per_step: f64,
    pub drift_tds_per_step: f64,
    pub expected_steps: Option<usize>,
    pub expected_ph_ms: Vec<f64>,
    pub tolerance_ms: f64,
}

fn read_rows<T: for<'de> Deserialize<'de>, R: Read>(reader: R, source: &str) -> Result<Vec<T>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(|e| config_err(source, e))).collect()
}

fn open(path: &Path) -> Result<std::fs::File, CliError> {
    std::fs::File::open(path).map_err(|e| config_err(path.display(), e))
}

pub fn parse_scenarios<R: Read>(reader: R, source: &str, config: &Config) -> Result<Vec<Scenario>, CliError> {
    let rows: Vec<ScenarioRow> = read_rows(reader, source)?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        let bad = |what: &str| config_err(source, format!("scenario {} (`{}`): {what}", i + 1, r.name));
        if !(0.0..=14.0).contains(&r.ph) || !(r.tds >= 0.0) || !r.tds.is_finite() {
            return Err(bad("initial reading outside sensor range"));
        }
        let cb = config.band();
        let band = NormalBand::new(
            r.ph_lo.unwrap_or(cb.ph_lo),
            r.ph_hi.unwrap_or(cb.ph_hi),
            r.tds_lo.unwrap_or(cb.tds_lo),
            r.tds_hi.unwrap_or(cb.tds_hi),
        )
        .ok_or_else(|| bad("empty normal band"))?;
        let expected_ph_ms = match r.expected_ph_ms.as_deref().map(str::trim) {
            None | Some("") => Vec::new(),
            Some(list) => list
                .split(';')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(&format!("expected_ph_ms: {e}")))?,
        };
        let tolerance_ms = r.tolerance_ms.unwrap_or(DEFAULT_TOLERANCE_MS);
        if !(tolerance_ms >= 0.0) {
            return Err(bad("negative tolerance"));
        }
        out.push(Scenario {
            start: NutrientReading { ph: r.ph, tds: r.tds },
            volume_l: r.volume_l.unwrap_or(config.volume_l),
            band,
            drift_ph_per_step: r.drift_ph_per_step.unwrap_or(config.drift_ph_per_step),
            drift_tds_per_step: r.drift_tds_per_step.unwrap_or(config.drift_tds_per_step),
            expected_steps: r.expected_steps,
            expected_ph_ms,
            tolerance_ms,
            name: r.name,
        });
    }
    Ok(out)
}

pub fn read_scenarios(path: &Path, config: &Config) -> Result<Vec<Scenario>, CliError> {
    parse_scenarios(open(path)?, &path.display().to_string(), config)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FixtureCase {
    pub label: String,
    pub ph: f64,
    pub tds: f64,
    pub output: String,
    pub reference_ms: f64,
}

pub fn parse_fixture<R: Read>(reader: R, source: &str) -> Result<Vec<FixtureCase>, CliError> {
    let rows: Vec<FixtureCase> = read_rows(reader, source)?;
    for (i, c) in rows.iter().enumerate() {
        if ![OUT_PH_UP, OUT_PH_DOWN, OUT_AB_MIX].contains(&c.output.as_str()) {
            return Err(config_err(source, format!("case {}: unknown output `{}`", i + 1, c.output)));
        }
        if !(c.ph.is_finite() && c.tds.is_finite() && c.reference_ms.is_finite()) {
            return Err(config_err(source, format!("case {}: non-finite value", i + 1)));
        }
    }
    Ok(rows)
}

pub fn read_fixture(path: &Path) -> Result<Vec<FixtureCase>, CliError> {
    parse_fixture(open(path)?, &path.display().to_string())
}

#[derive(Debug, Deserialize)]
struct ObservationRow {
    ph_before: f64,
    tds_before: f64,
    volume_l: Option<f64>,
    ph_up_ms: f64,
    ph_down_ms: f64,
    ab_ms: f64,
    ph_after: f64,
    tds_after: f64,
}

/// Observations; an empty `volume_l` means `default_volume_l`.
pub fn parse_observations<R: Read>(reader: R, source: &str, default_volume_l: f64) -> Result<Vec<Observation>, CliError> {
    let rows: Vec<ObservationRow> = read_rows(reader, source)?;
    Ok(rows
        .into_iter()
        .map(|r| Observation {
            before: NutrientReading { ph: r.ph_before, tds: r.tds_before },
            volume_l: r.volume_l.unwrap_or(default_volume_l),
            dose: DoseCommand::new(r.ph_up_ms, r.ph_down_ms, r.ab_ms),
            after: NutrientReading { ph: r.ph_after, tds: r.tds_after },
        })
        .collect())
}

pub fn read_observations(path: &Path, default_volume_l: f64) -> Result<Vec<Observation>, CliError> {
    parse_observations(open(path)?, &path.display().to_string(), default_volume_l)
}

/// Trace CSV with the fixed header.
pub fn write_trace<W: Write>(out: W, steps: &[StepTrace]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for s in steps {
        w.write_record(&[
            s.step.to_string(),
            s.before.ph.to_string(),
            s.before.tds.to_string(),
            s.dose.ph_up_ms.to_string(),
            s.dose.ph_down_ms.to_string(),
            s.dose.ab_mix_ms.to_string(),
            s.after.ph.to_string(),
            s.after.tds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line.
pub struct JsonLinesSink<W: Write> {
    out: W,
}

impl<W: Write> JsonLinesSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> TelemetrySink for JsonLinesSink<W> {
    fn emit(&mut self, record: &TelemetryRecord) -> Result<(), TelemetryError> {
        let line = serde_json::to_string(record).map_err(|e| TelemetryError(e.to_string()))?;
        writeln!(self.out, "{line}").map_err(|e| TelemetryError(e.to_string()))
    }
}
