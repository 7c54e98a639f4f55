use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use fuzzydose_core::control::{
    ControlLoop, Device, PumpFlags, SimulatedDevice, Supervisor, TelemetryScheduler, WaterLevelController,
};
use fuzzydose_core::hydro::{
    clamp_inputs, fit_ab_universe, HydroController, NutrientReading, MIN_U_AB_MS, OUT_AB_MIX, OUT_PH_DOWN, OUT_PH_UP, PH_MAX, TDS_MAX,
};
use fuzzydose_core::sim::{calibrate_dose_params, CalibrationSetup, DoseParams, FitTargets, ReservoirState, SETTLE_S};
use fuzzydose_core::validation::{summarize, ErrorSummary};
use serde::Serialize;

use crate::config::Config;
use crate::error::{config_err, CliError};
use crate::files::{self, JsonLinesSink};
use crate::FitParam;

/// Pseudo-output combining pH Up and pH Down.
pub const PH_SURFACE: &str = "ph";
pub const DEFAULT_RUN_DIR: &str = "fuzzydose-out";

pub struct Context {
    pub config: Config,
    pub rulebank: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Context {
    pub fn controller(&self, err: &mut dyn Write) -> Result<HydroController, CliError> {
        let (ctl, notes) = self.config.controller(self.rulebank.as_deref())?;
        for n in notes {
            let _ = writeln!(err, "{n}");
        }
        Ok(ctl)
    }

    fn out_dir(&self) -> Result<Option<&Path>, CliError> {
        if let Some(d) = &self.out_dir {
            fs::create_dir_all(d).map_err(|e| config_err(d.display(), e))?;
        }
        Ok(self.out_dir.as_deref())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Failed(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be a finite number, got {v}")))
    }
}

pub fn infer(ctx: &Context, ph: f64, tds: f64, verbose: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let ctl = ctx.controller(err)?;
    let reading = clamp_inputs(finite("ph", ph)?, finite("tds", tds)?).map_err(|e| CliError::Usage(e.to_string()))?;
    if reading.ph != ph {
        let _ = writeln!(err, "note: pH {ph} clamped to {}", reading.ph);
    }
    if reading.tds != tds {
        let _ = writeln!(err, "note: TDS {tds} clamped to {}", reading.tds);
    }
    let eval = ctl.evaluate(&reading).map_err(|e| CliError::Failed(e.to_string()))?;
    let dose = eval.raw.rounded();
    let w = |e: std::io::Error| CliError::Failed(e.to_string());
    writeln!(out, "ph_up_ms    {:.2}", dose.ph_up_ms).map_err(w)?;
    writeln!(out, "ph_down_ms  {:.2}", dose.ph_down_ms).map_err(w)?;
    writeln!(out, "ab_mix_ms   {:.2}", dose.ab_mix_ms).map_err(w)?;
    if verbose {
        let rules = ctl.definition().rules();
        for a in &eval.activations {
            writeln!(out, "rule {:>2}  {:.4}  {}", a.rule, a.strength, rules[a.rule - 1]).map_err(w)?;
        }
    }
    Ok(())
}

/// Grid values of one surface, row-major over pH then TDS.
pub fn surface_grid(ctl: &HydroController, output: &str, ph_steps: usize, tds_steps: usize) -> Result<Vec<(f64, f64, f64)>, CliError> {
    if ph_steps < 2 || tds_steps < 2 {
        return Err(CliError::Usage("a surface needs at least 2 grid steps per axis".into()));
    }
    let known = output == PH_SURFACE || [OUT_PH_UP, OUT_PH_DOWN, OUT_AB_MIX].contains(&output) || ctl.definition().output_index(output).is_some();
    if !known {
        let names: Vec<&str> = ctl.definition().outputs().iter().map(|v| v.name()).collect();
        return Err(CliError::Usage(format!("unknown output `{output}`; expected `{PH_SURFACE}` or one of {}", names.join(", "))));
    }
    let mut rows = Vec::with_capacity(ph_steps * tds_steps);
    for i in 0..ph_steps {
        let ph = i as f64 * PH_MAX / (ph_steps - 1) as f64;
        for j in 0..tds_steps {
            let tds = j as f64 * TDS_MAX / (tds_steps - 1) as f64;
            let r = NutrientReading { ph, tds };
            let v = if output == PH_SURFACE {
                let (up, down) = ctl.ph_raw(&r).map_err(|e| CliError::Failed(e.to_string()))?;
                up + down
            } else {
                ctl.output_raw(&r, output).map_err(|e| CliError::Failed(e.to_string()))?
            };
            rows.push((ph, tds, (v * 100.0).round() / 100.0));
        }
    }
    Ok(rows)
}

pub fn surface(ctx: &Context, output: &str, ph_steps: usize, tds_steps: usize, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let ctl = ctx.controller(err)?;
    let rows = surface_grid(&ctl, output, ph_steps, tds_steps)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Failed(e.to_string());
    w.write_record(["ph", "tds", "duration_ms"]).map_err(csv_err)?;
    for (ph, tds, v) in &rows {
        w.write_record([ph.to_string(), tds.to_string(), format!("{v:.2}")]).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
    match ctx.out_dir()? {
        Some(dir) => write_file(&dir.join(format!("surface_{output}.csv")), &bytes)?,
        None => out.write_all(&bytes).map_err(|e| CliError::Failed(e.to_string()))?,
    }
    if let Some(max) = rows.iter().max_by(|a, b| a.2.total_cmp(&b.2)) {
        let _ = writeln!(err, "{output}: max {:.2} ms at pH {}, TDS {}", max.2, max.0, max.1);
    }
    Ok(())
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn run_scenarios(ctx: &Context, path: &Path, duration_s: f64, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if !(duration_s >= 0.0) || !duration_s.is_finite() {
        return Err(CliError::Usage(format!("--duration-s must be non-negative, got {duration_s}")));
    }
    let ctl = ctx.controller(err)?;
    let scenarios = files::read_scenarios(path, &ctx.config)?;
    let dir = match ctx.out_dir()? {
        Some(d) => d.to_path_buf(),
        None => {
            let d = PathBuf::from(DEFAULT_RUN_DIR);
            fs::create_dir_all(&d).map_err(|e| config_err(d.display(), e))?;
            d
        }
    };
    let cfg = &ctx.config;
    let w = |e: std::io::Error| CliError::Failed(e.to_string());
    writeln!(out, "{:<12} {:>14} {:>6} {:>9} {:>14}  status", "experiment", "start", "steps", "expected", "final").map_err(w)?;
    let mut failed = Vec::new();
    for sc in &scenarios {
        let params = DoseParams { drift_ph_per_step: sc.drift_ph_per_step, drift_tds_per_step: sc.drift_tds_per_step, ..cfg.dose_params() };
        params.validate().map_err(|e| config_err(&sc.name, e))?;
        let state = ReservoirState::from_reading(&sc.start, sc.volume_l, cfg.buffer_capacity).map_err(|e| config_err(&sc.name, e))?;
        let mut device = SimulatedDevice::new(state, params).with_level_model(cfg.level_model());
        let control = ControlLoop { controller: ctl.clone(), band: sc.band, settle_s: SETTLE_S, max_steps: cfg.max_steps };

        let stem = file_stem(&sc.name);
        let tel_path = dir.join(format!("telemetry_{stem}.jsonl"));
        let file = fs::File::create(&tel_path).map_err(|e| io_err(&tel_path, e))?;
        let mut sink = JsonLinesSink::new(BufWriter::new(file));
        let mut sched = TelemetryScheduler::new(cfg.telemetry_cadence_s, device.now_s()).expect("validated cadence");
        let level = cfg.level_model();

        let outcome = control
            .run_until_normal_with(&mut device, |trace, dev| {
                sched.note_pumps(PumpFlags {
                    water: false,
                    ph_up: trace.dose.ph_up_ms > 0.0,
                    ph_down: trace.dose.ph_down_ms > 0.0,
                    ab: trace.dose.ab_mix_ms > 0.0,
                });
                sched.poll(dev.now_s(), &mut sink, || {
                    let v = dev.read_level_distance().ok().and_then(|d| level.level_to_volume(d).ok());
                    (v, dev.read_ph().ok(), dev.read_tds().ok())
                });
            })
            .map_err(|e| CliError::Failed(format!("{}: {e}", sc.name)))?;
        let remaining = duration_s - device.now_s();
        if remaining > 0.0 {
            let mut sup = Supervisor::new(control.clone(), WaterLevelController::new(level), cfg.telemetry_cadence_s);
            sup.run_for_with(&mut device, remaining, &mut sink, &mut sched)
                .map_err(|e| CliError::Failed(format!("{}: {e}", sc.name)))?;
        }
        sink.into_inner().flush().map_err(|e| io_err(&tel_path, e))?;
        if !sched.errors().is_empty() {
            let _ = writeln!(err, "{}: {} telemetry write failures", sc.name, sched.errors().len());
        }

        let trace_path = dir.join(format!("trace_{stem}.csv"));
        let mut buf = Vec::new();
        files::write_trace(&mut buf, &outcome.steps).map_err(|e| io_err(&trace_path, e))?;
        write_file(&trace_path, &buf)?;

        let ph_ms: Vec<f64> = outcome.steps.iter().map(|s| s.dose.ph_up_ms + s.dose.ph_down_ms).collect();
        let mut problems = Vec::new();
        if !outcome.converged {
            problems.push(format!("not normal after {} steps", outcome.steps.len()));
        }
        if let Some(n) = sc.expected_steps {
            if n != outcome.steps.len() {
                problems.push(format!("{} steps, expected {n}", outcome.steps.len()));
            }
        }
        for (k, (got, want)) in ph_ms.iter().zip(&sc.expected_ph_ms).enumerate() {
            if (got - want).abs() > sc.tolerance_ms {
                problems.push(format!("step {} pH pump {got:.2} ms, expected {want} ± {} ms", k + 1, sc.tolerance_ms));
            }
        }
        let status = if problems.is_empty() { "ok".to_string() } else { problems.join("; ") };
        writeln!(
            out,
            "{:<12} {:>14} {:>6} {:>9} {:>14}  {status}",
            sc.name,
            format!("{:.2}/{:.0}", sc.start.ph, sc.start.tds),
            outcome.steps.len(),
            sc.expected_steps.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            format!("{:.2}/{:.0}", outcome.last.ph, outcome.last.tds),
        )
        .map_err(w)?;
        if !problems.is_empty() {
            failed.push(format!("{} ({})", sc.name, problems.join("; ")));
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(format!("scenario check failed: {}", failed.join(", "))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub label: String,
    pub ph: f64,
    pub tds: f64,
    pub output: String,
    pub reference_ms: f64,
    pub simulated_ms: f64,
    pub error_ms: f64,
}

/// Summaries over all cases and over the pH-pump and AB-mix subsets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub normalization: &'static str,
    pub cases: Vec<CaseResult>,
    pub all: ErrorSummary,
    pub ph: Option<ErrorSummary>,
    pub ab_mix: Option<ErrorSummary>,
}

pub fn validation_report(ctl: &HydroController, cases: &[files::FixtureCase]) -> Result<ValidationReport, CliError> {
    if cases.is_empty() {
        return Err(CliError::Failed("validation fixture has no cases".into()));
    }
    let mut results = Vec::with_capacity(cases.len());
    for c in cases {
        let reading = clamp_inputs(c.ph, c.tds).map_err(|e| CliError::Config(e.to_string()))?;
        let sim = ctl.output_raw(&reading, &c.output).map_err(|e| CliError::Config(e.to_string()))?;
        let sim = (sim * 100.0).round() / 100.0;
        results.push(CaseResult {
            label: c.label.clone(),
            ph: c.ph,
            tds: c.tds,
            output: c.output.clone(),
            reference_ms: c.reference_ms,
            simulated_ms: sim,
            error_ms: sim - c.reference_ms,
        });
    }
    let group = |pred: &dyn Fn(&CaseResult) -> bool| -> Option<ErrorSummary> {
        let (r, a): (Vec<f64>, Vec<f64>) = results.iter().filter(|c| pred(c)).map(|c| (c.reference_ms, c.simulated_ms)).unzip();
        summarize(&r, &a).ok()
    };
    let all = group(&|_| true).ok_or_else(|| CliError::Failed("no comparable cases".into()))?;
    let ph = group(&|c| c.output == OUT_PH_UP || c.output == OUT_PH_DOWN);
    let ab_mix = group(&|c| c.output == OUT_AB_MIX);
    for s in [Some(all), ph, ab_mix].into_iter().flatten() {
        assert!(s.rmse <= s.max_abs, "rmse above max error: {s:?}");
    }
    Ok(ValidationReport { normalization: "rmse / (max(reference) - min(reference))", cases: results, all, ph, ab_mix })
}

fn summary_line(name: &str, s: &ErrorSummary) -> String {
    let nrmse = s.nrmse.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
    format!("{name:<8} n={:<3} rmse={:.2} ms  nrmse={nrmse}  max={:.2} ms  mean={:.2} ms", s.n, s.rmse, s.max_abs, s.mean_abs)
}

pub fn validate(
    ctx: &Context,
    fixture: &Path,
    max_ph_error_ms: Option<f64>,
    max_ab_error_ms: Option<f64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let ctl = ctx.controller(err)?;
    let cases = files::read_fixture(fixture)?;
    let report = validation_report(&ctl, &cases)?;
    let w = |e: std::io::Error| CliError::Failed(e.to_string());
    writeln!(out, "{:<10} {:>6} {:>6} {:<8} {:>10} {:>10} {:>9}", "case", "ph", "tds", "output", "reference", "simulated", "error").map_err(w)?;
    for c in &report.cases {
        writeln!(
            out,
            "{:<10} {:>6.2} {:>6.0} {:<8} {:>10.2} {:>10.2} {:>9.2}",
            c.label, c.ph, c.tds, c.output, c.reference_ms, c.simulated_ms, c.error_ms
        )
        .map_err(w)?;
    }
    writeln!(out, "# normalised RMSE = {}", report.normalization).map_err(w)?;
    writeln!(out, "{}", summary_line("all", &report.all)).map_err(w)?;
    if let Some(s) = &report.ph {
        writeln!(out, "{}", summary_line("ph", s)).map_err(w)?;
    }
    if let Some(s) = &report.ab_mix {
        writeln!(out, "{}", summary_line("ab_mix", s)).map_err(w)?;
    }
    if let Some(dir) = ctx.out_dir()? {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Failed(e.to_string()))?;
        write_file(&dir.join("validation.json"), json.as_bytes())?;
    }
    let mut over = Vec::new();
    for (name, limit, s) in [("pH", max_ph_error_ms, &report.ph), ("AB-mix", max_ab_error_ms, &report.ab_mix)] {
        if let (Some(limit), Some(s)) = (limit, s) {
            if s.max_abs > limit {
                over.push(format!("{name} max error {:.2} ms exceeds {limit} ms", s.max_abs));
            }
        }
    }
    if over.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(over.join("; ")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CalibrationFragment {
    #[serde(skip_serializing_if = "Option::is_none")]
    c_ab_ppm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_up_eq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_down_eq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u_ab_ms: Option<f64>,
}

/// Bracket searched for the AB-mix range bound, ms.
pub const AB_RANGE_SEARCH_MAX_MS: f64 = 20_000.0;

pub fn calibrate(
    ctx: &Context,
    path: &Path,
    fit: &[FitParam],
    ab: Option<(f64, f64, f64)>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let observations = files::read_observations(path, cfg.volume_l)?;
    if observations.is_empty() {
        return Err(CliError::Config(format!("{}: no observations", path.display())));
    }
    let targets = FitTargets { c_ab: fit.contains(&FitParam::CAb), c_up: fit.contains(&FitParam::CUp), c_down: fit.contains(&FitParam::CDown) };
    let setup = CalibrationSetup { initial: cfg.dose_params(), buffer_capacity: cfg.buffer_capacity, targets, ..CalibrationSetup::default() };
    let cal = calibrate_dose_params(&observations, &setup).map_err(|e| CliError::Failed(e.to_string()))?;

    let u_ab = match ab {
        None => None,
        Some((target, ph, tds)) => {
            let reading = clamp_inputs(finite("ab-ph", ph)?, finite("ab-tds", tds)?).map_err(|e| CliError::Usage(e.to_string()))?;
            let ctl = ctx.controller(err)?;
            let u = fit_ab_universe(&ctl, &reading, target, MIN_U_AB_MS, AB_RANGE_SEARCH_MAX_MS).map_err(|e| CliError::Failed(e.to_string()))?;
            // nearest 0.1 ms keeps the fragment readable; the fit is far flatter than that
            Some((u * 10.0).round() / 10.0)
        }
    };

    let p = cal.params;
    let fragment = CalibrationFragment {
        c_ab_ppm: targets.c_ab.then_some(p.c_ab_ppm.round()),
        c_up_eq: targets.c_up.then_some((p.c_up_eq * 1e4).round() / 1e4),
        c_down_eq: targets.c_down.then_some((p.c_down_eq * 1e4).round() / 1e4),
        u_ab_ms: u_ab,
    };
    let mut text = format!(
        "# fitted from {} observations; buffer_capacity = {}; volume {} L where not given\n",
        observations.len(),
        cfg.buffer_capacity,
        cfg.volume_l
    );
    text.push_str(&toml::to_string(&fragment).map_err(|e| CliError::Failed(e.to_string()))?);
    out.write_all(text.as_bytes()).map_err(|e| CliError::Failed(e.to_string()))?;

    let _ = writeln!(err, "{:>4} {:>6} {:>6} {:>10} {:>10}", "obs", "ph", "tds", "d_ph", "d_tds");
    for (i, (o, r)) in observations.iter().zip(&cal.residuals).enumerate() {
        let _ = writeln!(err, "{:>4} {:>6.2} {:>6.0} {:>10.4} {:>10.2}", i + 1, o.before.ph, o.before.tds, r.ph, r.tds_ppm);
    }
    let _ = writeln!(err, "rms pH residual {:.4}, rms TDS residual {:.2} ppm", cal.rms_ph, cal.rms_tds_ppm);
    if let Some(dir) = ctx.out_dir()? {
        write_file(&dir.join("calibrated.toml"), text.as_bytes())?;
        let json = serde_json::to_string_pretty(&cal).map_err(|e| CliError::Failed(e.to_string()))?;
        write_file(&dir.join("calibration.json"), json.as_bytes())?;
    }
    Ok(())
}
