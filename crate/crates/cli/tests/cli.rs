use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fuzzydose_cli::commands::surface_grid;
use fuzzydose_cli::config::Config;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn fuzzydose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuzzydose")).args(args).output().expect("binary runs")
}

fn calibrated() -> String {
    data("calibrated.toml").display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn infer_prints_three_durations() {
    let o = fuzzydose(&["infer", "--ph", "4.54", "--tds", "272"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("ph_up_ms    689.09"), "{text}");
    assert!(text.contains("ph_down_ms  0.00"), "{text}");
    assert!(!text.contains("rule"));
}

#[test]
fn infer_verbose_lists_fired_rules() {
    let o = fuzzydose(&["infer", "--ph", "4.54", "--tds", "272", "--verbose"]);
    let text = stdout(&o);
    assert!(text.contains("rule  4  0.6400  IF ph IS weak_acid AND tds IS very_low"), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("rule")).count(), 4);
}

#[test]
fn infer_clamps_with_note() {
    let o = fuzzydose(&["infer", "--ph", "15", "--tds", "-3"]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("clamped to 14") && err.contains("clamped to 0"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(fuzzydose(&["infer", "--ph", "4"]).status.code(), Some(1));
    assert_eq!(fuzzydose(&["surface", "water"]).status.code(), Some(1));
    assert_eq!(fuzzydose(&["surface", "ph", "--ph-steps", "1"]).status.code(), Some(1));
    assert_eq!(fuzzydose(&["infer", "--ph", "NaN", "--tds", "3"]).status.code(), Some(1));
    assert_eq!(fuzzydose(&["calibrate", "x.csv", "--fit", "c_water"]).status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    assert_eq!(fuzzydose(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "c_ab = 1\n").unwrap();
    assert_eq!(fuzzydose(&["--config", cfg.to_str().unwrap(), "infer", "--ph", "6", "--tds", "6"]).status.code(), Some(3));
    assert_eq!(fuzzydose(&["--config", "/nonexistent.toml", "infer", "--ph", "6", "--tds", "6"]).status.code(), Some(3));
    assert_eq!(fuzzydose(&["run", "/nonexistent.csv"]).status.code(), Some(3));

    let rb = dir.path().join("bad.fzb");
    fs::write(&rb, "input ph [0, 14]\n  term x = trapezoid(0, 1)\n").unwrap();
    let o = fuzzydose(&["--rulebank", rb.to_str().unwrap(), "infer", "--ph", "6", "--tds", "6"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn rulebank_override_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let rb = dir.path().join("hydro.fzb");
    fs::write(&rb, fuzzydose_core::hydro::HYDRO_RULEBANK).unwrap();
    let a = fuzzydose(&["--rulebank", rb.to_str().unwrap(), "infer", "--ph", "10.55", "--tds", "324"]);
    let b = fuzzydose(&["infer", "--ph", "10.55", "--tds", "324"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn scenarios_converge_and_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = fuzzydose(&["--config", &calibrated(), "--out", dir.path().to_str().unwrap(), "run", data("scenarios.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = stdout(&o);
    for (name, steps) in [("exp1", 1), ("exp2", 1), ("exp3", 2), ("exp4", 1), ("exp5", 3), ("exp6", 2)] {
        let line = table.lines().find(|l| l.starts_with(name)).unwrap();
        let cols: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(cols[2], steps.to_string(), "{line}");
        assert!(line.ends_with("ok"), "{line}");
        let trace = fs::read_to_string(dir.path().join(format!("trace_{name}.csv"))).unwrap();
        assert_eq!(trace.lines().count(), steps + 1);
        let telemetry = fs::read_to_string(dir.path().join(format!("telemetry_{name}.jsonl"))).unwrap();
        assert_eq!(telemetry.lines().count(), 3, "900 s at a 300 s cadence");
    }
}

#[test]
fn already_normal_scenario_takes_no_steps() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.csv");
    fs::write(&sc, "name,ph,tds,expected_steps\nnormal,6.0,1200,0\n").unwrap();
    let o = fuzzydose(&["--out", dir.path().to_str().unwrap(), "run", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let trace = fs::read_to_string(dir.path().join("trace_normal.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);
}

#[test]
fn runaway_drift_fails_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.csv");
    fs::write(&sc, "name,ph,tds,drift_ph_per_step\nrunaway,3.0,1200,-5\nfine,6.0,1200,\n").unwrap();
    let o = fuzzydose(&["--out", dir.path().to_str().unwrap(), "run", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("runaway") && err.contains("not normal"), "{err}");
    assert!(!err.contains("fine ("), "{err}");
}

#[test]
fn wrong_expected_duration_fails() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("s.csv");
    fs::write(&sc, "name,ph,tds,expected_ph_ms,tolerance_ms\nexp4,4.54,117,900,50\n").unwrap();
    let o = fuzzydose(&["--out", dir.path().to_str().unwrap(), "run", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("expected 900"));
}

#[test]
fn runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = fuzzydose(&["--config", &calibrated(), "--out", d.path().to_str().unwrap(), "run", data("scenarios.csv").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let s = fuzzydose(&["--config", &calibrated(), "--out", d.path().to_str().unwrap(), "surface", "ph", "--ph-steps", "57", "--tds-steps", "29"]);
        assert_eq!(s.status.code(), Some(0));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 13);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

#[test]
fn surface_csv_layout() {
    let o = fuzzydose(&["surface", "ab_mix", "--ph-steps", "3", "--tds-steps", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "ph,tds,duration_ms");
    assert_eq!(lines.len(), 7);
    assert!(lines[1].starts_with("0,0,"));
    assert!(lines[6].starts_with("14,1400,"));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.starts_with("ab_mix: max"), "{err}");
}

fn max_jump(grid: &[(f64, f64, f64)], n: usize, nonzero_only: bool) -> f64 {
    let z = |i: usize, j: usize| grid[i * n + j].2;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for (k, l) in [(i + 1, j), (i, j + 1)] {
                if k < n && l < n && (!nonzero_only || (z(i, j) != 0.0 && z(k, l) != 0.0)) {
                    worst = worst.max((z(i, j) - z(k, l)).abs());
                }
            }
        }
    }
    worst
}

// Outputs switch to exactly 0 where no rule fires for them. Everywhere else
// the surface is Lipschitz: a 4x finer grid shrinks the worst neighbour step
// several times over, where a jump would not shrink at all.
#[test]
fn surfaces_are_continuous_away_from_zero_edges() {
    let (ctl, _) = Config::parse("u_ab_ms = 7733.0").unwrap().controller(None).unwrap();
    for output in ["ph", "ph_up", "ph_down", "ab_mix"] {
        let coarse = surface_grid(&ctl, output, 71, 71).unwrap();
        let fine = surface_grid(&ctl, output, 281, 281).unwrap();
        let (jc, jf) = (max_jump(&coarse, 71, true), max_jump(&fine, 281, true));
        assert!(jf <= jc / 2.0, "{output}: coarse {jc}, fine {jf}");
    }
}

#[test]
fn validate_reports_and_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = data("durations.csv");
    let o = fuzzydose(&["--config", &calibrated(), "--out", dir.path().to_str().unwrap(), "validate", fixture.to_str().unwrap(), "--max-ph-error-ms", "100"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("normalised RMSE = rmse / (max(reference) - min(reference))"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    assert_eq!(json["cases"].as_array().unwrap().len(), 14);
    assert!(json["ph"]["max_abs"].as_f64().unwrap() <= 100.0);

    let o = fuzzydose(&["--config", &calibrated(), "validate", fixture.to_str().unwrap(), "--max-ab-error-ms", "100"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_fixture_fails() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    fs::write(&f, "label,ph,tds,output,reference_ms\n").unwrap();
    assert_eq!(fuzzydose(&["validate", f.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn calibrate_reproduces_bundled_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = fuzzydose(&["--out", dir.path().to_str().unwrap(), "calibrate", data("observations.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let bundled = fs::read_to_string(data("calibrated.toml")).unwrap();
    assert_eq!(stdout(&o), bundled);
    assert_eq!(fs::read_to_string(dir.path().join("calibrated.toml")).unwrap(), bundled);
    let cal: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("calibration.json")).unwrap()).unwrap();
    assert_eq!(cal["residuals"].as_array().unwrap().len(), 10);
    Config::parse(&bundled).unwrap();
}

#[test]
fn calibrate_underdetermined_fails() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("o.csv");
    fs::write(&f, "ph_before,tds_before,volume_l,ph_up_ms,ph_down_ms,ab_ms,ph_after,tds_after\n6.35,110,,0,0,4274,6.34,1124\n").unwrap();
    let o = fuzzydose(&["calibrate", f.to_str().unwrap(), "--no-ab-range"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().contains("pH-Up"));
    let o = fuzzydose(&["calibrate", f.to_str().unwrap(), "--fit", "c_ab", "--no-ab-range"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(!stdout(&o).contains("u_ab_ms"));
}

#[test]
fn calibrate_unreachable_ab_target_fails() {
    let o = fuzzydose(&["calibrate", data("observations.csv").to_str().unwrap(), "--ab-target-ms", "100"]);
    assert_eq!(o.status.code(), Some(2));
}
