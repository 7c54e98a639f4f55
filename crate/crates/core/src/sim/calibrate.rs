use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::reservoir::{DoseParams, ReservoirState, DEFAULT_BUFFER_CAPACITY, SETTLE_S};
use super::SimError;
use crate::hydro::{DoseCommand, NutrientReading};
use crate::math::{exp, ln, sqrt};

/// One control step seen on the plant: reading, dose, reading after settling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub before: NutrientReading,
    pub volume_l: f64,
    pub dose: DoseCommand,
    pub after: NutrientReading,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitTargets {
    pub c_ab: bool,
    pub c_up: bool,
    pub c_down: bool,
}

impl FitTargets {
    pub const ALL: FitTargets = FitTargets { c_ab: true, c_up: true, c_down: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSetup {
    /// Starting point; parameters not being fitted are kept as is.
    pub initial: DoseParams,
    pub buffer_capacity: f64,
    pub targets: FitTargets,
    /// TDS residuals are divided by this so that 1 pH unit and this many
    /// ppm weigh the same in the reported cost.
    pub tds_scale_ppm: f64,
}

impl Default for CalibrationSetup {
    fn default() -> Self {
        Self {
            initial: DoseParams { c_up_eq: 0.1, c_down_eq: 0.1, ..DoseParams::default() },
            buffer_capacity: DEFAULT_BUFFER_CAPACITY,
            targets: FitTargets::ALL,
            tds_scale_ppm: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationResidual {
    /// Predicted minus observed.
    pub ph: f64,
    pub tds_ppm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub params: DoseParams,
    pub residuals: Vec<ObservationResidual>,
    pub rms_ph: f64,
    pub rms_tds_ppm: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CalibrationError {
    #[error("no observations")]
    NoObservations,
    #[error("underdetermined fit: no observation with {}", missing.join(", no observation with "))]
    Underdetermined { missing: Vec<&'static str> },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("fit did not produce finite parameters")]
    Diverged,
}

fn predict(o: &Observation, p: &DoseParams, beta: f64) -> Result<ReservoirState, SimError> {
    ReservoirState::from_reading(&o.before, o.volume_l, beta)?.apply_dose(&o.dose, p)?.advance_time(SETTLE_S, p)
}

/// Least-squares fit of the stock concentrations to observed steps.
///
/// TDS does not depend on the pH concentrates and pH does not depend on the
/// AB stock, so the two fits are separate: `c_ab` in closed form (predicted
/// TDS is affine in it), `c_up`/`c_down` by Levenberg–Marquardt on their
/// logarithms.
pub fn calibrate_dose_params(observations: &[Observation], setup: &CalibrationSetup) -> Result<Calibration, CalibrationError> {
    if observations.is_empty() {
        return Err(CalibrationError::NoObservations);
    }
    let t = setup.targets;
    let mut missing = Vec::new();
    if t.c_ab && !observations.iter().any(|o| o.dose.ab_mix_ms > 0.0) {
        missing.push("an AB-mix dose");
    }
    if t.c_up && !observations.iter().any(|o| o.dose.ph_up_ms > 0.0) {
        missing.push("a pH-Up dose");
    }
    if t.c_down && !observations.iter().any(|o| o.dose.ph_down_ms > 0.0) {
        missing.push("a pH-Down dose");
    }
    if !missing.is_empty() {
        return Err(CalibrationError::Underdetermined { missing });
    }
    let beta = setup.buffer_capacity;
    let mut params = setup.initial;

    if t.c_ab {
        let (mut num, mut den) = (0.0, 0.0);
        for o in observations {
            let a = predict(o, &DoseParams { c_ab_ppm: 0.0, ..params }, beta)?.tds_ppm;
            let b = predict(o, &DoseParams { c_ab_ppm: 1.0, ..params }, beta)?.tds_ppm - a;
            num += b * (o.after.tds - a);
            den += b * b;
        }
        params.c_ab_ppm = num / den;
    }

    let mut which = Vec::new();
    if t.c_up {
        which.push(0);
    }
    if t.c_down {
        which.push(1);
    }
    if !which.is_empty() {
        let with = |theta: &[f64]| {
            let mut p = params;
            for (&w, &x) in which.iter().zip(theta) {
                let c = exp(x);
                if w == 0 {
                    p.c_up_eq = c;
                } else {
                    p.c_down_eq = c;
                }
            }
            p
        };
        let residuals = |theta: &[f64]| -> Result<Vec<f64>, SimError> {
            let p = with(theta);
            observations.iter().map(|o| Ok(predict(o, &p, beta)?.ph() - o.after.ph)).collect()
        };
        let start: Vec<f64> = which.iter().map(|&w| ln(if w == 0 { params.c_up_eq } else { params.c_down_eq })).collect();
        let theta = levenberg_marquardt(start, residuals)?;
        params = with(&theta);
    }
    let finite = [params.c_ab_ppm, params.c_up_eq, params.c_down_eq].iter().all(|x| x.is_finite());
    if !finite {
        return Err(CalibrationError::Diverged);
    }

    let mut residuals = Vec::with_capacity(observations.len());
    for o in observations {
        let s = predict(o, &params, beta)?;
        residuals.push(ObservationResidual { ph: s.ph() - o.after.ph, tds_ppm: s.tds_ppm - o.after.tds });
    }
    let n = residuals.len() as f64;
    let rms_ph = sqrt(residuals.iter().map(|r| r.ph * r.ph).sum::<f64>() / n);
    let rms_tds_ppm = sqrt(residuals.iter().map(|r| r.tds_ppm * r.tds_ppm).sum::<f64>() / n);
    Ok(Calibration { params, residuals, rms_ph, rms_tds_ppm })
}

fn cost(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

// Small dense LM with a central-difference Jacobian; k is at most 2 here.
fn levenberg_marquardt<F>(mut x: Vec<f64>, f: F) -> Result<Vec<f64>, SimError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, SimError>,
{
    let k = x.len();
    let mut r = f(&x)?;
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jac = vec![vec![0.0; k]; r.len()];
        for j in 0..k {
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (f(&xp)?, f(&xm)?);
            for i in 0..r.len() {
                jac[i][j] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let mut jtj = vec![vec![0.0; k]; k];
        let mut jtr = vec![0.0; k];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..k {
                jtr[a] += row[a] * ri;
                for b in 0..k {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj.clone();
            for a in 0..k {
                m[a][a] += lambda * jtj[a][a].max(1e-12);
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(step) = solve(m, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            let rt = f(&trial)?;
            let ct = cost(&rt);
            if ct < c {
                let small = step.iter().all(|s| s.abs() < 1e-12);
                let flat = c - ct <= 1e-15 * c.max(1e-300);
                x = trial;
                r = rt;
                c = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !(small || flat);
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(x)
}

// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
