//! pH/TDS dosing controller on top of the fuzzy kernel.
//!
//! The built-in system has two inputs (`ph`, `tds`) and three outputs
//! (`ph_up`, `ph_down`, `ab_mix`), each a pump active time in
//! milliseconds. [`HYDRO_RULEBANK`] is the canonical text form;
//! [`builtin_hydro_fis`] builds the same definition in code.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fis::{Clause, FisDefinition, FisError, LinguisticVariable, Rule, Shape, Term, Universe, VarKind};
use crate::math::round_centi;

/// Canonical hydro rulebank (`rulebanks/hydro.fzb`).
pub const HYDRO_RULEBANK: &str = include_str!("../rulebanks/hydro.fzb");

pub const PH_MAX: f64 = 14.0;
/// Inference ceiling for TDS. Higher readings are clamped here: fertiliser
/// stops, pH correction keeps working.
pub const TDS_MAX: f64 = 1400.0;
/// Output universe of the two pH pumps, ms.
pub const PH_PUMP_MAX_MS: f64 = 3000.0;
/// Default upper bound of the AB-mix universe, ms.
pub const DEFAULT_U_AB_MS: f64 = 7500.0;
/// The AB universe must at least contain the slow shoulder.
pub const MIN_U_AB_MS: f64 = 2400.0;

pub const VAR_PH: &str = "ph";
pub const VAR_TDS: &str = "tds";
pub const OUT_PH_UP: &str = "ph_up";
pub const OUT_PH_DOWN: &str = "ph_down";
pub const OUT_AB_MIX: &str = "ab_mix";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HydroError {
    #[error(transparent)]
    Fis(#[from] FisError),
    #[error("definition lacks required variable `{0}`")]
    MissingVariable(&'static str),
    #[error("AB-mix universe bound {0} ms is below {MIN_U_AB_MS} ms")]
    AbUniverseTooSmall(f64),
    #[error("target {target} ms is not reachable for AB-mix bounds in [{lo}, {hi}] ms")]
    TargetOutOfReach { target: f64, lo: f64, hi: f64 },
}

/// A sensor produced NaN or an infinity.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("sensor fault: {quantity} reading is {value}")]
pub struct SensorFault {
    pub quantity: &'static str,
    pub value: f64,
}

/// Clamped pH and TDS pair fed to the controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NutrientReading {
    pub ph: f64,
    pub tds: f64,
}

/// Clamp raw sensor values to the inference ranges: pH to [0, 14], TDS to
/// [0, 1400].
pub fn clamp_inputs(raw_ph: f64, raw_tds: f64) -> Result<NutrientReading, SensorFault> {
    if !raw_ph.is_finite() {
        return Err(SensorFault { quantity: "pH", value: raw_ph });
    }
    if !raw_tds.is_finite() {
        return Err(SensorFault { quantity: "TDS", value: raw_tds });
    }
    Ok(NutrientReading { ph: raw_ph.clamp(0.0, PH_MAX), tds: raw_tds.clamp(0.0, TDS_MAX) })
}

/// Active times of the three dosing pumps, ms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DoseCommand {
    pub ph_up_ms: f64,
    pub ph_down_ms: f64,
    pub ab_mix_ms: f64,
}

impl DoseCommand {
    pub const ZERO: DoseCommand = DoseCommand { ph_up_ms: 0.0, ph_down_ms: 0.0, ab_mix_ms: 0.0 };

    pub fn new(ph_up_ms: f64, ph_down_ms: f64, ab_mix_ms: f64) -> Self {
        Self { ph_up_ms, ph_down_ms, ab_mix_ms }
    }

    pub fn is_zero(&self) -> bool {
        self.ph_up_ms == 0.0 && self.ph_down_ms == 0.0 && self.ab_mix_ms == 0.0
    }

    /// pH Up and pH Down are never both active.
    pub fn is_exclusive(&self) -> bool {
        self.ph_up_ms == 0.0 || self.ph_down_ms == 0.0
    }

    pub fn rounded(&self) -> Self {
        Self {
            ph_up_ms: round_centi(self.ph_up_ms),
            ph_down_ms: round_centi(self.ph_down_ms),
            ab_mix_ms: round_centi(self.ab_mix_ms),
        }
    }
}

/// Target ranges for pH and TDS. Both bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalBand {
    pub ph_lo: f64,
    pub ph_hi: f64,
    pub tds_lo: f64,
    pub tds_hi: f64,
}

impl Default for NormalBand {
    fn default() -> Self {
        Self { ph_lo: 5.5, ph_hi: 6.5, tds_lo: 1050.0, tds_hi: 1400.0 }
    }
}

impl NormalBand {
    pub fn new(ph_lo: f64, ph_hi: f64, tds_lo: f64, tds_hi: f64) -> Option<Self> {
        (ph_lo < ph_hi && tds_lo < tds_hi).then_some(Self { ph_lo, ph_hi, tds_lo, tds_hi })
    }

    pub fn contains(&self, r: &NutrientReading) -> bool {
        (self.ph_lo..=self.ph_hi).contains(&r.ph) && (self.tds_lo..=self.tds_hi).contains(&r.tds)
    }
}

pub fn is_normal(reading: &NutrientReading, band: &NormalBand) -> bool {
    band.contains(reading)
}

fn var(name: &str, kind: VarKind, lo: f64, hi: f64, res: f64, terms: &[(&str, Shape)]) -> Result<LinguisticVariable, FisError> {
    let terms = terms.iter().map(|(n, s)| Term::new(*n, *s)).collect::<Result<Vec<_>, _>>()?;
    LinguisticVariable::new(name, kind, Universe::new(lo, hi, res)?, terms)
}

/// The hydro definition with AB-mix universe `[0, u_ab]`.
pub fn builtin_hydro_fis(u_ab: f64) -> Result<FisDefinition, HydroError> {
    if !(u_ab >= MIN_U_AB_MS) || !u_ab.is_finite() {
        return Err(HydroError::AbUniverseTooSmall(u_ab));
    }
    let timing = |lo, hi| [("fast", Shape::shoulder_down(lo, hi)), ("slow", Shape::shoulder_up(lo, hi))];
    let variables = vec![
        var(
            VAR_PH,
            VarKind::Input,
            0.0,
            PH_MAX,
            0.01,
            &[
                ("strong_acid", Shape::shoulder_down(1.0, 4.0)),
                ("weak_acid", Shape::triangle(1.0, 4.0, 5.5)),
                ("normal", Shape::trapezoid(4.0, 5.5, 6.5, 8.0)),
                ("weak_alkaline", Shape::triangle(6.5, 8.0, 11.0)),
                ("strong_alkaline", Shape::shoulder_up(8.0, 11.0)),
            ],
        )?,
        var(
            VAR_TDS,
            VarKind::Input,
            0.0,
            TDS_MAX,
            1.0,
            &[
                ("very_low", Shape::shoulder_down(150.0, 625.0)),
                ("low", Shape::triangle(150.0, 625.0, 1050.0)),
                ("normal", Shape::trapezoid(625.0, 1050.0, 1400.0, 1400.0)),
            ],
        )?,
        var(OUT_PH_UP, VarKind::Output, 0.0, PH_PUMP_MAX_MS, 1.0, &timing(300.0, 1800.0))?,
        var(OUT_PH_DOWN, VarKind::Output, 0.0, PH_PUMP_MAX_MS, 1.0, &timing(300.0, 1800.0))?,
        var(OUT_AB_MIX, VarKind::Output, 0.0, u_ab, 1.0, &timing(400.0, 2400.0))?,
    ];

    // (ph term, tds term, consequents)
    const TABLE: [(&str, &str, &[(&str, &str)]); 14] = [
        ("strong_acid", "very_low", &[(OUT_PH_UP, "slow"), (OUT_AB_MIX, "slow")]),
        ("strong_acid", "low", &[(OUT_PH_UP, "slow"), (OUT_AB_MIX, "fast")]),
        ("strong_acid", "normal", &[(OUT_PH_UP, "slow")]),
        ("weak_acid", "very_low", &[(OUT_PH_UP, "fast"), (OUT_AB_MIX, "slow")]),
        ("weak_acid", "low", &[(OUT_PH_UP, "fast"), (OUT_AB_MIX, "fast")]),
        ("weak_acid", "normal", &[(OUT_PH_UP, "fast")]),
        ("normal", "very_low", &[(OUT_AB_MIX, "slow")]),
        ("normal", "low", &[(OUT_AB_MIX, "fast")]),
        ("weak_alkaline", "very_low", &[(OUT_PH_DOWN, "fast"), (OUT_AB_MIX, "slow")]),
        ("weak_alkaline", "low", &[(OUT_PH_DOWN, "fast"), (OUT_AB_MIX, "fast")]),
        ("weak_alkaline", "normal", &[(OUT_PH_DOWN, "fast")]),
        ("strong_alkaline", "very_low", &[(OUT_PH_DOWN, "slow"), (OUT_AB_MIX, "slow")]),
        ("strong_alkaline", "low", &[(OUT_PH_DOWN, "slow"), (OUT_AB_MIX, "fast")]),
        ("strong_alkaline", "normal", &[(OUT_PH_DOWN, "slow")]),
    ];
    let rules = TABLE
        .iter()
        .map(|(p, t, then)| {
            Rule::new(
                vec![Clause::new(VAR_PH, *p), Clause::new(VAR_TDS, *t)],
                then.iter().map(|(v, term)| Clause::new(*v, *term)).collect(),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FisDefinition::new(variables, rules)?)
}

/// Which rules fired and how strongly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleActivation {
    /// 1-based position in the rule bank.
    pub rule: usize,
    pub strength: f64,
}

/// Unrounded controller output plus rule activations.
#[derive(Debug, Clone, PartialEq)]
pub struct DoseEvaluation {
    pub raw: DoseCommand,
    pub activations: Vec<RuleActivation>,
}

/// Dose computation over a definition that has the hydro variables.
#[derive(Debug, Clone, PartialEq)]
pub struct HydroController {
    fis: FisDefinition,
    ph_up: usize,
    ph_down: usize,
    ab_mix: usize,
}

impl HydroController {
    pub fn new(fis: FisDefinition) -> Result<Self, HydroError> {
        for (name, kind) in [(VAR_PH, VarKind::Input), (VAR_TDS, VarKind::Input)] {
            if fis.variable(name).map(|v| v.kind()) != Some(kind) {
                return Err(HydroError::MissingVariable(name));
            }
        }
        if fis.inputs().len() != 2 {
            return Err(HydroError::Fis(FisError::InputArity { expected: 2, got: fis.inputs().len() }));
        }
        let out = |n: &'static str| fis.output_index(n).ok_or(HydroError::MissingVariable(n));
        let (ph_up, ph_down, ab_mix) = (out(OUT_PH_UP)?, out(OUT_PH_DOWN)?, out(OUT_AB_MIX)?);
        Ok(Self { fis, ph_up, ph_down, ab_mix })
    }

    /// Controller over [`builtin_hydro_fis`].
    pub fn builtin(u_ab: f64) -> Result<Self, HydroError> {
        Self::new(builtin_hydro_fis(u_ab)?)
    }

    pub fn definition(&self) -> &FisDefinition {
        &self.fis
    }

    pub fn ab_universe_hi(&self) -> f64 {
        self.fis.outputs()[self.ab_mix].universe().hi()
    }

    fn crisp(&self, r: &NutrientReading) -> [f64; 2] {
        // inputs are ph, tds in some declaration order
        if self.fis.inputs()[0].name() == VAR_PH {
            [r.ph, r.tds]
        } else {
            [r.tds, r.ph]
        }
    }

    /// Unrounded durations and the rules that fired.
    pub fn evaluate(&self, reading: &NutrientReading) -> Result<DoseEvaluation, FisError> {
        let inf = self.fis.evaluate(&self.crisp(reading))?;
        let raw = DoseCommand {
            ph_up_ms: inf.output(self.ph_up).unwrap_or(0.0),
            ph_down_ms: inf.output(self.ph_down).unwrap_or(0.0),
            ab_mix_ms: inf.output(self.ab_mix).unwrap_or(0.0),
        };
        let activations = inf
            .strengths()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(i, &s)| RuleActivation { rule: i + 1, strength: s })
            .collect();
        Ok(DoseEvaluation { raw, activations })
    }

    /// Unrounded value of a single output (`ph_up`, `ph_down` or `ab_mix`).
    pub fn output_raw(&self, reading: &NutrientReading, output: &str) -> Result<f64, FisError> {
        let oi = self.fis.output_index(output).ok_or_else(|| FisError::UnknownVariable(String::from(output)))?;
        let inf = self.fis.evaluate_outputs(&self.crisp(reading), &[oi])?;
        Ok(inf.output(oi).unwrap_or(0.0))
    }

    /// Unrounded pH Up and pH Down durations, skipping the AB output.
    pub fn ph_raw(&self, reading: &NutrientReading) -> Result<(f64, f64), FisError> {
        let inf = self.fis.evaluate_outputs(&self.crisp(reading), &[self.ph_up, self.ph_down])?;
        Ok((inf.output(self.ph_up).unwrap_or(0.0), inf.output(self.ph_down).unwrap_or(0.0)))
    }

    /// Dose for a clamped reading, rounded to 0.01 ms.
    pub fn compute_dose(&self, reading: &NutrientReading) -> DoseCommand {
        let dose = self.evaluate(reading).map(|e| e.raw.rounded()).unwrap_or(DoseCommand::ZERO);
        debug_assert!(dose.is_exclusive(), "pH up and down both active for {reading:?}");
        dose
    }

    /// Same controller with the AB-mix universe moved to `[0, u_ab]`.
    pub fn with_ab_universe(&self, u_ab: f64) -> Result<Self, HydroError> {
        if !(u_ab >= MIN_U_AB_MS) || !u_ab.is_finite() {
            return Err(HydroError::AbUniverseTooSmall(u_ab));
        }
        let cur = *self.fis.outputs()[self.ab_mix].universe();
        let u = Universe::new(cur.lo(), u_ab, cur.resolution())?;
        Self::new(self.fis.with_universe(OUT_AB_MIX, u)?)
    }
}

/// Find the AB-mix universe bound at which `reading` yields `target_ms`
/// of AB dosing, by bisection over `[lo, hi]`. The AB duration grows with
/// the bound whenever a slow-shoulder rule fires.
pub fn fit_ab_universe(
    controller: &HydroController,
    reading: &NutrientReading,
    target_ms: f64,
    lo: f64,
    hi: f64,
) -> Result<f64, HydroError> {
    let ab_at = |u: f64| -> Result<f64, HydroError> {
        let c = controller.with_ab_universe(u)?;
        Ok(c.output_raw(reading, OUT_AB_MIX)?)
    };
    let (mut a, mut b) = (lo.max(MIN_U_AB_MS), hi);
    let (fa, fb) = (ab_at(a)? - target_ms, ab_at(b)? - target_ms);
    if fa > 0.0 || fb < 0.0 {
        return Err(HydroError::TargetOutOfReach { target: target_ms, lo: a, hi: b });
    }
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if b - a < 1e-6 {
            break;
        }
        if ab_at(m)? < target_ms {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
