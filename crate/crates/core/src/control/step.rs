use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ControlError, Device, DosingPump};
use crate::hydro::{clamp_inputs, DoseCommand, HydroController, NormalBand, NutrientReading, RuleActivation};
use crate::sim::SETTLE_S;

pub const DEFAULT_MAX_STEPS: usize = 10;

/// One sense, dose, settle cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    /// 1-based.
    pub step: usize,
    pub before: NutrientReading,
    pub fired: Vec<RuleActivation>,
    pub dose: DoseCommand,
    pub after: NutrientReading,
    pub started_s: f64,
    pub finished_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub steps: Vec<StepTrace>,
    /// The last reading was inside the band.
    pub converged: bool,
    pub initial: NutrientReading,
    pub last: NutrientReading,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlLoop {
    pub controller: HydroController,
    pub band: NormalBand,
    pub settle_s: f64,
    pub max_steps: usize,
}

impl ControlLoop {
    pub fn new(controller: HydroController, band: NormalBand) -> Self {
        Self { controller, band, settle_s: SETTLE_S, max_steps: DEFAULT_MAX_STEPS }
    }

    /// Clamped reading, or the sensor fault.
    pub fn sense<D: Device + ?Sized>(&self, device: &mut D) -> Result<NutrientReading, ControlError> {
        let ph = device.read_ph()?;
        let tds = device.read_tds()?;
        Ok(clamp_inputs(ph, tds)?)
    }

    /// Read, dose, settle, read again. A sensor fault aborts before any pump
    /// is commanded.
    pub fn control_step<D: Device + ?Sized>(&self, device: &mut D, step: usize) -> Result<StepTrace, ControlError> {
        let before = self.sense(device)?;
        self.step_from(device, step, before)
    }

    fn step_from<D: Device + ?Sized>(&self, device: &mut D, step: usize, before: NutrientReading) -> Result<StepTrace, ControlError> {
        let started_s = device.now_s();
        let eval = self.controller.evaluate(&before)?;
        let dose = eval.raw.rounded();
        if !dose.is_exclusive() {
            return Err(ControlError::Interlock(dose));
        }
        // pH first, then fertiliser
        for (pump, ms) in [(DosingPump::PhUp, dose.ph_up_ms), (DosingPump::PhDown, dose.ph_down_ms), (DosingPump::AbMix, dose.ab_mix_ms)] {
            if ms > 0.0 {
                device.run_pump(pump, ms)?;
            }
        }
        device.sleep(self.settle_s)?;
        let after = self.sense(device)?;
        Ok(StepTrace { step, before, fired: eval.activations, dose, after, started_s, finished_s: device.now_s() })
    }

    /// Step until the reading is inside the band or `max_steps` steps ran.
    /// Each step's reading after settling is the next step's reading before.
    pub fn run_until_normal<D: Device + ?Sized>(&self, device: &mut D) -> Result<RunOutcome, ControlError> {
        self.run_until_normal_with(device, |_, _| {})
    }

    /// [`run_until_normal`](Self::run_until_normal), calling `on_step`
    /// after every step with the device it ran on.
    pub fn run_until_normal_with<D, F>(&self, device: &mut D, mut on_step: F) -> Result<RunOutcome, ControlError>
    where
        D: Device + ?Sized,
        F: FnMut(&StepTrace, &mut D),
    {
        let initial = self.sense(device)?;
        let mut reading = initial;
        let mut steps = Vec::new();
        while !self.band.contains(&reading) && steps.len() < self.max_steps.max(1) {
            let trace = self.step_from(device, steps.len() + 1, reading)?;
            on_step(&trace, device);
            reading = trace.after;
            steps.push(trace);
        }
        Ok(RunOutcome { converged: self.band.contains(&reading), steps, initial, last: reading })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{PumpEvent, SimulatedDevice};
    use crate::sim::{DoseParams, ReservoirState, DEFAULT_BUFFER_CAPACITY};

    const U_AB_FITTED: f64 = 7732.5;

    fn device(ph: f64, tds: f64) -> SimulatedDevice {
        let s = ReservoirState::from_reading(&NutrientReading { ph, tds }, 20.0, DEFAULT_BUFFER_CAPACITY).unwrap();
        SimulatedDevice::new(s, DoseParams::default())
    }

    fn control() -> ControlLoop {
        ControlLoop::new(HydroController::builtin(U_AB_FITTED).unwrap(), NormalBand::default())
    }

    #[test]
    fn normal_reading_commands_nothing() {
        let mut d = device(6.0, 1200.0);
        let t = control().control_step(&mut d, 1).unwrap();
        assert_eq!(t.dose, DoseCommand::ZERO);
        assert!(d.log().is_empty());
        assert_eq!(t.finished_s - t.started_s, 60.0);
    }

    #[test]
    fn alkaline_start_commands_ph_down() {
        let mut d = device(10.55, 324.0);
        let t = control().control_step(&mut d, 1).unwrap();
        assert!((t.dose.ph_down_ms - 1800.89).abs() <= 2.0, "{:?}", t.dose);
        assert_eq!(t.dose.ph_up_ms, 0.0);
        assert!(d.log().iter().any(|e| matches!(e, PumpEvent::Dose { pump: DosingPump::PhDown, .. })));
    }

    #[test]
    fn sensor_fault_means_no_actuation() {
        let mut d = device(4.0, 300.0);
        d.faults.tds = Some(f64::NAN);
        assert!(matches!(control().control_step(&mut d, 1), Err(ControlError::Sensor(_))));
        assert!(d.log().is_empty());
        assert_eq!(d.now_s(), 0.0);
    }

    #[test]
    fn bundled_starts_converge_in_expected_steps() {
        let cases = [((6.35, 110.0), 1), ((6.09, 946.0), 1), ((4.02, 272.0), 2), ((4.54, 117.0), 1), ((10.55, 324.0), 3), ((9.46, 531.0), 2)];
        for ((ph, tds), expect) in cases {
            let mut d = device(ph, tds);
            let out = control().run_until_normal(&mut d).unwrap();
            assert!(out.converged, "({ph}, {tds}) {out:?}");
            assert_eq!(out.steps.len(), expect, "({ph}, {tds})");
            for w in out.steps.windows(2) {
                assert_eq!(w[0].after, w[1].before);
                assert_eq!(w[0].step + 1, w[1].step);
            }
            assert_eq!(out.steps.last().unwrap().after, out.last);
        }
    }

    #[test]
    fn already_normal_needs_no_steps() {
        let mut d = device(6.0, 1100.0);
        let out = control().run_until_normal(&mut d).unwrap();
        assert!(out.converged && out.steps.is_empty());
    }

    #[test]
    fn runaway_drift_is_flagged() {
        let mut d = device(3.0, 1100.0);
        d.params.drift_ph_per_step = -5.0;
        let c = ControlLoop { max_steps: 4, ..control() };
        let out = c.run_until_normal(&mut d).unwrap();
        assert!(!out.converged);
        assert_eq!(out.steps.len(), 4);
    }

    #[test]
    fn zero_dose_fixpoint() {
        // a reading outside the band that still yields no dose
        let band = NormalBand::new(5.9, 6.0, 1300.0, 1400.0).unwrap();
        let c = ControlLoop { band, ..control() };
        let mut d = device(6.2, 1200.0);
        let t1 = c.control_step(&mut d, 1).unwrap();
        assert_eq!(t1.dose, DoseCommand::ZERO);
        let t2 = c.control_step(&mut d, 2).unwrap();
        assert!((t2.before.ph - t1.before.ph).abs() <= 1e-9);
        assert!((t2.before.tds - t1.before.tds).abs() <= 1e-9);
    }
}
