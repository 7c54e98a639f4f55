use alloc::vec::Vec;

use super::{ControlError, ControlLoop, Device, PumpFlags, StepTrace, TelemetryRecord, TelemetryScheduler, TelemetrySink, WaterLevelController};

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisorReport {
    pub steps: Vec<StepTrace>,
    pub telemetry: Vec<TelemetryRecord>,
    pub sensor_faults: usize,
    pub sink_errors: usize,
    pub water_toggles: usize,
}

/// Fixed-cycle driver: water level, then pH/TDS correction, then telemetry.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervisor {
    pub control: ControlLoop,
    pub water: WaterLevelController,
    pub cadence_s: f64,
    pub cycle_s: f64,
}

impl Supervisor {
    pub fn new(control: ControlLoop, water: WaterLevelController, cadence_s: f64) -> Self {
        let cycle_s = control.settle_s;
        Self { control, water, cadence_s, cycle_s }
    }

    /// Run for `duration_s` of device time. The last cycle is shortened so
    /// the run ends exactly at the requested time; a shortened cycle never
    /// doses, since it could not wait out the settle time.
    pub fn run_for<D, S>(&mut self, device: &mut D, duration_s: f64, sink: &mut S) -> Result<SupervisorReport, ControlError>
    where
        D: Device + ?Sized,
        S: TelemetrySink + ?Sized,
    {
        let mut sched = TelemetryScheduler::new(self.cadence_s, device.now_s()).ok_or(ControlError::InvalidCadence(self.cadence_s))?;
        self.run_for_with(device, duration_s, sink, &mut sched)
    }

    /// [`run_for`](Self::run_for) with a caller-owned scheduler, so telemetry
    /// keeps its boundaries across consecutive runs.
    pub fn run_for_with<D, S>(
        &mut self,
        device: &mut D,
        duration_s: f64,
        sink: &mut S,
        sched: &mut TelemetryScheduler,
    ) -> Result<SupervisorReport, ControlError>
    where
        D: Device + ?Sized,
        S: TelemetrySink + ?Sized,
    {
        let end = device.now_s() + duration_s.max(0.0);
        let toggles_before = self.water.toggles();
        let errors_before = sched.errors().len();
        let mut report = SupervisorReport { steps: Vec::new(), telemetry: Vec::new(), sensor_faults: 0, sink_errors: 0, water_toggles: 0 };

        loop {
            let now = device.now_s();
            let remaining = end - now;
            if remaining <= 1e-9 * end.abs().max(1.0) {
                break;
            }
            let water_on = self.water.tick(device)?;
            let cycle = self.cycle_s.min(remaining);
            let mut flags = PumpFlags { water: water_on, ..PumpFlags::default() };
            let mut slept = 0.0;
            if cycle >= self.control.settle_s {
                match self.control.sense(device) {
                    Ok(r) if !self.control.band.contains(&r) => match self.control.control_step(device, report.steps.len() + 1) {
                        Ok(trace) => {
                            flags.ph_up = trace.dose.ph_up_ms > 0.0;
                            flags.ph_down = trace.dose.ph_down_ms > 0.0;
                            flags.ab = trace.dose.ab_mix_ms > 0.0;
                            slept = trace.finished_s - trace.started_s;
                            report.steps.push(trace);
                        }
                        Err(ControlError::Sensor(_)) => report.sensor_faults += 1,
                        Err(e) => return Err(e),
                    },
                    Ok(_) => {}
                    Err(ControlError::Sensor(_)) => report.sensor_faults += 1,
                    Err(e) => return Err(e),
                }
            }
            // a fault after dosing may have advanced the clock already
            let left = cycle - slept.max(device.now_s() - now);
            if left > 0.0 {
                device.sleep(left)?;
            }
            sched.note_pumps(flags);
            let model = self.water.model;
            let records = sched.poll(device.now_s(), sink, || {
                let volume = device.read_level_distance().ok().and_then(|d| model.level_to_volume(d).ok());
                (volume, device.read_ph().ok(), device.read_tds().ok())
            });
            report.telemetry.extend(records);
        }
        report.sink_errors = sched.errors().len() - errors_before;
        report.water_toggles = self.water.toggles() - toggles_before;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{MemorySink, SimulatedDevice, DEFAULT_CADENCE_S};
    use crate::hydro::{HydroController, NormalBand, NutrientReading};
    use crate::sim::{DoseParams, ReservoirState, DEFAULT_BUFFER_CAPACITY};

    fn setup(ph: f64, tds: f64, v: f64) -> (Supervisor, SimulatedDevice) {
        let s = ReservoirState::from_reading(&NutrientReading { ph, tds }, v, DEFAULT_BUFFER_CAPACITY).unwrap();
        let d = SimulatedDevice::new(s, DoseParams::default());
        let c = ControlLoop::new(HydroController::builtin(7732.5).unwrap(), NormalBand::default());
        (Supervisor::new(c, WaterLevelController::new(d.level), DEFAULT_CADENCE_S), d)
    }

    fn times(r: &SupervisorReport) -> Vec<f64> {
        r.telemetry.iter().map(|t| t.t_s).collect()
    }

    #[test]
    fn cadence_counts() {
        for (dur, n) in [(3600.0, 12), (900.0, 3), (299.0, 0), (301.0, 1)] {
            let (mut sup, mut d) = setup(6.0, 1100.0, 20.0);
            let mut sink = MemorySink::default();
            let r = sup.run_for(&mut d, dur, &mut sink).unwrap();
            assert_eq!(r.telemetry.len(), n, "{dur}");
            assert_eq!(sink.records.len(), n);
            assert_eq!(d.now_s(), dur);
            for (k, t) in times(&r).iter().enumerate() {
                assert_eq!(*t, 300.0 * (k + 1) as f64);
            }
        }
    }

    #[test]
    fn corrects_and_reports_pumps() {
        let (mut sup, mut d) = setup(10.55, 324.0, 20.0);
        let mut sink = MemorySink::default();
        let r = sup.run_for(&mut d, 900.0, &mut sink).unwrap();
        assert_eq!(r.steps.len(), 3);
        assert!(r.telemetry[0].pumps.ph_down && r.telemetry[0].pumps.ab);
        assert!(!r.telemetry[1].pumps.ph_down);
        let last = r.telemetry.last().unwrap();
        assert!(NormalBand::default().contains(&NutrientReading { ph: last.ph.unwrap(), tds: last.tds_ppm.unwrap() }));
    }

    #[test]
    fn low_volume_tops_up_once() {
        let (mut sup, mut d) = setup(6.0, 1100.0, 18.5);
        let mut sink = MemorySink::default();
        let r = sup.run_for(&mut d, 600.0, &mut sink).unwrap();
        assert_eq!(r.water_toggles, 2);
        assert!(d.state.volume_l >= 20.0);
        assert!(r.telemetry[0].pumps.water);
    }

    #[test]
    fn sensor_faults_do_not_stop_the_run() {
        let (mut sup, mut d) = setup(4.0, 300.0, 20.0);
        d.faults.ph = Some(f64::NAN);
        let mut sink = MemorySink::default();
        let r = sup.run_for(&mut d, 600.0, &mut sink).unwrap();
        assert_eq!(r.sensor_faults, 10);
        assert!(r.steps.is_empty());
        assert!(d.log().iter().all(|e| matches!(e, crate::control::PumpEvent::Water { .. })));
        assert_eq!(r.telemetry.len(), 2);
        assert_eq!(r.telemetry[0].ph, None);
    }
}
