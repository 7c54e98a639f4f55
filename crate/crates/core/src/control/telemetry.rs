use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const DEFAULT_CADENCE_S: f64 = 300.0;

/// Which pumps ran at any time since the previous record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PumpFlags {
    pub water: bool,
    pub ph_up: bool,
    pub ph_down: bool,
    pub ab: bool,
}

impl PumpFlags {
    pub fn merge(&mut self, other: PumpFlags) {
        self.water |= other.water;
        self.ph_up |= other.ph_up;
        self.ph_down |= other.ph_down;
        self.ab |= other.ab;
    }
}

/// One telemetry sample. Quantities whose sensor faulted are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    pub t_s: f64,
    pub volume_l: Option<f64>,
    pub ph: Option<f64>,
    pub tds_ppm: Option<f64>,
    pub pumps: PumpFlags,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("telemetry sink: {0}")]
pub struct TelemetryError(pub String);

pub trait TelemetrySink {
    fn emit(&mut self, record: &TelemetryRecord) -> Result<(), TelemetryError>;
}

/// Keeps records in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemorySink {
    pub records: Vec<TelemetryRecord>,
}

impl TelemetrySink for MemorySink {
    fn emit(&mut self, record: &TelemetryRecord) -> Result<(), TelemetryError> {
        self.records.push(*record);
        Ok(())
    }
}

/// Emits one record per cadence boundary, never in between.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryScheduler {
    cadence_s: f64,
    next_due_s: f64,
    since_last: PumpFlags,
    errors: Vec<TelemetryError>,
}

impl TelemetryScheduler {
    /// First record at `start_s + cadence_s`. Returns `None` for a cadence
    /// that is not positive and finite.
    pub fn new(cadence_s: f64, start_s: f64) -> Option<Self> {
        (cadence_s.is_finite() && cadence_s > 0.0).then_some(Self {
            cadence_s,
            next_due_s: start_s + cadence_s,
            since_last: PumpFlags::default(),
            errors: Vec::new(),
        })
    }

    pub fn cadence_s(&self) -> f64 {
        self.cadence_s
    }

    pub fn next_due_s(&self) -> f64 {
        self.next_due_s
    }

    pub fn note_pumps(&mut self, flags: PumpFlags) {
        self.since_last.merge(flags);
    }

    /// Sink failures seen so far; they never stop the scheduler.
    pub fn errors(&self) -> &[TelemetryError] {
        &self.errors
    }

    /// Emit a record for every boundary at or before `now_s`, stamped with
    /// the boundary time.
    pub fn poll<S, F>(&mut self, now_s: f64, sink: &mut S, mut snapshot: F) -> Vec<TelemetryRecord>
    where
        S: TelemetrySink + ?Sized,
        F: FnMut() -> (Option<f64>, Option<f64>, Option<f64>),
    {
        let mut out = Vec::new();
        // tolerate float drift from summed cycle lengths
        let eps = 1e-9 * self.cadence_s.max(now_s.abs());
        while self.next_due_s <= now_s + eps {
            let (volume_l, ph, tds_ppm) = snapshot();
            let record = TelemetryRecord { t_s: self.next_due_s, volume_l, ph, tds_ppm, pumps: self.since_last };
            if let Err(e) = sink.emit(&record) {
                self.errors.push(e);
            }
            out.push(record);
            self.since_last = PumpFlags::default();
            self.next_due_s += self.cadence_s;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Broken;

    impl TelemetrySink for Broken {
        fn emit(&mut self, _: &TelemetryRecord) -> Result<(), TelemetryError> {
            Err(TelemetryError("disk full".into()))
        }
    }

    #[test]
    fn boundaries_only() {
        let mut s = TelemetryScheduler::new(300.0, 0.0).unwrap();
        let mut sink = MemorySink::default();
        let snap = || (Some(20.0), Some(6.0), Some(1100.0));
        assert!(s.poll(299.0, &mut sink, snap).is_empty());
        assert_eq!(s.poll(300.0, &mut sink, snap).len(), 1);
        assert!(s.poll(599.0, &mut sink, snap).is_empty());
        // a long gap emits every boundary it skipped
        assert_eq!(s.poll(1250.0, &mut sink, snap).len(), 3);
        let t: Vec<f64> = sink.records.iter().map(|r| r.t_s).collect();
        assert_eq!(t, vec![300.0, 600.0, 900.0, 1200.0]);
        assert_eq!(s.next_due_s(), 1500.0);
    }

    #[test]
    fn pump_flags_reset_after_record() {
        let mut s = TelemetryScheduler::new(300.0, 0.0).unwrap();
        let mut sink = MemorySink::default();
        s.note_pumps(PumpFlags { ph_up: true, ..Default::default() });
        s.poll(300.0, &mut sink, || (None, None, None));
        s.poll(600.0, &mut sink, || (None, None, None));
        assert!(sink.records[0].pumps.ph_up);
        assert!(!sink.records[1].pumps.ph_up);
    }

    #[test]
    fn sink_failure_is_reported_not_fatal() {
        let mut s = TelemetryScheduler::new(300.0, 0.0).unwrap();
        let recs = s.poll(900.0, &mut Broken, || (None, None, None));
        assert_eq!(recs.len(), 3);
        assert_eq!(s.errors().len(), 3);
    }

    #[test]
    fn bad_cadence() {
        assert!(TelemetryScheduler::new(0.0, 0.0).is_none());
        assert!(TelemetryScheduler::new(f64::NAN, 0.0).is_none());
    }
}
