//! Per-iteration solver records and their CSV form.
//!
//! Floats are written with 12 significant digits so traces diff cleanly.

use std::io::Write;

use crate::error::Result;

pub const TRACE_HEADER: [&str; 11] = [
    "run",
    "iteration",
    "event",
    "algorithm",
    "objective",
    "gap",
    "primal",
    "dual",
    "violation_pct",
    "message_floats",
    "wall_time",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// Free-form label of the run (e.g. `static`, `a=0.25`).
    pub run: String,
    pub iteration: usize,
    pub event: usize,
    pub algorithm: String,
    pub objective: f64,
    /// Relative utility gap to the reference, when one is known.
    pub gap: Option<f64>,
    pub primal: f64,
    pub dual: f64,
    pub violation_pct: f64,
    pub message_floats: u64,
    /// Seconds since the start of the run; zero unless timing was requested.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        v.to_string()
    }
}

impl Trace {
    pub fn push(&mut self, record: TraceRecord) {
        self.records.push(record);
    }

    pub fn extend(&mut self, other: Trace) {
        self.records.extend(other.records);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TRACE_HEADER)?;
        for r in &self.records {
            w.write_record([
                r.run.clone(),
                r.iteration.to_string(),
                r.event.to_string(),
                r.algorithm.clone(),
                fmt_float(r.objective),
                r.gap.map_or_else(|| "nan".to_string(), fmt_float),
                fmt_float(r.primal),
                fmt_float(r.dual),
                fmt_float(r.violation_pct),
                r.message_floats.to_string(),
                fmt_float(r.wall_time),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
