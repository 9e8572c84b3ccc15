use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::Mode;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "t,duty,pressure_kpa,angle_deg,f_m,f_i_pred,f_c_est,f_c_true,mode";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMode {
    OpenLoop,
    Approach,
    ForceControl,
}

impl From<Mode> for TraceMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Approach => TraceMode::Approach,
            Mode::ForceControl => TraceMode::ForceControl,
        }
    }
}

/// One control tick. `angle_deg` is the measured bend angle; `duty` is the
/// duty cycle applied during the tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub duty: f64,
    pub pressure_kpa: f64,
    pub angle_deg: f64,
    pub f_m: f64,
    pub f_i_pred: f64,
    pub f_c_est: f64,
    pub f_c_true: f64,
    pub mode: TraceMode,
}

/// Fixed-step time series of a simulated run. Row `n` is stamped `n·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt: f64,
    rows: Vec<TraceRow>,
}

impl Trace {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0);
        Self {
            dt,
            rows: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn rows_mut(&mut self) -> &mut [TraceRow] {
        &mut self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Append a row; its timestamp is overwritten with `len·dt`.
    pub fn push(&mut self, mut row: TraceRow) {
        row.t = self.rows.len() as f64 * self.dt;
        self.rows.push(row);
    }

    pub fn column(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        if self.rows.is_empty() {
            wtr.write_record(TRACE_HEADER.split(','))?;
        }
        wtr.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read a trace back. `dt` is taken from the first two timestamps.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
        if header != TRACE_HEADER {
            return Err(Error::Parse {
                path: "<trace>".into(),
                line: 1,
                message: format!("expected header `{TRACE_HEADER}`"),
            });
        }
        let rows: Vec<TraceRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
        let dt = match rows.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => 1.0,
        };
        Ok(Self { dt, rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(BufReader::new(file))
    }
}
