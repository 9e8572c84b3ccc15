use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CalibrationReport, Sample};
use crate::error::{Error, Result};

pub const SAMPLE_HEADER: [&str; 2] = ["angle_deg", "force_n"];

/// Read `angle_deg,force_n` rows from `path`.
pub fn load_samples(path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_samples(BufReader::new(file), &path.display().to_string())
}

/// Parse sample CSV from any reader; `origin` names the source in errors.
pub fn parse_samples<R: Read>(reader: R, origin: &str) -> Result<Vec<Sample>> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != SAMPLE_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `{}`", SAMPLE_HEADER.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(parse_err(line, format!("expected 2 fields, got {}", record.len())));
        }
        let field = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("`{}` is not a number", &record[i])))
        };
        let sample =
            Sample::new(field(0)?, field(1)?).map_err(|e| parse_err(line, e.to_string()))?;
        out.push(sample);
    }
    Ok(out)
}

pub fn save_samples(path: impl AsRef<Path>, samples: &[Sample]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    wtr.write_record(SAMPLE_HEADER)?;
    for s in samples {
        wtr.write_record([s.angle.to_string(), s.force.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn save_report(path: impl AsRef<Path>, report: &CalibrationReport) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<Path>) -> Result<CalibrationReport> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
