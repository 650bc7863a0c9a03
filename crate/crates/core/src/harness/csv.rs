use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{Trace, TraceRow};

pub const COLUMNS: [&str; 17] = [
    "t", "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "p", "q", "r", "w1", "w2", "w3",
    "w4",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub(crate) fn row_values(row: &TraceRow) -> [f64; 17] {
    let s = &row.state;
    let w = row.motors.0;
    [
        s.t,
        s.position.x,
        s.position.y,
        s.position.z,
        s.velocity.x,
        s.velocity.y,
        s.velocity.z,
        s.attitude.phi,
        s.attitude.theta,
        s.attitude.psi,
        s.body_rates.x,
        s.body_rates.y,
        s.body_rates.z,
        w[0],
        w[1],
        w[2],
        w[3],
    ]
}

/// Header plus one row per plant tick, 17 significant digits per value.
pub fn write_csv<W: Write>(trace: &Trace, mut out: W) -> Result<(), CsvError> {
    if trace.is_empty() {
        return Err(CsvError::EmptyTrace);
    }
    writeln!(out, "{}", COLUMNS.join(","))?;
    for row in &trace.rows {
        let fields: Vec<String> = row_values(row)
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn emit_csv(trace: &Trace, path: &Path) -> Result<(), CsvError> {
    if trace.is_empty() {
        return Err(CsvError::EmptyTrace);
    }
    write_csv(trace, BufWriter::new(File::create(path)?))
}

pub fn read_csv(path: &Path) -> Result<Vec<[f64; 17]>, CsvError> {
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != COLUMNS.join(",") {
                return Err(CsvError::Malformed {
                    line: 1,
                    reason: "unexpected header".into(),
                });
            }
            continue;
        }
        let values = line
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CsvError::Malformed {
                line: i + 1,
                reason: e.to_string(),
            })?;
        let row: [f64; 17] = values
            .try_into()
            .map_err(|v: Vec<f64>| CsvError::Malformed {
                line: i + 1,
                reason: format!("{} fields", v.len()),
            })?;
        rows.push(row);
    }
    Ok(rows)
}
