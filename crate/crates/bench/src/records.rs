//! Flat result rows shared by every experiment, and their CSV form.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{BenchError, Result};

pub const CSV_HEADER: [&str; 8] = ["experiment", "dimension", "lambda", "method", "seed", "value", "wall_time_ms", "iterations"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub dimension: usize,
    pub lambda: Option<f64>,
    pub method: String,
    pub seed: u64,
    pub value: f64,
    pub wall_time_ms: f64,
    pub iterations: Option<u64>,
}

impl ExperimentRecord {
    pub fn new(experiment: &str, dimension: usize, method: &str, seed: u64, value: f64) -> Self {
        Self {
            experiment: experiment.to_owned(),
            dimension,
            lambda: None,
            method: method.to_owned(),
            seed,
            value,
            wall_time_ms: 0.0,
            iterations: None,
        }
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn timed(mut self, ms: f64) -> Self {
        self.wall_time_ms = ms;
        self
    }

    pub fn iterations(mut self, n: u64) -> Self {
        self.iterations = Some(n);
        self
    }

    fn fields(&self) -> [String; 8] {
        [
            self.experiment.clone(),
            self.dimension.to_string(),
            self.lambda.map(format_sig).unwrap_or_default(),
            self.method.clone(),
            self.seed.to_string(),
            format_sig(self.value),
            format_sig(self.wall_time_ms),
            self.iterations.map(|n| n.to_string()).unwrap_or_default(),
        ]
    }
}

/// Nine significant digits, fixed notation for moderate exponents and
/// scientific otherwise, trailing zeros trimmed (like C's `%.9g`).
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_owned()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        if !r.value.is_finite() || r.wall_time_ms.is_nan() || r.wall_time_ms < 0.0 {
            return Err(BenchError::InvalidRecord(format!("{}/{} has value {} and time {}", r.experiment, r.method, r.value, r.wall_time_ms)));
        }
        w.write_record(r.fields())?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.into()))?;
    Ok(())
}

pub fn write_results_csv(records: &[ExperimentRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    write_csv(records, std::io::BufWriter::new(file))
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ExperimentRecord>> {
    let path = path.as_ref();
    let mut rd = csv::Reader::from_path(path)?;
    let bad = |message: String| BenchError::Format { path: path.into(), message };
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        if row.len() != CSV_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", CSV_HEADER.len(), row.len())));
        }
        let num = |k: usize| row[k].parse::<f64>().map_err(|e| bad(format!("field {}: {e}", CSV_HEADER[k])));
        let int = |k: usize| row[k].parse::<u64>().map_err(|e| bad(format!("field {}: {e}", CSV_HEADER[k])));
        out.push(ExperimentRecord {
            experiment: row[0].to_owned(),
            dimension: int(1)? as usize,
            lambda: if row[2].is_empty() { None } else { Some(num(2)?) },
            method: row[3].to_owned(),
            seed: int(4)?,
            value: num(5)?,
            wall_time_ms: num(6)?,
            iterations: if row[7].is_empty() { None } else { Some(int(7)?) },
        });
    }
    Ok(out)
}
