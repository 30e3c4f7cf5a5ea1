//! CSV and JSON trace files.
//!
//! CSV layout: an optional `# {metadata json}` comment line, then the header
//! `n,eps,implicit_residual,fix_residual,step_delta,inner_iters,x0,…,x{d-1}`
//! and one row per step. Reals are written with 17 significant digits so the
//! file reloads bit-for-bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Vector;

use super::trace::{ConvergenceTrace, StepRecord, TraceMetadata, TRACE_SCHEMA};

const FIXED_COLUMNS: [&str; 6] = [
    "n",
    "eps",
    "implicit_residual",
    "fix_residual",
    "step_delta",
    "inner_iters",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Json,
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn trace_dim(trace: &ConvergenceTrace) -> usize {
    trace
        .steps
        .first()
        .map(|s| s.point.dim())
        .unwrap_or(trace.metadata.dim)
}

pub fn write_csv<W: Write>(trace: &ConvergenceTrace, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "# {}", serde_json::to_string(&trace.metadata)?)?;
    let dim = trace_dim(trace);
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = FIXED_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain((0..dim).map(|i| format!("x{i}")))
        .collect();
    w.write_record(&header)?;
    for s in &trace.steps {
        if s.point.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.point.dim(),
            });
        }
        let mut row = vec![
            s.n.to_string(),
            real(s.eps),
            real(s.implicit_residual),
            real(s.fix_residual),
            real(s.step_delta),
            s.inner_iters.to_string(),
        ];
        row.extend(s.point.as_slice().iter().map(|&x| real(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::TraceFormat(format!("bad {what} value {field:?}")))
}

pub fn read_csv<R: Read>(input: R) -> Result<ConvergenceTrace> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let (metadata, rest) = match first.strip_prefix("# ") {
        Some(json) => (
            serde_json::from_str::<TraceMetadata>(json.trim_end())?,
            String::new(),
        ),
        None => (TraceMetadata::default(), first),
    };
    let chained = rest.as_bytes().chain(reader);
    let mut r = csv::Reader::from_reader(chained);
    let header = r.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < FIXED_COLUMNS.len() || names[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(Error::TraceFormat(format!("unexpected header {names:?}")));
    }
    let dim = names.len() - FIXED_COLUMNS.len();
    let mut trace = ConvergenceTrace::new(metadata);
    for row in r.records() {
        let row = row?;
        let point = (0..dim)
            .map(|i| parse::<f64>(&row[6 + i], "coordinate"))
            .collect::<Result<Vec<_>>>()?;
        trace.push(StepRecord {
            n: parse(&row[0], "n")?,
            eps: parse(&row[1], "eps")?,
            implicit_residual: parse(&row[2], "implicit_residual")?,
            fix_residual: parse(&row[3], "fix_residual")?,
            step_delta: parse(&row[4], "step_delta")?,
            inner_iters: parse(&row[5], "inner_iters")?,
            point: Vector::new(point)?,
        });
    }
    Ok(trace)
}

pub fn to_json(trace: &ConvergenceTrace) -> Result<String> {
    Ok(serde_json::to_string_pretty(trace)?)
}

pub fn from_json(text: &str) -> Result<ConvergenceTrace> {
    let trace: ConvergenceTrace = serde_json::from_str(text)?;
    if trace.schema != TRACE_SCHEMA {
        return Err(Error::TraceFormat(format!(
            "unsupported trace schema {}",
            trace.schema
        )));
    }
    Ok(trace)
}

pub fn export_trace(
    trace: &ConvergenceTrace,
    format: TraceFormat,
    destination: &Path,
) -> Result<()> {
    let file = File::create(destination)?;
    match format {
        TraceFormat::Csv => write_csv(trace, file),
        TraceFormat::Json => {
            let mut w = BufWriter::new(file);
            w.write_all(to_json(trace)?.as_bytes())?;
            w.write_all(b"\n")?;
            w.flush()?;
            Ok(())
        }
    }
}

pub fn load_trace(format: TraceFormat, source: &Path) -> Result<ConvergenceTrace> {
    match format {
        TraceFormat::Csv => read_csv(File::open(source)?),
        TraceFormat::Json => from_json(&std::fs::read_to_string(source)?),
    }
}
