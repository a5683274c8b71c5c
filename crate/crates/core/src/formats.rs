//! File formats: instance JSON, value sequences, inclusion probabilities and
//! the results CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{BlockRepresentation, InstanceError, StoppingTimeSet};
use crate::randgen::{ProbabilitySequence, RandgenError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Randgen(#[from] RandgenError),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

fn io_error(path: &Path, source: std::io::Error) -> FormatError {
    FormatError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

// Either {"n", "stopping_times"} or {"blocks", "origin"}; a flat struct keeps
// 128-bit integers working where an untagged enum would not.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: Option<u128>,
    stopping_times: Option<Vec<u128>>,
    blocks: Option<Vec<u64>>,
    origin: Option<u128>,
}

#[derive(Serialize)]
struct BlocksOut<'a> {
    blocks: &'a [u64],
    origin: u128,
}

#[derive(Serialize)]
struct TimesOut<'a> {
    n: u128,
    stopping_times: &'a [u128],
}

pub fn parse_instance(text: &str) -> Result<BlockRepresentation, FormatError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    match raw {
        RawInstance {
            n: Some(n),
            stopping_times: Some(times),
            blocks: None,
            origin: None,
        } => Ok(StoppingTimeSet::new(n, times)?.to_blocks()),
        RawInstance {
            n: None,
            stopping_times: None,
            blocks: Some(blocks),
            origin,
        } => Ok(BlockRepresentation::new(blocks, origin.unwrap_or(0))?),
        _ => Err(FormatError::Invalid(
            "expected {\"n\", \"stopping_times\"} or {\"blocks\", \"origin\"}".into(),
        )),
    }
}

pub fn instance_to_json(b: &BlockRepresentation) -> String {
    serde_json::to_string(&BlocksOut {
        blocks: b.lengths(),
        origin: b.origin(),
    })
    .expect("serializable")
}

pub fn stopping_times_to_json(ts: &StoppingTimeSet) -> String {
    serde_json::to_string(&TimesOut {
        n: ts.n(),
        stopping_times: ts.times(),
    })
    .expect("serializable")
}

pub fn read_instance(path: &Path) -> Result<BlockRepresentation, FormatError> {
    parse_instance(&read_text(path)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    fs::write(path, format!("{text}\n")).map_err(|e| io_error(path, e))
}

/// A JSON array, or reals separated by whitespace or commas. Lines starting
/// with `#` are skipped. Every value must lie in `[0, 1]`.
pub fn parse_sequence(text: &str) -> Result<Vec<f64>, FormatError> {
    let values: Vec<f64> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text)?
    } else {
        text.lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
            .filter(|tok| !tok.is_empty())
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| FormatError::Invalid(format!("not a number: {tok:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(FormatError::Invalid("empty sequence".into()));
    }
    if let Some(pos) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(FormatError::Invalid(format!(
            "value {} at position {} is outside [0, 1]",
            values[pos],
            pos + 1
        )));
    }
    Ok(values)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbabilities {
    p: Vec<f64>,
}

/// `{"p": [reals]}`; index `t` is the probability of timestep `t` (0-based).
pub fn parse_probabilities(text: &str) -> Result<ProbabilitySequence, FormatError> {
    let raw: RawProbabilities = serde_json::from_str(text)?;
    Ok(ProbabilitySequence::new(raw.p)?)
}

pub const CSV_HEADER: [&str; 8] = [
    "instance",
    "algo",
    "adversary",
    "mode",
    "trials",
    "seed",
    "mean",
    "std_error",
];

/// One results row. `trials` and `seed` are empty for exact evaluations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsvRow {
    pub instance: String,
    pub algo: String,
    pub adversary: String,
    pub mode: String,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub mean: f64,
    pub std_error: f64,
}

fn write_rows<W: Write>(out: W, rows: &[CsvRow], header: bool) -> Result<(), FormatError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| FormatError::Csv(e.into()))?;
    Ok(())
}

pub fn rows_to_string(rows: &[CsvRow]) -> String {
    let mut buf = Vec::new();
    write_rows(&mut buf, rows, true).expect("in-memory write");
    String::from_utf8(buf).expect("utf-8")
}

/// Appends rows, writing the header only when the file is new or empty.
pub fn append_rows(path: &Path, rows: &[CsvRow]) -> Result<(), FormatError> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_error(path, e))?;
    write_rows(file, rows, fresh)
}
