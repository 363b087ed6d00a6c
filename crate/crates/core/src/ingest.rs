//! Timing tables: the raw solver-by-problem measurements everything else is
//! computed from.
//!
//! A [`TimingMatrix`] is always complete. A solver that did not solve a problem
//! is recorded as [`Cell::Failure`], never as a missing entry, and failures are
//! read from the input file rather than guessed from large times.
//!
//! Two on-disk formats are supported:
//!
//! * CSV: header `problem,<solver1>,...,<solverN>`, then one row per problem.
//!   A cell is a decimal literal, `fail`, `nan` (any case) or empty.
//! * JSON: `{"problems":[...],"solvers":[...],"times":[[...],...]}`, row-major
//!   by problem, each entry a number or the string `"fail"`.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};
use thiserror::Error;

/// One measurement: a strictly positive, finite time or an explicit failure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Time(f64),
    Failure,
}

impl Cell {
    pub fn time(self) -> Option<f64> {
        match self {
            Cell::Time(t) => Some(t),
            Cell::Failure => None,
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Cell::Failure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Problem,
    Solver,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Problem => f.write_str("problem"),
            Axis::Solver => f.write_str("solver"),
        }
    }
}

/// Errors raised while reading or validating a timing table.
///
/// Locations are 1-based. For CSV input `row` is the line number in the file and
/// `col` the field number (field 1 holds the problem label). For JSON input they
/// index into the `times` array.
#[derive(Debug, Error)]
pub enum IngestError {
    #[error("duplicate {axis} label {label:?}")]
    DuplicateLabel { axis: Axis, label: String },
    #[error("invalid time {text:?} at row {row}, column {col}: times must be finite and > 0")]
    InvalidTime {
        row: usize,
        col: usize,
        text: String,
    },
    #[error("row {row} has {found} cells, expected {expected}")]
    ShapeError {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("format error: {0}")]
    FormatError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Supported serialization formats for timing tables and exported curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Picks a format from a file extension; anything other than `.json` is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(IngestError::FormatError(format!(
                "unknown format {other:?}"
            ))),
        }
    }
}

/// The `t[p][s]` table: problems by solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingMatrix {
    problems: Vec<String>,
    solvers: Vec<String>,
    // row-major, problems.len() * solvers.len()
    cells: Vec<Cell>,
}

impl TimingMatrix {
    /// Builds a matrix from labelled rows, checking every table invariant.
    pub fn new(
        problems: Vec<String>,
        solvers: Vec<String>,
        rows: Vec<Vec<Cell>>,
    ) -> Result<Self, IngestError> {
        if problems.is_empty() {
            return Err(IngestError::FormatError("table has no problems".into()));
        }
        if solvers.is_empty() {
            return Err(IngestError::FormatError("table has no solvers".into()));
        }
        check_unique(&problems, Axis::Problem)?;
        check_unique(&solvers, Axis::Solver)?;
        if rows.len() != problems.len() {
            return Err(IngestError::FormatError(format!(
                "{} problem labels but {} rows",
                problems.len(),
                rows.len()
            )));
        }
        let mut cells = Vec::with_capacity(problems.len() * solvers.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != solvers.len() {
                return Err(IngestError::ShapeError {
                    row: i + 1,
                    expected: solvers.len(),
                    found: row.len(),
                });
            }
            for (j, cell) in row.into_iter().enumerate() {
                if let Cell::Time(t) = cell {
                    if !valid_time(t) {
                        return Err(IngestError::InvalidTime {
                            row: i + 1,
                            col: j + 1,
                            text: t.to_string(),
                        });
                    }
                }
                cells.push(cell);
            }
        }
        Ok(TimingMatrix {
            problems,
            solvers,
            cells,
        })
    }

    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn solvers(&self) -> &[String] {
        &self.solvers
    }

    pub fn n_problems(&self) -> usize {
        self.problems.len()
    }

    pub fn n_solvers(&self) -> usize {
        self.solvers.len()
    }

    pub fn cell(&self, problem: usize, solver: usize) -> Cell {
        self.cells[problem * self.solvers.len() + solver]
    }

    pub fn time(&self, problem: usize, solver: usize) -> Option<f64> {
        self.cell(problem, solver).time()
    }

    pub fn row(&self, problem: usize) -> &[Cell] {
        let n = self.solvers.len();
        &self.cells[problem * n..(problem + 1) * n]
    }

    pub fn solver_index(&self, label: &str) -> Option<usize> {
        self.solvers.iter().position(|s| s == label)
    }

    /// Returns the sub-table restricted to `solvers`, in the given order.
    ///
    /// # Panics
    ///
    /// Panics if an index is out of range or `solvers` is empty.
    pub fn select_solvers(&self, solvers: &[usize]) -> TimingMatrix {
        assert!(!solvers.is_empty(), "solver selection must not be empty");
        let labels = solvers.iter().map(|&s| self.solvers[s].clone()).collect();
        let cells = (0..self.n_problems())
            .flat_map(|p| solvers.iter().map(move |&s| self.cell(p, s)))
            .collect();
        TimingMatrix {
            problems: self.problems.clone(),
            solvers: labels,
            cells,
        }
    }

    /// Replaces one problem's row. Used to build perturbed copies in tests and
    /// sensitivity studies.
    pub fn with_row(&self, problem: usize, row: &[Cell]) -> Result<TimingMatrix, IngestError> {
        let rows = (0..self.n_problems())
            .map(|p| {
                if p == problem {
                    row.to_vec()
                } else {
                    self.row(p).to_vec()
                }
            })
            .collect();
        TimingMatrix::new(self.problems.clone(), self.solvers.clone(), rows)
    }
}

fn valid_time(t: f64) -> bool {
    t.is_finite() && t > 0.0
}

fn check_unique(labels: &[String], axis: Axis) -> Result<(), IngestError> {
    let mut seen = HashSet::with_capacity(labels.len());
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(IngestError::DuplicateLabel {
                axis,
                label: label.clone(),
            });
        }
    }
    Ok(())
}

fn is_failure_token(text: &str) -> bool {
    text.is_empty() || text.eq_ignore_ascii_case("fail") || text.eq_ignore_ascii_case("nan")
}

fn parse_cell(text: &str, row: usize, col: usize) -> Result<Cell, IngestError> {
    let text = text.trim();
    if is_failure_token(text) {
        return Ok(Cell::Failure);
    }
    match text.parse::<f64>() {
        Ok(t) if valid_time(t) => Ok(Cell::Time(t)),
        _ => Err(IngestError::InvalidTime {
            row,
            col,
            text: text.to_string(),
        }),
    }
}

pub fn parse_timings<R: Read>(source: R, format: Format) -> Result<TimingMatrix, IngestError> {
    match format {
        Format::Csv => parse_csv(source),
        Format::Json => parse_json(source),
    }
}

pub fn write_timings<W: Write>(
    m: &TimingMatrix,
    format: Format,
    out: W,
) -> Result<(), IngestError> {
    match format {
        Format::Csv => write_csv(m, out),
        Format::Json => write_json(m, out),
    }
}

fn csv_error(e: csv::Error) -> IngestError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => IngestError::Io(io),
            _ => unreachable!(),
        }
    } else {
        IngestError::FormatError(e.to_string())
    }
}

fn parse_csv<R: Read>(source: R) -> Result<TimingMatrix, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(source);
    let mut records = reader.records();

    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => return Err(IngestError::FormatError("empty input".into())),
    };
    if header.len() < 2 {
        return Err(IngestError::FormatError(
            "header must name at least one solver".into(),
        ));
    }
    let solvers: Vec<String> = header
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();
    check_unique(&solvers, Axis::Solver)?;

    let mut problems = Vec::new();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec
            .position()
            .map_or(problems.len() + 2, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(IngestError::ShapeError {
                row: line,
                expected: header.len(),
                found: rec.len(),
            });
        }
        problems.push(rec[0].trim().to_string());
        let row = rec
            .iter()
            .enumerate()
            .skip(1)
            .map(|(col, text)| parse_cell(text, line, col + 1))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    TimingMatrix::new(problems, solvers, rows)
}

fn write_csv<W: Write>(m: &TimingMatrix, out: W) -> Result<(), IngestError> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = Vec::with_capacity(m.n_solvers() + 1);
    header.push("problem".to_string());
    header.extend(m.solvers.iter().cloned());
    writer.write_record(&header).map_err(csv_error)?;
    for (p, label) in m.problems.iter().enumerate() {
        let mut record = Vec::with_capacity(m.n_solvers() + 1);
        record.push(label.clone());
        record.extend(m.row(p).iter().map(|c| match c {
            Cell::Time(t) => t.to_string(),
            Cell::Failure => "fail".to_string(),
        }));
        writer.write_record(&record).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn json_labels(value: &Value, key: &str) -> Result<Vec<String>, IngestError> {
    let arr = value
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::FormatError(format!("missing array {key:?}")))?;
    arr.iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| IngestError::FormatError(format!("{key:?} must hold strings")))
        })
        .collect()
}

fn parse_json<R: Read>(source: R) -> Result<TimingMatrix, IngestError> {
    let value: Value = serde_json::from_reader(source).map_err(|e| {
        if e.is_io() {
            IngestError::Io(e.into())
        } else {
            IngestError::FormatError(e.to_string())
        }
    })?;
    let problems = json_labels(&value, "problems")?;
    let solvers = json_labels(&value, "solvers")?;
    check_unique(&solvers, Axis::Solver)?;
    let times = value
        .get("times")
        .and_then(Value::as_array)
        .ok_or_else(|| IngestError::FormatError("missing array \"times\"".into()))?;

    let mut rows = Vec::with_capacity(times.len());
    for (i, row) in times.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| IngestError::FormatError(format!("times[{i}] is not an array")))?;
        if row.len() != solvers.len() {
            return Err(IngestError::ShapeError {
                row: i + 1,
                expected: solvers.len(),
                found: row.len(),
            });
        }
        let cells = row
            .iter()
            .enumerate()
            .map(|(j, v)| match v {
                Value::Number(n) => {
                    let t = n.as_f64().unwrap_or(f64::NAN);
                    if valid_time(t) {
                        Ok(Cell::Time(t))
                    } else {
                        Err(IngestError::InvalidTime {
                            row: i + 1,
                            col: j + 1,
                            text: n.to_string(),
                        })
                    }
                }
                Value::String(s) if is_failure_token(s.trim()) => Ok(Cell::Failure),
                other => Err(IngestError::InvalidTime {
                    row: i + 1,
                    col: j + 1,
                    text: other.to_string(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(cells);
    }
    TimingMatrix::new(problems, solvers, rows)
}

fn write_json<W: Write>(m: &TimingMatrix, mut out: W) -> Result<(), IngestError> {
    let times: Vec<Value> = (0..m.n_problems())
        .map(|p| {
            Value::Array(
                m.row(p)
                    .iter()
                    .map(|c| match c {
                        Cell::Time(t) => json!(t),
                        Cell::Failure => json!("fail"),
                    })
                    .collect(),
            )
        })
        .collect();
    let doc = json!({
        "problems": m.problems,
        "solvers": m.solvers,
        "times": times,
    });
    serde_json::to_writer(&mut out, &doc).map_err(|e| IngestError::FormatError(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}
