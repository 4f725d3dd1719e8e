//! Report rows and their CSV/JSON serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use holoext_core::extension::Verdict;
use serde::{Deserialize, Serialize};

use crate::config::Kind;
use crate::error::{HarnessError, Result};

/// One checked quantity with its Monte Carlo error and verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kind: Kind,
    pub experiment: String,
    /// `key=value` pairs separated by `;`, enough to rerun the check in isolation.
    pub params: String,
    pub value: f64,
    pub stderr: f64,
    /// Ratio, constant or normalized deviation, when the check has one.
    pub ratio: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Writes `rows` to `path`. Output depends only on the rows.
pub fn emit(rows: &[ReportRow], format: Format, path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyReport);
    }
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = create(path)?;
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            for row in rows {
                w.serialize(row)?;
            }
            w.flush().map_err(io)?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            out.write_all(b"\n").map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

pub fn read(format: Format, path: &Path) -> Result<Vec<ReportRow>> {
    let file = File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Csv => Ok(csv::Reader::from_reader(file)
            .deserialize()
            .collect::<std::result::Result<_, _>>()?),
        Format::Json => Ok(serde_json::from_reader(std::io::BufReader::new(file))?),
    }
}

/// Counts of each verdict.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub degenerate: usize,
}

impl Tally {
    pub fn of(rows: &[ReportRow]) -> Tally {
        let mut t = Tally::default();
        for r in rows {
            match r.verdict {
                Verdict::Pass => t.pass += 1,
                Verdict::Fail => t.fail += 1,
                Verdict::Inconclusive => t.inconclusive += 1,
                Verdict::Degenerate => t.degenerate += 1,
            }
        }
        t
    }
}
