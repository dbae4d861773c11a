use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::chain::EfhtVector;
use crate::error::{invalid, Result};

/// A table with a fixed column order.
pub trait Report: Sized {
    type Row: Serialize + DeserializeOwned;
    /// Column names, in order. They equal the row's field names.
    const HEADER: &'static [&'static str];

    fn rows(&self) -> &[Self::Row];
    fn from_rows(rows: Vec<Self::Row>) -> Self;
}

/// Writes the header and every row as CSV. An empty report yields the header
/// line alone.
pub fn write_csv<R: Report, W: Write>(report: &R, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(R::HEADER)?;
    for row in report.rows() {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv<R: Report>(report: &R, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    write_csv(report, BufWriter::new(file))
}

/// Parses a file written by [`emit_csv`].
pub fn read_csv<R: Report>(input: impl Read) -> Result<R> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != R::HEADER {
        return Err(invalid(format!("unexpected CSV header {header:?}")));
    }
    let rows = r.deserialize().collect::<std::result::Result<Vec<R::Row>, _>>()?;
    Ok(R::from_rows(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfhtRow {
    pub state: String,
    pub efht: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EfhtReport {
    pub rows: Vec<EfhtRow>,
}

impl Report for EfhtReport {
    type Row = EfhtRow;
    const HEADER: &'static [&'static str] = &["state", "efht"];

    fn rows(&self) -> &[EfhtRow] {
        &self.rows
    }

    fn from_rows(rows: Vec<EfhtRow>) -> Self {
        Self { rows }
    }
}

pub fn efht_report(efht: &EfhtVector<f64>) -> EfhtReport {
    let rows =
        efht.states().iter().zip(efht.values()).map(|(s, &v)| EfhtRow { state: s.to_string(), efht: v }).collect();
    EfhtReport { rows }
}
