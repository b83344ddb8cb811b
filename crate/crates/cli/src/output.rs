//! CSV emission: RFC 4180 quoting, LF line endings, 17 significant digits.

use std::io::Write;
use std::time::SystemTime;

use crate::error::Result;

/// A header plus rows of already formatted fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Writes the table, preceded by a timestamp comment unless
    /// `reproducible` is set.
    pub fn write_to<W: Write>(&self, mut out: W, comment: &str, reproducible: bool) -> Result<()> {
        if !reproducible {
            let stamp = humantime::format_rfc3339_seconds(SystemTime::now());
            writeln!(out, "# {comment} generated {stamp}")?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf, "", true).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("fields are UTF-8")
    }
}

/// Seventeen significant digits; NaN becomes an empty field.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn flag(b: Option<bool>) -> String {
    b.map_or_else(String::new, |b| b.to_string())
}
