use std::fs::{self, File};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Significant digits kept in CSV output.
pub const CSV_DIGITS: usize = 12;

/// `x` rounded to 12 significant digits, printed without trailing zeros or
/// exponent. Non-finite values print as `inf`, `-inf` and `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // the closest double to a 12-digit decimal prints back as that decimal
    let rounded: f64 = format!("{:.*e}", CSV_DIGITS - 1, x).parse().unwrap_or(x);
    format!("{rounded}")
}

/// Empty field for a missing value.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// In-memory CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq)]
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

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Current UTC time, ISO-8601.
pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Create `dir` if needed and return `dir/name`.
pub fn output_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.join(name))
}

/// Open a CSV writer for streamed rows.
pub fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

pub fn write_row(w: &mut csv::Writer<File>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(csv_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(63.000_912_345_678_9), "63.0009123457");
        assert_eq!(fmt_num(48.0), "48");
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-2.5), "-2.5");
        assert_eq!(fmt_num(1.2345678901234e-5), "0.0000123456789012");
        assert_eq!(fmt_num(f64::INFINITY), "inf");
        assert_eq!(fmt_num(f64::NAN), "nan");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn csv_round_trip() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_num(0.1 + 0.2)]);
        assert_eq!(t.to_csv_string().unwrap(), "a,b\n1,0.3\n");
        let dir = tempfile::tempdir().unwrap();
        let p = output_path(&dir.path().join("x"), "t.csv").unwrap();
        t.write(&p).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "a,b\n1,0.3\n");
    }
}
