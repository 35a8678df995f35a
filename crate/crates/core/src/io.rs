//! Comma-separated series files: header row, `.` decimals, LF endings.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! value read back is bit-identical to the one written.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::signalgen::Signal;

pub const SIGNAL_HEADER: [&str; 2] = ["time_s", "value_pu"];
pub const CURRENT_HEADER: [&str; 2] = ["time_s", "i_out_A"];

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() && !parent.exists() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

/// Write equal-length columns under the given headers.
pub fn write_columns<P: AsRef<Path>>(path: P, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    let path = path.as_ref();
    if headers.len() != columns.len() {
        return Err(Error::InvalidArgument(format!(
            "{} headers for {} columns",
            headers.len(),
            columns.len()
        )));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::InvalidArgument("columns differ in length".into()));
    }
    ensure_parent(path)?;
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", headers.join(","))?;
    let mut line = String::new();
    for r in 0..rows {
        line.clear();
        for (c, col) in columns.iter().enumerate() {
            if c > 0 {
                line.push(',');
            }
            line.push_str(&col[r].to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a numeric CSV. Malformed cells are reported with their line number.
pub fn read_table<P: AsRef<Path>>(path: P) -> Result<Table> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            msg: "missing header row".into(),
        });
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                path: path.to_owned(),
                line,
                msg: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        for (col, cell) in columns.iter_mut().zip(record.iter()) {
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                line,
                msg: format!("not a number: {cell:?}"),
            })?;
            col.push(value);
        }
    }
    Ok(Table { headers, columns })
}

pub fn write_signal_csv<P: AsRef<Path>>(
    path: P,
    signal: &Signal,
    value_header: &str,
) -> Result<()> {
    let t: Vec<f64> = signal.timestamps().collect();
    write_columns(path, &["time_s", value_header], &[&t, signal.values()])
}

/// Read a two-column series and recover its uniform time base.
pub fn read_signal_csv<P: AsRef<Path>>(path: P) -> Result<Signal> {
    let path = path.as_ref();
    let table = read_table(path)?;
    if table.headers.len() != 2 || table.headers[0] != "time_s" {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            msg: format!(
                "expected header time_s,<value>, found {}",
                table.headers.join(",")
            ),
        });
    }
    let t = &table.columns[0];
    if t.len() < 2 {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 2,
            msg: "need at least two samples".into(),
        });
    }
    let spacing = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if spacing <= 0.0 {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 2,
            msg: "timestamps must increase".into(),
        });
    }
    for (i, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - spacing).abs() > 1e-6 * spacing {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i as u64 + 3,
                msg: "non-uniform sample spacing".into(),
            });
        }
    }
    let rate = 1.0 / spacing;
    // snap rates like 999.9999999 to the integer they came from
    let rate = if (rate - rate.round()).abs() < 1e-6 * rate {
        rate.round()
    } else {
        rate
    };
    Signal::new(t[0], rate, table.columns[1].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        let values: Vec<f64> = (0..500)
            .map(|i| 0.88 + (i as f64 * 0.37).sin() * 0.011)
            .collect();
        let sig = Signal::new(0.0, 1000.0, values).unwrap();
        write_signal_csv(&path, &sig, "value_pu").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time_s,value_pu\n"));
        assert!(!text.contains('\r'));
        let back = read_signal_csv(&path).unwrap();
        assert_eq!(back.sample_rate(), 1000.0);
        assert_eq!(back.values(), sig.values());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time_s,value_pu\n0,1.0\n0.001,1.0\n0.002,abc\n").unwrap();
        let err = read_signal_csv(&path).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
        assert!(err_text(&path).contains(":4:"));
    }

    fn err_text(path: &Path) -> String {
        read_signal_csv(path).unwrap_err().to_string()
    }

    #[test]
    fn creates_missing_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/c.csv");
        write_columns(&path, &["x", "y"], &[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let table = read_table(&path).unwrap();
        assert_eq!(table.column("y").unwrap(), &[3.0, 4.0]);
    }
}
