//! Output helpers shared by the checks and the command line.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;

/// Round-trippable float text: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// One acceptance-style line.
#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        CheckLine { name: name.into(), pass, detail: detail.into() }
    }

    pub fn render(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub kind: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub pass: bool,
    pub checks: Vec<CheckLine>,
    pub data: serde_json::Value,
    pub files: Vec<String>,
    pub elapsed_ms: f64,
}

impl RunSummary {
    pub fn new(kind: &str, config: BTreeMap<String, String>) -> Self {
        RunSummary {
            kind: kind.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config,
            pass: true,
            checks: Vec::new(),
            data: serde_json::Value::Null,
            files: Vec::new(),
            elapsed_ms: 0.0,
        }
    }

    pub fn check(&mut self, line: CheckLine) {
        self.pass &= line.pass;
        self.checks.push(line);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        fs::write(dir.join("summary.json"), s)?;
        Ok(())
    }
}

/// CSV with a header and pre-formatted rows.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(header)?;
    for r in rows {
        wtr.write_record(&r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    write_csv(fs::File::create(path)?, header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, std::f64::consts::PI] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_rows_are_written_in_order() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b"], vec![vec!["1".into(), "2".into()], vec!["3".into(), "4".into()]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,2\n3,4\n");
    }
}
