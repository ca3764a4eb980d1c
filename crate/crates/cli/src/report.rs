//! Suite reports: one record per checked case, plus CSV tables.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{SuiteConfig, SuiteName};

/// How `measured` is compared with `target`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// |measured − target| ≤ tolerance.
    Within,
    /// measured ≤ target + tolerance.
    AtMost,
    /// measured > target.
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Case {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub target: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
}

impl Case {
    pub fn within(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Case {
        let pass = (measured - target).abs() <= tolerance;
        Case {
            name: name.into(),
            pass,
            measured,
            target,
            tolerance,
            comparison: Comparison::Within,
        }
    }

    /// A defect that must not exceed `tolerance` (target 0).
    pub fn small(name: impl Into<String>, measured: f64, tolerance: f64) -> Case {
        Case::at_most(name, measured, 0.0, tolerance)
    }

    pub fn at_most(name: impl Into<String>, measured: f64, target: f64, tolerance: f64) -> Case {
        let pass = measured <= target + tolerance;
        Case {
            name: name.into(),
            pass,
            measured,
            target,
            tolerance,
            comparison: Comparison::AtMost,
        }
    }

    pub fn above(name: impl Into<String>, measured: f64, target: f64) -> Case {
        Case {
            name: name.into(),
            pass: measured > target,
            measured,
            target,
            tolerance: 0.0,
            comparison: Comparison::Above,
        }
    }

    /// A check that produced an error instead of a number.
    pub fn failed(name: impl Into<String>, why: &str) -> Case {
        Case {
            name: format!("{}: {why}", name.into()),
            pass: false,
            measured: f64::NAN,
            target: f64::NAN,
            tolerance: f64::NAN,
            comparison: Comparison::Within,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub pass: bool,
    pub config: SuiteConfig,
    pub cases: Vec<Case>,
}

impl SuiteReport {
    pub fn new(suite: SuiteName, config: &SuiteConfig, cases: Vec<Case>) -> SuiteReport {
        let pass = cases.iter().all(|c| c.pass);
        SuiteReport {
            suite,
            pass,
            config: config.clone(),
            cases,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// A named CSV table with a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Table {
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Rows given as CSV text with this table's header on the first line.
    pub fn from_csv_text(name: impl Into<String>, text: &str) -> csv::Result<Table> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let header = rdr.headers()?.iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<csv::Result<_>>()?;
        Ok(Table {
            name: name.into(),
            header,
            rows,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

#[derive(Debug)]
pub struct IoError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

impl std::fmt::Display for IoError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.source)
    }
}

impl std::error::Error for IoError {}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, IoError> {
    std::fs::create_dir_all(dir).map_err(|source| IoError {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| IoError {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
