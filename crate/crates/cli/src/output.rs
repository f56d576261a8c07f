//! CSV and JSON emission. Every file carries the run configuration and the
//! crate version; CSV floats use 17 significant digits.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trip exact formatting of an `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table with `#`-prefixed provenance lines before the header.
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<String>,
}

pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        let mut line = String::new();
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            match c {
                Cell::Int(v) => write!(line, "{v}").unwrap(),
                Cell::Float(v) => line.push_str(&fmt_f64(v)),
                Cell::Text(s) if s.contains([',', '"']) => {
                    write!(line, "\"{}\"", s.replace('"', "\"\"")).unwrap()
                }
                Cell::Text(s) => line.push_str(&s),
            }
        }
        self.rows.push(line);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, config: &RunConfig) -> String {
        let mut out = String::new();
        writeln!(out, "# sinelab {VERSION}").unwrap();
        writeln!(out, "# config: {}", serde_json::to_string(config).expect("config serializes")).unwrap();
        writeln!(out, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            writeln!(out, "{r}").unwrap();
        }
        out
    }

    pub fn write(&self, config: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
        let path = config.out_dir.join(name);
        write_file(&path, self.render(config).as_bytes())?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    version: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

/// JSON document `{version, config, result}`.
pub fn render_report<T: Serialize>(config: &RunConfig, result: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Report {
        version: VERSION,
        config,
        result,
    })
    .expect("report serializes");
    s.push('\n');
    s
}

pub fn write_report<T: Serialize>(config: &RunConfig, name: &str, result: &T) -> Result<PathBuf, CliError> {
    let path = config.out_dir.join(name);
    write_file(&path, render_report(config, result).as_bytes())?;
    Ok(path)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}
