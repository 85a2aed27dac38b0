//! Table output: CSV with a `#` configuration header, or a JSON mirror.
//!
//! Floats are printed with Rust's shortest round-trip formatting, so a fixed
//! seed produces byte-identical files across runs and platforms.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (use csv or json)")),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    U(u64),
    F(f64),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(v) => format!("{v}"),
            Cell::F(v) => format!("{v}"),
            Cell::S(v) => v.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::U(v) => format!("{v}"),
            Cell::F(v) if v.is_finite() => format!("{v}"),
            Cell::F(_) => "null".into(),
            Cell::S(v) => format!("{v:?}"),
        }
    }
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Renders the table.  `meta` is the resolved configuration (one line of
    /// JSON) recorded at the top of every output.
    pub fn render(&self, meta: &str, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Csv => {
                writeln!(out, "# {meta}").unwrap();
                writeln!(out, "{}", self.columns.join(",")).unwrap();
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", cells.join(",")).unwrap();
                }
            }
            Format::Json => {
                writeln!(out, "{{").unwrap();
                writeln!(out, "  \"config\": {meta},").unwrap();
                let cols: Vec<String> = self.columns.iter().map(|c| format!("{c:?}")).collect();
                writeln!(out, "  \"columns\": [{}],", cols.join(", ")).unwrap();
                writeln!(out, "  \"rows\": [").unwrap();
                for (i, row) in self.rows.iter().enumerate() {
                    let cells: Vec<String> = row.iter().map(Cell::json).collect();
                    let comma = if i + 1 < self.rows.len() { "," } else { "" };
                    writeln!(out, "    [{}]{comma}", cells.join(", ")).unwrap();
                }
                writeln!(out, "  ]").unwrap();
                writeln!(out, "}}").unwrap();
            }
        }
        out
    }
}

/// Writes `content` to `out` if given, else stdout.
pub fn emit(out: Option<&Path>, content: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, content),
        None => io::stdout().write_all(content.as_bytes()),
    }
}
