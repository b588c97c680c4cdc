use std::fmt;
use std::path::Path;

use serde_json::Value;

/// Exit status 1: bad configuration. Exit status 2: numerical failure.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl From<scaledel::Error> for CliError {
    fn from(e: scaledel::Error) -> Self {
        match e {
            scaledel::Error::SingularSystem { .. } | scaledel::Error::ResidualCheck { .. } => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            // 17 significant digits round-trip every f64
            Cell::Float(v) => write!(f, "{v:.16e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str], rows: Vec<Vec<Cell>>) -> Self {
        Table::from_header(header.iter().map(|s| s.to_string()).collect(), rows)
    }

    pub fn from_header(header: Vec<String>, rows: Vec<Vec<Cell>>) -> Self {
        Table { header, rows }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Config(format!("csv: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))
    }
}

/// JSON summary plus an optional table, written as `<stem>.json` and `<stem>.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stem: &'static str,
    pub summary: Value,
    pub table: Option<Table>,
}

impl Output {
    pub fn summary(stem: &'static str, summary: Value) -> Self {
        Output {
            stem,
            summary,
            table: None,
        }
    }

    pub fn summary_text(&self) -> String {
        let mut text = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        text.push('\n');
        text
    }

    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let unwritable = |e: std::io::Error| CliError::Config(format!("cannot write to {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(unwritable)?;
        std::fs::write(dir.join(format!("{}.json", self.stem)), self.summary_text()).map_err(unwritable)?;
        if let Some(table) = &self.table {
            std::fs::write(dir.join(format!("{}.csv", self.stem)), table.to_csv()?).map_err(unwritable)?;
        }
        Ok(())
    }
}
