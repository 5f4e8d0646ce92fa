//! Tables, CSV output and provenance.

use std::fmt::Write as _;
use std::hash::Hasher;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use dcf_core::Scenario;
use fnv::FnvHasher;

use crate::error::CliError;
use crate::scenario_file::write_scenario;

pub const TOOL: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// A named table of already-formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Self {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric cells of column `name`.
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let c = self.column(name).expect("known column");
        self.rows
            .iter()
            .map(|r| r[c].parse().unwrap_or(f64::NAN))
            .collect()
    }

    /// Rows whose cell in `column` equals `value`.
    pub fn filter(&self, column: &str, value: &str) -> Table {
        let c = self.column(column).expect("known column");
        Table {
            name: self.name.clone(),
            header: self.header.clone(),
            rows: self
                .rows
                .iter()
                .filter(|r| r[c] == value)
                .cloned()
                .collect(),
        }
    }

    /// Fixed-width rendering for the terminal. Numbers are shortened to 6
    /// significant digits.
    pub fn render(&self) -> String {
        let short = |cell: &str| match cell.parse::<f64>() {
            Ok(v) if cell.contains('.') || cell.contains('e') => format!("{}", Sig(v)),
            _ => cell.to_string(),
        };
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|c| short(c)).collect())
            .collect();
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| {
                cells
                    .iter()
                    .map(|r| r[i].len())
                    .chain([self.header[i].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect();
            let _ = writeln!(out, "{}", parts.join("  ").trim_end());
        };
        let _ = writeln!(out, "== {}", self.name);
        line(&mut out, &self.header);
        for row in &cells {
            line(&mut out, row);
        }
        out
    }
}

struct Sig(f64);

impl std::fmt::Display for Sig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let v = self.0;
        if v == 0.0 || !v.is_finite() {
            return write!(f, "{v}");
        }
        let mag = v.abs().log10().floor() as i32;
        if (-4..9).contains(&mag) {
            let decimals = (5 - mag).max(0) as usize;
            write!(f, "{v:.decimals$}")
        } else {
            write!(f, "{v:.5e}")
        }
    }
}

/// Formats a float for CSV: shortest text that parses back to the same
/// value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Header block written before every CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub seed: Option<u64>,
    pub scenario_hash: String,
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(command: impl Into<String>, seed: Option<u64>, scenarios: &[&Scenario]) -> Self {
        Self {
            command: command.into(),
            seed,
            scenario_hash: scenario_hash(scenarios),
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// The `#` lines. The timestamp sits alone on the last line so that
    /// reruns differ only there.
    pub fn block(&self, timestamp: &str) -> String {
        let mut out = format!("# tool: {TOOL}\n# command: {}\n", self.command);
        match self.seed {
            Some(seed) => out += &format!("# seed: {seed}\n"),
            None => out += "# seed: none\n",
        }
        out += &format!("# scenario_hash: {}\n", self.scenario_hash);
        for note in &self.notes {
            out += &format!("# note: {note}\n");
        }
        out += &format!("# timestamp: {timestamp}\n");
        out
    }
}

/// 64-bit FNV-1a over the canonical scenario texts, in order.
pub fn scenario_hash(scenarios: &[&Scenario]) -> String {
    let mut h = FnvHasher::default();
    for sc in scenarios {
        h.write(write_scenario(sc).as_bytes());
        h.write_u8(0);
    }
    format!("fnv1a64:{:016x}", h.finish())
}

/// Renders the CSV body (header line plus rows).
pub fn csv_body(table: &Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Output {
        path: PathBuf::from(&table.name),
        message: e.to_string(),
    };
    w.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output {
        path: PathBuf::from(&table.name),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("cells are UTF-8"))
}

/// Writes `<dir>/<table.name>.csv` with the provenance block.
pub fn write_csv(dir: &Path, table: &Table, prov: &Provenance) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{}.csv", table.name));
    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let text = prov.block(&timestamp) + &csv_body(table)?;
    write_file(&path, text.as_bytes())?;
    Ok(path)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(fail)?;
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(fail)
}
