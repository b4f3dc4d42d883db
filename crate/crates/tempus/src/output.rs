//! Result tables, CSV/JSON files and manifest placement.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::Value;

use crate::config::Manifest;
use crate::error::{CliError, CliResult};

/// Shortest round-trip decimal form, so equal values always print alike.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// CSV text whose first line is a `#` comment carrying the manifest hash.
    pub fn to_csv(&self, manifest: &Manifest) -> String {
        let mut s = format!(
            "# tempus {} {} manifest sha256={}\n",
            manifest.version,
            manifest.subcommand,
            manifest.hash()
        );
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.iter().map(|c| quote(c)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        s
    }
}

fn quote(cell: &str) -> std::borrow::Cow<'_, str> {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\"")).into()
    } else {
        cell.into()
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct OutputArgs {
    /// JSON config file (or a manifest from an earlier run); flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the result table as CSV.
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Write the full result as JSON.
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Manifest path; defaults to `<output>.manifest.json` next to the first output file.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
}

pub struct RunOutput {
    pub manifest: Manifest,
    /// Human-readable summary for stdout.
    pub report: String,
    pub table: Table,
    pub json: Value,
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn beside(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes the requested files and prints the report. Without any output
/// file the manifest goes to stderr.
pub fn emit(out: &OutputArgs, run: &RunOutput) -> CliResult<()> {
    let hash = run.manifest.hash();
    if let Some(p) = &out.csv {
        write_file(p, &run.table.to_csv(&run.manifest))?;
    }
    if let Some(p) = &out.json {
        let doc = serde_json::json!({ "manifest_sha256": hash, "result": run.json });
        write_file(p, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    let manifest_path = out
        .manifest
        .clone()
        .or_else(|| out.csv.as_deref().or(out.json.as_deref()).map(beside));
    match &manifest_path {
        Some(p) => write_file(p, &run.manifest.to_pretty())?,
        None => eprint!("{}", run.manifest.to_pretty()),
    }
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    writeln!(lock, "# manifest sha256={hash}")
        .and_then(|_| lock.write_all(run.report.as_bytes()))
        .map_err(|e| CliError::io("<stdout>", e))
}

/// Fixed-width text rendering of a table.
pub fn render(table: &Table) -> String {
    let mut widths: Vec<usize> = table.columns.iter().map(|c| c.len()).collect();
    for r in &table.rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut s = line(&table.columns);
    for r in &table.rows {
        s.push_str(&line(r));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_starts_with_hash_comment() {
        let m = Manifest::new("measure", Some(3), &serde_json::json!({"n": 1})).unwrap();
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(0.1), num(2.0)]);
        let csv = t.to_csv(&m);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().ends_with(&m.hash()));
        assert_eq!(lines.next(), Some("a,b"));
        assert_eq!(lines.next(), Some("0.1,2"));
        assert_eq!(quote("x, \"y\""), "\"x, \"\"y\"\"\"");
    }

    #[test]
    fn manifest_sits_beside_output() {
        assert_eq!(
            beside(Path::new("out/e.csv")),
            PathBuf::from("out/e.csv.manifest.json")
        );
    }
}
