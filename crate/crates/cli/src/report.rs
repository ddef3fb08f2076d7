use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::Expectation;
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: String,
    pub value: f64,
    /// Analysis that produced the row.
    pub source: String,
    pub expected: Option<Expectation>,
    pub pass: bool,
}

/// One CSV file: a header and string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Self { file: file.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Everything one scenario produced, including the error that stopped it.
#[derive(Debug, Default)]
pub struct ReportBundle {
    pub name: String,
    pub rows: Vec<SummaryRow>,
    pub tables: Vec<CsvTable>,
    pub error: Option<CliError>,
}

impl ReportBundle {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, metric: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Aligned text table of the summary rows of several bundles.
pub fn summary_text(bundles: &[&ReportBundle]) -> String {
    let mut cells: Vec<[String; 6]> = vec![[
        "scenario".into(),
        "metric".into(),
        "value".into(),
        "source".into(),
        "expected".into(),
        "pass".into(),
    ]];
    for b in bundles {
        for r in &b.rows {
            cells.push([
                b.name.clone(),
                r.metric.clone(),
                format!("{:.9}", r.value),
                r.source.clone(),
                r.expected.map_or_else(|| "-".to_string(), |e| e.to_string()),
                if r.pass { "pass" } else { "FAIL" }.to_string(),
            ]);
        }
        if let Some(e) = &b.error {
            cells.push([b.name.clone(), "error".into(), "-".into(), "-".into(), "-".into(), e.to_string()]);
        }
    }
    let mut widths = [0usize; 6];
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

/// Writes `summary.txt` and one CSV per table into `dir`.
pub fn emit(bundle: &ReportBundle, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.txt"), summary_text(&[bundle]))?;
    for t in &bundle.tables {
        let mut w = csv::Writer::from_path(dir.join(&t.file)).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record(&t.header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in &t.rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok(())
}
