//! CSV rendering: `#` metadata block, header, one row per sweep value.

use crate::settings::Settings;

/// A column-labelled result grid; `None` marks a value that was not computed
/// for that row (for example a simulation above the port cap).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
    notes: Vec<String>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// Adds a `# note:` line. Notes never contain ` = ` so they cannot be
    /// mistaken for parameters on replay.
    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into().replace(" = ", " is "));
    }

    /// Full CSV text. Columns with no value in any row are dropped.
    pub fn render(&self, settings: &Settings) -> String {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&c| self.rows.iter().any(|r| r[c].is_some()))
            .collect();
        let mut out = settings.to_metadata();
        for note in &self.notes {
            out.push_str("# note: ");
            out.push_str(note);
            out.push('\n');
        }
        let header: Vec<&str> = keep.iter().map(|&c| self.columns[c].as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = keep.iter().map(|&c| row[c].map(format_value).unwrap_or_default()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits, enough to recover every double exactly.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}
