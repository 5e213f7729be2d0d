//! Byte-stable CSV emission.

use std::fmt::Write as _;

/// Lowercase scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table with `#`-prefixed metadata lines, a header row and data rows.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One cell of a data row.
pub enum Cell {
    Num(f64),
    Flag(bool),
    Empty,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.meta.push((key.to_string(), value.into()));
        self
    }

    pub fn meta_num(&mut self, key: &str, value: f64) -> &mut Self {
        self.meta(key, fmt_f64(value))
    }

    pub fn push(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width mismatch");
        self.rows.push(
            cells
                .into_iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_f64(x),
                    Cell::Flag(b) => if b { "1" } else { "0" }.to_string(),
                    Cell::Empty => String::new(),
                })
                .collect(),
        );
    }

    pub fn meta_entries(&self) -> &[(String, String)] {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
