//! Plot-ready CSV emission with the manifest hash embedded.

use std::path::Path;

use anyhow::Result;
use shapespline::io::{atomic_write, fmt_full};

pub enum Cell {
    Text(String),
    Number(f64),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Number(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Write a CSV table with a `# manifest_sha256=...` comment line on top.
/// Numbers carry full (17 significant digit) precision.
pub fn write_table(
    path: &Path,
    manifest_sha256: &str,
    header: &[&str],
    rows: Vec<Vec<Cell>>,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("# manifest_sha256={manifest_sha256}\n"));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let rendered: Vec<String> = row
            .into_iter()
            .map(|c| match c {
                Cell::Text(t) => t,
                Cell::Number(v) => fmt_full(v),
                Cell::Empty => String::new(),
            })
            .collect();
        out.push_str(&rendered.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())?;
    Ok(())
}
