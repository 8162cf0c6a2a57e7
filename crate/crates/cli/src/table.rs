//! CSV tables with fixed 15-significant-digit number formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// `v` with 15 significant digits: positional notation for
/// `1e-4 <= |v| < 1e15`, scientific otherwise.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Round first so that the exponent reflects the printed value.
    let sci = format!("{v:.14e}");
    let exp: i32 = sci.split_once('e').map_or(0, |(_, e)| e.parse().unwrap_or(0));
    if (-4..15).contains(&exp) {
        let decimals = (14 - exp) as usize;
        return format!("{v:.decimals$}");
    }
    sci
}

/// A named table: header, rows, and trailing `#` comment lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub comments: Vec<String>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), comments: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let mut out = w.into_inner().context("flushing CSV")?;
        for c in &self.comments {
            writeln!(out, "# {c}")?;
        }
        Ok(out)
    }
}

/// Write one table to `path`, or to stdout when `path` is `None`.
pub fn emit_one(table: &Table, path: Option<&Path>) -> Result<()> {
    let bytes = table.render()?;
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(&bytes).context("writing to stdout"),
    }
}

/// Write several tables as `<dir>/<name>.csv`, or to stdout separated by
/// `# <name>` lines.
pub fn emit_many(tables: &[Table], dir: Option<&Path>) -> Result<()> {
    match dir {
        Some(d) => {
            fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            for t in tables {
                emit_one(t, Some(&d.join(format!("{}.csv", t.name))))?;
            }
            Ok(())
        }
        None => {
            let mut out = std::io::stdout().lock();
            for (i, t) in tables.iter().enumerate() {
                if i > 0 {
                    writeln!(out)?;
                }
                writeln!(out, "# {}", t.name)?;
                out.write_all(&t.render()?)?;
            }
            Ok(())
        }
    }
}
