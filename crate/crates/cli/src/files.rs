//! File naming, provenance records and the CSV tables shared by commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use landscape_lab::geometry::Well;
use landscape_lab::io::{fmt_real, Table};
use landscape_lab::{Error, Result};
use serde_json::Value;

pub const PROVENANCE: &str = "provenance.json";

/// `<dir>/<stem>-s<seed>.<ext>`
pub fn tagged(dir: &Path, stem: &str, seed: u64, ext: &str) -> PathBuf {
    dir.join(format!("{stem}-s{seed}.{ext}"))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

/// One provenance entry, keyed by command and seed.
#[derive(Debug, Clone)]
pub struct Record {
    pub key: String,
    pub value: Value,
}

impl Record {
    pub fn new(command: &str, seed: u64, config: Value, results: Value) -> Self {
        Record {
            key: format!("{command}-s{seed}"),
            value: serde_json::json!({
                "command": command,
                "seed": seed,
                "tool_version": env!("CARGO_PKG_VERSION"),
                "config": config,
                "results": results,
            }),
        }
    }
}

/// Merge records into `<dir>/provenance.json`, replacing entries with the same key.
pub fn write_provenance(dir: &Path, records: &[Record]) -> Result<()> {
    let path = dir.join(PROVENANCE);
    let mut all: BTreeMap<String, Value> = if path.exists() {
        serde_json::from_str(&read_text(&path)?)?
    } else {
        BTreeMap::new()
    };
    for r in records {
        all.insert(r.key.clone(), r.value.clone());
    }
    fs::write(&path, serde_json::to_string_pretty(&all)? + "\n")?;
    Ok(())
}

fn coord_header(dim: usize) -> Vec<&'static str> {
    if dim == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

pub fn wells_table(wells: &[Well], dim: usize) -> Table {
    let mut header = vec!["rank", "index"];
    header.extend(coord_header(dim));
    header.push("w_min");
    let mut t = Table::new(&header);
    for w in wells {
        let mut row = vec![w.rank.to_string(), w.min_index.to_string()];
        row.extend(w.min_location.iter().map(|&c| fmt_real(c)));
        row.push(fmt_real(w.w_min));
        t.push(row);
    }
    t
}

/// One row of an eigenvalue table.
#[derive(Debug, Clone, PartialEq)]
pub struct EigRow {
    pub rank: usize,
    pub lambda: f64,
    pub residual: f64,
    pub peak_index: usize,
    pub peak: Vec<f64>,
}

pub fn eigs_header(dim: usize) -> Vec<&'static str> {
    let mut header = vec!["rank", "lambda", "residual", "peak_index"];
    header.extend(coord_header(dim).into_iter().map(|c| if c == "x" { "peak_x" } else { "peak_y" }));
    header
}

pub fn eigs_table(rows: &[EigRow], dim: usize) -> Table {
    let mut t = Table::new(&eigs_header(dim));
    for r in rows {
        let mut row = vec![
            r.rank.to_string(),
            fmt_real(r.lambda),
            fmt_real(r.residual),
            r.peak_index.to_string(),
        ];
        row.extend(r.peak.iter().map(|&c| fmt_real(c)));
        t.push(row);
    }
    t
}

pub fn read_eigs(path: &Path) -> Result<Vec<EigRow>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?
        .split(',')
        .collect();
    let dim = match header.len() {
        5 => 1,
        6 => 2,
        _ => return Err(Error::Format(format!("{}: unexpected header", path.display()))),
    };
    if header != eigs_header(dim) {
        return Err(Error::Format(format!("{}: unexpected header", path.display())));
    }
    let bad = |line: usize| Error::Format(format!("{}: malformed row {line}", path.display()));
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != header.len() {
                return Err(bad(i + 2));
            }
            let real = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(i + 2));
            Ok(EigRow {
                rank: int(cells[0])?,
                lambda: real(cells[1])?,
                residual: real(cells[2])?,
                peak_index: int(cells[3])?,
                peak: cells[4..].iter().map(|c| real(c)).collect::<Result<_>>()?,
            })
        })
        .collect()
}
