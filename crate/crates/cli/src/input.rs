use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use ecgtda::segment::{read_table, BeatWindow};
use ecgtda::wfdb::record::record_base;

use crate::{CmdResult, Failure};

fn data(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

/// Record base paths: `.hea` files and bare bases as given, directories
/// expanded to their `.hea` files in name order.
pub fn record_paths(inputs: &[PathBuf]) -> CmdResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| data(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "hea"))
                .map(|f| record_base(&f))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(record_base(p));
        }
    }
    Ok(out)
}

pub fn magic(path: &Path) -> CmdResult<[u8; 4]> {
    let mut b = [0u8; 4];
    let mut f = File::open(path).map_err(|e| data(path, e))?;
    let n = f.read(&mut b).map_err(|e| data(path, e))?;
    if n < 4 {
        b = [0; 4];
    }
    Ok(b)
}

pub fn is_window_table(path: &Path) -> CmdResult<bool> {
    Ok(&magic(path)? == b"ECGW")
}

pub fn windows(path: &Path) -> CmdResult<Vec<BeatWindow>> {
    let f = File::open(path).map_err(|e| data(path, e))?;
    read_table(BufReader::new(f)).map_err(|e| data(path, e))
}

/// Numbers separated by commas or whitespace; a non-numeric first line is
/// taken as a header.
pub fn numbers(path: &Path) -> CmdResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| data(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse::<f64>)
            .collect();
        match parsed {
            Ok(v) => out.extend(v),
            Err(_) if out.is_empty() && i == 0 => {}
            Err(e) => return Err(data(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

/// A headed CSV as column names and string rows.
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn read(path: &Path) -> CmdResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| data(path, e))?;
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| data(path, "empty CSV"))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let rows = lines
            .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
            .collect();
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str, path: &Path) -> CmdResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| data(path, format!("missing column {name:?}")))
    }

    pub fn f64_column(&self, name: &str, path: &Path) -> CmdResult<Vec<f64>> {
        let j = self.column(name, path)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.get(j)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| data(path, format!("row {}: bad {name}", i + 1)))
            })
            .collect()
    }
}
