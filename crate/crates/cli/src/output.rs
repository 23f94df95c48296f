//! CSV tables, JSON sidecars and golden checks.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::ConfigError;

/// Leading columns of every row.
pub const KEY_COLUMNS: [&str; 6] = ["N", "A", "O_tau", "d", "K_b", "N_cp"];

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let header = KEY_COLUMNS.iter().chain(columns).chain(&["note"]).map(|s| s.to_string()).collect();
        Self { header, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn notes(&self) -> usize {
        let note = self.header.len() - 1;
        self.rows.iter().filter(|r| !r[note].is_empty()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = line.iter().map(|c| csv_cell(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn db(x: f64) -> String {
    format!("{x:.4}")
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Parses a numeric cell; fractions like `1/5` are evaluated.
pub fn parse_cell(s: &str) -> Option<f64> {
    if let Some((n, d)) = s.split_once('/') {
        return Some(n.trim().parse::<f64>().ok()? / d.trim().parse::<f64>().ok()?);
    }
    s.trim().parse().ok()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Near(f64, f64),
    Ge(f64),
    Gt(f64),
    Le(f64),
    Lt(f64),
}

impl Op {
    fn holds(&self, x: f64) -> bool {
        match *self {
            Op::Near(v, tol) => (x - v).abs() <= tol,
            Op::Ge(v) => x >= v,
            Op::Gt(v) => x > v,
            Op::Le(v) => x <= v,
            Op::Lt(v) => x < v,
        }
    }
}

/// `<selector> <column> <op> <value> [tol]`, selector `*` or
/// `col=value,col=value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Golden {
    pub text: String,
    pub selector: Vec<(String, f64)>,
    pub column: String,
    pub op: Op,
}

impl Golden {
    pub fn parse(text: &str, line: usize) -> Result<Self, ConfigError> {
        let err = |m: &str| ConfigError::new(line, "golden", format!("{m} in `{text}`"));
        let tok: Vec<&str> = text.split_whitespace().collect();
        if tok.len() < 4 {
            return Err(err("expected `<selector> <column> <op> <value> [tol]`"));
        }
        let selector = if tok[0] == "*" {
            Vec::new()
        } else {
            tok[0]
                .split(',')
                .map(|kv| {
                    let (k, v) = kv.split_once('=').ok_or_else(|| err("bad selector"))?;
                    let v = parse_cell(v).ok_or_else(|| err("bad selector value"))?;
                    Ok((k.to_string(), v))
                })
                .collect::<Result<_, ConfigError>>()?
        };
        let value = parse_cell(tok[3]).ok_or_else(|| err("bad value"))?;
        let op = match tok[2] {
            "~" => {
                let tol =
                    tok.get(4).and_then(|t| parse_cell(t)).ok_or_else(|| err("`~` needs a tolerance"))?;
                Op::Near(value, tol)
            }
            "==" => Op::Near(value, 0.0),
            ">=" => Op::Ge(value),
            ">" => Op::Gt(value),
            "<=" => Op::Le(value),
            "<" => Op::Lt(value),
            _ => return Err(err("unknown operator")),
        };
        Ok(Self { text: text.to_string(), selector, column: tok[1].to_string(), op })
    }

    pub fn evaluate(&self, table: &Table) -> Check {
        let fail = |detail: String| Check { name: self.text.clone(), passed: false, detail };
        let Some(col) = table.column(&self.column) else {
            return fail(format!("no column `{}`", self.column));
        };
        let mut sel = Vec::new();
        for (k, v) in &self.selector {
            match table.column(k) {
                Some(c) => sel.push((c, *v)),
                None => return fail(format!("no column `{k}`")),
            }
        }
        let mut matched = 0;
        for row in &table.rows {
            if !sel.iter().all(|(c, v)| parse_cell(&row[*c]) == Some(*v)) {
                continue;
            }
            matched += 1;
            match parse_cell(&row[col]) {
                Some(x) if self.op.holds(x) => {}
                Some(x) => return fail(format!("{} = {x}", self.column)),
                None => return fail(format!("{} = `{}` is not numeric", self.column, row[col])),
            }
        }
        if matched == 0 {
            return fail("no matching rows".into());
        }
        Check { name: self.text.clone(), passed: true, detail: format!("{matched} rows") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub fn config_hash(canonical: &str) -> String {
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`; returns the CSV path.
pub fn write_outputs(
    dir: &Path,
    stem: &str,
    experiment: &str,
    table: &Table,
    checks: &[Check],
    canonical_config: &str,
    extra_files: &[PathBuf],
) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    fs::write(&csv, table.to_csv())?;
    let sidecar = json!({
        "experiment": experiment,
        "csv": format!("{stem}.csv"),
        "config_sha256": config_hash(canonical_config),
        "versions": {
            "atma-cli": env!("CARGO_PKG_VERSION"),
            "atma-core": atma_core::VERSION,
        },
        "columns": table.header,
        "rows": table.rows.len(),
        "annotated_rows": table.notes(),
        "golden": checks.iter().map(|c| json!({
            "check": c.name,
            "passed": c.passed,
            "detail": c.detail,
        })).collect::<Vec<_>>(),
        "files": extra_files
            .iter()
            .map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default())
            .collect::<Vec<_>>(),
    });
    let mut text = serde_json::to_string_pretty(&sidecar).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(dir.join(format!("{stem}.json")), text)?;
    Ok(csv)
}
