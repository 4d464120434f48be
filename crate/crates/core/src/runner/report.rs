//! Result tables: monthly AUCs, averages, and plot-ready series.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cohort::InformationLevel;
use crate::error::{Error, Result};
use crate::evaluation::{average_auc, Method, MonthlyResult};
use crate::month::MonthIndex;

pub const MONTHLY_HEADER: [&str; 7] = ["method", "info_level", "year", "month", "auc", "n_test", "n_pos"];

#[derive(Debug, Serialize, Deserialize)]
struct MonthlyRow {
    method: String,
    info_level: String,
    year: i32,
    month: u32,
    auc: Option<f64>,
    n_test: usize,
    n_pos: usize,
}

pub fn write_monthly<W: Write>(results: &[MonthlyResult], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if results.is_empty() {
        w.write_record(MONTHLY_HEADER).map_err(csv_error)?;
    }
    for r in results {
        w.serialize(MonthlyRow {
            method: r.method.to_string(),
            info_level: r.level.to_string(),
            year: r.t.year(),
            month: r.t.month(),
            auc: r.auc,
            n_test: r.n_test,
            n_pos: r.n_pos,
        })
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Validation(e.to_string()))
}

pub fn read_monthly<R: Read>(reader: R) -> Result<Vec<MonthlyResult>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    if header != MONTHLY_HEADER {
        return Err(Error::Parse {
            row: 1,
            column: "header".into(),
            message: format!("expected `{}`", MONTHLY_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<MonthlyRow>().enumerate() {
        let line = i as u64 + 2;
        let row = row.map_err(|e| Error::Parse {
            row: line,
            column: "?".into(),
            message: e.to_string(),
        })?;
        let parse_err = |column: &str, e: Error| Error::Parse {
            row: line,
            column: column.into(),
            message: e.to_string(),
        };
        if !(1..=12).contains(&row.month) {
            return Err(Error::Parse {
                row: line,
                column: "month".into(),
                message: format!("month {} out of range", row.month),
            });
        }
        out.push(MonthlyResult {
            t: MonthIndex::new(row.year, row.month),
            method: row.method.parse().map_err(|e| parse_err("method", e))?,
            level: row.info_level.parse().map_err(|e| parse_err("info_level", e))?,
            auc: row.auc,
            n_test: row.n_test,
            n_pos: row.n_pos,
        });
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Validation(format!("csv: {e}"))
}

/// Average AUC of one (method, level) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageCell {
    pub method: Method,
    pub level: InformationLevel,
    /// Mean of the defined monthly AUCs; `None` if there are none.
    pub auc: Option<f64>,
    pub months: usize,
}

/// One cell per (method, level) pair present in `results`, in first-seen
/// order of methods and levels.
pub fn averages(results: &[MonthlyResult]) -> Vec<AverageCell> {
    let methods = first_seen(results.iter().map(|r| r.method));
    let levels = first_seen(results.iter().map(|r| r.level));
    let mut cells = Vec::new();
    for &method in &methods {
        for &level in &levels {
            let rows: Vec<&MonthlyResult> = results
                .iter()
                .filter(|r| r.method == method && r.level == level)
                .collect();
            if rows.is_empty() {
                continue;
            }
            let avg = average_auc(rows.iter().copied());
            cells.push(AverageCell {
                method,
                level,
                auc: avg.map(|a| a.0),
                months: avg.map_or(0, |a| a.1),
            });
        }
    }
    cells
}

fn first_seen<T: PartialEq + Copy>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Wide table: one row per method, one column per information level.
pub fn write_averages<W: Write>(cells: &[AverageCell], writer: W) -> Result<()> {
    let methods = first_seen(cells.iter().map(|c| c.method));
    let levels = first_seen(cells.iter().map(|c| c.level));
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["method".to_string()];
    header.extend(levels.iter().map(|l| l.to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for m in methods {
        let mut row = vec![m.to_string()];
        for l in &levels {
            let v = cells.iter().find(|c| c.method == m && c.level == *l).and_then(|c| c.auc);
            row.push(cell(v));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Validation(e.to_string()))
}

/// Per-month AUC of every method at `level`, one column per method.
pub fn write_level_series<W: Write>(
    results: &[MonthlyResult],
    level: InformationLevel,
    writer: W,
) -> Result<()> {
    let rows: Vec<&MonthlyResult> = results.iter().filter(|r| r.level == level).collect();
    let methods = first_seen(rows.iter().map(|r| r.method));
    let mut by_month: BTreeMap<MonthIndex, BTreeMap<Method, Option<f64>>> = BTreeMap::new();
    for r in &rows {
        by_month.entry(r.t).or_default().insert(r.method, r.auc);
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["info_level".to_string(), "year".into(), "month".into()];
    header.extend(methods.iter().map(|m| m.to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for (t, values) in by_month {
        let mut row = vec![level.to_string(), t.year().to_string(), t.month().to_string()];
        row.extend(methods.iter().map(|m| cell(values.get(m).copied().flatten())));
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Validation(e.to_string()))
}

/// Per-month AUC of the best-averaging method at each level. Ties go to the
/// method listed first.
pub fn write_best_per_level<W: Write>(results: &[MonthlyResult], writer: W) -> Result<()> {
    let cells = averages(results);
    let levels = first_seen(cells.iter().map(|c| c.level));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["info_level", "method", "year", "month", "auc"]).map_err(csv_error)?;
    for level in levels {
        let best = cells
            .iter()
            .filter(|c| c.level == level && c.auc.is_some())
            .fold(None::<&AverageCell>, |best, c| match best {
                Some(b) if b.auc >= c.auc => Some(b),
                _ => Some(c),
            });
        let Some(best) = best else { continue };
        for r in results.iter().filter(|r| r.level == level && r.method == best.method) {
            w.write_record([
                level.to_string(),
                best.method.to_string(),
                r.t.year().to_string(),
                r.t.month().to_string(),
                cell(r.auc),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| Error::Validation(e.to_string()))
}

/// Writes `bytes` to `path`, creating parent directories.
pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}
