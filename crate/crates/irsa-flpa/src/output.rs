//! Result rows and the table/CSV/JSON serializers.
//!
//! File output is deterministic byte for byte: floats are rendered with 17
//! significant digits (`{:.16e}`), which round-trips every f64 exactly, and
//! the exact engines additionally carry their rationals in sidecar columns
//! as `p/q` strings, so a CSV written today can be re-read without losing a
//! single bit. Wall-clock time appears only in the stdout table for exactly
//! that reason.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use irsa_core::rational::{fraction_string, render_decimal};
use irsa_core::Rat;
use serde::Serialize;

use crate::cli::ModeArg;

/// One computed point: a (user count, mode) pair.
pub struct ResultRow {
    pub k: u32,
    pub t: u32,
    pub mode: &'static str,
    pub plr: f64,
    pub throughput: f64,
    pub pmf: BTreeMap<u32, f64>,
    /// Degree-vector probability mass the mode evaluated (exact family only).
    pub coverage: Option<f64>,
    /// Standard error of the loss estimate (simulate only).
    pub stderr: Option<f64>,
    pub plr_exact: Option<Rat>,
    pub pmf_exact: Option<BTreeMap<u32, Rat>>,
    pub coverage_exact: Option<Rat>,
    pub wall_time_ms: u64,
    pub warnings: Vec<String>,
}

impl ResultRow {
    pub fn g(&self) -> f64 {
        f64::from(self.k) / f64::from(self.t)
    }
}

pub const CSV_VERSION_LINE: &str = "# irsa-flpa v1";

const CSV_HEADER: &str =
    "k,t,g,mode,plr,throughput,pmf,coverage,stderr,plr_fraction,pmf_fractions,coverage_fraction";

/// 17 significant digits: enough for exact f64 round-tripping.
fn float_cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_float_cell(v: Option<f64>) -> String {
    v.map(float_cell).unwrap_or_default()
}

fn pmf_cell(pmf: &BTreeMap<u32, f64>) -> String {
    pmf.iter()
        .map(|(u, p)| format!("{u}:{}", float_cell(*p)))
        .collect::<Vec<_>>()
        .join(";")
}

fn pmf_fraction_cell(pmf: &BTreeMap<u32, Rat>) -> String {
    pmf.iter()
        .map(|(u, p)| format!("{u}:{}", fraction_string(p)))
        .collect::<Vec<_>>()
        .join(";")
}

fn csv_record(row: &ResultRow) -> String {
    [
        row.k.to_string(),
        row.t.to_string(),
        float_cell(row.g()),
        row.mode.to_string(),
        float_cell(row.plr),
        float_cell(row.throughput),
        pmf_cell(&row.pmf),
        opt_float_cell(row.coverage),
        opt_float_cell(row.stderr),
        row.plr_exact.as_ref().map(fraction_string).unwrap_or_default(),
        row.pmf_exact.as_ref().map(|p| pmf_fraction_cell(p)).unwrap_or_default(),
        row.coverage_exact.as_ref().map(fraction_string).unwrap_or_default(),
    ]
    .join(",")
}

pub fn csv_text(rows: &[ResultRow], aborted: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&csv_record(row));
        out.push('\n');
    }
    if let Some(msg) = aborted {
        out.push_str(&format!("# aborted: {msg}\n"));
    }
    out
}

/// JSON mirror of the CSV: same field names, same cell encodings, `null`
/// where the CSV cell is empty.
#[derive(Serialize)]
struct JsonRow<'a> {
    k: u32,
    t: u32,
    g: f64,
    mode: &'a str,
    plr: f64,
    throughput: f64,
    pmf: String,
    coverage: Option<f64>,
    stderr: Option<f64>,
    plr_fraction: Option<String>,
    pmf_fractions: Option<String>,
    coverage_fraction: Option<String>,
}

pub fn json_text(rows: &[ResultRow]) -> Result<String> {
    let json_rows: Vec<JsonRow> = rows
        .iter()
        .map(|row| JsonRow {
            k: row.k,
            t: row.t,
            g: row.g(),
            mode: row.mode,
            plr: row.plr,
            throughput: row.throughput,
            pmf: pmf_cell(&row.pmf),
            coverage: row.coverage,
            stderr: row.stderr,
            plr_fraction: row.plr_exact.as_ref().map(fraction_string),
            pmf_fractions: row.pmf_exact.as_ref().map(|p| pmf_fraction_cell(p)),
            coverage_fraction: row.coverage_exact.as_ref().map(fraction_string),
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&json_rows).context("serializing rows")?;
    text.push('\n');
    Ok(text)
}

pub fn write_rows(path: &Path, rows: &[ResultRow], aborted: Option<&str>) -> Result<()> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => csv_text(rows, aborted),
        Some("json") => json_text(rows)?,
        _ => bail!("output file {} must end in .csv or .json", path.display()),
    };
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Pivot of loss rates per load: one row per user count, one column per mode
/// (canonical order), plus signed deltas against the baseline mode — exact
/// when it was run, the first canonical mode otherwise. Only sweep points
/// that finished in every mode are included.
pub fn compare_text(rows: &[ResultRow], modes: &[ModeArg]) -> String {
    let mut columns: Vec<ModeArg> = modes.to_vec();
    columns.sort();
    let baseline = if columns.contains(&ModeArg::Exact) {
        ModeArg::Exact
    } else {
        columns[0]
    };

    let mut by_k: BTreeMap<u32, BTreeMap<&'static str, &ResultRow>> = BTreeMap::new();
    for row in rows {
        by_k.entry(row.k).or_default().insert(row.mode, row);
    }

    let mut out = String::new();
    out.push_str(CSV_VERSION_LINE);
    out.push('\n');
    out.push_str("g");
    for mode in &columns {
        out.push(',');
        out.push_str(mode.name());
    }
    for mode in &columns {
        if *mode != baseline {
            out.push_str(&format!(",delta_{}", mode.name()));
        }
    }
    out.push('\n');

    for cells in by_k.values() {
        if !columns.iter().all(|m| cells.contains_key(m.name())) {
            continue;
        }
        let base_plr = cells[baseline.name()].plr;
        out.push_str(&float_cell(cells[columns[0].name()].g()));
        for mode in &columns {
            out.push(',');
            out.push_str(&float_cell(cells[mode.name()].plr));
        }
        for mode in &columns {
            if *mode != baseline {
                out.push(',');
                out.push_str(&float_cell(cells[mode.name()].plr - base_plr));
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_compare(path: &Path, rows: &[ResultRow], modes: &[ModeArg]) -> Result<()> {
    if path.extension().and_then(|e| e.to_str()) != Some("csv") {
        bail!("comparison file {} must end in .csv", path.display());
    }
    std::fs::write(path, compare_text(rows, modes))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Human view. Loss rates honor `--decimals`; the exact engines render from
/// the rational (round half to even), float modes from the f64.
pub fn print_table(rows: &[ResultRow], decimals: usize) {
    let header = ["k", "t", "g", "mode", "plr", "throughput", "coverage", "stderr", "ms", "pmf"];
    let mut grid: Vec<[String; 10]> = Vec::new();
    for row in rows {
        let plr = match &row.plr_exact {
            Some(r) => render_decimal(r, decimals),
            None => format!("{:.decimals$}", row.plr),
        };
        let coverage = match (&row.coverage_exact, row.coverage) {
            (Some(r), _) => render_decimal(r, decimals),
            (None, Some(v)) => format!("{v:.decimals$}"),
            (None, None) => "-".into(),
        };
        let pmf = match &row.pmf_exact {
            Some(pmf) => pmf
                .iter()
                .map(|(u, p)| format!("{u}:{}", render_decimal(p, decimals)))
                .collect::<Vec<_>>()
                .join(" "),
            None => row
                .pmf
                .iter()
                .map(|(u, p)| format!("{u}:{p:.decimals$}"))
                .collect::<Vec<_>>()
                .join(" "),
        };
        grid.push([
            row.k.to_string(),
            row.t.to_string(),
            format!("{:.4}", row.g()),
            row.mode.to_string(),
            plr,
            format!("{:.decimals$}", row.throughput),
            coverage,
            row.stderr.map(|s| format!("{s:.2e}")).unwrap_or_else(|| "-".into()),
            row.wall_time_ms.to_string(),
            if pmf.is_empty() { "-".into() } else { pmf },
        ]);
    }

    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &grid {
        for (w, cell) in widths.iter_mut().zip(row.iter()) {
            *w = (*w).max(cell.len());
        }
    }
    let render = |cells: &[&str]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(cell, width)| format!("{cell:<0$}", *width))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    println!("{}", render(&header));
    for row in &grid {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        println!("{}", render(&cells));
    }
}

pub fn print_compare(rows: &[ResultRow], modes: &[ModeArg]) {
    print!("{}", compare_text(rows, modes));
}
