//! CSV and aligned-text output of benchmark records.

use std::io::Write;

use serde::Serialize;

use crate::bench::RunRecord;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 15] = [
    "variant",
    "geo",
    "element",
    "problem",
    "layout",
    "lane_width",
    "workers",
    "n_elements",
    "ns_per_element",
    "ns_mad",
    "accesses_per_element",
    "ops_model",
    "intensity",
    "bound_ns",
    "efficiency_pct",
];

/// First line of output produced without a passing verification run.
pub const UNVERIFIED_MARKER: &str = "# UNVERIFIED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Table,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(Error::Parse(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Serialize)]
struct Row {
    variant: &'static str,
    geo: &'static str,
    element: &'static str,
    problem: &'static str,
    layout: &'static str,
    lane_width: usize,
    workers: usize,
    n_elements: usize,
    ns_per_element: String,
    ns_mad: String,
    accesses_per_element: String,
    ops_model: u64,
    intensity: String,
    bound_ns: String,
    efficiency_pct: u32,
}

impl From<&RunRecord> for Row {
    fn from(r: &RunRecord) -> Self {
        Row {
            variant: r.desc.variant.as_str(),
            geo: r.desc.geometry_path.as_str(),
            element: r.desc.element.as_str(),
            problem: r.desc.problem.as_str(),
            layout: r.layout.scheme.as_str(),
            lane_width: r.layout.lane_width,
            workers: r.workers,
            n_elements: r.n_elements,
            ns_per_element: format!("{:.3}", r.ns_per_element),
            ns_mad: format!("{:.3}", r.ns_mad),
            accesses_per_element: format!("{}", r.accesses_per_element),
            ops_model: r.ops_model,
            intensity: format!("{:.2}", r.intensity),
            bound_ns: format!("{:.2}", r.bound_ns),
            efficiency_pct: r.efficiency_pct,
        }
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], unverified: bool, mut out: W) -> Result<()> {
    if unverified {
        writeln!(out, "{UNVERIFIED_MARKER}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_COLUMNS).map_err(csv_error)?;
    }
    for r in records {
        w.serialize(Row::from(r)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

pub fn write_table<W: Write>(records: &[RunRecord], unverified: bool, mut out: W) -> Result<()> {
    let header = [
        "variant", "geo", "element", "problem", "layout", "lanes", "workers", "elements", "ns/elem", "mad", "accesses",
        "ops", "intensity", "bound", "time (eff)",
    ];
    let rows: Vec<[String; 15]> = records
        .iter()
        .map(|r| {
            let row = Row::from(r);
            [
                row.variant.into(),
                row.geo.into(),
                row.element.into(),
                row.problem.into(),
                row.layout.into(),
                row.lane_width.to_string(),
                row.workers.to_string(),
                row.n_elements.to_string(),
                row.ns_per_element,
                row.ns_mad,
                row.accesses_per_element,
                row.ops_model.to_string(),
                row.intensity,
                row.bound_ns,
                format!("{:.2} ({}%)", r.ns_per_element, r.efficiency_pct),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    if unverified {
        writeln!(out, "UNVERIFIED: kernels were not checked against the reference integrator")?;
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i < 5 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect::<Vec<_>>()
            .join("  ")
    };
    writeln!(out, "{}", line(header.to_vec()))?;
    for row in &rows {
        writeln!(out, "{}", line(row.iter().map(String::as_str).collect()))?;
    }
    Ok(())
}

pub fn write_records<W: Write>(records: &[RunRecord], format: Format, unverified: bool, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(records, unverified, out),
        Format::Table => write_table(records, unverified, out),
    }
}
