//! CSV output with `#` metadata lines: library version and parameter echo.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::Result;
use crate::feedforward::WorkTable;
use crate::montecarlo::TrialResult;
use crate::photostatistics::OutcomeDistribution;

/// Key-value pairs echoed as `# key = value` before the header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    pub entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        let mut m = Metadata::default();
        m.push("wof_version", crate::VERSION);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.push(key, value);
        self
    }

    fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(())
    }
}

/// Write serializable rows under a metadata preamble.
pub fn write_rows<W: Write, T: Serialize>(mut out: W, meta: &Metadata, rows: &[T]) -> Result<()> {
    meta.write(&mut out)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionRow {
    pub dnx: i64,
    pub dnp: i64,
    pub prob: f64,
}

pub fn write_distribution<W: Write>(out: W, meta: &Metadata, dist: &OutcomeDistribution) -> Result<()> {
    let rows: Vec<DistributionRow> = dist.iter().map(|(o, prob)| DistributionRow { dnx: o.dnx, dnp: o.dnp, prob }).collect();
    write_rows(out, meta, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkTableRow {
    pub dnx: i64,
    pub dnp: i64,
    pub prob: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "W_US")]
    pub w_us: f64,
}

pub fn write_work_table<W: Write>(out: W, meta: &Metadata, table: &WorkTable) -> Result<()> {
    let rows: Vec<WorkTableRow> = (0..table.prob.len())
        .map(|i| {
            let o = table.outcome_at(i);
            WorkTableRow { dnx: o.dnx, dnp: o.dnp, prob: table.prob[i], w: table.w_disp[i], w_us: table.w_us[i] }
        })
        .collect();
    write_rows(out, meta, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub nbar: f64,
    pub kappa: f64,
    pub beta: f64,
    #[serde(rename = "W_exact")]
    pub w_exact: Option<f64>,
    #[serde(rename = "W_gauss")]
    pub w_gauss: f64,
    #[serde(rename = "W_lowex")]
    pub w_lowex: f64,
    #[serde(rename = "W_US")]
    pub w_us: Option<f64>,
    #[serde(rename = "E_rem")]
    pub e_rem: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSweepRow {
    pub case: String,
    pub param: f64,
    pub nbar: f64,
    pub kappa: f64,
    pub beta: f64,
    #[serde(rename = "W_noise")]
    pub w_noise: f64,
    #[serde(rename = "W_closed_form")]
    pub w_closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyRow {
    pub family: String,
    pub kappa_d2: f64,
    pub t_d: f64,
    pub log10_nbar: f64,
    pub eta: f64,
    pub eta_max1: f64,
    pub q_reset_over_ein: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizeRow {
    pub nbar: f64,
    #[serde(rename = "W_exact_opt")]
    pub w_exact_opt: f64,
    #[serde(rename = "W_analytic")]
    pub w_analytic: f64,
    pub kappa: f64,
    pub beta: f64,
}

/// One Monte Carlo trial, flattened for the debugging dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: u64,
    pub dnx: i64,
    pub dnp: i64,
    pub x: f64,
    pub p: f64,
    pub work_extracted: f64,
    pub table_work: f64,
    pub post_energy: f64,
    pub energy_in: f64,
    pub energy_detectors: f64,
    pub in_lattice: bool,
}

pub fn write_trials<W: Write>(out: W, meta: &Metadata, first: u64, trials: &[TrialResult]) -> Result<()> {
    let rows: Vec<TrialRow> = trials
        .iter()
        .zip(first..)
        .map(|(t, trial)| TrialRow {
            trial,
            dnx: t.outcome.dnx,
            dnp: t.outcome.dnp,
            x: t.alpha_true.x,
            p: t.alpha_true.p,
            work_extracted: t.work_extracted,
            table_work: t.table_work,
            post_energy: t.post_energy,
            energy_in: t.energy_in,
            energy_detectors: t.energy_detectors,
            in_lattice: t.in_lattice,
        })
        .collect();
    write_rows(out, meta, &rows)
}

/// Parsed CSV: metadata, header and raw records.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: Metadata,
    pub headers: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

/// Read a file produced by the writers above.
pub fn read_csv<R: Read>(mut input: R) -> Result<CsvTable> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut metadata = Metadata::default();
    for line in text.lines().filter_map(|l| l.strip_prefix("# ")) {
        if let Some((k, v)) = line.split_once(" = ") {
            metadata.push(k, v);
        }
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let headers = r.headers()?.iter().map(str::to_string).collect();
    let records = r.records().map(|rec| rec.map(|r| r.iter().map(str::to_string).collect())).collect::<std::result::Result<_, _>>()?;
    Ok(CsvTable { metadata, headers, records })
}
