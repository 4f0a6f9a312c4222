//! CSV and JSON serialization of runs and sweeps.
//!
//! Reals are written with six significant digits and a dot decimal
//! separator; every row, the header included, ends in `\n`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Deserialize;

use super::format::fmt_sig6;
use super::SweepResult;
use crate::error::{Error, Result};
use crate::evolution::{GenerationRecord, RunResult};

pub const SWEEP_CSV_HEADER: &str =
    "policy,k,r,rho_A,replicates,mean_p_C,sd_p_C,mean_p_AC,sd_p_AC,mean_coop_freq,r_critical";
pub const RUN_CSV_HEADER: &str = "generation,mean_p_C,mean_p_AC,coop_freq";

/// One parsed row of a sweep CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct SweepCsvRow {
    pub policy: String,
    pub k: usize,
    pub r: f64,
    #[serde(rename = "rho_A")]
    pub rho_a: f64,
    pub replicates: usize,
    #[serde(rename = "mean_p_C")]
    pub mean_p_c: f64,
    #[serde(rename = "sd_p_C")]
    pub sd_p_c: f64,
    #[serde(rename = "mean_p_AC")]
    pub mean_p_ac: f64,
    #[serde(rename = "sd_p_AC")]
    pub sd_p_ac: f64,
    pub mean_coop_freq: f64,
    pub r_critical: Option<f64>,
}

/// One parsed row of a run CSV.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct RunCsvRow {
    pub generation: usize,
    #[serde(rename = "mean_p_C")]
    pub mean_p_c: f64,
    #[serde(rename = "mean_p_AC")]
    pub mean_p_ac: f64,
    pub coop_freq: f64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn write_sweep_csv_to<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    let config = &result.config;
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for cell in &result.cells {
        let critical = result
            .critical_for(cell.rho_a)
            .and_then(|c| c.r_critical)
            .map(fmt_sig6)
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            config.policy,
            config.base.k,
            fmt_sig6(cell.r),
            fmt_sig6(cell.rho_a),
            cell.replicate_count,
            fmt_sig6(cell.mean_p_c),
            fmt_sig6(cell.sd_p_c),
            fmt_sig6(cell.mean_p_ac),
            fmt_sig6(cell.sd_p_ac),
            fmt_sig6(cell.mean_coop_frequency),
            critical,
        )?;
    }
    out.flush()
}

pub fn write_sweep_csv(result: &SweepResult, path: &Path) -> Result<()> {
    write_sweep_csv_to(result, create(path)?).map_err(io_err(path))
}

pub fn write_sweep_json(result: &SweepResult, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, result).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(io_err(path))
}

fn write_run_row<W: Write>(out: &mut W, record: &GenerationRecord) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{}",
        record.generation,
        fmt_sig6(record.mean_p_c),
        fmt_sig6(record.mean_p_ac),
        fmt_sig6(record.coop_frequency)
    )
}

pub fn write_run_csv_to<W: Write>(run: &RunResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{RUN_CSV_HEADER}")?;
    for record in &run.records {
        write_run_row(&mut out, record)?;
    }
    out.flush()
}

pub fn write_run_csv(run: &RunResult, path: &Path) -> Result<()> {
    write_run_csv_to(run, create(path)?).map_err(io_err(path))
}

/// Opens a run CSV at `path` and hands `body` a sink that appends one row per record.
pub(crate) fn stream_run_csv<T>(
    path: &Path,
    body: impl FnOnce(&mut dyn FnMut(&GenerationRecord) -> Result<()>) -> Result<T>,
) -> Result<T> {
    let mut out = create(path)?;
    writeln!(out, "{RUN_CSV_HEADER}").map_err(io_err(path))?;
    let value = body(&mut |record| write_run_row(&mut out, record).map_err(io_err(path)))?;
    out.flush().map_err(io_err(path))?;
    Ok(value)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path, header: &str) -> Result<Vec<T>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let found: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    if found.join(",") != header {
        return Err(Error::Argument(format!(
            "{}: unexpected header `{}` (expected `{header}`)",
            path.display(),
            found.join(",")
        )));
    }
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(csv_err)
}

pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepCsvRow>> {
    read_rows(path, SWEEP_CSV_HEADER)
}

pub fn read_run_csv(path: &Path) -> Result<Vec<RunCsvRow>> {
    read_rows(path, RUN_CSV_HEADER)
}
