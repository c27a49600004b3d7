//! Row schemas and writers for the CSV / JSON artifacts.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::sweep::{SweepResult, SweepRow};
use crate::error::{Error, Result};
use crate::loader::SystemAllocation;
use crate::plc_channel::{lin_to_db, ChannelResponse, FrequencyGrid};

/// Opens `path` for writing, or stdout when `None`.
pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn write_csv<T: Serialize>(out: impl Write, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(mut out: impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(serde_json::Error::io)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseRow {
    pub n: usize,
    pub f_hz: f64,
    pub gain_linear: f64,
    pub gain_db: f64,
}

pub fn response_rows(resp: &ChannelResponse, grid: &FrequencyGrid) -> Vec<ResponseRow> {
    resp.gains
        .iter()
        .enumerate()
        .map(|(i, &g)| ResponseRow {
            n: i + 1,
            f_hz: grid.frequency(i),
            gain_linear: g,
            gain_db: lin_to_db(g),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AllocationRow {
    pub n: usize,
    pub f_hz: f64,
    pub energy_per_subcarrier: f64,
    pub bits_density: f64,
}

pub fn allocation_rows(alloc: &SystemAllocation, grid: &FrequencyGrid) -> Vec<AllocationRow> {
    alloc
        .per_subcarrier_energy
        .iter()
        .zip(&alloc.per_subcarrier_bits)
        .enumerate()
        .map(|(i, (&energy, &bits))| AllocationRow {
            n: i + 1,
            f_hz: grid.frequency(i),
            energy_per_subcarrier: energy,
            bits_density: bits,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetReport {
    pub subset_index: usize,
    /// 1-based subcarrier numbers.
    pub subcarriers: Vec<usize>,
    pub bits: Vec<u32>,
    pub energies: Vec<f64>,
    pub r_continuous: f64,
    pub r_discrete: u64,
    pub usable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationReport {
    pub lc: usize,
    pub coded: bool,
    pub average_gain_db: f64,
    pub es: f64,
    pub n0: f64,
    pub total_bits: u64,
    pub total_energy: f64,
    pub unusable_subsets: usize,
    pub subsets: Vec<SubsetReport>,
}

impl AllocationReport {
    pub fn new(alloc: &SystemAllocation, coded: bool, average_gain_db: f64, es: f64, n0: f64) -> Self {
        let subsets = alloc
            .plan
            .subsets
            .iter()
            .zip(&alloc.per_subset)
            .enumerate()
            .map(|(k, (tones, a))| SubsetReport {
                subset_index: k + 1,
                subcarriers: tones.iter().map(|i| i + 1).collect(),
                bits: a.bits.clone(),
                energies: a.energies.clone(),
                r_continuous: a.r_continuous,
                r_discrete: a.r_discrete,
                usable: a.usable,
            })
            .collect();
        AllocationReport {
            lc: alloc.plan.lc(),
            coded,
            average_gain_db,
            es,
            n0,
            total_bits: alloc.total_bits,
            total_energy: alloc.total_energy(),
            unusable_subsets: alloc.unusable_subsets,
            subsets,
        }
    }
}

/// Percentage-improvement columns of a sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PctRow {
    pub target_g_db: f64,
    pub pct_vs_uncoded_lpdmt: f64,
    pub pct_vs_coded_dmt: f64,
    pub reference: bool,
}

impl From<&SweepRow> for PctRow {
    fn from(r: &SweepRow) -> Self {
        PctRow {
            target_g_db: r.target_g_db,
            pct_vs_uncoded_lpdmt: r.pct_vs_uncoded_lpdmt,
            pct_vs_coded_dmt: r.pct_vs_coded_dmt,
            reference: r.reference,
        }
    }
}

pub fn pct_rows(result: &SweepResult) -> Vec<PctRow> {
    result.rows_with_reference().iter().map(PctRow::from).collect()
}
