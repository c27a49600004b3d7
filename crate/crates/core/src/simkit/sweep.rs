use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use crate::coding_gap::{build_gap_table, GapTable};
use crate::error::Result;
use crate::loader::{allocate_system, partition, LoadParams, SubsetPlan, SystemAllocation};
use crate::plc_channel::{average_gain_db, scale_to_gain, ChannelResponse};

/// Precoding mode: LP-DMT with the configured `L_c`, or plain DMT (`L_c = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Lpdmt,
    Dmt,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Lpdmt => "lpdmt",
            Mode::Dmt => "dmt",
        }
    }
}

/// Everything a sweep point needs that does not depend on the target gain.
#[derive(Debug, Clone)]
pub struct SweepContext {
    pub reference: ChannelResponse,
    pub reference_gain_db: f64,
    pub coded: GapTable,
    pub uncoded: GapTable,
    lpdmt_plan: SubsetPlan,
    dmt_plan: SubsetPlan,
    lpdmt_params: LoadParams,
    dmt_params: LoadParams,
}

/// The four system variants evaluated at one channel gain.
#[derive(Debug, Clone)]
pub struct PointAllocations {
    pub coded_lpdmt: SystemAllocation,
    pub uncoded_lpdmt: SystemAllocation,
    pub coded_dmt: SystemAllocation,
    pub uncoded_dmt: SystemAllocation,
}

impl PointAllocations {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &SystemAllocation)> {
        [
            ("coded_lpdmt", &self.coded_lpdmt),
            ("uncoded_lpdmt", &self.uncoded_lpdmt),
            ("coded_dmt", &self.coded_dmt),
            ("uncoded_dmt", &self.uncoded_dmt),
        ]
        .into_iter()
    }
}

impl SweepContext {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let reference = cfg.reference_response()?;
        let n = cfg.grid.n;
        Ok(SweepContext {
            reference_gain_db: average_gain_db(&reference)?,
            reference,
            coded: build_gap_table(&cfg.coding.coded())?,
            uncoded: build_gap_table(&cfg.coding.uncoded())?,
            lpdmt_plan: partition(n, cfg.loading.lc, cfg.loading.strategy)?,
            dmt_plan: partition(n, 1, cfg.loading.strategy)?,
            lpdmt_params: cfg.load_params(cfg.loading.lc),
            dmt_params: cfg.load_params(1),
        })
    }

    pub fn table(&self, coded: bool) -> &GapTable {
        if coded {
            &self.coded
        } else {
            &self.uncoded
        }
    }

    /// Reference response rescaled to `target_db`, or unscaled for `None`.
    pub fn response(&self, target_db: Option<f64>) -> Result<ChannelResponse> {
        match target_db {
            Some(g) => scale_to_gain(&self.reference, g),
            None => Ok(self.reference.clone()),
        }
    }

    pub fn allocate(&self, resp: &ChannelResponse, mode: Mode, coded: bool) -> Result<SystemAllocation> {
        let (plan, params) = match mode {
            Mode::Lpdmt => (&self.lpdmt_plan, &self.lpdmt_params),
            Mode::Dmt => (&self.dmt_plan, &self.dmt_params),
        };
        allocate_system(resp, plan, self.table(coded), params)
    }

    pub fn evaluate(&self, target_db: Option<f64>) -> Result<PointAllocations> {
        let resp = self.response(target_db)?;
        Ok(PointAllocations {
            coded_lpdmt: self.allocate(&resp, Mode::Lpdmt, true)?,
            uncoded_lpdmt: self.allocate(&resp, Mode::Lpdmt, false)?,
            coded_dmt: self.allocate(&resp, Mode::Dmt, true)?,
            uncoded_dmt: self.allocate(&resp, Mode::Dmt, false)?,
        })
    }

    /// One sweep row; `None` evaluates the unscaled reference channel.
    pub fn row(&self, target_db: Option<f64>) -> Result<SweepRow> {
        let g_db = target_db.unwrap_or(self.reference_gain_db);
        let a = self.evaluate(target_db)?;
        let coded_lpdmt = a.coded_lpdmt.total_bits;
        Ok(SweepRow {
            target_g_db: g_db,
            snr_db: snr_db(g_db),
            bits_coded_lpdmt: coded_lpdmt,
            bits_uncoded_lpdmt: a.uncoded_lpdmt.total_bits,
            bits_coded_dmt: a.coded_dmt.total_bits,
            bits_uncoded_dmt: a.uncoded_dmt.total_bits,
            pct_vs_uncoded_lpdmt: pct_increase(coded_lpdmt, a.uncoded_lpdmt.total_bits),
            pct_vs_coded_dmt: pct_increase(coded_lpdmt, a.coded_dmt.total_bits),
            reference: target_db.is_none(),
        })
    }
}

/// Reception SNR associated with an average channel gain, using the
/// `-30 + G + 110` dB relation.
pub fn snr_db(g_db: f64) -> f64 {
    -30.0 + g_db + 110.0
}

/// `100 (a - b) / b`; NaN when the baseline carries no bits.
pub fn pct_increase(a: u64, b: u64) -> f64 {
    if b == 0 {
        f64::NAN
    } else {
        100.0 * (a as f64 - b as f64) / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub target_g_db: f64,
    pub snr_db: f64,
    pub bits_coded_lpdmt: u64,
    pub bits_uncoded_lpdmt: u64,
    pub bits_coded_dmt: u64,
    pub bits_uncoded_dmt: u64,
    pub pct_vs_uncoded_lpdmt: f64,
    pub pct_vs_coded_dmt: f64,
    /// Marks the unscaled reference channel.
    pub reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Sweep grid points in ascending gain order.
    pub rows: Vec<SweepRow>,
    /// The unscaled reference channel evaluated at its own average gain.
    pub reference: SweepRow,
}

impl SweepResult {
    /// Grid rows with the reference row merged in at its gain.
    pub fn rows_with_reference(&self) -> Vec<SweepRow> {
        let mut all = self.rows.clone();
        let at = all.partition_point(|r| r.target_g_db <= self.reference.target_g_db);
        all.insert(at, self.reference);
        all
    }
}

/// Throughput of the four system variants over the configured gain sweep.
pub fn run_sweep(cfg: &SimConfig) -> Result<SweepResult> {
    let ctx = SweepContext::new(cfg)?;
    let rows = cfg
        .sweep
        .points()
        .into_par_iter()
        .map(|g| ctx.row(Some(g)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        reference: ctx.row(None)?,
    })
}

/// Trellis-gain values of the default sensitivity grid, dB.
pub const SENSITIVITY_GAMMA_TC_DB: [f64; 5] = [-2.0, 0.0, 2.0, 4.2, 6.0];
/// Margin values of the default sensitivity grid, dB. Negative margins act
/// as a higher operating SNR.
pub const SENSITIVITY_GAMMA_M_DB: [f64; 4] = [-20.0, -10.0, 0.0, 6.0];
/// Channel gains at which the sensitivity grid is evaluated, dB.
pub const SENSITIVITY_GAINS_DB: [f64; 2] = [-70.0, -60.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensitivityRow {
    pub gamma_tc_db: f64,
    pub gamma_m_db: f64,
    pub target_g_db: f64,
    pub pct_vs_uncoded_lpdmt: f64,
    pub pct_vs_coded_dmt: f64,
}

/// Percentage improvements for every `(gamma_tc, gamma_m, G)` combination,
/// all other settings taken from `cfg`.
pub fn sensitivity_table(
    cfg: &SimConfig,
    gamma_tc_db: &[f64],
    gamma_m_db: &[f64],
    gains_db: &[f64],
) -> Result<Vec<SensitivityRow>> {
    let combos: Vec<(f64, f64)> = gamma_tc_db
        .iter()
        .flat_map(|&tc| gamma_m_db.iter().map(move |&m| (tc, m)))
        .collect();
    let blocks = combos
        .par_iter()
        .map(|&(tc, m)| {
            let mut cfg = cfg.clone();
            cfg.coding.gamma_tc_db = tc;
            cfg.coding.gamma_m_db = m;
            let ctx = SweepContext::new(&cfg)?;
            gains_db
                .iter()
                .map(|&g| {
                    let row = ctx.row(Some(g))?;
                    Ok(SensitivityRow {
                        gamma_tc_db: tc,
                        gamma_m_db: m,
                        target_g_db: g,
                        pct_vs_uncoded_lpdmt: row.pct_vs_uncoded_lpdmt,
                        pct_vs_coded_dmt: row.pct_vs_coded_dmt,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyRow {
    pub n: usize,
    pub f_hz: f64,
    pub energy: f64,
    pub psd_ceiling: f64,
}

/// Energy placed on every subcarrier by one system variant, next to the
/// per-subcarrier budget. `target_db = None` uses the unscaled channel.
pub fn energy_profile(cfg: &SimConfig, mode: Mode, coded: bool, target_db: Option<f64>) -> Result<Vec<EnergyRow>> {
    let ctx = SweepContext::new(cfg)?;
    let alloc = ctx.allocate(&ctx.response(target_db)?, mode, coded)?;
    let ceiling = cfg.es();
    Ok(alloc
        .per_subcarrier_energy
        .iter()
        .enumerate()
        .map(|(i, &energy)| EnergyRow {
            n: i + 1,
            f_hz: cfg.grid.frequency(i),
            energy,
            psd_ceiling: ceiling,
        })
        .collect())
}
