//! `lpdmt` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::config::SimConfig;
use super::output::{allocation_rows, open_output, pct_rows, response_rows, write_csv, write_json, AllocationReport};
use super::sweep::{
    energy_profile, run_sweep, sensitivity_table, Mode, SweepContext, SENSITIVITY_GAINS_DB, SENSITIVITY_GAMMA_M_DB,
    SENSITIVITY_GAMMA_TC_DB,
};
use crate::coding_gap::{build_gap_table, gap_at_ber_db};
use crate::error::{Error, Result};
use crate::oracle::{agreement_harness, qam_error_monte_carlo};
use crate::plc_channel::average_gain_db;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "lpdmt",
    version,
    about = "Coded adaptive LP-DMT loading over power-line channels"
)]
pub struct Cli {
    /// Simulator config (TOML, or JSON by extension). Defaults are used when absent.
    #[arg(long, global = true, env = "LPDMT_CONFIG")]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// SNR gap per modulation order.
    GapTable {
        /// Build the uncoded table regardless of `coding.coded`.
        #[arg(long)]
        uncoded: bool,
    },
    /// Channel power gains on the subcarrier grid.
    ChannelResponse {
        /// Rescale to this average gain (dB) first.
        #[arg(long, allow_hyphen_values = true)]
        target_gain_db: Option<f64>,
    },
    /// Bit and energy allocation for one channel.
    Allocate {
        #[arg(long, allow_hyphen_values = true)]
        target_gain_db: Option<f64>,
        /// Override the precoding factor (1 = DMT).
        #[arg(long)]
        lc: Option<usize>,
        #[arg(long)]
        uncoded: bool,
    },
    /// Throughput of coded/uncoded LP-DMT and DMT over the gain sweep.
    Sweep {
        /// Also write fig4.csv and fig7.csv into this directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Per-subcarrier energy of one system variant.
    EnergyProfile {
        #[arg(long, value_enum, default_value = "lpdmt")]
        mode: Mode,
        #[arg(long)]
        uncoded: bool,
        #[arg(long, allow_hyphen_values = true)]
        target_gain_db: Option<f64>,
    },
    /// Percentage improvements over a grid of trellis gains and margins.
    Sensitivity,
    /// Exhaustive-search and Monte-Carlo cross-checks.
    Verify {
        /// Number of random loading instances.
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        /// Monte-Carlo symbols.
        #[arg(long, default_value_t = 1_000_000)]
        symbols: u64,
    },
}

/// Parses `std::env::args` and runs; returns the process exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("lpdmt: {e}");
            1
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::from_file(p),
        None => Ok(SimConfig::default()),
    }
}

/// Executes a parsed command line. `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::GapTable { uncoded } => {
            let coding = if *uncoded { cfg.coding.uncoded() } else { cfg.coding };
            let table = build_gap_table(&coding)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(open_output(out)?, table.rows())?,
                Format::Json => write_json(open_output(out)?, &table.rows().collect::<Vec<_>>())?,
            }
        }
        Command::ChannelResponse { target_gain_db } => {
            let ctx = SweepContext::new(&cfg)?;
            let resp = ctx.response(*target_gain_db)?;
            let rows = response_rows(&resp, &cfg.grid);
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(open_output(out)?, rows)?,
                Format::Json => write_json(open_output(out)?, &rows)?,
            }
        }
        Command::Allocate {
            target_gain_db,
            lc,
            uncoded,
        } => {
            let mut cfg = cfg.clone();
            if let Some(lc) = lc {
                cfg.loading.lc = *lc;
            }
            cfg.validate()?;
            let coded = cfg.coding.coded && !uncoded;
            let ctx = SweepContext::new(&cfg)?;
            let resp = ctx.response(*target_gain_db)?;
            let alloc = ctx.allocate(&resp, Mode::Lpdmt, coded)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => {
                    let report = AllocationReport::new(&alloc, coded, average_gain_db(&resp)?, cfg.es(), cfg.n0());
                    write_json(open_output(out)?, &report)?
                }
                Format::Csv => write_csv(open_output(out)?, allocation_rows(&alloc, &cfg.grid))?,
            }
        }
        Command::Sweep { out_dir } => {
            let result = run_sweep(&cfg)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(open_output(out)?, result.rows_with_reference())?,
                Format::Json => write_json(open_output(out)?, &result)?,
            }
            if let Some(dir) = out_dir {
                fs::create_dir_all(dir).map_err(|source| Error::Io {
                    path: dir.clone(),
                    source,
                })?;
                write_csv(open_output(Some(&dir.join("fig4.csv")))?, result.rows_with_reference())?;
                write_csv(open_output(Some(&dir.join("fig7.csv")))?, pct_rows(&result))?;
            }
        }
        Command::EnergyProfile {
            mode,
            uncoded,
            target_gain_db,
        } => {
            let coded = cfg.coding.coded && !uncoded;
            let rows = energy_profile(&cfg, *mode, coded, *target_gain_db)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(open_output(out)?, rows)?,
                Format::Json => write_json(open_output(out)?, &rows)?,
            }
        }
        Command::Sensitivity => {
            let rows = sensitivity_table(
                &cfg,
                &SENSITIVITY_GAMMA_TC_DB,
                &SENSITIVITY_GAMMA_M_DB,
                &SENSITIVITY_GAINS_DB,
            )?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => write_csv(open_output(out)?, rows)?,
                Format::Json => write_json(open_output(out)?, &rows)?,
            }
        }
        Command::Verify { seeds, symbols } => return verify(&cfg, cli.seed, *seeds, *symbols, out),
    }
    Ok(true)
}

/// Factor-of-two band for the Monte-Carlo SER check.
const SER_TARGET: f64 = 1e-3;

fn verify(cfg: &SimConfig, seed: u64, seeds: usize, symbols: u64, out: Option<&Path>) -> Result<bool> {
    use std::io::Write;

    let coding = crate::coding_gap::GapConfig {
        b_max: 4,
        ..cfg.coding.coded()
    };
    let table = build_gap_table(&coding)?;
    let report = agreement_harness(&table, seed, seeds, 4)?;
    let needed = (seeds * 95).div_ceil(100);
    let oracle_ok = report.exceeded == 0 && report.budget_violations == 0 && report.matches >= needed;

    let gap_db = gap_at_ber_db(SER_TARGET)?;
    let ser = qam_error_monte_carlo(2, gap_db, symbols, seed)?;
    let mc_ok = (SER_TARGET / 2.0..=SER_TARGET * 2.0).contains(&ser);

    let mut w = open_output(out)?;
    let io = |source| Error::Io {
        path: out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    };
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    writeln!(
        w,
        "{} exhaustive-search agreement: {}/{} optimal, {} above optimum, {} over budget",
        verdict(oracle_ok),
        report.matches,
        report.instances,
        report.exceeded,
        report.budget_violations
    )
    .map_err(io)?;
    for s in &report.shortfalls {
        writeln!(
            w,
            "  shortfall seed={} lc={} loader={:?} optimum={:?}",
            s.instance.seed, s.instance.params.lc, s.loader_bits, s.oracle_bits
        )
        .map_err(io)?;
    }
    writeln!(
        w,
        "{} QPSK Monte-Carlo at gap {:.4} dB: SER {:.3e} (target {:.0e}, {} symbols)",
        verdict(mc_ok),
        gap_db,
        ser,
        SER_TARGET,
        symbols
    )
    .map_err(io)?;
    w.flush().map_err(io)?;
    Ok(oracle_ok && mc_ok)
}
