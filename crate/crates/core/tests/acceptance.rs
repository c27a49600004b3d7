//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use lpdmt_core::coding_gap::{build_gap_table, gap_at_ber_db, GapConfig, CODED_BASE_GAP_DB};
use lpdmt_core::oracle::{agreement_harness, qam_error_monte_carlo};
use lpdmt_core::simkit::sweep::{
    sensitivity_table, SENSITIVITY_GAINS_DB, SENSITIVITY_GAMMA_M_DB, SENSITIVITY_GAMMA_TC_DB,
};
use lpdmt_core::simkit::{run_sweep, SimConfig, SweepContext};

const GAP_TOL_DB: f64 = 0.1;
const GAP_RUNTIME: Duration = Duration::from_secs(1);

const ORACLE_SEEDS: usize = 100;
const ORACLE_FIRST_SEED: u64 = 1;
const ORACLE_B_MAX: u32 = 4;
const ORACLE_MIN_MATCHES: usize = 95;
const ORACLE_RUNTIME: Duration = Duration::from_secs(30);

const SWEEP_POINTS: usize = 41;
const SWEEP_RUNTIME: Duration = Duration::from_secs(60);

/// `(G dB, pct_vs_uncoded_lpdmt target, tol, pct_vs_coded_dmt target, tol)`.
const PUBLISHED_PCT: [(f64, f64, f64, f64, f64); 2] = [(-60.0, 34.3, 6.0, 12.5, 5.0), (-70.0, 51.0, 8.0, 17.5, 6.0)];

/// Relative slack on energy comparisons against the budget.
const ENERGY_RTOL: f64 = 1e-9;

const MC_TARGET_SER: f64 = 1e-3;
const MC_FACTOR: f64 = 2.0;
const MC_SYMBOLS: u64 = 1_000_000;
const MC_SEED: u64 = 1;
const MC_RUNTIME: Duration = Duration::from_secs(10);

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("{verdict} criterion {id} ({name}): {}", o.detail);
}

fn gap_chain() -> Outcome {
    let start = Instant::now();
    let uncoded = gap_at_ber_db(1e-7).unwrap();
    let table = build_gap_table(&GapConfig::default().uncoded()).unwrap();
    let elapsed = start.elapsed();
    let table_ok = (table.gamma_db(2) - uncoded).abs() < 1e-12;
    let diff = (uncoded - CODED_BASE_GAP_DB).abs();
    Outcome {
        pass: diff <= GAP_TOL_DB && table_ok && elapsed < GAP_RUNTIME,
        detail: format!("uncoded gap {uncoded:.4} dB, |diff| {diff:.4} dB, {elapsed:?}"),
    }
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let cfg = GapConfig {
        b_max: ORACLE_B_MAX,
        ..GapConfig::default()
    };
    let table = build_gap_table(&cfg).unwrap();
    let r = agreement_harness(&table, ORACLE_FIRST_SEED, ORACLE_SEEDS, ORACLE_B_MAX).unwrap();
    let elapsed = start.elapsed();
    for s in &r.shortfalls {
        println!(
            "  shortfall seed={} lc={} gains={:?} es={} n0={} loader={:?} optimum={:?}",
            s.instance.seed,
            s.instance.params.lc,
            s.instance.gains,
            s.instance.params.es,
            s.instance.params.n0,
            s.loader_bits,
            s.oracle_bits
        );
    }
    Outcome {
        pass: r.exceeded == 0
            && r.budget_violations == 0
            && r.matches >= ORACLE_MIN_MATCHES
            && elapsed < ORACLE_RUNTIME,
        detail: format!(
            "{}/{} optimal, {} above optimum, {} over budget, {elapsed:?}",
            r.matches, r.instances, r.exceeded, r.budget_violations
        ),
    }
}

fn ordering() -> Outcome {
    let cfg = SimConfig::default();
    let start = Instant::now();
    let result = run_sweep(&cfg).unwrap();
    let elapsed = start.elapsed();
    let rows = &result.rows;
    let mut bad = Vec::new();
    for r in rows {
        if r.bits_coded_lpdmt < r.bits_coded_dmt || r.bits_coded_lpdmt < r.bits_uncoded_lpdmt {
            bad.push(format!("order@{}", r.target_g_db));
        }
    }
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if b.bits_coded_lpdmt < a.bits_coded_lpdmt
            || b.bits_uncoded_lpdmt < a.bits_uncoded_lpdmt
            || b.bits_coded_dmt < a.bits_coded_dmt
            || b.bits_uncoded_dmt < a.bits_uncoded_dmt
        {
            bad.push(format!("monotone@{}", b.target_g_db));
        }
    }
    Outcome {
        pass: rows.len() == SWEEP_POINTS && bad.is_empty() && elapsed < SWEEP_RUNTIME,
        detail: format!("{} points, {} violations {:?}, {elapsed:?}", rows.len(), bad.len(), bad),
    }
}

fn published_percentages() -> Outcome {
    let cfg = SimConfig::default();
    let ctx = SweepContext::new(&cfg).unwrap();
    let mut within = true;
    let mut detail = Vec::new();
    for &(g, u, ut, d, dt) in &PUBLISHED_PCT {
        let row = ctx.row(Some(g)).unwrap();
        let ok_u = (row.pct_vs_uncoded_lpdmt - u).abs() <= ut;
        let ok_d = (row.pct_vs_coded_dmt - d).abs() <= dt;
        within &= ok_u && ok_d;
        detail.push(format!(
            "G={g}: {:.1}% vs uncoded ({u}+-{ut}), {:.1}% vs DMT ({d}+-{dt})",
            row.pct_vs_uncoded_lpdmt, row.pct_vs_coded_dmt
        ));
    }
    if within {
        return Outcome {
            pass: true,
            detail: format!("defaults within tolerance; {}", detail.join("; ")),
        };
    }

    let table = sensitivity_table(
        &cfg,
        &SENSITIVITY_GAMMA_TC_DB,
        &SENSITIVITY_GAMMA_M_DB,
        &SENSITIVITY_GAINS_DB,
    )
    .unwrap();
    println!("  gamma_tc_db gamma_m_db   G_db  pct_vs_uncoded  pct_vs_dmt");
    for r in &table {
        println!(
            "  {:>11.1} {:>10.1} {:>6.1} {:>15.1} {:>11.1}",
            r.gamma_tc_db, r.gamma_m_db, r.target_g_db, r.pct_vs_uncoded_lpdmt, r.pct_vs_coded_dmt
        );
    }

    let bracket = |g: f64, pick: fn(&lpdmt_core::simkit::SensitivityRow) -> f64, target: f64| {
        let vals: Vec<f64> = table
            .iter()
            .filter(|r| r.target_g_db == g)
            .map(pick)
            .filter(|v| v.is_finite())
            .collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo <= target && target <= hi, lo, hi)
    };
    let mut bracketed = true;
    for &(g, u, _, d, _) in &PUBLISHED_PCT {
        let (ok_u, lo_u, hi_u) = bracket(g, |r| r.pct_vs_uncoded_lpdmt, u);
        let (ok_d, lo_d, hi_d) = bracket(g, |r| r.pct_vs_coded_dmt, d);
        bracketed &= ok_u && ok_d;
        detail.push(format!(
            "grid G={g}: uncoded [{lo_u:.1}, {hi_u:.1}], DMT [{lo_d:.1}, {hi_d:.1}]"
        ));
    }

    let joint: Vec<String> = SENSITIVITY_GAMMA_TC_DB
        .iter()
        .flat_map(|&tc| SENSITIVITY_GAMMA_M_DB.iter().map(move |&m| (tc, m)))
        .filter(|&(tc, m)| {
            PUBLISHED_PCT.iter().all(|&(g, u, ut, d, dt)| {
                table.iter().any(|r| {
                    r.gamma_tc_db == tc
                        && r.gamma_m_db == m
                        && r.target_g_db == g
                        && (r.pct_vs_uncoded_lpdmt - u).abs() <= ut
                        && (r.pct_vs_coded_dmt - d).abs() <= dt
                })
            })
        })
        .map(|(tc, m)| format!("(gamma_tc={tc}, gamma_m={m})"))
        .collect();
    detail.push(format!("settings within all tolerances: {joint:?}"));

    Outcome {
        pass: bracketed,
        detail: format!(
            "defaults outside tolerance, sensitivity grid used; {}",
            detail.join("; ")
        ),
    }
}

fn psd_compliance() -> Outcome {
    let cfg = SimConfig::default();
    let ctx = SweepContext::new(&cfg).unwrap();
    let es = cfg.es();
    let limit = es * (1.0 + ENERGY_RTOL);
    let mut targets: Vec<Option<f64>> = cfg.sweep.points().into_iter().map(Some).collect();
    targets.push(None);
    let mut checked = 0usize;
    let mut violations = 0usize;
    for t in targets {
        let point = ctx.evaluate(t).unwrap();
        for (_, alloc) in point.iter() {
            for sub in &alloc.per_subset {
                checked += 1;
                if sub.tone_energy() > limit {
                    violations += 1;
                }
            }
            violations += alloc.per_subcarrier_energy.iter().filter(|&&e| e > limit).count();
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{checked} subset allocations checked, {violations} violations, E_s = {es:.4e}"),
    }
}

fn energy_utilization() -> Outcome {
    let ctx = SweepContext::new(&SimConfig::default()).unwrap();
    let point = ctx.evaluate(None).unwrap();
    let lp = point.coded_lpdmt.total_energy();
    let dmt = point.coded_dmt.total_energy();
    Outcome {
        pass: lp >= dmt,
        detail: format!("coded LP-DMT {lp:.4e}, coded DMT {dmt:.4e} (ratio {:.4})", lp / dmt),
    }
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let gap = gap_at_ber_db(MC_TARGET_SER).unwrap();
    let ser = qam_error_monte_carlo(2, gap, MC_SYMBOLS, MC_SEED).unwrap();
    let elapsed = start.elapsed();
    let ok = (MC_TARGET_SER / MC_FACTOR..=MC_TARGET_SER * MC_FACTOR).contains(&ser);
    Outcome {
        pass: ok && elapsed < MC_RUNTIME,
        detail: format!("SER {ser:.4e} at gap {gap:.4} dB, {MC_SYMBOLS} symbols, {elapsed:?}"),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_lpdmt"))
            .env_remove("LPDMT_CONFIG")
            .args(["--out", path.to_str().unwrap(), "sweep"])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv");
    let b = run("b.csv");
    Outcome {
        pass: !a.is_empty() && a == b,
        detail: format!("{} bytes, identical: {}", a.len(), a == b),
    }
}

#[test]
fn acceptance_criteria() {
    let results = [
        ("gap chain", gap_chain()),
        ("oracle equivalence", oracle_equivalence()),
        ("throughput ordering", ordering()),
        ("published percentages", published_percentages()),
        ("PSD compliance", psd_compliance()),
        ("energy utilization", energy_utilization()),
        ("Monte-Carlo gap calibration", monte_carlo()),
        ("determinism", determinism()),
    ];
    for (i, (name, o)) in results.iter().enumerate() {
        report(i + 1, name, o);
    }
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, (_, o))| !o.pass)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
