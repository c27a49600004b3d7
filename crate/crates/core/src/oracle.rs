//! Independent checks for the loader and the gap calibration.
//!
//! [`exhaustive_allocate`] enumerates every admissible bit vector of a small
//! subset and keeps the best feasible one. [`qam_error_monte_carlo`] measures
//! the symbol error rate of QAM at the SNR the gap approximation prescribes.
//! Neither shares code with the loader.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::coding_gap::GapTable;
use crate::error::{invalid, Error, Result};
use crate::loader::LoadParams;

/// Largest number of bit vectors [`exhaustive_allocate`] will enumerate.
pub const SEARCH_CAP: u128 = 1 << 20;

/// Smallest Monte-Carlo run accepted.
pub const MIN_SYMBOLS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    pub best_bits: Vec<u32>,
    pub best_rate: u64,
    pub best_energy: f64,
    /// Number of distinct feasible vectors reaching `best_rate`.
    pub ties: usize,
}

/// Brute-force optimal loading of one subset.
///
/// Every vector with entries in `{0} U [b_min, b_max]` is priced with
/// `e_i = (2^b_i - 1) gamma(b_i) N_0 sum(1/|h|^2) / L_c^2`. The feasible vector
/// (`sum e_i <= E_s`) with the highest rate wins; ties go to the lowest
/// energy, then to the lexicographically smallest vector.
pub fn exhaustive_allocate(gains: &[f64], table: &GapTable, params: &LoadParams) -> Result<OracleResult> {
    params.validate()?;
    let lc = gains.len();
    if lc != params.lc {
        return Err(invalid("gains", format!("expected {} gains, got {lc}", params.lc)));
    }
    let levels: Vec<u32> = std::iter::once(0).chain(params.b_min..=params.b_max).collect();
    let size = (levels.len() as u128).checked_pow(lc as u32).unwrap_or(u128::MAX);
    if size > SEARCH_CAP {
        return Err(Error::SearchSpaceTooLarge { size, cap: SEARCH_CAP });
    }

    let mut inv_sum = 0.0;
    for &g in gains {
        inv_sum += 1.0 / g;
    }
    let scale = params.n0 * inv_sum / (lc as f64 * lc as f64);
    let price: Vec<f64> = levels
        .iter()
        .map(|&b| {
            if b == 0 {
                0.0
            } else {
                (2f64.powi(b as i32) - 1.0) * table.gamma(b) * scale
            }
        })
        .collect();

    let mut digits = vec![0usize; lc];
    let mut best: Option<(u64, f64, Vec<u32>)> = None;
    let mut ties = 0usize;
    for _ in 0..size {
        let energy: f64 = digits.iter().map(|&d| price[d]).sum();
        if energy <= params.es {
            let bits: Vec<u32> = digits.iter().map(|&d| levels[d]).collect();
            let rate: u64 = bits.iter().map(|&b| b as u64).sum();
            let replace = match &best {
                None => true,
                Some((r, e, v)) => {
                    if rate != *r {
                        rate > *r
                    } else {
                        energy < *e || (energy == *e && bits < *v)
                    }
                }
            };
            match &best {
                Some((r, _, _)) if rate == *r => ties += 1,
                Some((r, _, _)) if rate < *r => {}
                _ => ties = 1,
            }
            if replace {
                best = Some((rate, energy, bits));
            }
        }
        // odometer increment
        for d in digits.iter_mut() {
            *d += 1;
            if *d < levels.len() {
                break;
            }
            *d = 0;
        }
    }
    // The all-zero vector is always feasible for es >= 0.
    let (best_rate, best_energy, best_bits) = best.expect("zero vector is feasible");
    Ok(OracleResult {
        best_bits,
        best_rate,
        best_energy,
        ties,
    })
}

/// A QAM constellation on the odd-integer lattice.
#[derive(Debug, Clone)]
struct Constellation {
    points: Vec<(f64, f64)>,
    /// `Some((mx, my))` for rectangular grids, which can be sliced per axis.
    grid: Option<(usize, usize)>,
    scale: f64,
}

impl Constellation {
    fn new(b: u32) -> Result<Self> {
        if !(2..=10).contains(&b) {
            return Err(Error::UnsupportedConstellation(b));
        }
        let (points, grid) = if b.is_multiple_of(2) {
            let m = 1usize << (b / 2);
            (lattice(m, m, |_, _| true), Some((m, m)))
        } else if b == 3 {
            (lattice(4, 2, |_, _| true), Some((4, 2)))
        } else {
            // Cross constellation: a (3 * 2^((b-3)/2))^2 square minus four
            // 2^((b-5)/2)-wide corner squares.
            let side = 3usize << ((b - 3) / 2);
            let corner = 1usize << ((b - 5) / 2);
            let outside = |i: usize| i < corner || i >= side - corner;
            (lattice(side, side, |ix, iy| !(outside(ix) && outside(iy))), None)
        };
        debug_assert_eq!(points.len(), 1 << b);
        let mean_energy = points.iter().map(|(x, y)| x * x + y * y).sum::<f64>() / points.len() as f64;
        Ok(Constellation {
            points,
            grid,
            scale: mean_energy.sqrt().recip(),
        })
    }

    fn nearest(&self, x: f64, y: f64) -> usize {
        match self.grid {
            Some((mx, my)) => {
                let ix = slice(x / self.scale, mx);
                let iy = slice(y / self.scale, my);
                iy * mx + ix
            }
            None => {
                let (mut best, mut best_d) = (0, f64::INFINITY);
                for (i, &(px, py)) in self.points.iter().enumerate() {
                    let (dx, dy) = (x - px * self.scale, y - py * self.scale);
                    let d = dx * dx + dy * dy;
                    if d < best_d {
                        best = i;
                        best_d = d;
                    }
                }
                best
            }
        }
    }
}

/// Points `(2 ix - (mx - 1), 2 iy - (my - 1))`, row-major in `iy`.
fn lattice(mx: usize, my: usize, keep: impl Fn(usize, usize) -> bool) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(mx * my);
    for iy in 0..my {
        for ix in 0..mx {
            if keep(ix, iy) {
                pts.push(((2 * ix) as f64 - (mx - 1) as f64, (2 * iy) as f64 - (my - 1) as f64));
            }
        }
    }
    pts
}

/// Index of the nearest odd-integer level among `m` levels.
fn slice(v: f64, m: usize) -> usize {
    let top = (m - 1) as f64;
    ((v + top) / 2.0).round().clamp(0.0, top) as usize
}

/// Measured symbol error rate of `2^b`-QAM over AWGN at
/// `SNR = gap * (2^b - 1)`, with nearest-neighbour detection.
///
/// SNR is the ratio of mean symbol energy to total complex noise variance.
/// Results depend only on `(b, gap_db, symbols, seed)`.
pub fn qam_error_monte_carlo(b: u32, gap_db: f64, symbols: u64, seed: u64) -> Result<f64> {
    let constellation = Constellation::new(b)?;
    if symbols < MIN_SYMBOLS {
        return Err(invalid(
            "symbols",
            format!("need at least {MIN_SYMBOLS}, got {symbols}"),
        ));
    }
    if !gap_db.is_finite() {
        return Err(invalid("gap_db", "must be finite"));
    }
    let snr = 10f64.powf(gap_db / 10.0) * ((1u64 << b) - 1) as f64;
    let sigma = (0.5 / snr).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = constellation.points.len();
    let mut errors = 0u64;
    for _ in 0..symbols {
        let tx = rng.random_range(0..m);
        let (px, py) = constellation.points[tx];
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let rx = constellation.nearest(
            px * constellation.scale + sigma * nx,
            py * constellation.scale + sigma * ny,
        );
        if rx != tx {
            errors += 1;
        }
    }
    Ok(errors as f64 / symbols as f64)
}

/// A random small loading problem for oracle comparisons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub seed: u64,
    pub gains: Vec<f64>,
    pub params: LoadParams,
}

/// Builds the instance for `seed`.
///
/// Protocol: a ChaCha8 stream seeded with `seed`; `L_c = 2 + seed mod 3`;
/// tone gains log-uniform over [-80, -20] dB; `E_s / N_0` log-uniform over
/// [60, 110] dB with `E_s = 1`; bits in `{0} U [2, b_max]`.
pub fn random_instance(seed: u64, b_max: u32) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lc = 2 + (seed % 3) as usize;
    let gains = (0..lc)
        .map(|_| 10f64.powf(rng.random_range(-80.0..-20.0) / 10.0))
        .collect();
    let ratio_db: f64 = rng.random_range(60.0..110.0);
    Instance {
        seed,
        gains,
        params: LoadParams {
            lc,
            es: 1.0,
            n0: 10f64.powf(-ratio_db / 10.0),
            b_min: 2,
            b_max,
        },
    }
}

/// One instance where the loader fell short of the optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shortfall {
    pub instance: Instance,
    pub loader_bits: Vec<u32>,
    pub oracle_bits: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub instances: usize,
    pub matches: usize,
    /// Loader rate above the oracle's (must never happen).
    pub exceeded: usize,
    /// Loader allocations over the energy budget (must never happen).
    pub budget_violations: usize,
    pub shortfalls: Vec<Shortfall>,
}

/// Runs `allocate_subset` and [`exhaustive_allocate`] on seeds
/// `first_seed .. first_seed + count`.
pub fn agreement_harness(table: &GapTable, first_seed: u64, count: usize, b_max: u32) -> Result<AgreementReport> {
    let mut report = AgreementReport {
        instances: count,
        matches: 0,
        exceeded: 0,
        budget_violations: 0,
        shortfalls: Vec::new(),
    };
    for seed in first_seed..first_seed + count as u64 {
        let inst = random_instance(seed, b_max);
        let greedy = crate::loader::allocate_subset(&inst.gains, table, &inst.params)?;
        let best = exhaustive_allocate(&inst.gains, table, &inst.params)?;
        if greedy.tone_energy() > inst.params.es {
            report.budget_violations += 1;
        }
        if greedy.r_discrete > best.best_rate {
            report.exceeded += 1;
        }
        if greedy.r_discrete == best.best_rate {
            report.matches += 1;
        } else {
            report.shortfalls.push(Shortfall {
                instance: inst,
                loader_bits: greedy.bits,
                oracle_bits: best.best_bits,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constellations_have_unit_energy_and_right_size() {
        for b in 2..=10 {
            let c = Constellation::new(b).unwrap();
            assert_eq!(c.points.len(), 1 << b);
            let e = c
                .points
                .iter()
                .map(|(x, y)| (x * x + y * y) * c.scale * c.scale)
                .sum::<f64>()
                / c.points.len() as f64;
            assert!((e - 1.0).abs() < 1e-12);
        }
        assert!(Constellation::new(1).is_err());
        assert!(Constellation::new(11).is_err());
    }

    #[test]
    fn noiseless_detection_is_exact() {
        for b in 2..=9 {
            let c = Constellation::new(b).unwrap();
            for (i, &(x, y)) in c.points.iter().enumerate() {
                assert_eq!(c.nearest(x * c.scale, y * c.scale), i, "b = {b}");
            }
        }
    }

    #[test]
    fn rejects_small_runs() {
        assert!(qam_error_monte_carlo(2, 5.0, 10, 1).is_err());
    }

    #[test]
    fn zero_budget_oracle() {
        let table = GapTable::constant(2, 4, 9.8).unwrap();
        let p = LoadParams {
            lc: 3,
            es: 0.0,
            n0: 1.0,
            b_min: 2,
            b_max: 4,
        };
        let r = exhaustive_allocate(&[0.1, 0.2, 0.3], &table, &p).unwrap();
        assert_eq!(r.best_bits, vec![0, 0, 0]);
        assert_eq!(r.best_rate, 0);
        assert_eq!(r.ties, 1);
    }

    #[test]
    fn search_cap_enforced() {
        let table = GapTable::constant(2, 10, 9.8).unwrap();
        let p = LoadParams {
            lc: 8,
            es: 1.0,
            n0: 1.0,
            b_min: 2,
            b_max: 10,
        };
        assert!(matches!(
            exhaustive_allocate(&[1.0; 8], &table, &p),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
    }
}
