//! Bit and energy loading for linear-precoded DMT.
//!
//! Subcarriers are grouped into subsets of `L_c` tones. Each subset carries
//! `L_c` orthogonal precoding sequences; sequence `i` transports a QAM symbol
//! of `b_i` bits and contributes `e_i` to the energy of every tone of the
//! subset. The effective channel seen by all sequences of a subset is the
//! harmonic mean of the subset's tone gains. Plain DMT is `L_c = 1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding_gap::GapTable;
use crate::error::{invalid, Error, Result};
use crate::plc_channel::ChannelResponse;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadParams {
    /// Precoding factor (sequences and tones per subset).
    pub lc: usize,
    /// Per-subcarrier energy budget.
    pub es: f64,
    /// Noise energy per subcarrier.
    pub n0: f64,
    pub b_min: u32,
    pub b_max: u32,
}

impl LoadParams {
    pub fn validate(&self) -> Result<()> {
        if self.lc < 1 {
            return Err(invalid("loading.lc", "must be >= 1"));
        }
        if !(self.es.is_finite() && self.es >= 0.0) {
            return Err(invalid("loading.es", "energy budget must be finite and >= 0"));
        }
        if !(self.n0.is_finite() && self.n0 > 0.0) {
            return Err(invalid("loading.n0", "noise level must be finite and > 0"));
        }
        if self.b_min < 1 || self.b_min > self.b_max {
            return Err(invalid("loading.b_min", "need 1 <= b_min <= b_max"));
        }
        Ok(())
    }

    pub fn with_lc(self, lc: usize) -> Self {
        LoadParams { lc, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Subset `k` holds tones `k*L_c .. (k+1)*L_c`.
    #[default]
    Adjacent,
    /// Subset `k` holds tones `k, k + N_k, k + 2 N_k, ...`.
    Interleaved,
}

/// Assignment of subcarriers (0-based indices) to subsets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetPlan {
    pub subsets: Vec<Vec<usize>>,
    pub strategy: Strategy,
}

impl SubsetPlan {
    pub fn lc(&self) -> usize {
        self.subsets.first().map_or(0, Vec::len)
    }
}

/// Splits `n_subcarriers` tones into `floor(N / lc)` disjoint subsets of
/// `lc` tones; the `N mod lc` leftover tones stay unassigned.
pub fn partition(n_subcarriers: usize, lc: usize, strategy: Strategy) -> Result<SubsetPlan> {
    if lc == 0 {
        return Err(invalid("lc", "must be >= 1"));
    }
    if lc > n_subcarriers {
        return Err(invalid(
            "lc",
            format!("precoding factor {lc} exceeds {n_subcarriers} subcarriers"),
        ));
    }
    let n_k = n_subcarriers / lc;
    let subsets = (0..n_k)
        .map(|k| match strategy {
            Strategy::Adjacent => (k * lc..(k + 1) * lc).collect(),
            Strategy::Interleaved => (0..lc).map(|j| k + j * n_k).collect(),
        })
        .collect();
    Ok(SubsetPlan { subsets, strategy })
}

/// Sum of `1 / |h_n|^2` over the subset; infinite if any tone is dead.
fn inverse_gain_sum(gains: &[f64]) -> f64 {
    gains
        .iter()
        .map(|&g| if g > 0.0 { 1.0 / g } else { f64::INFINITY })
        .sum()
}

/// Continuous-granularity rate of a subset:
/// `R_k = L_c log2(1 + (1/gamma) (L_c / sum 1/|h_n|^2) (E_s / N_0))`.
///
/// `L_c` is taken from `gains.len()`. A subset with a zero-gain tone has an
/// infinite inverse sum and therefore rate 0.
pub fn continuous_rate(gains: &[f64], gamma: f64, params: &LoadParams) -> f64 {
    let lc = gains.len() as f64;
    let inv = inverse_gain_sum(gains);
    if !inv.is_finite() || lc == 0.0 {
        return 0.0;
    }
    let harmonic = lc / inv;
    lc * (1.0 + harmonic * params.es / (gamma * params.n0)).log2()
}

/// Integer split of a continuous rate over `lc` sequences.
///
/// Returns the raw bit vector (larger loads first) and `n_c`, the number of
/// sequences carrying `floor(R/L_c) + 1` bits. No clamping is applied.
pub fn initial_bits(r_k: f64, lc: usize) -> (Vec<u32>, usize) {
    let per = (r_k.max(0.0)) / lc as f64;
    let base = per.floor();
    let n_c = ((lc as f64) * ((per - base).exp2() - 1.0)).floor() as usize;
    let n_c = n_c.min(lc);
    let base = base as u32;
    let bits = (0..lc).map(|i| if i < n_c { base + 1 } else { base }).collect();
    (bits, n_c)
}

/// Closed form of `sum(initial_bits(r_k, lc).0)`.
pub fn discrete_rate(r_k: f64, lc: usize) -> u64 {
    let l = lc as f64;
    let per = r_k.max(0.0) / l;
    let base = per.floor();
    let n_c = (l * ((per - base).exp2() - 1.0)).floor();
    (n_c * (base + 1.0) + (l - n_c) * base) as u64
}

/// Energy one sequence of `b` bits adds to each tone of its subset:
/// `(2^b - 1) (gamma / L_c^2) N_0 sum 1/|h_n|^2`.
pub fn sequence_energy(b: u32, gamma: f64, gains: &[f64], params: &LoadParams) -> f64 {
    if b == 0 {
        return 0.0;
    }
    let lc = gains.len() as f64;
    ((b as f64).exp2() - 1.0) * gamma / (lc * lc) * params.n0 * inverse_gain_sum(gains)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetAllocation {
    pub r_continuous: f64,
    pub bits: Vec<u32>,
    pub energies: Vec<f64>,
    pub n_c: usize,
    pub r_discrete: u64,
    /// False when a zero-gain tone made the subset unusable.
    pub usable: bool,
}

impl SubsetAllocation {
    fn empty(lc: usize, usable: bool) -> Self {
        SubsetAllocation {
            r_continuous: 0.0,
            bits: vec![0; lc],
            energies: vec![0.0; lc],
            n_c: 0,
            r_discrete: 0,
            usable,
        }
    }

    /// Energy occupied on each tone of the subset.
    pub fn tone_energy(&self) -> f64 {
        self.energies.iter().sum()
    }

    /// Number of active sequences.
    pub fn active_sequences(&self) -> usize {
        self.bits.iter().filter(|&&b| b > 0).count()
    }
}

struct EnergyModel<'a> {
    table: &'a GapTable,
    /// `N_0 sum(1/|h|^2) / L_c^2`.
    unit: f64,
}

impl EnergyModel<'_> {
    fn energy(&self, b: u32) -> f64 {
        if b == 0 {
            0.0
        } else {
            ((b as f64).exp2() - 1.0) * self.table.gamma(b) * self.unit
        }
    }

    fn total(&self, bits: &[u32]) -> f64 {
        bits.iter().map(|&b| self.energy(b)).sum()
    }
}

/// Loads one subset with per-order gaps from `table`.
///
/// Starts from the integer split of the continuous rate computed with the
/// table's initial gap, clamps it to `{0} U [b_min, b_max]`, then adds bits
/// one sequence at a time (rotating from sequence `n_c`, wrapping around)
/// while the tone energy stays within `E_s`, and finally removes bits in
/// reverse rotation order until the budget holds.
pub fn allocate_subset(gains: &[f64], table: &GapTable, params: &LoadParams) -> Result<SubsetAllocation> {
    params.validate()?;
    let lc = params.lc;
    if gains.len() != lc {
        return Err(invalid(
            "gains",
            format!("subset has {} gains, expected L_c = {lc}", gains.len()),
        ));
    }
    if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
        return Err(invalid("gains", "power gains must be finite and >= 0"));
    }
    if table.b_min > params.b_min || table.b_max < params.b_max {
        return Err(invalid(
            "table",
            format!(
                "gap table covers [{}, {}] but loading needs [{}, {}]",
                table.b_min, table.b_max, params.b_min, params.b_max
            ),
        ));
    }
    let inv = inverse_gain_sum(gains);
    if !inv.is_finite() {
        return Ok(SubsetAllocation::empty(lc, false));
    }
    let (b_min, b_max) = (params.b_min, params.b_max);
    let model = EnergyModel {
        table,
        unit: params.n0 * inv / (lc * lc) as f64,
    };

    let r_continuous = continuous_rate(gains, table.gamma_init_linear, params);
    let (mut bits, n_c) = initial_bits(r_continuous, lc);
    for b in &mut bits {
        if *b < b_min {
            *b = 0;
        } else if *b > b_max {
            *b = b_max;
        }
    }

    let mut history: Vec<(usize, u32)> = Vec::new();
    let mut cursor = n_c % lc;
    while model.total(&bits) <= params.es {
        let Some(i) = (0..lc).map(|o| (cursor + o) % lc).find(|&i| bits[i] < b_max) else {
            break;
        };
        history.push((i, bits[i]));
        bits[i] = if bits[i] == 0 { b_min } else { bits[i] + 1 };
        cursor = (i + 1) % lc;
    }

    while model.total(&bits) > params.es {
        if let Some((i, old)) = history.pop() {
            bits[i] = old;
            cursor = i;
            continue;
        }
        // Below the starting point: keep stepping backwards.
        let Some(i) = (1..=lc).map(|o| (cursor + lc - o) % lc).find(|&i| bits[i] > 0) else {
            break;
        };
        bits[i] = if bits[i] <= b_min { 0 } else { bits[i] - 1 };
        cursor = i;
    }

    let energies: Vec<f64> = bits.iter().map(|&b| model.energy(b)).collect();
    Ok(SubsetAllocation {
        r_continuous,
        r_discrete: bits.iter().map(|&b| b as u64).sum(),
        bits,
        energies,
        n_c,
        usable: true,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemAllocation {
    pub plan: SubsetPlan,
    pub per_subset: Vec<SubsetAllocation>,
    pub total_bits: u64,
    /// Energy on each subcarrier (zero for unassigned tones).
    pub per_subcarrier_energy: Vec<f64>,
    /// Bits per subcarrier, `r_discrete / L_c` across each subset.
    pub per_subcarrier_bits: Vec<f64>,
    pub unusable_subsets: usize,
}

impl SystemAllocation {
    pub fn total_energy(&self) -> f64 {
        self.per_subcarrier_energy.iter().sum()
    }
}

/// Loads every subset of `plan` independently and aggregates the result in
/// subset order.
pub fn allocate_system(
    resp: &ChannelResponse,
    plan: &SubsetPlan,
    table: &GapTable,
    params: &LoadParams,
) -> Result<SystemAllocation> {
    let n = resp.len();
    for (k, subset) in plan.subsets.iter().enumerate() {
        if subset.len() != params.lc {
            return Err(Error::PlanMismatch(format!(
                "subset {k} has {} tones, expected L_c = {}",
                subset.len(),
                params.lc
            )));
        }
        if let Some(&bad) = subset.iter().find(|&&i| i >= n) {
            return Err(Error::PlanMismatch(format!("subset {k} references tone {bad} of {n}")));
        }
    }
    let per_subset = plan
        .subsets
        .par_iter()
        .map(|subset| {
            let gains: Vec<f64> = subset.iter().map(|&i| resp.gains[i]).collect();
            allocate_subset(&gains, table, params)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut per_subcarrier_energy = vec![0.0; n];
    let mut per_subcarrier_bits = vec![0.0; n];
    for (subset, alloc) in plan.subsets.iter().zip(&per_subset) {
        let energy = alloc.tone_energy();
        let density = alloc.r_discrete as f64 / params.lc as f64;
        for &i in subset {
            per_subcarrier_energy[i] = energy;
            per_subcarrier_bits[i] = density;
        }
    }
    Ok(SystemAllocation {
        total_bits: per_subset.iter().map(|a| a.r_discrete).sum(),
        unusable_subsets: per_subset.iter().filter(|a| !a.usable).count(),
        plan: plan.clone(),
        per_subset,
        per_subcarrier_energy,
        per_subcarrier_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(lc: usize, es: f64, n0: f64) -> LoadParams {
        LoadParams {
            lc,
            es,
            n0,
            b_min: 2,
            b_max: 10,
        }
    }

    #[test]
    fn partition_examples() {
        let p = partition(4, 2, Strategy::Adjacent).unwrap();
        assert_eq!(p.subsets, vec![vec![0, 1], vec![2, 3]]);
        let p = partition(4, 2, Strategy::Interleaved).unwrap();
        assert_eq!(p.subsets, vec![vec![0, 2], vec![1, 3]]);
        let p = partition(1024, 32, Strategy::Adjacent).unwrap();
        assert_eq!(p.subsets.len(), 32);
        assert!(p.subsets.iter().all(|s| s.len() == 32));
        assert!(partition(4, 5, Strategy::Adjacent).is_err());
        assert!(partition(4, 0, Strategy::Adjacent).is_err());
    }

    #[test]
    fn partition_leaves_remainder_unassigned() {
        for strategy in [Strategy::Adjacent, Strategy::Interleaved] {
            let p = partition(10, 3, strategy).unwrap();
            assert_eq!(p.subsets.len(), 3);
            let mut all: Vec<usize> = p.subsets.concat();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), 9);
        }
    }

    #[test]
    fn continuous_rate_examples() {
        let p = params(2, 2.0, 1.0);
        assert_relative_eq!(continuous_rate(&[1.0, 1.0 / 3.0], 1.0, &p), 2.0, max_relative = 1e-14);
        let g: f64 = 0.37;
        let p = params(4, 5.0, 0.5);
        let expect = 4.0 * (1.0 + g * 5.0 / (1.7 * 0.5)).log2();
        assert_relative_eq!(continuous_rate(&[g; 4], 1.7, &p), expect, max_relative = 1e-14);
        let p = params(1, 5.0, 0.5);
        assert_relative_eq!(
            continuous_rate(&[g], 1.7, &p),
            (1.0 + g * 10.0 / 1.7).log2(),
            max_relative = 1e-14
        );
        assert_eq!(continuous_rate(&[1.0, 0.0], 1.0, &params(2, 1.0, 1.0)), 0.0);
    }

    #[test]
    fn initial_bits_examples() {
        assert_eq!(initial_bits(12.0, 4), (vec![3, 3, 3, 3], 0));
        assert_eq!(initial_bits(10.0, 4), (vec![3, 2, 2, 2], 1));
        assert_eq!(discrete_rate(10.0, 4), 9);
        assert_eq!(initial_bits(0.0, 3), (vec![0, 0, 0], 0));
    }

    #[test]
    fn sequence_energy_examples() {
        let p = params(1, 1.0, 1.0);
        assert_eq!(sequence_energy(0, 1.0, &[1.0], &p), 0.0);
        assert_eq!(sequence_energy(2, 1.0, &[1.0], &p), 3.0);
        let gains = [0.2, 0.7, 0.4];
        let p = params(3, 1.0, 0.3);
        assert_relative_eq!(
            sequence_energy(5, 2.0, &gains, &p),
            2.0 * sequence_energy(5, 1.0, &gains, &p),
            max_relative = 1e-15
        );
        assert!(sequence_energy(2, 1.0, &[0.0, 1.0], &params(2, 1.0, 1.0)).is_infinite());
    }

    #[test]
    fn zero_budget_gives_nothing() {
        let table = GapTable::constant(2, 10, 9.8).unwrap();
        let a = allocate_subset(&[0.3, 0.1, 0.9], &table, &params(3, 0.0, 1.0)).unwrap();
        assert_eq!(a.bits, vec![0, 0, 0]);
        assert_eq!(a.tone_energy(), 0.0);
    }

    #[test]
    fn dead_tone_marks_subset_unusable() {
        let table = GapTable::constant(2, 10, 9.8).unwrap();
        let a = allocate_subset(&[0.3, 0.0], &table, &params(2, 1.0, 1e-6)).unwrap();
        assert!(!a.usable);
        assert_eq!(a.r_discrete, 0);
    }

    #[test]
    fn rejects_wrong_subset_size() {
        let table = GapTable::constant(2, 10, 9.8).unwrap();
        assert!(allocate_subset(&[0.3, 0.2], &table, &params(3, 1.0, 1.0)).is_err());
        let narrow = GapTable::constant(2, 6, 9.8).unwrap();
        assert!(allocate_subset(&[0.3, 0.2], &narrow, &params(2, 1.0, 1.0)).is_err());
    }

    #[test]
    fn saturates_at_b_max() {
        let table = GapTable::constant(2, 10, 9.8).unwrap();
        let a = allocate_subset(&[1.0; 4], &table, &params(4, 1e12, 1.0)).unwrap();
        assert_eq!(a.bits, vec![10; 4]);
    }

    #[test]
    fn single_tone_matches_closed_form() {
        // Constant gap, L_c = 1: the largest b with (2^b - 1) gamma N0 / g <= Es.
        let table = GapTable::constant(2, 10, 9.8).unwrap();
        let gamma = table.gamma(2);
        for snr_db in [3.0, 7.5, 12.0, 20.0, 31.0, 45.0] {
            let snr = 10f64.powf(snr_db / 10.0);
            let a = allocate_subset(&[1.0], &table, &params(1, snr, 1.0)).unwrap();
            let raw = (1.0 + snr / gamma).log2().floor() as u32;
            let expect = if raw < 2 { 0 } else { raw.min(10) };
            assert_eq!(a.bits[0], expect, "snr {snr_db} dB");
        }
    }

    #[test]
    fn identical_subsets_load_identically() {
        let table = GapTable::constant(2, 10, 6.0).unwrap();
        let resp = ChannelResponse::from_gains(vec![0.01, 0.02, 0.03, 0.01, 0.02, 0.03]).unwrap();
        let plan = partition(6, 3, Strategy::Adjacent).unwrap();
        let p = params(3, 1.0, 1e-4);
        let sys = allocate_system(&resp, &plan, &table, &p).unwrap();
        assert_eq!(sys.per_subset[0], sys.per_subset[1]);
        assert_eq!(sys.total_bits, 2 * sys.per_subset[0].r_discrete);
    }

    #[test]
    fn system_rejects_inconsistent_plan() {
        let table = GapTable::constant(2, 10, 6.0).unwrap();
        let resp = ChannelResponse::from_gains(vec![0.01; 4]).unwrap();
        let plan = partition(8, 2, Strategy::Adjacent).unwrap();
        assert!(allocate_system(&resp, &plan, &table, &params(2, 1.0, 1e-4)).is_err());
        let plan = partition(4, 2, Strategy::Adjacent).unwrap();
        assert!(allocate_system(&resp, &plan, &table, &params(4, 1.0, 1e-4)).is_err());
    }
}
