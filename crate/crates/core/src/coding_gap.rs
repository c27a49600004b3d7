//! SNR gap tables for uncoded and concatenated-coded QAM loading.
//!
//! Coded gaps follow `gap_db(b) = 9.8 + margin - (trellis + rs - loss(b))`
//! where the RS gain is the difference between the uncoded gaps at the
//! system target BER and at the BER the RS decoder can tolerate at its input,
//! and `loss(b)` is the extra power needed to carry the RS redundancy.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::error::{invalid, Error, Result};
use crate::plc_channel::{db_to_lin, lin_to_db};

/// Uncoded QAM gap at 1e-7 used verbatim in the coded gap formula.
pub const CODED_BASE_GAP_DB: f64 = 9.8;

const BITS_PER_BYTE: i32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapConfig {
    pub target_ber: f64,
    pub gamma_m_db: f64,
    pub gamma_tc_db: f64,
    pub rs_n: u32,
    pub rs_k: u32,
    pub rs_t: u32,
    pub b_min: u32,
    pub b_max: u32,
    pub coded: bool,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            target_ber: 1e-7,
            gamma_m_db: 0.0,
            gamma_tc_db: 4.2,
            rs_n: 240,
            rs_k: 224,
            rs_t: 8,
            b_min: 2,
            b_max: 10,
            coded: true,
        }
    }
}

impl GapConfig {
    pub fn uncoded(self) -> Self {
        GapConfig { coded: false, ..self }
    }

    pub fn coded(self) -> Self {
        GapConfig { coded: true, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_ber > 0.0 && self.target_ber < 0.5) {
            return Err(invalid(
                "coding.target_ber",
                format!("must lie in (0, 0.5), got {}", self.target_ber),
            ));
        }
        if !self.gamma_m_db.is_finite() {
            return Err(invalid("coding.gamma_m_db", "must be finite"));
        }
        if !self.gamma_tc_db.is_finite() {
            return Err(invalid("coding.gamma_tc_db", "must be finite"));
        }
        if self.rs_k == 0 || self.rs_k > self.rs_n {
            return Err(invalid(
                "coding.rs_k",
                format!("need 0 < rs_k <= rs_n, got rs_k={} rs_n={}", self.rs_k, self.rs_n),
            ));
        }
        if self.rs_t != (self.rs_n - self.rs_k) / 2 {
            return Err(invalid(
                "coding.rs_t",
                format!(
                    "must equal floor((rs_n - rs_k) / 2) = {}, got {}",
                    (self.rs_n - self.rs_k) / 2,
                    self.rs_t
                ),
            ));
        }
        if self.b_min < 1 || self.b_min > self.b_max {
            return Err(invalid(
                "coding.b_min",
                format!("need 1 <= b_min <= b_max, got {}..{}", self.b_min, self.b_max),
            ));
        }
        // 2^b must stay well inside f64 and the u32 bit counters.
        if self.b_max > 30 {
            return Err(invalid("coding.b_max", "must be <= 30"));
        }
        Ok(())
    }
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
///
/// Newton iterations on `ln Q(x) - ln p`, kept inside a shrinking bisection
/// bracket; converges to 1e-12 in `x`.
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    const TOL: f64 = 1e-12;
    // Q(-39) == 1 and Q(39) underflows below every representable p > 0 we accept.
    let (mut lo, mut hi) = (-39.0_f64, 39.0_f64);
    let ln_p = p.ln();
    let mut x = 0.0;
    for _ in 0..300 {
        let q = q_function(x);
        if q > p {
            lo = x;
        } else if q < p {
            hi = x;
        } else {
            return Ok(x);
        }
        let mut next = f64::NAN;
        if q > 0.0 {
            let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let slope = -pdf / q;
            if slope < 0.0 {
                next = x - (q.ln() - ln_p) / slope;
            }
        }
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() < TOL || hi - lo < TOL {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Uncoded gap (linear) that yields error probability `p`:
/// `(1/3) * Q^-1(p/2)^2`.
pub fn gap_at_ber(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let x = q_inverse(p / 2.0)?;
    Ok(x * x / 3.0)
}

pub fn gap_at_ber_db(p: f64) -> Result<f64> {
    gap_at_ber(p).map(lin_to_db)
}

/// Bit error rate after bounded-distance RS decoding for demodulator BER
/// `p_b`, assuming independent bit errors.
///
/// Byte error rate is `p_s = 1 - (1 - p_b)^8`. Codewords with more than `t`
/// byte errors are passed through uncorrected; the decoded byte error rate is
/// `(1/n) sum_{j>t} j C(n,j) p_s^j (1-p_s)^(n-j)`. An erroneous byte carries
/// on average `8 p_b / p_s` wrong bits, so the bit error rate is the decoded
/// byte error rate times `p_b / p_s`.
pub fn post_rs_ber(p_b: f64, rs_n: u32, rs_t: u32) -> f64 {
    if p_b <= 0.0 {
        return 0.0;
    }
    let p_s = -(BITS_PER_BYTE as f64 * (-p_b).ln_1p()).exp_m1();
    let ln_ps = p_s.ln();
    let ln_qs = (-p_s).ln_1p();
    let n = rs_n as u64;
    let decoded: f64 = ((rs_t as u64 + 1)..=n)
        .map(|j| {
            let ln_term = ln_binomial(n, j) + j as f64 * ln_ps + (n - j) as f64 * ln_qs;
            j as f64 * ln_term.exp()
        })
        .sum::<f64>()
        / n as f64;
    decoded * p_b / p_s
}

/// Demodulator-output BER that the RS decoder turns into `target_ber`.
pub fn rs_input_ber(cfg: &GapConfig) -> Result<f64> {
    cfg.validate()?;
    let target = cfg.target_ber;
    if cfg.rs_t == 0 {
        return Ok(target);
    }
    let f = |p: f64| post_rs_ber(p, cfg.rs_n, cfg.rs_t) - target;
    let (mut lo, mut hi) = (target, 0.5);
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return Err(Error::NoRsSolution { target });
    }
    // Bisect in the log domain; the bracket spans several decades.
    let (mut llo, mut lhi) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let lmid = 0.5 * (llo + lhi);
        let mid = lmid.exp();
        if f(mid) > 0.0 {
            lhi = lmid;
            hi = mid;
        } else {
            llo = lmid;
            lo = mid;
        }
        if lhi - llo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// RS coding gain in dB.
pub fn gamma_rs(cfg: &GapConfig) -> Result<f64> {
    let p_b = rs_input_ber(cfg)?;
    Ok(gap_at_ber_db(cfg.target_ber)? - gap_at_ber_db(p_b)?)
}

/// Rate-expansion loss in dB for carrying `b` information bits through an
/// `(n, k)` code: `10 log10((2^(b n / k) - 1) / (2^b - 1))`.
pub fn gamma_loss(b: u32, cfg: &GapConfig) -> Result<f64> {
    if b < 1 {
        return Err(invalid("b", "gamma_loss needs b >= 1"));
    }
    if cfg.rs_k == 0 {
        return Err(invalid("coding.rs_k", "must be > 0"));
    }
    let b = b as f64;
    let expanded = b * cfg.rs_n as f64 / cfg.rs_k as f64;
    Ok(lin_to_db(expanded.exp2() - 1.0) - lin_to_db(b.exp2() - 1.0))
}

/// Per-modulation-order SNR gaps for `b in [b_min, b_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTable {
    pub b_min: u32,
    pub b_max: u32,
    pub coded: bool,
    gamma_db: Vec<f64>,
    gamma_linear: Vec<f64>,
    pub gamma_init_linear: f64,
    pub gamma_rs_db: f64,
    gamma_loss_db: Vec<f64>,
    pub gamma_tc_db: f64,
    pub gamma_m_db: f64,
}

/// One table row with its gain components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapRow {
    pub b: u32,
    pub gamma_db: f64,
    pub gamma_linear: f64,
    pub gamma_rs_db: f64,
    pub gamma_loss_db: f64,
    pub gamma_tc_db: f64,
    pub gamma_m_db: f64,
}

impl GapTable {
    /// Table from explicit dB gaps, one per `b` in `b_min..=b_max`.
    pub fn from_db(b_min: u32, b_max: u32, gamma_db: Vec<f64>) -> Result<Self> {
        if b_min < 1 || b_min > b_max {
            return Err(invalid("b_min", "need 1 <= b_min <= b_max"));
        }
        if gamma_db.len() != (b_max - b_min + 1) as usize {
            return Err(invalid("gamma_db", "one entry per modulation order required"));
        }
        if gamma_db.iter().any(|g| !g.is_finite()) {
            return Err(invalid("gamma_db", "gaps must be finite"));
        }
        let width = gamma_db.len();
        Ok(GapTable {
            b_min,
            b_max,
            coded: false,
            gamma_linear: gamma_db.iter().map(|&g| db_to_lin(g)).collect(),
            gamma_db,
            gamma_init_linear: 1.0,
            gamma_rs_db: 0.0,
            gamma_loss_db: vec![0.0; width],
            gamma_tc_db: 0.0,
            gamma_m_db: 0.0,
        })
    }

    /// Same gap for every order.
    pub fn constant(b_min: u32, b_max: u32, gamma_db: f64) -> Result<Self> {
        let width = b_max.saturating_sub(b_min) as usize + 1;
        Self::from_db(b_min, b_max, vec![gamma_db; width])
    }

    fn slot(&self, b: u32) -> usize {
        assert!(
            (self.b_min..=self.b_max).contains(&b),
            "gap requested for b = {b} outside [{}, {}]",
            self.b_min,
            self.b_max
        );
        (b - self.b_min) as usize
    }

    /// Linear gap for modulation order `b`. Panics outside `[b_min, b_max]`.
    pub fn gamma(&self, b: u32) -> f64 {
        self.gamma_linear[self.slot(b)]
    }

    pub fn gamma_db(&self, b: u32) -> f64 {
        self.gamma_db[self.slot(b)]
    }

    pub fn rows(&self) -> impl Iterator<Item = GapRow> + '_ {
        (self.b_min..=self.b_max).map(move |b| {
            let i = self.slot(b);
            GapRow {
                b,
                gamma_db: self.gamma_db[i],
                gamma_linear: self.gamma_linear[i],
                gamma_rs_db: self.gamma_rs_db,
                gamma_loss_db: self.gamma_loss_db[i],
                gamma_tc_db: self.gamma_tc_db,
                gamma_m_db: self.gamma_m_db,
            }
        })
    }
}

pub fn build_gap_table(cfg: &GapConfig) -> Result<GapTable> {
    cfg.validate()?;
    let orders = cfg.b_min..=cfg.b_max;
    if !cfg.coded {
        let gap = gap_at_ber_db(cfg.target_ber)? + cfg.gamma_m_db;
        let mut table = GapTable::constant(cfg.b_min, cfg.b_max, gap)?;
        table.gamma_m_db = cfg.gamma_m_db;
        return Ok(table);
    }
    let rs = gamma_rs(cfg)?;
    let losses = orders.clone().map(|b| gamma_loss(b, cfg)).collect::<Result<Vec<_>>>()?;
    let gaps = losses
        .iter()
        .map(|loss| CODED_BASE_GAP_DB + cfg.gamma_m_db - (cfg.gamma_tc_db + rs - loss))
        .collect();
    let mut table = GapTable::from_db(cfg.b_min, cfg.b_max, gaps)?;
    table.coded = true;
    table.gamma_rs_db = rs;
    table.gamma_loss_db = losses;
    table.gamma_tc_db = cfg.gamma_tc_db;
    table.gamma_m_db = cfg.gamma_m_db;
    Ok(table)
}
