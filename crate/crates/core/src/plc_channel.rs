//! Multipath power-line channel model.
//!
//! The frequency response of an `N`-path echo model is
//!
//! ```text
//! H(f) = sum_i g_i * exp(-(a0 + a1 * f^k) * d_i) * exp(-j 2 pi f d_i / v_p)
//! ```
//!
//! where each path contributes a weighting factor `g_i`, a length-dependent
//! attenuation and a propagation delay `d_i / v_p`. All spectral quantities
//! are kept in linear units; dB conversions happen only at the I/O edges.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default propagation velocity on insulated power cable, in m/s.
pub const DEFAULT_VP: f64 = 1.5e8;

/// Name of the bundled 15-path reference model.
pub const ZIMMERMANN15: &str = "zimmermann15";

/// One echo path of the multipath model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    /// Signed weighting factor.
    pub g: f64,
    /// Path length in meters.
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub a0: f64,
    pub a1: f64,
    pub k: f64,
    #[serde(default = "default_vp")]
    pub v_p: f64,
    pub paths: Vec<PathParams>,
}

fn default_vp() -> f64 {
    DEFAULT_VP
}

impl ChannelModel {
    /// The 15-path reference link: k = 1, a0 = 0, a1 = 2.5e-9.
    pub fn zimmermann15() -> Self {
        const TABLE: [(f64, f64); 15] = [
            (0.029, 90.0),
            (0.043, 102.0),
            (0.103, 113.0),
            (-0.058, 143.0),
            (-0.045, 148.0),
            (-0.040, 200.0),
            (0.038, 260.0),
            (-0.038, 322.0),
            (0.071, 411.0),
            (-0.035, 490.0),
            (0.065, 567.0),
            (-0.055, 740.0),
            (0.042, 960.0),
            (-0.059, 1130.0),
            (0.049, 1250.0),
        ];
        ChannelModel {
            a0: 0.0,
            a1: 2.5e-9,
            k: 1.0,
            v_p: DEFAULT_VP,
            paths: TABLE.iter().map(|&(g, d)| PathParams { g, d }).collect(),
        }
    }

    /// Looks up a bundled model by name.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            ZIMMERMANN15 => Ok(Self::zimmermann15()),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    /// Reads a model from a `.json` or `.toml` file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let model: ChannelModel = if is_json(path) {
            serde_json::from_str(&text).map_err(|e| Error::Config {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::EmptyPaths);
        }
        for (name, v) in [("a0", self.a0), ("a1", self.a1), ("k", self.k), ("v_p", self.v_p)] {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.a1 < 0.0 {
            return Err(invalid("a1", "must be >= 0"));
        }
        if self.k <= 0.0 {
            return Err(invalid("k", "must be > 0"));
        }
        if self.v_p <= 0.0 {
            return Err(invalid("v_p", "must be > 0"));
        }
        for p in &self.paths {
            if !p.g.is_finite() || !p.d.is_finite() {
                return Err(invalid("paths", "path parameters must be finite"));
            }
            if p.d <= 0.0 {
                return Err(invalid("paths.d", format!("path length must be > 0, got {}", p.d)));
            }
            if p.g == 0.0 {
                return Err(invalid("paths.g", "path gain must be non-zero"));
            }
        }
        Ok(())
    }

    /// Complex response at a single frequency.
    pub fn response_at(&self, f: f64) -> Complex64 {
        let alpha = self.a0 + self.a1 * f.powf(self.k);
        self.paths
            .iter()
            .map(|p| {
                let tau = p.d / self.v_p;
                Complex64::from_polar(p.g * (-alpha * p.d).exp(), -2.0 * PI * f * tau)
            })
            .sum()
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Uniform subcarrier grid. Subcarrier `n` (1-based) sits at
/// `f_start + (n - 1) * spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyGrid {
    #[serde(rename = "f_start_hz")]
    pub f_start: f64,
    #[serde(rename = "spacing_hz")]
    pub spacing: f64,
    pub n: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid {
            f_start: 500e3,
            spacing: 19.043e3,
            n: 1024,
        }
    }
}

impl FrequencyGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(invalid("grid.spacing_hz", "must be finite and > 0"));
        }
        if !(self.f_start.is_finite() && self.f_start >= 0.0) {
            return Err(invalid("grid.f_start_hz", "must be finite and >= 0"));
        }
        if self.n == 0 {
            return Err(invalid("grid.n", "must be >= 1"));
        }
        Ok(())
    }

    /// Frequency of the 0-based subcarrier `idx`.
    pub fn frequency(&self, idx: usize) -> f64 {
        self.f_start + idx as f64 * self.spacing
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.frequency(i))
    }
}

/// Per-subcarrier power gains `|h_n|^2`, optionally with the complex response
/// they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    pub gains: Vec<f64>,
    pub complex_response: Option<Vec<Complex64>>,
}

impl ChannelResponse {
    /// Wraps bare power gains (no phase information).
    pub fn from_gains(gains: Vec<f64>) -> Result<Self> {
        if gains.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(invalid("gains", "power gains must be finite and >= 0"));
        }
        Ok(ChannelResponse {
            gains,
            complex_response: None,
        })
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

pub fn frequency_response(model: &ChannelModel, grid: &FrequencyGrid) -> Result<ChannelResponse> {
    model.validate()?;
    grid.validate()?;
    let complex: Vec<Complex64> = grid.frequencies().map(|f| model.response_at(f)).collect();
    let gains = complex.iter().map(|h| h.norm_sqr()).collect();
    Ok(ChannelResponse {
        gains,
        complex_response: Some(complex),
    })
}

/// Mean power gain `G = (1/N) sum |h_n|^2`, linear.
pub fn average_gain(resp: &ChannelResponse) -> Result<f64> {
    if resp.is_empty() {
        return Err(Error::Empty("channel response"));
    }
    Ok(resp.gains.iter().sum::<f64>() / resp.len() as f64)
}

pub fn average_gain_db(resp: &ChannelResponse) -> Result<f64> {
    average_gain(resp).map(lin_to_db)
}

/// Rescales every gain by one constant so the mean gain becomes
/// `target_db`. Ratios between subcarriers are preserved.
pub fn scale_to_gain(resp: &ChannelResponse, target_db: f64) -> Result<ChannelResponse> {
    if !target_db.is_finite() {
        return Err(invalid("target_gain_db", "must be finite"));
    }
    let current = average_gain(resp)?;
    if current <= 0.0 {
        return Err(Error::ZeroResponse);
    }
    let c = db_to_lin(target_db) / current;
    let amp = c.sqrt();
    Ok(ChannelResponse {
        gains: resp.gains.iter().map(|g| g * c).collect(),
        complex_response: resp
            .complex_response
            .as_ref()
            .map(|h| h.iter().map(|z| z * amp).collect()),
    })
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_path_model(d: f64) -> ChannelModel {
        ChannelModel {
            a0: 0.0,
            a1: 0.0,
            k: 1.0,
            v_p: DEFAULT_VP,
            paths: vec![PathParams { g: 1.0, d }],
        }
    }

    #[test]
    fn lone_unit_path_is_flat() {
        let grid = FrequencyGrid::default();
        let resp = frequency_response(&unit_path_model(100.0), &grid).unwrap();
        for g in &resp.gains {
            assert_relative_eq!(*g, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn split_path_equals_single_path() {
        let grid = FrequencyGrid {
            f_start: 0.0,
            spacing: 37e3,
            n: 300,
        };
        let mut split = ChannelModel::zimmermann15();
        split.paths = vec![PathParams { g: 0.5, d: 210.0 }, PathParams { g: 0.5, d: 210.0 }];
        let mut single = split.clone();
        single.paths = vec![PathParams { g: 1.0, d: 210.0 }];
        let a = frequency_response(&split, &grid).unwrap();
        let b = frequency_response(&single, &grid).unwrap();
        for (x, y) in a.gains.iter().zip(&b.gains) {
            assert_relative_eq!(*x, *y, max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_models() {
        let grid = FrequencyGrid::default();
        let mut m = ChannelModel::zimmermann15();
        m.paths.clear();
        assert!(matches!(frequency_response(&m, &grid), Err(Error::EmptyPaths)));
        let mut m = ChannelModel::zimmermann15();
        m.a1 = f64::NAN;
        assert!(frequency_response(&m, &grid).is_err());
        let mut m = ChannelModel::zimmermann15();
        m.paths[3].d = 0.0;
        assert!(frequency_response(&m, &grid).is_err());
        assert!(ChannelModel::named("nope").is_err());
    }

    #[test]
    fn average_gain_basics() {
        let r = ChannelResponse::from_gains(vec![0.25; 8]).unwrap();
        assert_eq!(average_gain(&r).unwrap(), 0.25);
        let r = ChannelResponse::from_gains(vec![1.0, 0.0]).unwrap();
        assert_eq!(average_gain(&r).unwrap(), 0.5);
        let r = ChannelResponse::from_gains(vec![]).unwrap();
        assert!(average_gain(&r).is_err());
    }

    #[test]
    fn scaling() {
        let r = ChannelResponse::from_gains(vec![0.5, 1.5, 1.0]).unwrap();
        let s = scale_to_gain(&r, -10.0).unwrap();
        for (a, b) in s.gains.iter().zip(&r.gains) {
            assert_relative_eq!(*a, b * 0.1, max_relative = 1e-12);
        }
        let g_db = average_gain_db(&r).unwrap();
        let same = scale_to_gain(&r, g_db).unwrap();
        for (a, b) in same.gains.iter().zip(&r.gains) {
            assert_relative_eq!(*a, *b, max_relative = 1e-12);
        }
        let zero = ChannelResponse::from_gains(vec![0.0; 4]).unwrap();
        assert!(matches!(scale_to_gain(&zero, -10.0), Err(Error::ZeroResponse)));
    }

    #[test]
    fn scaling_keeps_complex_consistent() {
        let resp = frequency_response(&ChannelModel::zimmermann15(), &FrequencyGrid::default()).unwrap();
        let s = scale_to_gain(&resp, -60.0).unwrap();
        for (g, h) in s.gains.iter().zip(s.complex_response.as_ref().unwrap()) {
            assert_relative_eq!(*g, h.norm_sqr(), max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_convention() {
        let grid = FrequencyGrid::default();
        assert_eq!(grid.frequency(0), 500e3);
        assert_relative_eq!(grid.frequency(1023), 500e3 + 1023.0 * 19.043e3);
        assert!(FrequencyGrid { n: 0, ..grid }.validate().is_err());
        assert!(FrequencyGrid { spacing: 0.0, ..grid }.validate().is_err());
    }
}
