use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coding_gap::GapConfig;
use crate::error::{invalid, Error, Result};
use crate::loader::{LoadParams, Strategy};
use crate::plc_channel::{frequency_response, ChannelModel, ChannelResponse, FrequencyGrid, ZIMMERMANN15};

/// Full simulator configuration (TOML or JSON).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub grid: FrequencyGrid,
    pub channel: ChannelSection,
    pub coding: GapConfig,
    pub loading: LoadingSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Bundled model name; ignored when `file` is set.
    pub model: String,
    /// Model file (JSON or TOML), relative to the config file.
    pub file: Option<PathBuf>,
    /// Overrides the model's propagation velocity.
    pub v_p: Option<f64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection {
            model: ZIMMERMANN15.to_string(),
            file: None,
            v_p: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadingSection {
    pub lc: usize,
    pub psd_dbm_hz: f64,
    pub noise_dbm_hz: f64,
    pub strategy: Strategy,
}

impl Default for LoadingSection {
    fn default() -> Self {
        LoadingSection {
            lc: 32,
            psd_dbm_hz: -40.0,
            noise_dbm_hz: -110.0,
            strategy: Strategy::Adjacent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub g_start_db: f64,
    pub g_stop_db: f64,
    pub g_step_db: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            g_start_db: -80.0,
            g_stop_db: -40.0,
            g_step_db: 1.0,
        }
    }
}

impl SweepSection {
    /// Target gains in ascending order, endpoints included.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.g_stop_db - self.g_start_db) / self.g_step_db + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.g_start_db + i as f64 * self.g_step_db)
            .collect()
    }
}

fn dbm_per_hz_to_watts(dbm_hz: f64) -> f64 {
    10f64.powf((dbm_hz - 30.0) / 10.0)
}

impl SimConfig {
    /// Reads a config file; `.json` is parsed as JSON, anything else as TOML.
    /// A relative `channel.file` is resolved against the config's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let json = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut cfg = if json {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
        .map_err(|message| Error::Config {
            path: path.to_path_buf(),
            message,
        })?;
        if let (Some(file), Some(dir)) = (&cfg.channel.file, path.parent()) {
            if file.is_relative() {
                cfg.channel.file = Some(dir.join(file));
            }
        }
        cfg.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_json_str(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.coding.validate()?;
        let l = &self.loading;
        if l.lc == 0 || l.lc > self.grid.n {
            return Err(invalid(
                "loading.lc",
                format!("must lie in [1, grid.n = {}], got {}", self.grid.n, l.lc),
            ));
        }
        if !l.psd_dbm_hz.is_finite() {
            return Err(invalid("loading.psd_dbm_hz", "must be finite"));
        }
        if !l.noise_dbm_hz.is_finite() {
            return Err(invalid("loading.noise_dbm_hz", "must be finite"));
        }
        let s = &self.sweep;
        if !(s.g_step_db.is_finite() && s.g_step_db > 0.0) {
            return Err(invalid("sweep.g_step_db", "must be finite and > 0"));
        }
        if !(s.g_start_db.is_finite() && s.g_stop_db.is_finite() && s.g_start_db <= s.g_stop_db) {
            return Err(invalid("sweep.g_start_db", "need finite g_start_db <= g_stop_db"));
        }
        if let Some(vp) = self.channel.v_p {
            if !(vp.is_finite() && vp > 0.0) {
                return Err(invalid("channel.v_p", "must be finite and > 0"));
            }
        }
        Ok(())
    }

    /// Per-subcarrier energy budget: PSD times subcarrier spacing.
    pub fn es(&self) -> f64 {
        dbm_per_hz_to_watts(self.loading.psd_dbm_hz) * self.grid.spacing
    }

    /// Noise energy per subcarrier: noise PSD times subcarrier spacing.
    pub fn n0(&self) -> f64 {
        dbm_per_hz_to_watts(self.loading.noise_dbm_hz) * self.grid.spacing
    }

    pub fn load_params(&self, lc: usize) -> LoadParams {
        LoadParams {
            lc,
            es: self.es(),
            n0: self.n0(),
            b_min: self.coding.b_min,
            b_max: self.coding.b_max,
        }
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        let mut model = match &self.channel.file {
            Some(path) => ChannelModel::from_file(path)?,
            None => ChannelModel::named(&self.channel.model)?,
        };
        if let Some(vp) = self.channel.v_p {
            model.v_p = vp;
        }
        Ok(model)
    }

    /// Unscaled response of the configured channel on the configured grid.
    pub fn reference_response(&self) -> Result<ChannelResponse> {
        frequency_response(&self.channel_model()?, &self.grid)
    }
}
