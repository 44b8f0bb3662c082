//! Experiment configuration.
//!
//! Configs are flat TOML files; every key has a default so a file only
//! lists what differs. Recognized keys:
//!
//! | key                  | type          | default        |
//! |----------------------|---------------|----------------|
//! | `td`                 | integer       | 32             |
//! | `tcp`                | integer       | 8              |
//! | `sigma_n2`           | float         | 1.0            |
//! | `snr_db`             | float list    | `[0.0]`        |
//! | `rho`                | float list    | `[0.2]`        |
//! | `nb`                 | integer list  | `[100]`        |
//! | `pfa`                | float         | 0.05           |
//! | `trials`             | integer       | 2000           |
//! | `detector`           | `"awgn"`, `"multipath"`, `"energy"` | `"awgn"` |
//! | `threshold_mode`     | `"formula"`, `"empirical"` | `"formula"` |
//! | `master_seed`        | integer       | 1              |
//! | `channel_order`      | integer       | absent (flat)  |
//! | `resample_matrix`    | bool          | false          |
//! | `calibration_trials` | integer       | `max(trials, ceil(100/pfa))` |

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::vech_len;
use crate::ofdm::OfdmParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    Awgn,
    Multipath,
    Energy,
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Awgn => "awgn",
            DetectorKind::Multipath => "multipath",
            DetectorKind::Energy => "energy",
        })
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn" => Ok(DetectorKind::Awgn),
            "multipath" => Ok(DetectorKind::Multipath),
            "energy" => Ok(DetectorKind::Energy),
            other => Err(Error::Config(format!("unknown detector '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Upper-tail F quantile.
    Formula,
    /// Order statistic of simulated noise-only statistics.
    Empirical,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::Formula => "formula",
            ThresholdMode::Empirical => "empirical",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "formula" => Ok(ThresholdMode::Formula),
            "empirical" => Ok(ThresholdMode::Empirical),
            other => Err(Error::Config(format!("unknown threshold mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub td: usize,
    pub tcp: usize,
    pub sigma_n2: f64,
    #[serde(rename = "snr_db")]
    pub snr_grid_db: Vec<f64>,
    #[serde(rename = "rho")]
    pub rho_grid: Vec<f64>,
    #[serde(rename = "nb")]
    pub nb_grid: Vec<usize>,
    pub pfa: f64,
    pub trials: usize,
    pub detector: DetectorKind,
    pub threshold_mode: ThresholdMode,
    pub master_seed: u64,
    /// Order `L` of an equal-energy random channel; `None` is the flat channel.
    pub channel_order: Option<usize>,
    pub resample_matrix: bool,
    pub calibration_trials: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            td: 32,
            tcp: 8,
            sigma_n2: 1.0,
            snr_grid_db: vec![0.0],
            rho_grid: vec![0.2],
            nb_grid: vec![100],
            pfa: 0.05,
            trials: 2000,
            detector: DetectorKind::Awgn,
            threshold_mode: ThresholdMode::Formula,
            master_seed: 1,
            channel_order: None,
            resample_matrix: false,
            calibration_trials: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Frame length `N`.
    pub fn n(&self) -> usize {
        self.td + self.tcp
    }

    /// Number of compressive samples per frame for a compression ratio.
    pub fn m_for_rho(&self, rho: f64) -> usize {
        (rho * self.n() as f64).round() as usize
    }

    /// Order of the multipath model: the channel order, or 0 when flat.
    pub fn model_order(&self) -> usize {
        self.channel_order.unwrap_or(0)
    }

    pub fn calibration_trials(&self) -> usize {
        self.calibration_trials
            .unwrap_or_else(|| self.trials.max(min_calibration_trials(self.pfa)))
    }

    pub fn params(&self, snr_db: f64) -> Result<OfdmParams> {
        OfdmParams::with_snr_db(self.td, self.tcp, snr_db, self.sigma_n2)
    }

    /// Check everything that can be checked before simulating.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.td < 1 || self.tcp < 1 || self.tcp >= self.td {
            return bad(format!(
                "need 1 <= tcp < td, got td={} tcp={}",
                self.td, self.tcp
            ));
        }
        if !(self.sigma_n2 > 0.0 && self.sigma_n2.is_finite()) {
            return bad(format!("sigma_n2 must be positive, got {}", self.sigma_n2));
        }
        if self.snr_grid_db.is_empty() || self.rho_grid.is_empty() || self.nb_grid.is_empty() {
            return bad("snr_db, rho and nb grids must be nonempty".into());
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db values must be finite".into());
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return bad(format!("pfa must lie in (0, 1), got {}", self.pfa));
        }
        if self.trials < 1 {
            return bad("trials must be >= 1".into());
        }
        if self.nb_grid.contains(&0) {
            return bad("nb values must be >= 1".into());
        }
        let n = self.n();
        let l = self.model_order();
        if let Some(order) = self.channel_order {
            if order >= self.tcp {
                return bad(format!(
                    "channel order {order} must be below the cyclic prefix {}",
                    self.tcp
                ));
            }
        }
        for &rho in &self.rho_grid {
            let m = self.m_for_rho(rho);
            if !(rho > 0.0 && rho <= 1.0) || m < 2 || m > n {
                return bad(format!(
                    "rho={rho} gives M={m}; need 0 < rho <= 1 and 2 <= M <= {n}"
                ));
            }
            let nef = vech_len(m);
            let params = match self.detector {
                DetectorKind::Awgn => 2,
                DetectorKind::Multipath => (l + 1) * (l + 1) + 1,
                DetectorKind::Energy => 0,
            };
            if params > 0 && nef <= params {
                return bad(format!(
                    "rho={rho} (M={m}) gives {nef} equations, needs more than {params}"
                ));
            }
        }
        if self.detector == DetectorKind::Energy && self.threshold_mode == ThresholdMode::Formula {
            return bad(
                "the energy detector has no threshold formula; use threshold_mode = \"empirical\""
                    .into(),
            );
        }
        if self.threshold_mode == ThresholdMode::Empirical {
            let need = min_calibration_trials(self.pfa);
            if self.calibration_trials() < need {
                return bad(format!(
                    "empirical thresholds at pfa={} need at least {need} calibration trials",
                    self.pfa
                ));
            }
        }
        Ok(())
    }

    /// Config echoed as `key = value` lines (used in result headers).
    pub fn describe(&self) -> Vec<String> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mut lines = vec![
            format!("td = {}", self.td),
            format!("tcp = {}", self.tcp),
            format!("sigma_n2 = {}", self.sigma_n2),
            format!("snr_db = [{}]", list(&self.snr_grid_db)),
            format!("rho = [{}]", list(&self.rho_grid)),
            format!(
                "nb = [{}]",
                self.nb_grid
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
            format!("pfa = {}", self.pfa),
            format!("trials = {}", self.trials),
            format!("detector = \"{}\"", self.detector),
            format!("threshold_mode = \"{}\"", self.threshold_mode),
            format!("master_seed = {}", self.master_seed),
        ];
        if let Some(l) = self.channel_order {
            lines.push(format!("channel_order = {l}"));
        }
        lines.push(format!("resample_matrix = {}", self.resample_matrix));
        if self.threshold_mode == ThresholdMode::Empirical {
            lines.push(format!(
                "calibration_trials = {}",
                self.calibration_trials()
            ));
        }
        lines
    }
}

/// `ceil(100 / pfa)`: enough noise-only trials for ~100 exceedances.
pub fn min_calibration_trials(pfa: f64) -> usize {
    // the slack keeps e.g. 100 / 0.05 from rounding up to 2001
    (100.0 / pfa - 1e-9).ceil() as usize
}
