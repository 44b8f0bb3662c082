//! CSV output.
//!
//! Files start with `#` comment lines echoing the config, the realized
//! measurement sizes and channel taps, followed by a fixed header and one
//! row per grid point. Formatting is fixed so equal runs give equal bytes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::config::{DetectorKind, ThresholdMode};
use super::runner::ExperimentOutput;

pub const CSV_HEADER: &str = "snr_db,rho,nb,pfa_target,pfa_empirical,pd_empirical,pd_theoretical,detector,threshold_mode,trials,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub snr_db: f64,
    pub rho: f64,
    pub nb: usize,
    pub pfa_target: f64,
    pub pfa_empirical: f64,
    pub pd_empirical: f64,
    /// Absent when no closed form applies (energy and multipath tests, or
    /// a frequency-selective channel); written as `nan`.
    pub pd_theoretical: Option<f64>,
    pub detector: DetectorKind,
    pub threshold_mode: ThresholdMode,
    pub trials: usize,
    pub seed: u64,
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        let pd_theory = match self.pd_theoretical {
            Some(p) => format!("{p:.6}"),
            None => "nan".to_string(),
        };
        format!(
            "{},{},{},{},{:.6},{:.6},{},{},{},{},{}",
            self.snr_db,
            self.rho,
            self.nb,
            self.pfa_target,
            self.pfa_empirical,
            self.pd_empirical,
            pd_theory,
            self.detector,
            self.threshold_mode,
            self.trials,
            self.seed
        )
    }
}

/// The complete CSV document for an experiment.
pub fn render_csv(out: &ExperimentOutput) -> String {
    let mut text = String::new();
    for line in out.config.describe() {
        let _ = writeln!(text, "# {line}");
    }
    for (rho, m) in &out.dimensions {
        let _ = writeln!(text, "# rho {rho}: M = {m}, N = {}", out.config.n());
    }
    let taps: Vec<String> = out
        .channel
        .taps()
        .iter()
        .map(|t| format!("{:.9}{:+.9}i", t.re, t.im))
        .collect();
    let _ = writeln!(text, "# channel taps = [{}]", taps.join(", "));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for row in &out.rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    text
}

/// Write the CSV to `path`, or to stdout when `path` is `None`.
pub fn emit_results(out: &ExperimentOutput, path: Option<&Path>) -> Result<()> {
    let text = render_csv(out);
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| Error::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}
