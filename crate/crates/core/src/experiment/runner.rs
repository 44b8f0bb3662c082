//! Monte Carlo driver for detection experiments.
//!
//! One measurement matrix is drawn per compression ratio and one channel
//! per experiment. Each grid point `(ρ, Nb, SNR)` runs `trials` signal
//! trials; noise-only trials do not depend on the SNR, so they are run once
//! per `(ρ, Nb)` and shared by every SNR row. Every trial has its own seed
//! derived from the master seed and its grid position, which makes the
//! output independent of the thread count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::acquisition::{
    compress_frames, gaussian_measurement_matrix, sample_covariance, FrameBlock, MeasurementMatrix,
};
use crate::detector::{
    build_model_with, calibrated_noise_scale, glrt_statistic, theoretical_pd, threshold_for_pfa,
    DetectionModel, Whitener,
};
use crate::error::{Error, Result};
use crate::multipath::{build_multipath_model_with, MultipathModel};
use crate::ofdm::{
    add_noise, apply_channel, generate_signal, noise_stream, write_iq_f32, ChannelTaps, Hypothesis,
    OfdmParams, SignalModel,
};

use super::config::{min_calibration_trials, DetectorKind, ExperimentConfig, ThresholdMode};
use super::output::ResultRow;
use super::seed::{derive_seed, trial_stream_seed, SeedTag, TrialStream};

/// `Σ_k ‖z(k)‖² / (Nb M)`: average received power per compressive sample.
pub fn energy_statistic(frames: &FrameBlock) -> f64 {
    frames.total_energy() / (frames.nb() * frames.dim()) as f64
}

/// Energy detector decision against a fixed threshold.
pub fn energy_detector_baseline(frames: &FrameBlock, threshold: f64) -> bool {
    energy_statistic(frames) > threshold
}

/// Empirical `1 - pfa` quantile of noise-only statistics: the `k`-th
/// largest value with `k = round(pfa * n)`, at least 1. Decisions use a
/// strict `t > threshold`, so `k - 1` of the calibration values exceed it.
/// Needs `n >= 100 / pfa` so roughly 100 values sit in the tail.
pub fn threshold_empirical(null_statistics: &[f64], pfa: f64) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::Domain(format!("pfa must lie in (0, 1), got {pfa}")));
    }
    let need = min_calibration_trials(pfa);
    if null_statistics.len() < need {
        return Err(Error::Domain(format!(
            "empirical threshold at pfa={pfa} needs {need} statistics, got {}",
            null_statistics.len()
        )));
    }
    if null_statistics.iter().any(|t| !t.is_finite()) {
        return Err(Error::Numerical("non-finite calibration statistic".into()));
    }
    let mut sorted = null_statistics.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = ((pfa * sorted.len() as f64).round() as usize).clamp(1, sorted.len());
    Ok(sorted[k - 1])
}

/// A detector bound to one measurement matrix.
#[derive(Debug, Clone)]
pub enum Detector {
    Awgn(DetectionModel),
    Multipath(MultipathModel),
    Energy(MeasurementMatrix),
}

impl Detector {
    pub fn build(
        kind: DetectorKind,
        a: &MeasurementMatrix,
        td: usize,
        order: usize,
    ) -> Result<Self> {
        Ok(match kind {
            DetectorKind::Awgn => {
                Detector::Awgn(build_model_with(Arc::new(Whitener::new(a)?), td)?)
            }
            DetectorKind::Multipath => Detector::Multipath(build_multipath_model_with(
                Arc::new(Whitener::new(a)?),
                td,
                order,
            )?),
            DetectorKind::Energy => Detector::Energy(a.clone()),
        })
    }

    pub fn measurement(&self) -> &MeasurementMatrix {
        match self {
            Detector::Awgn(m) => m.whitener().measurement_matrix(),
            Detector::Multipath(m) => m.whitener().measurement_matrix(),
            Detector::Energy(a) => a,
        }
    }

    pub fn statistic(&self, frames: &FrameBlock) -> Result<f64> {
        match self {
            Detector::Awgn(m) => Ok(glrt_statistic(m, &sample_covariance(frames)?)?.t),
            Detector::Multipath(m) => Ok(m.statistic(&sample_covariance(frames)?)?.0),
            Detector::Energy(_) => Ok(energy_statistic(frames)),
        }
    }

    /// Threshold from the null distribution; `None` for the energy detector.
    pub fn formula_threshold(&self, pfa: f64) -> Result<Option<f64>> {
        match self {
            Detector::Awgn(m) => threshold_for_pfa(m.nef(), pfa).map(Some),
            Detector::Multipath(m) => m.threshold_for_pfa(pfa).map(Some),
            Detector::Energy(_) => Ok(None),
        }
    }

    /// Predicted detection probability for the flat channel (AWGN test only).
    pub fn theoretical_pd(
        &self,
        params: &OfdmParams,
        nb: usize,
        threshold: f64,
    ) -> Result<Option<f64>> {
        match self {
            Detector::Awgn(m) => {
                let theta1 = params.tau(Hypothesis::H1);
                let c = calibrated_noise_scale(theta1.0, nb);
                theoretical_pd(m, theta1, c, threshold).map(Some)
            }
            _ => Ok(None),
        }
    }
}

/// Everything produced by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub channel: ChannelTaps,
    /// `(ρ, M)` for every compression ratio, in grid order.
    pub dimensions: Vec<(f64, usize)>,
    pub rows: Vec<ResultRow>,
}

/// Shared state of one `ρ` slice of the grid.
struct Slice<'a> {
    cfg: &'a ExperimentConfig,
    channel: &'a ChannelTaps,
    detector: Detector,
    m: usize,
}

impl Slice<'_> {
    fn detector_for(&self, trial_seed: u64) -> Result<Option<Detector>> {
        if !self.cfg.resample_matrix {
            return Ok(None);
        }
        let a = gaussian_measurement_matrix(
            self.m,
            self.cfg.n(),
            trial_stream_seed(trial_seed, TrialStream::Matrix),
        )?;
        Detector::build(self.cfg.detector, &a, self.cfg.td, self.cfg.model_order()).map(Some)
    }

    fn null_trial(&self, nb: usize, trial_seed: u64) -> Result<f64> {
        let fresh = self.detector_for(trial_seed)?;
        let det = fresh.as_ref().unwrap_or(&self.detector);
        let x = noise_stream(
            self.cfg.n(),
            nb,
            self.cfg.sigma_n2,
            trial_stream_seed(trial_seed, TrialStream::Noise),
        )?;
        det.statistic(&compress_frames(&x, det.measurement())?)
    }

    /// Statistic and, for the AWGN test, the predicted detection probability.
    fn signal_trial(
        &self,
        params: &OfdmParams,
        nb: usize,
        threshold: f64,
        trial_seed: u64,
    ) -> Result<(f64, Option<f64>)> {
        let fresh = self.detector_for(trial_seed)?;
        let det = fresh.as_ref().unwrap_or(&self.detector);
        let s = generate_signal(
            params,
            nb,
            1,
            SignalModel::Qam16,
            trial_stream_seed(trial_seed, TrialStream::Signal),
        )?;
        let s = apply_channel(&s, self.channel)?;
        let x = add_noise(
            &s,
            params.sigma_n2,
            trial_stream_seed(trial_seed, TrialStream::Noise),
        )?;
        let t = det.statistic(&compress_frames(&x, det.measurement())?)?;
        let pd = match fresh {
            Some(d) if self.cfg.channel_order.is_none() => {
                d.theoretical_pd(params, nb, threshold)?
            }
            _ => None,
        };
        Ok((t, pd))
    }
}

fn check_finite(stats: &[f64], what: &str) -> Result<()> {
    if let Some(t) = stats.iter().find(|t| !t.is_finite()) {
        return Err(Error::Numerical(format!("{what} statistic is {t}")));
    }
    Ok(())
}

fn fraction_above(stats: &[f64], threshold: f64) -> f64 {
    stats.iter().filter(|&&t| t > threshold).count() as f64 / stats.len() as f64
}

/// Run the full grid. Parallelism comes from the ambient rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let seed = cfg.master_seed;
    let channel = match cfg.channel_order {
        Some(l) => ChannelTaps::random_unit_energy(l, derive_seed(seed, SeedTag::Channel, &[])),
        None => ChannelTaps::flat(),
    };
    let mut rows = Vec::new();
    let mut dimensions = Vec::new();

    for (ri, &rho) in cfg.rho_grid.iter().enumerate() {
        let m = cfg.m_for_rho(rho);
        dimensions.push((rho, m));
        let a = gaussian_measurement_matrix(
            m,
            cfg.n(),
            derive_seed(seed, SeedTag::Matrix, &[ri as u64]),
        )?;
        let slice = Slice {
            cfg,
            channel: &channel,
            detector: Detector::build(cfg.detector, &a, cfg.td, cfg.model_order())?,
            m,
        };

        for (bi, &nb) in cfg.nb_grid.iter().enumerate() {
            let cell = [ri as u64, bi as u64];
            let null: Vec<f64> = (0..cfg.trials as u64)
                .into_par_iter()
                .map(|t| {
                    slice.null_trial(
                        nb,
                        derive_seed(seed, SeedTag::NullTrial, &[cell[0], cell[1], t]),
                    )
                })
                .collect::<Result<_>>()?;
            check_finite(&null, "noise-only")?;

            let threshold = match cfg.threshold_mode {
                ThresholdMode::Formula => slice
                    .detector
                    .formula_threshold(cfg.pfa)?
                    .ok_or_else(|| Error::Config("detector has no threshold formula".into()))?,
                ThresholdMode::Empirical => {
                    let calib: Vec<f64> = (0..cfg.calibration_trials() as u64)
                        .into_par_iter()
                        .map(|t| {
                            slice.null_trial(
                                nb,
                                derive_seed(seed, SeedTag::Calibration, &[cell[0], cell[1], t]),
                            )
                        })
                        .collect::<Result<_>>()?;
                    threshold_empirical(&calib, cfg.pfa)?
                }
            };
            let pfa_empirical = fraction_above(&null, threshold);

            for (si, &snr_db) in cfg.snr_grid_db.iter().enumerate() {
                let params = cfg.params(snr_db)?;
                let trials: Vec<(f64, Option<f64>)> = (0..cfg.trials as u64)
                    .into_par_iter()
                    .map(|t| {
                        let ts = derive_seed(
                            seed,
                            SeedTag::SignalTrial,
                            &[cell[0], cell[1], si as u64, t],
                        );
                        slice.signal_trial(&params, nb, threshold, ts)
                    })
                    .collect::<Result<_>>()?;
                let stats: Vec<f64> = trials.iter().map(|p| p.0).collect();
                check_finite(&stats, "signal")?;

                let pd_theoretical = if cfg.channel_order.is_some() {
                    None
                } else if cfg.resample_matrix {
                    let pds: Vec<f64> = trials.iter().filter_map(|p| p.1).collect();
                    (!pds.is_empty()).then(|| pds.iter().sum::<f64>() / pds.len() as f64)
                } else {
                    slice.detector.theoretical_pd(&params, nb, threshold)?
                };

                rows.push(ResultRow {
                    snr_db,
                    rho,
                    nb,
                    pfa_target: cfg.pfa,
                    pfa_empirical,
                    pd_empirical: fraction_above(&stats, threshold),
                    pd_theoretical,
                    detector: cfg.detector,
                    threshold_mode: cfg.threshold_mode,
                    trials: cfg.trials,
                    seed,
                });
            }
        }
    }

    Ok(ExperimentOutput {
        config: cfg.clone(),
        channel,
        dimensions,
        rows,
    })
}

/// Write the received stream of the first signal trial of the first grid
/// point (channel and noise applied, guard frame dropped) as I/Q `f32`.
pub fn export_first_trial_iq(cfg: &ExperimentConfig, path: &std::path::Path) -> Result<()> {
    cfg.validate()?;
    let seed = cfg.master_seed;
    let channel = match cfg.channel_order {
        Some(l) => ChannelTaps::random_unit_energy(l, derive_seed(seed, SeedTag::Channel, &[])),
        None => ChannelTaps::flat(),
    };
    let params = cfg.params(cfg.snr_grid_db[0])?;
    let ts = derive_seed(seed, SeedTag::SignalTrial, &[0, 0, 0, 0]);
    let s = generate_signal(
        &params,
        cfg.nb_grid[0],
        1,
        SignalModel::Qam16,
        trial_stream_seed(ts, TrialStream::Signal),
    )?;
    let s = apply_channel(&s, &channel)?;
    let x = add_noise(
        &s,
        params.sigma_n2,
        trial_stream_seed(ts, TrialStream::Noise),
    )?;
    write_iq_f32(&x, path)
}
