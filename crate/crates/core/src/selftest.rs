//! Fast internal consistency checks, run by `covsense selftest`.

use crate::acquisition::{gaussian_measurement_matrix, MeasurementMatrix};
use crate::detector::{build_model, threshold_for_pfa};
use crate::dist::{f_cdf, f_sf, f_upper_quantile, noncentral_f_sf, FParams};
use crate::error::Result;
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::linalg::{
    duplication_matrix, elimination_matrix, inv_sqrt_psd, kron_image_lambda, lag_matrix, vec,
    DenseMatrix, DEFAULT_REL_FLOOR,
};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SelfCheck {
    fn from_error(name: &'static str, measured: Result<(bool, String)>) -> Self {
        match measured {
            Ok((passed, detail)) => Self {
                name,
                passed,
                detail,
            },
            Err(e) => Self {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        }
    }
}

fn elimination_duplication() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for n in 1..=16 {
        let prod = elimination_matrix(n)?.as_dense() * duplication_matrix(n)?.as_dense();
        worst = worst.max((prod - DenseMatrix::identity(n * (n + 1) / 2, n * (n + 1) / 2)).amax());
    }
    Ok((
        worst == 0.0,
        format!("max |HG - I| = {worst:e} for n <= 16"),
    ))
}

fn kronecker_image() -> Result<(bool, String)> {
    let a = gaussian_measurement_matrix(4, 9, 11)?;
    let dense = a.as_dense().kronecker(a.as_dense()) * vec(&lag_matrix(9, 5));
    let err = (dense - kron_image_lambda(a.as_dense(), 5)?).amax();
    Ok((err < 1e-12, format!("lag image error {err:e}")))
}

fn f_distribution() -> Result<(bool, String)> {
    let p = FParams::central(1, 10);
    let q = f_upper_quantile(0.05, p)?;
    let round_trip = (f_sf(q, p)? - 0.05).abs();
    // F(1, 10) upper 5% point is 4.9646
    let table = (q - 4.964_602_743).abs();
    let nc = (noncentral_f_sf(q, FParams::noncentral(1, 10, 0.0))? - (1.0 - f_cdf(q, p)?)).abs();
    let ok = round_trip < 1e-12 && table < 1e-6 && nc < 1e-12;
    Ok((
        ok,
        format!("quantile {q:.6}, round trip {round_trip:e}, lambda=0 gap {nc:e}"),
    ))
}

fn inverse_square_root() -> Result<(bool, String)> {
    let b = gaussian_measurement_matrix(6, 6, 3)?;
    let s = b.as_dense() * b.as_dense().transpose() + DenseMatrix::identity(6, 6);
    let g = inv_sqrt_psd(&s, DEFAULT_REL_FLOOR)?;
    let err = (&g * &s * &g - DenseMatrix::identity(6, 6)).amax();
    Ok((err < 1e-10, format!("max |G S G - I| = {err:e}")))
}

fn model_construction() -> Result<(bool, String)> {
    let a: MeasurementMatrix = gaussian_measurement_matrix(8, 40, 1)?;
    let model = build_model(&a, 32)?;
    let thr = threshold_for_pfa(model.nef(), 0.05)?;
    Ok((
        model.nef() == 36 && thr > 0.0,
        format!("Nef {} threshold {thr:.4}", model.nef()),
    ))
}

fn null_calibration() -> Result<(bool, String)> {
    let cfg = ExperimentConfig {
        snr_grid_db: vec![0.0],
        rho_grid: vec![0.2],
        nb_grid: vec![100],
        trials: 400,
        master_seed: 20,
        ..ExperimentConfig::default()
    };
    let out = run_experiment(&cfg)?;
    let row = &out.rows[0];
    let ok = (row.pfa_empirical - 0.05).abs() <= 0.035 && row.pd_empirical > 0.8;
    Ok((
        ok,
        format!(
            "pfa {:.4} (target 0.05), pd {:.4} at 0 dB",
            row.pfa_empirical, row.pd_empirical
        ),
    ))
}

/// Run every check in order.
pub fn run_selftest() -> Vec<SelfCheck> {
    vec![
        SelfCheck::from_error("elimination/duplication", elimination_duplication()),
        SelfCheck::from_error("kronecker image", kronecker_image()),
        SelfCheck::from_error("F distribution", f_distribution()),
        SelfCheck::from_error("inverse square root", inverse_square_root()),
        SelfCheck::from_error("detector model", model_construction()),
        SelfCheck::from_error("null calibration", null_calibration()),
    ]
}
