//! Cyclic-prefix detection of OFDM signals from compressive samples.
//!
//! The detector works on the sample covariance of `z = A x`, where `x` is a
//! frame of Nyquist-rate samples and `A` a random `M x N` matrix. The
//! cyclic prefix shows up as a known off-diagonal pattern in the covariance
//! of `x`; after compression and whitening, testing for it is a linear
//! hypothesis test with an F-distributed statistic.
//!
//! Module map:
//!
//! - [`linalg`]: vec/vech, elimination and duplication matrices, Kronecker
//!   images, symmetric inverse square root.
//! - [`ofdm`]: signal synthesis, channels and closed-form covariances.
//! - [`acquisition`]: measurement matrices and compressive sample covariance.
//! - [`detector`]: the flat-channel test and its performance prediction.
//! - [`multipath`]: the frequency-selective extension.
//! - [`moments`]: second-order moments of the sample covariance error.
//! - [`dist`]: central and noncentral F, incomplete beta, KS helpers.
//! - [`experiment`]: Monte Carlo grids and CSV output.
//!
//! ```
//! use covsense::acquisition::{compress_frames, gaussian_measurement_matrix, sample_covariance};
//! use covsense::detector::{build_model, glrt_statistic, threshold_for_pfa};
//! use covsense::ofdm::{add_noise, generate_ofdm, OfdmParams};
//!
//! let params = OfdmParams::with_snr_db(32, 8, 0.0, 1.0)?;
//! let a = gaussian_measurement_matrix(8, params.n(), 1)?;
//! let model = build_model(&a, params.td)?;
//! let x = add_noise(&generate_ofdm(&params, 100, 2)?, params.sigma_n2, 3)?;
//! let rz = sample_covariance(&compress_frames(&x, &a)?)?;
//! let outcome = glrt_statistic(&model, &rz)?.with_threshold(threshold_for_pfa(model.nef(), 0.05)?);
//! assert!(outcome.t.is_finite());
//! # Ok::<(), covsense::Error>(())
//! ```

pub mod acquisition;
pub mod detector;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod moments;
pub mod multipath;
pub mod ofdm;
pub mod selftest;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/covariance.md")]
    mod covariance {}
    #[doc = include_str!("../../../book/src/compressive.md")]
    mod compressive {}
    #[doc = include_str!("../../../book/src/detector.md")]
    mod detector {}
    #[doc = include_str!("../../../book/src/multipath.md")]
    mod multipath {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
