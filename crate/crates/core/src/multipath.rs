//! Multi-restriction GLRT for frequency-selective channels.
//!
//! With an FIR channel of order `L`, `vec(R_x) = [C_s, vec(I)] [h̃; σ²]`
//! where column `j(L+1) + i` of `C_s` is the vectorized covariance between
//! columns `i` and `j` of the block Toeplitz signal matrix. Compressing and
//! half-vectorizing gives `r̂ = B_m θ_m + v`, and the signal is present iff
//! the first `(L+1)²` entries of `θ_m` are not all zero. Whitening reuses
//! the AWGN `Γ`.

use std::sync::Arc;

use nalgebra::DVector;

use crate::acquisition::{MeasurementMatrix, SampleCovariance};
use crate::detector::Whitener;
use crate::dist::{f_upper_quantile, FParams};
use crate::error::{Error, Result};
use crate::linalg::{kron_image_identity, vec, vech, vech_len, DenseMatrix};
use crate::linear_test::RestrictedLinearModel;
use crate::ofdm::shifted_symbol_covariance;

/// `C_s`: `N² x (L+1)²`, column `j(L+1) + i` is `vec(Cov(s_{k,i}, s_{k,j})) / σ_s²`.
pub fn build_cs(n: usize, td: usize, l: usize) -> Result<DenseMatrix> {
    if td == 0 || td >= n {
        return Err(Error::Domain(format!("need 1 <= td < N={n}, got {td}")));
    }
    let tcp = n - td;
    if l >= tcp {
        return Err(Error::UnsupportedChannel(format!(
            "channel order {l} must be below the cyclic prefix {tcp}"
        )));
    }
    let width = l + 1;
    let mut cs = DenseMatrix::zeros(n * n, width * width);
    for j in 0..width {
        for i in 0..width {
            let c = vec(&shifted_symbol_covariance(n, td, i, j));
            cs.set_column(j * width + i, &c);
        }
    }
    Ok(cs)
}

/// Regressors and factorization for the multipath test.
#[derive(Debug, Clone)]
pub struct MultipathModel {
    pub c_s: DenseMatrix,
    /// Unwhitened `B_m = H_M (A ⊗ A) [C_s, vec(I)]`.
    pub b_m: DenseMatrix,
    whitener: Arc<Whitener>,
    test: RestrictedLinearModel,
    l: usize,
}

/// Outcome of the multipath test.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipathGlrtOutcome {
    pub t: f64,
    pub threshold: f64,
    pub theta_m_hat: DVector<f64>,
    pub decision: bool,
}

pub fn build_multipath_model(a: &MeasurementMatrix, td: usize, l: usize) -> Result<MultipathModel> {
    build_multipath_model_with(Arc::new(Whitener::new(a)?), td, l)
}

pub fn build_multipath_model_with(
    whitener: Arc<Whitener>,
    td: usize,
    l: usize,
) -> Result<MultipathModel> {
    let a = whitener.measurement().clone();
    let (m, n) = a.shape();
    let nef = vech_len(m);
    let restrictions = (l + 1) * (l + 1);
    let params = restrictions + 1;
    if nef <= params {
        return Err(Error::UnderIdentified {
            equations: nef,
            parameters: params,
        });
    }
    let c_s = build_cs(n, td, l)?;
    let mut b_m = DenseMatrix::zeros(nef, params);
    let at = a.transpose();
    for (k, col) in c_s.column_iter().enumerate() {
        let c = DenseMatrix::from_column_slice(n, n, col.as_slice());
        // vech keeps the lower triangle of the (generally non-symmetric) image
        b_m.set_column(k, &vech(&(&a * c * &at))?);
    }
    let ident = DenseMatrix::from_column_slice(m, m, kron_image_identity(&a).as_slice());
    b_m.set_column(restrictions, &vech(&ident)?);
    let b_bar = whitener.gamma() * &b_m;
    let test = RestrictedLinearModel::new(b_bar, (0..restrictions).collect())?;
    Ok(MultipathModel {
        c_s,
        b_m,
        whitener,
        test,
        l,
    })
}

impl MultipathModel {
    pub fn order(&self) -> usize {
        self.l
    }

    pub fn nef(&self) -> usize {
        self.whitener.nef()
    }

    pub fn whitener(&self) -> &Arc<Whitener> {
        &self.whitener
    }

    pub fn b_bar(&self) -> &DenseMatrix {
        self.test.design()
    }

    pub fn linear_model(&self) -> &RestrictedLinearModel {
        &self.test
    }

    /// `(r, Nef - p)` with `r = (L+1)²` restrictions and `p = r + 1`.
    pub fn dof(&self) -> (usize, usize) {
        self.test.dof()
    }

    /// Threshold from the upper tail of `F(r, Nef - p)` at `pfa`.
    pub fn threshold_for_pfa(&self, pfa: f64) -> Result<f64> {
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(Error::Domain(format!("pfa must lie in (0, 1), got {pfa}")));
        }
        let (d1, d2) = self.dof();
        f_upper_quantile(pfa, FParams::central(d1, d2))
    }

    /// The statistic alone, for callers that manage their own threshold.
    pub fn statistic(&self, rz: &SampleCovariance) -> Result<(f64, DVector<f64>)> {
        let r_bar = self.whitener.whiten(rz)?;
        let fit = self.test.evaluate(&r_bar)?;
        Ok((fit.t, fit.theta_hat))
    }
}

pub fn glrt_statistic_multipath(
    model: &MultipathModel,
    rz: &SampleCovariance,
    pfa: f64,
) -> Result<MultipathGlrtOutcome> {
    let threshold = model.threshold_for_pfa(pfa)?;
    let (t, theta_m_hat) = model.statistic(rz)?;
    Ok(MultipathGlrtOutcome {
        t,
        threshold,
        theta_m_hat,
        decision: t > threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::gaussian_measurement_matrix;
    use crate::detector::build_model_with;
    use crate::linalg::{elimination_matrix, lag_matrix, shift_matrices};
    use crate::ofdm::{multipath_covariance, ChannelTaps, OfdmParams};
    use num_complex::Complex64;

    #[test]
    fn order_zero_column_is_cp_pattern() {
        let cs = build_cs(40, 32, 0).unwrap();
        assert_eq!(cs.ncols(), 1);
        let expected = vec(&(lag_matrix(40, 32) + DenseMatrix::identity(40, 40)));
        assert_eq!(cs.column(0).into_owned(), expected);
    }

    #[test]
    fn column_matches_explicit_shift_products() {
        let (n, td) = (40, 32);
        let cs = build_cs(n, td, 1).unwrap();
        let sh = shift_matrices(n);
        let base = lag_matrix(n, td) + DenseMatrix::identity(n, n);
        // (i, j) = (1, 0) sits at column j(L+1) + i = 1
        let explicit = &sh.down * &base + sh.up_pow(n - 1) * &base * sh.down_pow(n);
        assert_eq!(cs.column(1).into_owned(), vec(&explicit));
    }

    #[test]
    fn swapped_indices_give_transposed_matrix() {
        let (n, td, l) = (40, 32, 2);
        let cs = build_cs(n, td, l).unwrap();
        for i in 0..=l {
            for j in 0..=l {
                let cij =
                    DenseMatrix::from_column_slice(n, n, cs.column(j * (l + 1) + i).as_slice());
                let cji =
                    DenseMatrix::from_column_slice(n, n, cs.column(i * (l + 1) + j).as_slice());
                assert_eq!(cij.transpose(), cji);
            }
        }
    }

    #[test]
    fn order_must_stay_below_prefix() {
        assert!(matches!(
            build_cs(40, 32, 8),
            Err(Error::UnsupportedChannel(_))
        ));
        assert!(build_cs(40, 32, 7).is_ok());
    }

    #[test]
    fn covariance_expansion_identity() {
        let params = OfdmParams::new(32, 8, 1.7, 0.6).unwrap();
        let h = ChannelTaps::random_unit_energy(2, 31);
        let cs = build_cs(40, 32, 2).unwrap();
        let mut coeffs = DVector::zeros(10);
        for (i, hi) in h.taps().iter().enumerate() {
            for (j, hj) in h.taps().iter().enumerate() {
                coeffs[j * 3 + i] = params.sigma_s2 * (hi * hj.conj()).re;
            }
        }
        coeffs[9] = params.sigma_n2;
        let mut design = DenseMatrix::zeros(1600, 10);
        design.columns_mut(0, 9).copy_from(&cs);
        design.set_column(9, &vec(&DenseMatrix::identity(40, 40)));
        let lhs = vec(&multipath_covariance(&params, &h).unwrap());
        assert!((lhs - design * coeffs).amax() < 1e-10);
    }

    #[test]
    fn regressors_match_dense_kronecker() {
        let a = gaussian_measurement_matrix(16, 40, 12).unwrap();
        let model = build_multipath_model(&a, 32, 1).unwrap();
        let h = elimination_matrix(16).unwrap();
        let kron = a.as_dense().kronecker(a.as_dense());
        for k in 0..4 {
            let dense = h.as_dense() * &kron * model.c_s.column(k);
            assert!((dense - model.b_m.column(k)).amax() < 1e-10);
        }
        assert_eq!(model.dof(), (4, 136 - 5));
    }

    #[test]
    fn channel_lengths_fit_at_m16() {
        let a = gaussian_measurement_matrix(16, 40, 12).unwrap();
        let model = build_multipath_model(&a, 32, 2).unwrap();
        assert_eq!(model.b_bar().ncols(), 10);
        let small = gaussian_measurement_matrix(3, 40, 12).unwrap();
        assert!(matches!(
            build_multipath_model(&small, 32, 2),
            Err(Error::UnderIdentified { .. })
        ));
    }

    #[test]
    fn order_zero_spans_awgn_regressors() {
        let a = gaussian_measurement_matrix(8, 40, 4).unwrap();
        let w = Arc::new(Whitener::new(&a).unwrap());
        let mp = build_multipath_model_with(w.clone(), 32, 0).unwrap();
        let awgn = build_model_with(w, 32).unwrap();
        // columns are b0 + bs and b0
        let b = &mp.b_m;
        assert!((b.column(0) - (&awgn.b0 + &awgn.bs)).amax() < 1e-12);
        assert!((b.column(1) - &awgn.b0).amax() < 1e-12);
    }

    #[test]
    fn noise_only_covariance_estimates_zero_channel() {
        let a = gaussian_measurement_matrix(16, 40, 9).unwrap();
        let model = build_multipath_model(&a, 32, 2).unwrap();
        let sigma2 = 1.7;
        let rz = a.as_dense() * a.as_dense().transpose() * sigma2;
        let r_bar = model.whitener().gamma() * vech(&rz).unwrap();
        let theta = model.linear_model().estimate(&r_bar);
        for k in 0..9 {
            assert!(theta[k].abs() < 1e-8, "k={k} {}", theta[k]);
        }
        assert!((theta[9] - sigma2).abs() < 1e-8);
    }

    #[test]
    fn flat_channel_with_delay_fits_model() {
        // the expected covariance after any order-1 channel lies in span(B_m)
        let a = gaussian_measurement_matrix(10, 40, 3).unwrap();
        let model = build_multipath_model(&a, 32, 1).unwrap();
        let params = OfdmParams::new(32, 8, 1.0, 0.5).unwrap();
        let h =
            ChannelTaps::new(vec![Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.7)]).unwrap();
        let rx = multipath_covariance(&params, &h).unwrap();
        let rz = a.as_dense() * rx * a.as_dense().transpose();
        let r_bar = model.whitener().gamma() * vech(&rz).unwrap();
        let theta = model.linear_model().estimate(&r_bar);
        let resid = &r_bar - model.b_bar() * theta;
        assert!(resid.norm() < 1e-8 * r_bar.norm());
    }
}
