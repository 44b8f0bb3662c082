//! Approximate GLRT for the flat (AWGN) channel.
//!
//! Half-vectorizing `R̂_z = A R_x Aᵀ + A W Aᵀ` with `R_x = τ0 I + τs Λ`
//! gives the linear model `r̂ = τ0 b0 + τs bs + K w`, where
//! `K = H_M (A ⊗ A) G_N` and `w = vech(W)`. The finite-sample noise is
//! modelled as `Σ_w = c Δ`, with `Δ` equal to 2 at the vech-diagonal
//! positions and 1 elsewhere, so `Γ = (K Δ Kᵀ)^{-1/2}` whitens the system
//! up to the unknown scale `c`. Presence of the cyclic prefix is then the
//! restriction `τs ≠ 0`.

use std::sync::Arc;

use nalgebra::DVector;

use crate::acquisition::{MeasurementMatrix, SampleCovariance};
use crate::dist::{f_upper_quantile, noncentral_f_sf, FParams};
use crate::error::{Error, Result};
use crate::linalg::{
    inv_sqrt_psd, kron_image_identity, kron_image_lambda, unvec, vech, vech_diagonal_positions,
    vech_len, DenseMatrix, DenseVector, DEFAULT_REL_FLOOR,
};
use crate::linear_test::RestrictedLinearModel;

/// `K`, `Δ` and `Γ` for one measurement matrix. Depends only on `A`.
#[derive(Debug, Clone)]
pub struct Whitener {
    matrix: MeasurementMatrix,
    k_op: DenseMatrix,
    delta_diag: DenseVector,
    gamma: DenseMatrix,
}

impl Whitener {
    pub fn new(matrix: &MeasurementMatrix) -> Result<Self> {
        let a = matrix.as_dense();
        let k_op = k_operator(a);
        let n = a.ncols();
        let mut delta_diag = DenseVector::from_element(vech_len(n), 1.0);
        for pos in vech_diagonal_positions(n) {
            delta_diag[pos] = 2.0;
        }
        let mut scaled = k_op.clone();
        for (mut col, &d) in scaled.column_iter_mut().zip(delta_diag.iter()) {
            col *= d.sqrt();
        }
        let kdk = &scaled * scaled.transpose();
        let gamma = inv_sqrt_psd(&kdk, DEFAULT_REL_FLOOR)?;
        Ok(Self {
            matrix: matrix.clone(),
            k_op,
            delta_diag,
            gamma,
        })
    }

    pub fn measurement(&self) -> &DenseMatrix {
        self.matrix.as_dense()
    }

    pub fn measurement_matrix(&self) -> &MeasurementMatrix {
        &self.matrix
    }

    /// `K = H_M (A ⊗ A) G_N`, `Nef x N(N+1)/2`.
    pub fn k_op(&self) -> &DenseMatrix {
        &self.k_op
    }

    pub fn delta_diag(&self) -> &DenseVector {
        &self.delta_diag
    }

    pub fn gamma(&self) -> &DenseMatrix {
        &self.gamma
    }

    /// `Nef = M(M+1)/2`.
    pub fn nef(&self) -> usize {
        vech_len(self.matrix.m())
    }

    /// `Γ vech(R̂_z)`.
    pub fn whiten(&self, rz: &SampleCovariance) -> Result<DenseVector> {
        if rz.dim() != self.matrix.m() {
            return Err(Error::Dimension(format!(
                "sample covariance is {0}x{0}, model expects M={1}",
                rz.dim(),
                self.matrix.m()
            )));
        }
        Ok(&self.gamma * vech(&rz.r)?)
    }
}

/// Column `(i, j)` of `K` is `vech(aᵢ aⱼᵀ + aⱼ aᵢᵀ)` for `i ≠ j` and
/// `vech(aᵢ aᵢᵀ)` on the diagonal.
fn k_operator(a: &DenseMatrix) -> DenseMatrix {
    let (m, n) = a.shape();
    let mut k = DenseMatrix::zeros(vech_len(m), vech_len(n));
    let mut col = 0;
    for j in 0..n {
        for i in j..n {
            let (ai, aj) = (a.column(i), a.column(j));
            let mut row = 0;
            for q in 0..m {
                for p in q..m {
                    k[(row, col)] = if i == j {
                        ai[p] * ai[q]
                    } else {
                        ai[p] * aj[q] + aj[p] * ai[q]
                    };
                    row += 1;
                }
            }
            col += 1;
        }
    }
    k
}

/// Everything the AWGN test needs for a fixed measurement matrix.
#[derive(Debug, Clone)]
pub struct DetectionModel {
    pub b0: DenseVector,
    pub bs: DenseVector,
    whitener: Arc<Whitener>,
    test: RestrictedLinearModel,
    td: usize,
}

/// Outcome of one test. `threshold` and `decision` are set by
/// [`GlrtOutcome::with_threshold`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlrtOutcome {
    pub t: f64,
    pub threshold: Option<f64>,
    /// `(τ̂0, τ̂s)`
    pub theta_hat: (f64, f64),
    pub decision: Option<bool>,
}

impl GlrtOutcome {
    pub fn with_threshold(self, threshold: f64) -> Self {
        Self {
            threshold: Some(threshold),
            decision: Some(self.t > threshold),
            ..self
        }
    }
}

/// `vech_M((A ⊗ A) vec(X))` given the `M²` image vector.
fn vech_of_image(image: &DenseVector, m: usize) -> Result<DenseVector> {
    vech(&unvec(image, m, m)?)
}

/// Build the AWGN detection model for `A` and useful symbol length `td`.
pub fn build_model(a: &MeasurementMatrix, td: usize) -> Result<DetectionModel> {
    build_model_with(Arc::new(Whitener::new(a)?), td)
}

/// Same as [`build_model`] but reusing an existing whitener.
pub fn build_model_with(whitener: Arc<Whitener>, td: usize) -> Result<DetectionModel> {
    let a = whitener.measurement();
    let (m, n) = a.shape();
    if td == 0 || td >= n {
        return Err(Error::Domain(format!("need 1 <= td < N={n}, got {td}")));
    }
    let nef = vech_len(m);
    if nef < 3 {
        return Err(Error::UnderIdentified {
            equations: nef,
            parameters: 2,
        });
    }
    let b0 = vech_of_image(&kron_image_identity(a), m)?;
    let bs = vech_of_image(&kron_image_lambda(a, td)?, m)?;
    let mut b = DenseMatrix::zeros(nef, 2);
    b.set_column(0, &b0);
    b.set_column(1, &bs);
    let b_bar = whitener.gamma() * b;
    let test = RestrictedLinearModel::new(b_bar, vec![1]).map_err(|e| match e {
        Error::Degenerate(msg) => Error::Degenerate(format!("whitened regressors: {msg}")),
        other => other,
    })?;
    Ok(DetectionModel {
        b0,
        bs,
        whitener,
        test,
        td,
    })
}

impl DetectionModel {
    pub fn nef(&self) -> usize {
        self.whitener.nef()
    }

    pub fn td(&self) -> usize {
        self.td
    }

    pub fn whitener(&self) -> &Arc<Whitener> {
        &self.whitener
    }

    /// `B̄ = Γ [b0 bs]`.
    pub fn b_bar(&self) -> &DenseMatrix {
        self.test.design()
    }

    pub fn linear_model(&self) -> &RestrictedLinearModel {
        &self.test
    }

    /// Two denominator degrees of freedom (`Nef - 2 = 1`) or fewer leave
    /// the F law extremely heavy-tailed.
    pub fn is_low_dof(&self) -> bool {
        self.nef() - 2 < 2
    }

    /// Noncentrality `λ = (Sθ₁)ᵀ [S (B̄ᵀB̄)⁻¹ Sᵀ]⁻¹ (Sθ₁) / c`.
    pub fn noncentrality(&self, theta1: (f64, f64), c: f64) -> f64 {
        let theta = DVector::from_vec(vec![theta1.0, theta1.1]);
        self.test.restricted_quadratic_form(&theta) / c
    }
}

/// Evaluate the test statistic on one compressive sample covariance.
pub fn glrt_statistic(model: &DetectionModel, rz: &SampleCovariance) -> Result<GlrtOutcome> {
    let r_bar = model.whitener.whiten(rz)?;
    glrt_statistic_whitened(model, &r_bar)
}

/// The statistic for an already whitened observation `r̄`.
pub fn glrt_statistic_whitened(model: &DetectionModel, r_bar: &DenseVector) -> Result<GlrtOutcome> {
    let fit = model.test.evaluate(r_bar)?;
    Ok(GlrtOutcome {
        t: fit.t,
        threshold: None,
        theta_hat: (fit.theta_hat[0], fit.theta_hat[1]),
        decision: None,
    })
}

fn check_pfa(pfa: f64) -> Result<()> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::Domain(format!("pfa must lie in (0, 1), got {pfa}")));
    }
    Ok(())
}

/// `γ′` with `Q_{F(1, Nef-2)}(γ′) = pfa`.
pub fn threshold_for_pfa(nef: usize, pfa: f64) -> Result<f64> {
    check_pfa(pfa)?;
    if nef < 3 {
        return Err(Error::Domain(format!("need Nef >= 3, got {nef}")));
    }
    f_upper_quantile(pfa, FParams::central(1, nef - 2))
}

/// Finite-sample noise scale `c = τ0² / (2 Nb)` used for detection
/// probability prediction.
pub fn calibrated_noise_scale(tau0: f64, nb: usize) -> f64 {
    tau0 * tau0 / (2.0 * nb as f64)
}

/// Predicted detection probability: upper tail of `F(1, Nef-2, λ)` at `γ′`.
pub fn theoretical_pd(
    model: &DetectionModel,
    theta1: (f64, f64),
    c: f64,
    gamma_prime: f64,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("noise scale must be > 0, got {c}")));
    }
    let lambda = model.noncentrality(theta1, c);
    noncentral_f_sf(gamma_prime, FParams::noncentral(1, model.nef() - 2, lambda))
}
