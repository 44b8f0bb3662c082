//! Sub-Nyquist compression and compressive sample covariance.

use nalgebra::DMatrixView;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::ofdm::SampleStream;

/// Real `M x N` measurement operator.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    a: DenseMatrix,
}

impl MeasurementMatrix {
    /// Wrap an arbitrary real matrix with `2 <= M <= N`.
    pub fn from_dense(a: DenseMatrix) -> Result<Self> {
        let (m, n) = a.shape();
        check_shape(m, n)?;
        Ok(Self { a })
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Compression ratio `M / N`.
    pub fn rho(&self) -> f64 {
        self.m() as f64 / self.n() as f64
    }
}

// M = N is accepted so the uncompressed reference point can run through
// the same pipeline.
fn check_shape(m: usize, n: usize) -> Result<()> {
    if m < 2 || m > n {
        return Err(Error::Domain(format!(
            "measurement matrix needs 2 <= M <= N, got M={m} N={n}"
        )));
    }
    Ok(())
}

/// i.i.d. `N(0, 1)` entries with every column scaled to unit norm.
pub fn gaussian_measurement_matrix(m: usize, n: usize, seed: u64) -> Result<MeasurementMatrix> {
    check_shape(m, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DenseMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut rng));
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    Ok(MeasurementMatrix { a })
}

/// Frames stored column-wise as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBlock {
    pub re: DenseMatrix,
    pub im: DenseMatrix,
}

impl FrameBlock {
    /// The usable frames of a Nyquist stream, one per column.
    pub fn from_stream(stream: &SampleStream) -> Self {
        let (n, nb) = (stream.frame_len, stream.nb);
        let mut re = DenseMatrix::zeros(n, nb);
        let mut im = DenseMatrix::zeros(n, nb);
        for (k, frame) in stream.frames().enumerate() {
            for (i, s) in frame.iter().enumerate() {
                re[(i, k)] = s.re;
                im[(i, k)] = s.im;
            }
        }
        Self { re, im }
    }

    pub fn from_vectors(frames: &[Vec<Complex64>]) -> Result<Self> {
        let dim = frames.first().map(Vec::len).unwrap_or(0);
        if frames.iter().any(|f| f.len() != dim) {
            return Err(Error::Dimension("frames have different lengths".into()));
        }
        let re = DenseMatrix::from_fn(dim, frames.len(), |i, k| frames[k][i].re);
        let im = DenseMatrix::from_fn(dim, frames.len(), |i, k| frames[k][i].im);
        Ok(Self { re, im })
    }

    pub fn dim(&self) -> usize {
        self.re.nrows()
    }

    pub fn nb(&self) -> usize {
        self.re.ncols()
    }

    pub fn frame(&self, k: usize) -> Vec<Complex64> {
        self.re
            .column(k)
            .iter()
            .zip(self.im.column(k).iter())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    /// `Σ_k ‖z(k)‖²`.
    pub fn total_energy(&self) -> f64 {
        self.re.norm_squared() + self.im.norm_squared()
    }
}

/// `z(k) = A x(k)` for every usable frame.
pub fn compress_frames(stream: &SampleStream, a: &MeasurementMatrix) -> Result<FrameBlock> {
    if stream.frame_len != a.n() {
        return Err(Error::Dimension(format!(
            "frame length {} does not match measurement matrix width {}",
            stream.frame_len,
            a.n()
        )));
    }
    let x = FrameBlock::from_stream(stream);
    Ok(FrameBlock {
        re: a.as_dense() * &x.re,
        im: a.as_dense() * &x.im,
    })
}

/// Real part of a sample covariance matrix and the number of frames behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    pub r: DenseMatrix,
    pub nb: usize,
}

impl SampleCovariance {
    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            r: &self.r * alpha,
            nb: self.nb,
        }
    }
}

const CHUNK: usize = 64;

/// `Σ_k Re(z(k) z(k)ᴴ)` over a column range, summed pairwise over chunks.
fn outer_sum(re: DMatrixView<f64>, im: DMatrixView<f64>) -> DenseMatrix {
    let cols = re.ncols();
    if cols <= CHUNK {
        return re * re.transpose() + im * im.transpose();
    }
    let half = (cols / CHUNK).div_ceil(2) * CHUNK;
    let rows = re.nrows();
    let left = outer_sum(re.columns(0, half), im.columns(0, half));
    let right = outer_sum(
        re.view((0, half), (rows, cols - half)),
        im.view((0, half), (rows, cols - half)),
    );
    left + right
}

/// `Re(R̂) = Re((1/Nb) Σ z(k) z(k)ᴴ)`, exactly symmetric.
pub fn sample_covariance(frames: &FrameBlock) -> Result<SampleCovariance> {
    let nb = frames.nb();
    if nb == 0 || frames.dim() == 0 {
        return Err(Error::Dimension("sample covariance of no frames".into()));
    }
    let sum = outer_sum(frames.re.as_view(), frames.im.as_view());
    let r = (&sum + sum.transpose()) * (0.5 / nb as f64);
    Ok(SampleCovariance { r, nb })
}
