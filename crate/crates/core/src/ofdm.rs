//! Baseband OFDM synthesis, channels and closed-form covariances.
//!
//! Frames are symbol-synchronous: one frame of `n = td + tcp` samples is
//! exactly one OFDM symbol, cyclic prefix first. Sample duration is one.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{lag_matrix, shift_matrices, DenseMatrix};

/// The detector's two hypotheses: noise only, or signal plus noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

/// OFDM symbol geometry and power levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmParams {
    /// Useful symbol length (IFFT size) in samples.
    pub td: usize,
    /// Cyclic prefix length in samples.
    pub tcp: usize,
    /// Signal power at the receiver input.
    pub sigma_s2: f64,
    /// Noise power.
    pub sigma_n2: f64,
}

impl OfdmParams {
    pub fn new(td: usize, tcp: usize, sigma_s2: f64, sigma_n2: f64) -> Result<Self> {
        let p = Self {
            td,
            tcp,
            sigma_s2,
            sigma_n2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Signal power set from `snr_db` relative to `sigma_n2`.
    pub fn with_snr_db(td: usize, tcp: usize, snr_db: f64, sigma_n2: f64) -> Result<Self> {
        Self::new(td, tcp, sigma_n2 * 10f64.powf(snr_db / 10.0), sigma_n2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.td < 1 || self.tcp < 1 || self.tcp >= self.td {
            return Err(Error::Domain(format!(
                "need 1 <= tcp < td, got td={} tcp={}",
                self.td, self.tcp
            )));
        }
        if !(self.sigma_s2 >= 0.0) || !(self.sigma_n2 > 0.0) {
            return Err(Error::Domain(format!(
                "need sigma_s2 >= 0 and sigma_n2 > 0, got {} and {}",
                self.sigma_s2, self.sigma_n2
            )));
        }
        Ok(())
    }

    /// Frame length `td + tcp`.
    pub fn n(&self) -> usize {
        self.td + self.tcp
    }

    pub fn snr(&self) -> f64 {
        self.sigma_s2 / self.sigma_n2
    }

    /// `(τ0, τs)` of `R_x = τ0 I + τs Λ` under the given hypothesis.
    pub fn tau(&self, hypothesis: Hypothesis) -> (f64, f64) {
        match hypothesis {
            Hypothesis::H0 => (self.sigma_n2, 0.0),
            Hypothesis::H1 => (self.sigma_n2 + self.sigma_s2, self.sigma_s2),
        }
    }
}

/// Nyquist-rate complex samples grouped into frames.
///
/// The first `guard_frames` frames exist only to feed inter-block
/// interference into a channel and are not part of the `nb` usable frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub samples: Vec<Complex64>,
    pub frame_len: usize,
    pub nb: usize,
    pub guard_frames: usize,
}

impl SampleStream {
    pub fn new(samples: Vec<Complex64>, frame_len: usize, guard_frames: usize) -> Result<Self> {
        if frame_len == 0 || !samples.len().is_multiple_of(frame_len) {
            return Err(Error::Dimension(format!(
                "{} samples do not split into frames of {frame_len}",
                samples.len()
            )));
        }
        let total = samples.len() / frame_len;
        if total < guard_frames {
            return Err(Error::Dimension("fewer frames than guard frames".into()));
        }
        Ok(Self {
            nb: total - guard_frames,
            samples,
            frame_len,
            guard_frames,
        })
    }

    /// Usable frame `k` (zero-based, guard frames skipped).
    pub fn frame(&self, k: usize) -> &[Complex64] {
        let start = (self.guard_frames + k) * self.frame_len;
        &self.samples[start..start + self.frame_len]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.samples[self.guard_frames * self.frame_len..].chunks_exact(self.frame_len)
    }

    /// Same stream multiplied by a complex scalar.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            samples: self.samples.iter().map(|&s| s * alpha).collect(),
            ..self.clone()
        }
    }
}

/// FIR channel taps `h_0 ..= h_L`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    taps: Vec<Complex64>,
}

impl ChannelTaps {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() || taps.iter().all(|t| t.norm_sqr() == 0.0) {
            return Err(Error::Domain(
                "channel needs at least one nonzero tap".into(),
            ));
        }
        Ok(Self { taps })
    }

    /// Flat channel `h = [1]`.
    pub fn flat() -> Self {
        Self {
            taps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Complex Gaussian taps of the given order, normalized to unit energy.
    pub fn random_unit_energy(order: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut taps: Vec<Complex64> = (0..=order).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let energy: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        let scale = energy.sqrt().recip();
        taps.iter_mut().for_each(|t| *t *= scale);
        Self { taps }
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Channel order `L`.
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// Which source model produces the transmitted blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalModel {
    /// IFFT of unit-energy 16-QAM subcarrier symbols.
    Qam16,
    /// i.i.d. circular complex Gaussian useful part (exact Gaussian model).
    Gaussian,
}

fn complex_normal<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * s, im * s)
}

const QAM16_LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

fn qam16_symbol<R: Rng>(rng: &mut R) -> Complex64 {
    let scale = 10f64.sqrt().recip();
    let re = QAM16_LEVELS[rng.random_range(0..4)];
    let im = QAM16_LEVELS[rng.random_range(0..4)];
    Complex64::new(re * scale, im * scale)
}

/// Generate `guard_frames + nb` consecutive symbols of the given model,
/// scaled to average sample power `params.sigma_s2`, noise-free.
pub fn generate_signal(
    params: &OfdmParams,
    nb: usize,
    guard_frames: usize,
    model: SignalModel,
    seed: u64,
) -> Result<SampleStream> {
    params.validate()?;
    if nb == 0 {
        return Err(Error::Domain("need at least one frame".into()));
    }
    let (td, tcp, n) = (params.td, params.tcp, params.n());
    let total = nb + guard_frames;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(total * n);
    let mut useful = vec![Complex64::default(); td];

    match model {
        SignalModel::Qam16 => {
            let ifft = FftPlanner::new().plan_fft_inverse(td);
            let scale = (params.sigma_s2 / td as f64).sqrt();
            for _ in 0..total {
                useful.iter_mut().for_each(|x| *x = qam16_symbol(&mut rng));
                ifft.process(&mut useful);
                useful.iter_mut().for_each(|x| *x *= scale);
                samples.extend_from_slice(&useful[td - tcp..]);
                samples.extend_from_slice(&useful);
            }
        }
        SignalModel::Gaussian => {
            for _ in 0..total {
                useful
                    .iter_mut()
                    .for_each(|x| *x = complex_normal(&mut rng, params.sigma_s2));
                samples.extend_from_slice(&useful[td - tcp..]);
                samples.extend_from_slice(&useful);
            }
        }
    }
    SampleStream::new(samples, n, guard_frames)
}

/// `nb` noise-free 16-QAM OFDM frames.
pub fn generate_ofdm(params: &OfdmParams, nb: usize, seed: u64) -> Result<SampleStream> {
    generate_signal(params, nb, 0, SignalModel::Qam16, seed)
}

/// Add circular complex Gaussian noise of variance `sigma_n2` to every sample.
pub fn add_noise(stream: &SampleStream, sigma_n2: f64, seed: u64) -> Result<SampleStream> {
    if !(sigma_n2 >= 0.0) {
        return Err(Error::Domain(format!(
            "noise variance must be >= 0, got {sigma_n2}"
        )));
    }
    let mut out = stream.clone();
    if sigma_n2 == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in &mut out.samples {
        *s += complex_normal(&mut rng, sigma_n2);
    }
    Ok(out)
}

/// A stream of pure noise frames (the H0 observation).
pub fn noise_stream(frame_len: usize, nb: usize, sigma_n2: f64, seed: u64) -> Result<SampleStream> {
    let zeros = SampleStream::new(vec![Complex64::default(); frame_len * nb], frame_len, 0)?;
    add_noise(&zeros, sigma_n2, seed)
}

/// Convolve the stream with `h`. Consumes one guard frame: usable frame `k`
/// of the output depends on input blocks `k` and `k - 1`.
pub fn apply_channel(stream: &SampleStream, h: &ChannelTaps) -> Result<SampleStream> {
    let n = stream.frame_len;
    if h.order() >= n {
        return Err(Error::UnsupportedChannel(format!(
            "channel order {} must be below the frame length {n}",
            h.order()
        )));
    }
    if stream.guard_frames == 0 {
        return Err(Error::Domain(
            "channel needs a leading guard frame for inter-block interference".into(),
        ));
    }
    let start = n;
    let taps = h.taps();
    let out: Vec<Complex64> = (start..stream.samples.len())
        .map(|idx| {
            taps.iter()
                .enumerate()
                .map(|(l, &t)| t * stream.samples[idx - l])
                .sum()
        })
        .collect();
    SampleStream::new(out, n, stream.guard_frames - 1)
}

/// `R_x` for the flat channel: `σ_n² I` under H0, `(σ_n²+σ_s²) I + σ_s² Λ`
/// under H1.
pub fn theoretical_covariance(params: &OfdmParams, hypothesis: Hypothesis) -> DenseMatrix {
    let n = params.n();
    let (tau0, taus) = params.tau(hypothesis);
    DenseMatrix::identity(n, n) * tau0 + lag_matrix(n, params.td) * taus
}

/// `J_dⁱ (Λ+I) J_uʲ + J_u^{N-i} (Λ+I) J_d^{N-j}`: the covariance between
/// columns `i` and `j` of the block Toeplitz matrix, per unit signal power.
/// Shift powers of `N` or more are zero.
pub fn shifted_symbol_covariance(n: usize, td: usize, i: usize, j: usize) -> DenseMatrix {
    let shifts = shift_matrices(n);
    let base = lag_matrix(n, td) + DenseMatrix::identity(n, n);
    let current = shifts.down_pow(i) * &base * shifts.up_pow(j);
    let previous = shifts.up_pow(n - i) * &base * shifts.down_pow(n - j);
    current + previous
}

/// Real part of `R_x` after the channel `h`:
/// `Σᵢ Σⱼ σ_s² Re(hᵢ hⱼ*) Cov(s_{k,i}, s_{k,j}) + σ_n² I`.
pub fn multipath_covariance(params: &OfdmParams, h: &ChannelTaps) -> Result<DenseMatrix> {
    params.validate()?;
    if h.order() >= params.tcp {
        return Err(Error::UnsupportedChannel(format!(
            "channel order {} must be below the cyclic prefix {}",
            h.order(),
            params.tcp
        )));
    }
    let n = params.n();
    let mut r = DenseMatrix::identity(n, n) * params.sigma_n2;
    let taps = h.taps();
    for (i, hi) in taps.iter().enumerate() {
        for (j, hj) in taps.iter().enumerate() {
            let w = params.sigma_s2 * (hi * hj.conj()).re;
            if w != 0.0 {
                r += shifted_symbol_covariance(n, params.td, i, j) * w;
            }
        }
    }
    Ok(r)
}

/// Write the usable frames as little-endian interleaved `f32` I/Q.
pub fn write_iq_f32(stream: &SampleStream, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for frame in stream.frames() {
        for s in frame {
            w.write_all(&(s.re as f32).to_le_bytes()).map_err(io_err)?;
            w.write_all(&(s.im as f32).to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Read a little-endian interleaved `f32` I/Q file into frames of `frame_len`.
pub fn read_iq_f32(path: &Path, frame_len: usize) -> Result<SampleStream> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(io_err)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::Dimension(format!(
            "{} bytes is not a whole number of I/Q pairs",
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    SampleStream::new(samples, frame_len, 0)
}
