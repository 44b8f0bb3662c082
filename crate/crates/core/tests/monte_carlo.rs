//! Simulated second-order statistics against closed-form covariances.

use covsense::acquisition::{compress_frames, gaussian_measurement_matrix, FrameBlock};
use covsense::linalg::DenseMatrix;
use covsense::ofdm::{
    add_noise, apply_channel, generate_ofdm, generate_signal, multipath_covariance, noise_stream,
    theoretical_covariance, ChannelTaps, Hypothesis, OfdmParams, SampleStream, SignalModel,
};

/// Mean of `Re(x_i x_j*)` over frames and its standard error.
fn entry_stats(frames: &FrameBlock, i: usize, j: usize) -> (f64, f64) {
    let nb = frames.nb() as f64;
    let (mut s, mut s2) = (0.0, 0.0);
    for k in 0..frames.nb() {
        let v = frames.re[(i, k)] * frames.re[(j, k)] + frames.im[(i, k)] * frames.im[(j, k)];
        s += v;
        s2 += v * v;
    }
    let mean = s / nb;
    let var = (s2 / nb - mean * mean).max(0.0);
    (mean, (var / nb).sqrt())
}

/// Largest `|mean - expected| / SE` over the lower triangle.
fn worst_z(frames: &FrameBlock, expected: &DenseMatrix) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..frames.dim() {
        for i in j..frames.dim() {
            let (m, se) = entry_stats(frames, i, j);
            let z = if se > 0.0 {
                (m - expected[(i, j)]).abs() / se
            } else {
                (m - expected[(i, j)]).abs() * 1e12
            };
            worst = worst.max(z);
        }
    }
    worst
}

fn frame_powers(stream: &SampleStream) -> (f64, f64) {
    let p: Vec<f64> = stream
        .frames()
        .map(|f| f.iter().map(|s| s.norm_sqr()).sum::<f64>() / f.len() as f64)
        .collect();
    let n = p.len() as f64;
    let mean = p.iter().sum::<f64>() / n;
    let var = p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn ofdm_power_matches_target() {
    let params = OfdmParams::new(32, 8, 1.7, 1.0).unwrap();
    let s = generate_ofdm(&params, 100_000, 1).unwrap();
    let (mean, se) = frame_powers(&s);
    assert!((mean - 1.7).abs() < 3.0 * se, "{mean} +- {se}");
}

#[test]
fn noise_power_matches_target() {
    let x = noise_stream(40, 100_000, 2.5, 2).unwrap();
    let (mean, se) = frame_powers(&x);
    assert!((mean - 2.5).abs() < 3.0 * se, "{mean} +- {se}");
    let re2: f64 = x.samples.iter().map(|s| s.re * s.re).sum::<f64>() / x.samples.len() as f64;
    assert!((re2 - 1.25).abs() < 0.01, "{re2}");
}

#[test]
fn ofdm_covariance_matches_theory_at_chosen_entries() {
    let params = OfdmParams::new(32, 8, 1.0, 0.5).unwrap();
    let x = add_noise(&generate_ofdm(&params, 100_000, 3).unwrap(), 0.5, 4).unwrap();
    let frames = FrameBlock::from_stream(&x);
    let rx = theoretical_covariance(&params, Hypothesis::H1);
    for (i, j) in [(0, 0), (35, 3), (39, 7), (32, 0), (20, 5), (10, 9), (33, 2)] {
        let (m, se) = entry_stats(&frames, i, j);
        assert!(
            (m - rx[(i, j)]).abs() < 3.0 * se,
            "({i},{j}): {m} vs {} +- {se}",
            rx[(i, j)]
        );
    }
}

#[test]
fn ofdm_covariance_matches_theory_everywhere() {
    let params = OfdmParams::new(32, 8, 1.0, 1.0).unwrap();
    let x = add_noise(&generate_ofdm(&params, 100_000, 5).unwrap(), 1.0, 6).unwrap();
    let z = worst_z(
        &FrameBlock::from_stream(&x),
        &theoretical_covariance(&params, Hypothesis::H1),
    );
    // 820 entries; the maximum of that many standard normals rarely passes 4.5
    assert!(z < 5.0, "worst z {z}");
}

#[test]
fn multipath_covariance_matches_simulation() {
    let params = OfdmParams::new(32, 8, 1.0, 0.3).unwrap();
    for (order, seed) in [(0usize, 10u64), (1, 11), (2, 12), (5, 13)] {
        let h = ChannelTaps::random_unit_energy(order, seed);
        let s = generate_signal(&params, 100_000, 1, SignalModel::Qam16, seed + 100).unwrap();
        let x = add_noise(&apply_channel(&s, &h).unwrap(), 0.3, seed + 200).unwrap();
        let z = worst_z(
            &FrameBlock::from_stream(&x),
            &multipath_covariance(&params, &h).unwrap(),
        );
        assert!(z < 5.0, "order {order}: worst z {z}");
    }
}

#[test]
fn flat_tap_scales_covariance_by_tap_energy() {
    // a single tap of gain g multiplies the signal part by |g|², no doubling
    let params = OfdmParams::new(32, 8, 1.0, 0.2).unwrap();
    let h = ChannelTaps::new(vec![num_complex::Complex64::new(0.6, -0.8)]).unwrap();
    let s = generate_signal(&params, 100_000, 1, SignalModel::Gaussian, 21).unwrap();
    let x = add_noise(&apply_channel(&s, &h).unwrap(), 0.2, 22).unwrap();
    let frames = FrameBlock::from_stream(&x);
    let (lag, se) = entry_stats(&frames, 36, 4);
    assert!((lag - 1.0).abs() < 3.0 * se, "{lag} +- {se}");
    let (diag, se) = entry_stats(&frames, 7, 7);
    assert!((diag - 1.2).abs() < 3.0 * se, "{diag} +- {se}");
}

#[test]
fn compressed_covariance_mean_matches_projection() {
    let params = OfdmParams::new(32, 8, 1.0, 1.0).unwrap();
    let a = gaussian_measurement_matrix(8, 40, 30).unwrap();
    let x = add_noise(&generate_ofdm(&params, 100_000, 31).unwrap(), 1.0, 32).unwrap();
    let z = compress_frames(&x, &a).unwrap();
    let rx = theoretical_covariance(&params, Hypothesis::H1);
    let expected = a.as_dense() * rx * a.as_dense().transpose();
    let worst = worst_z(&z, &expected);
    assert!(worst < 4.0, "worst z {worst}");
}
