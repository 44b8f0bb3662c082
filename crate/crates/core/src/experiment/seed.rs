//! Per-trial seed derivation.
//!
//! Seeds are a SplitMix64 hash chain over `(master, stream tag, indices)`,
//! so every trial can be regenerated in isolation and in any order.

/// Independent random streams used by one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeedTag {
    Matrix = 1,
    Channel = 2,
    NullTrial = 3,
    SignalTrial = 4,
    Calibration = 5,
}

/// Streams inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStream {
    Signal = 1,
    Noise = 2,
    Matrix = 3,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix(state: u64, word: u64) -> u64 {
    splitmix64(state ^ splitmix64(word))
}

/// Seed for `(tag, indices...)` under `master`.
pub fn derive_seed(master: u64, tag: SeedTag, indices: &[u64]) -> u64 {
    let mut s = mix(splitmix64(master), tag as u64);
    for &i in indices {
        s = mix(s, i);
    }
    s
}

/// Seed of one stream inside a trial whose seed is `trial_seed`.
pub fn trial_stream_seed(trial_seed: u64, stream: TrialStream) -> u64 {
    mix(trial_seed, 0x5354_5245_414d_0000 | stream as u64)
}
