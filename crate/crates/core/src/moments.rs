//! Second-order moments of the finite-sample noise `W = R̂_x - R_x`.
//!
//! [`w_covariance`] transcribes the closed-form covariance table for
//! entries of `W` on or below the diagonal, and [`second_moment_split`] the
//! split of `E(r_ij r_pq)` into cross-frame and same-frame parts. Both are
//! evaluated symmetrically in the two index pairs, since
//! `E(w_ij w_pq) = E(w_pq w_ij)`; the table lists the cross term
//! `(i, i), (i, i - Td)` in only one order.
//!
//! [`gaussian_real_part_covariance`] is the exact value for circular
//! complex Gaussian frames, obtained from the fourth-moment factorization.
//! It is *not* identical to the table: on the H0 diagonal it is twice the
//! tabulated value, and it has nonzero entries for pairs such as
//! `(i, i), (i - Td, i - Td)` which the table sets to zero.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::ofdm::Hypothesis;

/// Parameters of the moment formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSetup {
    pub tau0: f64,
    pub taus: f64,
    pub nb: usize,
    pub td: usize,
    pub hypothesis: Hypothesis,
}

impl MomentSetup {
    pub fn h0(sigma_n2: f64, nb: usize, td: usize) -> Self {
        Self {
            tau0: sigma_n2,
            taus: 0.0,
            nb,
            td,
            hypothesis: Hypothesis::H0,
        }
    }

    pub fn h1(sigma_s2: f64, sigma_n2: f64, nb: usize, td: usize) -> Self {
        Self {
            tau0: sigma_n2 + sigma_s2,
            taus: sigma_s2,
            nb,
            td,
            hypothesis: Hypothesis::H1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nb == 0 {
            return Err(Error::Domain("moment setup needs nb >= 1".into()));
        }
        if self.hypothesis == Hypothesis::H0 && self.taus != 0.0 {
            return Err(Error::Domain("H0 moment setup must have taus = 0".into()));
        }
        Ok(())
    }

    /// `E(r_ij)`, read from the flat-channel covariance.
    pub fn mean_entry(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.tau0,
            d if d == self.td => self.taus,
            _ => 0.0,
        }
    }
}

/// Index quadruple `(i, j, p, q)` with `i >= j` and `p >= q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EntryPair {
    pub i: usize,
    pub j: usize,
    pub p: usize,
    pub q: usize,
}

impl EntryPair {
    pub fn new(i: usize, j: usize, p: usize, q: usize) -> Result<Self> {
        if i < j || p < q {
            return Err(Error::Domain(format!(
                "indices must be on or below the diagonal, got ({i},{j}) and ({p},{q})"
            )));
        }
        Ok(Self { i, j, p, q })
    }

    fn same_entry(&self) -> bool {
        self.i == self.p && self.j == self.q
    }

    fn lags(&self) -> (usize, usize) {
        (self.i - self.j, self.p - self.q)
    }

    /// `i = j = p = q + Td`, in either order of the two entries.
    fn is_cross_term(&self, td: usize) -> bool {
        let one = |i: usize, j: usize, p: usize, q: usize| i == j && j == p && p == q + td;
        one(self.i, self.j, self.p, self.q) || one(self.p, self.q, self.i, self.j)
    }
}

/// Classification of an index pair in the covariance table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MomentCase {
    /// Same entry, on the diagonal.
    Diagonal,
    /// Same entry, at lag `Td`.
    LagTd,
    /// Same entry, any other lag.
    OffLag,
    /// `(i, i)` with `(i, i - Td)`.
    Cross,
    /// Everything the table sets to zero.
    Other,
}

pub fn classify(pair: EntryPair, td: usize) -> MomentCase {
    if pair.same_entry() {
        match pair.i - pair.j {
            0 => MomentCase::Diagonal,
            d if d == td => MomentCase::LagTd,
            _ => MomentCase::OffLag,
        }
    } else if pair.is_cross_term(td) {
        MomentCase::Cross
    } else {
        MomentCase::Other
    }
}

/// `E(w_ij w_pq)` from the closed-form table for the setup's hypothesis.
pub fn w_covariance(setup: &MomentSetup, pair: EntryPair) -> Result<f64> {
    setup.validate()?;
    let nb = setup.nb as f64;
    let (t0, ts) = (setup.tau0, setup.taus);
    let case = classify(pair, setup.td);
    Ok(match setup.hypothesis {
        Hypothesis::H0 => match case {
            MomentCase::Diagonal | MomentCase::LagTd | MomentCase::OffLag => t0 * t0 / (2.0 * nb),
            _ => 0.0,
        },
        Hypothesis::H1 => match case {
            MomentCase::Diagonal => t0 * t0 / nb,
            MomentCase::LagTd => (ts * ts + t0 * t0) / (2.0 * nb),
            MomentCase::OffLag => t0 * t0 / (2.0 * nb),
            MomentCase::Cross => t0 * ts / nb,
            MomentCase::Other => 0.0,
        },
    })
}

/// Cross-frame part, same-frame part and total of `E(r_ij r_pq | H1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondMomentSplit {
    pub e_t1: f64,
    pub e_t2: f64,
    pub e_rr: f64,
}

pub fn second_moment_split(setup: &MomentSetup, pair: EntryPair) -> Result<SecondMomentSplit> {
    setup.validate()?;
    let nb = setup.nb as f64;
    let (t0, ts, td) = (setup.tau0, setup.taus, setup.td);
    let lags = pair.lags();
    let is = |d: usize| d == 0 || d == td;

    let frac = (nb - 1.0) / nb;
    let e_t1 = match lags {
        (0, 0) => frac * t0 * t0,
        (a, b) if (a == 0 && b == td) || (a == td && b == 0) => frac * t0 * ts,
        (a, b) if a == td && b == td => frac * ts * ts,
        _ => 0.0,
    };

    let distinct = pair.i != pair.p;
    let e_t2 = if pair.same_entry() {
        match lags.0 {
            0 => 2.0 * t0 * t0 / nb,
            d if d == td => (t0 * t0 + 3.0 * ts * ts) / (2.0 * nb),
            _ => t0 * t0 / (2.0 * nb),
        }
    } else if pair.is_cross_term(td) {
        2.0 * t0 * ts / nb
    } else if distinct && is(lags.0) && is(lags.1) {
        match lags {
            (0, 0) => t0 * t0 / nb,
            (a, b) if a == td && b == td => ts * ts / nb,
            _ => t0 * ts / nb,
        }
    } else {
        0.0
    };

    Ok(SecondMomentSplit {
        e_t1,
        e_t2,
        e_rr: e_t1 + e_t2,
    })
}

/// Exact `Cov(r_ij, r_pq)` for `Nb` i.i.d. circular complex Gaussian frames
/// with real covariance `rx`: `(R_ip R_jq + R_iq R_jp) / (2 Nb)`.
pub fn gaussian_real_part_covariance(rx: &DenseMatrix, nb: usize, pair: EntryPair) -> f64 {
    let EntryPair { i, j, p, q } = pair;
    (rx[(i, p)] * rx[(j, q)] + rx[(i, q)] * rx[(j, p)]) / (2.0 * nb as f64)
}
