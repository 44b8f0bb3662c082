//! Central and noncentral F distributions.
//!
//! Only what threshold selection and detection-probability prediction
//! need: CDFs, upper tails and the central quantile. The regularized
//! incomplete beta function is evaluated by a continued fraction (modified
//! Lentz) with the usual symmetry switch; the noncentral CDF is the Poisson
//! mixture of central incomplete-beta terms, summed outward from the
//! Poisson mode and cut when the remaining Poisson mass is below `1e-13`.

use crate::error::{Error, Result};

/// Parameters of an F distribution. `lambda = 0` is the central case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FParams {
    pub d1: f64,
    pub d2: f64,
    pub lambda: f64,
}

impl FParams {
    pub fn central(d1: usize, d2: usize) -> Self {
        Self {
            d1: d1 as f64,
            d2: d2 as f64,
            lambda: 0.0,
        }
    }

    pub fn noncentral(d1: usize, d2: usize, lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::central(d1, d2)
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.d1 >= 1.0 && self.d2 >= 1.0) {
            return Err(Error::Domain(format!(
                "F degrees of freedom must be >= 1, got ({}, {})",
                self.d1, self.d2
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "noncentrality must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - beta_reg_cf(b, a, 1.0 - x)
    } else {
        beta_reg_cf(a, b, x)
    }
}

fn beta_reg_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    const MAX_ITER: usize = 20_000;

    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (ln_front.exp() * h / a).clamp(0.0, 1.0)
}

/// Map `x` to the beta argument `y = d1 x / (d1 x + d2)` and its complement.
fn beta_args(x: f64, d1: f64, d2: f64) -> (f64, f64) {
    let denom = d1 * x + d2;
    (d1 * x / denom, d2 / denom)
}

fn check_x(x: f64) -> Result<()> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::Domain(format!("F argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// Central F CDF. `p.lambda` is ignored.
pub fn f_cdf(x: f64, p: FParams) -> Result<f64> {
    p.check()?;
    check_x(x)?;
    if x.is_infinite() {
        return Ok(1.0);
    }
    let (y, _) = beta_args(x, p.d1, p.d2);
    Ok(beta_reg(p.d1 / 2.0, p.d2 / 2.0, y))
}

/// Central F upper tail `Q(x) = 1 - CDF(x)`, evaluated without cancellation.
pub fn f_sf(x: f64, p: FParams) -> Result<f64> {
    p.check()?;
    check_x(x)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    let (_, yc) = beta_args(x, p.d1, p.d2);
    Ok(beta_reg(p.d2 / 2.0, p.d1 / 2.0, yc))
}

/// Central F quantile: the `x` with `f_cdf(x) = prob`.
pub fn f_quantile(prob: f64, p: FParams) -> Result<f64> {
    p.check()?;
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!(
            "quantile probability must lie in (0, 1), got {prob}"
        )));
    }
    let (a, b) = (p.d1 / 2.0, p.d2 / 2.0);
    let ln_b = ln_beta(a, b);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut y = 0.5;
    for _ in 0..400 {
        let f = beta_reg(a, b, y) - prob;
        if f == 0.0 {
            break;
        }
        if f < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let ln_dens = (a - 1.0) * y.ln() + (b - 1.0) * (1.0 - y).ln() - ln_b;
        let newton = y - f / ln_dens.exp();
        y = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(p.d2 * y / (p.d1 * (1.0 - y)))
}

/// Upper-tail threshold: the `x` with `f_sf(x) = tail`.
pub fn f_upper_quantile(tail: f64, p: FParams) -> Result<f64> {
    f_quantile(1.0 - tail, p)
}

/// Poisson(mu)-weighted sum of `term(k)` with terms bounded by one in
/// magnitude, truncated when the neglected Poisson mass is below `tol`.
fn poisson_mixture(mu: f64, tol: f64, mut term: impl FnMut(usize) -> f64) -> f64 {
    let weight = |k: usize| (-mu + k as f64 * mu.ln() - ln_gamma(k as f64 + 1.0)).exp();
    let mode = mu.floor() as usize;
    let mut total = 0.0;

    let mut k = mode;
    loop {
        let w = weight(k);
        total += w * term(k);
        let r = mu / (k as f64 + 1.0);
        if r < 1.0 && w * r / (1.0 - r) < tol {
            break;
        }
        k += 1;
    }
    let mut k = mode;
    while k > 0 {
        k -= 1;
        let w = weight(k);
        total += w * term(k);
        let r = k as f64 / mu;
        if w * r / (1.0 - r) < tol {
            break;
        }
    }
    total
}

const POISSON_TAIL_TOL: f64 = 1e-13;

/// Noncentral F CDF (`p.lambda >= 0`).
pub fn noncentral_f_cdf(x: f64, p: FParams) -> Result<f64> {
    p.check()?;
    check_x(x)?;
    if p.lambda == 0.0 {
        return f_cdf(x, p);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let (y, _) = beta_args(x, p.d1, p.d2);
    let (a, b) = (p.d1 / 2.0, p.d2 / 2.0);
    let s = poisson_mixture(p.lambda / 2.0, POISSON_TAIL_TOL, |k| {
        beta_reg(a + k as f64, b, y)
    });
    Ok(s.clamp(0.0, 1.0))
}

/// Noncentral F upper tail.
pub fn noncentral_f_sf(x: f64, p: FParams) -> Result<f64> {
    p.check()?;
    check_x(x)?;
    if p.lambda == 0.0 {
        return f_sf(x, p);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let (_, yc) = beta_args(x, p.d1, p.d2);
    let (a, b) = (p.d1 / 2.0, p.d2 / 2.0);
    let s = poisson_mixture(p.lambda / 2.0, POISSON_TAIL_TOL, |k| {
        beta_reg(b, a + k as f64, yc)
    });
    Ok(s.clamp(0.0, 1.0))
}

/// One-sample Kolmogorov–Smirnov distance between `u` (values of a
/// hypothesized CDF at the samples) and the uniform distribution.
pub fn ks_uniform_statistic(u: &[f64]) -> f64 {
    let mut sorted = u.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (hi - v).max(v - lo)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical distance at significance `alpha` for `n` samples.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
