//! Log-domain arithmetic.
//!
//! Every sum of exponentials in the crate goes through [`lse`] so that powers
//! such as `W̃^{1/λ}` survive `λ` anywhere in `[1e-6, 1e6]`.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural logarithm of a nonnegative quantity. `-∞` encodes zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[repr(transparent)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    /// Wraps a log value. Panics on NaN or `+∞`, which do not encode a
    /// nonnegative real.
    pub fn new(value: f64) -> Self {
        assert!(
            !value.is_nan() && value != f64::INFINITY,
            "invalid log value {value}"
        );
        LogValue(value)
    }

    pub fn from_linear(x: f64) -> Self {
        assert!(x >= 0.0 && x.is_finite(), "invalid linear value {x}");
        LogValue(x.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn linear(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// `self^exponent` for a nonnegative exponent, with `0^0 = 1`.
    pub fn powf(self, exponent: f64) -> Self {
        assert!(exponent >= 0.0, "negative exponent {exponent}");
        LogValue(scale(exponent, self.0))
    }
}

impl Add for LogValue {
    type Output = LogValue;

    fn add(self, rhs: LogValue) -> LogValue {
        LogValue(lse2(self.0, rhs.0))
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    // Products add in the log domain.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 + rhs.0)
    }
}

/// `ln Σ_i e^{terms_i}`.
pub fn log_sum_exp(terms: &[LogValue]) -> Result<LogValue> {
    if terms.is_empty() {
        return Err(Error::EmptyReduction);
    }
    Ok(LogValue(lse(terms.iter().map(|t| t.0))))
}

/// Max-shifted log-sum-exp over raw `f64` log values.
///
/// Empty input and all-`-∞` input give `-∞`; any `+∞` term gives `+∞`.
#[inline]
pub fn lse<I>(terms: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let iter = terms.into_iter();
    let max = iter.clone().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    // The max term contributes exactly 1; the rest go through ln_1p.
    let mut seen_max = false;
    let mut rest = 0.0;
    for t in iter {
        if !seen_max && t == max {
            seen_max = true;
            continue;
        }
        rest += (t - max).exp();
    }
    max + rest.ln_1p()
}

#[inline]
pub(crate) fn lse2(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi.is_infinite() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `coeff · log_value` with the convention `0 · (±∞) = 0`, i.e. `x^0 = 1`
/// even for `x = 0`.
#[inline]
pub fn scale(coeff: f64, log_value: f64) -> f64 {
    if coeff == 0.0 {
        0.0
    } else {
        coeff * log_value
    }
}

/// Natural log of a probability, `-∞` for zero.
#[inline]
pub fn ln_prob(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}
