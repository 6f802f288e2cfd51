//! Nonnegative reals carried on the natural-log scale.
//!
//! Quantities such as `xi^p`, `M^p` or `n (p/e)^{p/2}` leave the `f64` range
//! long before the interesting regimes are reached, so everything of that
//! kind is passed around as a [`LogValue`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul};

use serde::{Deserialize, Serialize};

/// A nonnegative real `exp(log_magnitude)`. Zero is `log_magnitude == -inf`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    log_magnitude: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { log_magnitude: f64::NEG_INFINITY };
    pub const ONE: LogValue = LogValue { log_magnitude: 0.0 };
    pub const INFINITY: LogValue = LogValue { log_magnitude: f64::INFINITY };

    /// Builds from the natural log of the value. NaN is rejected.
    pub fn from_ln(log_magnitude: f64) -> Self {
        assert!(!log_magnitude.is_nan(), "LogValue::from_ln(NaN)");
        LogValue { log_magnitude }
    }

    /// Builds from a plain nonnegative value.
    pub fn from_value(x: f64) -> Self {
        assert!(x >= 0.0, "LogValue::from_value({x}) requires x >= 0");
        LogValue { log_magnitude: x.ln() }
    }

    #[inline]
    pub fn ln(self) -> f64 {
        self.log_magnitude
    }

    pub fn log10(self) -> f64 {
        self.log_magnitude / std::f64::consts::LN_10
    }

    /// The plain value; saturates to 0 or +inf outside the `f64` range.
    #[inline]
    pub fn value(self) -> f64 {
        self.log_magnitude.exp()
    }

    pub fn is_zero(self) -> bool {
        self.log_magnitude == f64::NEG_INFINITY
    }

    pub fn is_infinite(self) -> bool {
        self.log_magnitude == f64::INFINITY
    }

    pub fn powf(self, e: f64) -> Self {
        if self.is_zero() {
            return if e > 0.0 {
                Self::ZERO
            } else if e == 0.0 {
                Self::ONE
            } else {
                Self::INFINITY
            };
        }
        LogValue::from_ln(self.log_magnitude * e)
    }

    pub fn recip(self) -> Self {
        LogValue::from_ln(-self.log_magnitude)
    }

    /// `self - other`, or `None` when the difference would be negative.
    pub fn checked_sub(self, other: LogValue) -> Option<LogValue> {
        if other.is_zero() {
            return Some(self);
        }
        match self.log_magnitude.partial_cmp(&other.log_magnitude)? {
            Ordering::Less => None,
            Ordering::Equal => Some(Self::ZERO),
            Ordering::Greater => {
                let d = other.log_magnitude - self.log_magnitude;
                Some(LogValue::from_ln(self.log_magnitude + (-d.exp()).ln_1p()))
            }
        }
    }

    pub fn max(self, other: LogValue) -> LogValue {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn min(self, other: LogValue) -> LogValue {
        if self <= other {
            self
        } else {
            other
        }
    }

    /// Sum of many values with a single rescaling by the largest term.
    pub fn sum<I: IntoIterator<Item = LogValue>>(terms: I) -> LogValue {
        let logs: Vec<f64> = terms.into_iter().map(LogValue::ln).collect();
        LogValue::from_ln(log_sum_exp(&logs))
    }

    /// `|ln(self) - ln(other)|`, the multiplicative distance in nats.
    pub fn log_ratio(self, other: LogValue) -> f64 {
        self.log_magnitude - other.log_magnitude
    }
}

/// `ln(sum exp(x_i))` with terms accumulated smallest first (Neumaier).
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let mut shifted: Vec<f64> = xs.iter().map(|&x| (x - max).exp()).collect();
    shifted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    max + neumaier_sum(&shifted).ln()
}

pub(crate) fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.is_zero() || rhs.is_zero() {
            return LogValue::ZERO;
        }
        LogValue::from_ln(self.log_magnitude + rhs.log_magnitude)
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        if self.is_zero() {
            return LogValue::ZERO;
        }
        LogValue::from_ln(self.log_magnitude - rhs.log_magnitude)
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, rhs: LogValue) -> LogValue {
        let (hi, lo) = if self >= rhs { (self, rhs) } else { (rhs, self) };
        if lo.is_zero() || hi.is_infinite() {
            return hi;
        }
        LogValue::from_ln(hi.log_magnitude + (lo.log_magnitude - hi.log_magnitude).exp().ln_1p())
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.log_magnitude.partial_cmp(&other.log_magnitude)
    }
}

impl From<f64> for LogValue {
    fn from(x: f64) -> Self {
        LogValue::from_value(x)
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogValue(e^{})", self.log_magnitude)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l10 = self.log10();
        if l10.abs() < 300.0 {
            write!(f, "{:e}", self.value())
        } else {
            write!(f, "10^{l10:.6}")
        }
    }
}
