//! Truncated Gaussian moments.
//!
//! Everything reduces to `I(q, a) = ∫_0^a x^q e^{-x^2/2} dx`. The integrand
//! `f = exp(phi)`, `phi(x) = q ln x - x^2/2`, is log-concave with its peak at
//! `min(sqrt q, a)`; it is integrated as `exp(phi - phi_max)` over the window
//! where `phi` is within [`WINDOW_NATS`] of its maximum.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::constants::Constants;
use crate::error::{domain, Result};
use crate::gauss::{ln_abs_tail, LN_SQRT_2_OVER_PI};
use crate::quadrature::integrate;
use crate::{BoundBracket, LogValue};

/// Integrand drop (in nats) at which the window is cut; `e^-46 < 1e-20`.
const WINDOW_NATS: f64 = 46.0;
const QUAD_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MomentRegime {
    /// `q <= a^2`: the peak `sqrt q` lies inside `[0, a]`.
    LowQ,
    /// `q > a^2`: the integrand increases all the way to `a`.
    HighQ,
}

/// Exponent `q >= 0` and truncation point `a > 0`; `a = f64::INFINITY`
/// means no truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub q: f64,
    pub a: f64,
}

impl TruncationSpec {
    pub fn new(q: f64, a: f64) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(domain("TruncationSpec", format!("q = {q} must be finite and >= 0")));
        }
        if a.is_nan() || a <= 0.0 {
            return Err(domain("TruncationSpec", format!("a = {a} must be > 0")));
        }
        Ok(TruncationSpec { q, a })
    }

    pub fn untruncated(q: f64) -> Result<Self> {
        Self::new(q, f64::INFINITY)
    }

    pub fn regime(&self) -> MomentRegime {
        if self.q <= self.a * self.a {
            MomentRegime::LowQ
        } else {
            MomentRegime::HighQ
        }
    }

    fn phi(&self, x: f64) -> f64 {
        if self.q == 0.0 {
            -0.5 * x * x
        } else {
            self.q * x.ln() - 0.5 * x * x
        }
    }

    fn x_max(&self) -> f64 {
        self.q.sqrt().min(self.a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfMaxWindow {
    pub x_left: f64,
    pub x_max: f64,
    pub x_right: f64,
    pub f_max: LogValue,
}

impl HalfMaxWindow {
    pub fn width(&self) -> f64 {
        self.x_right - self.x_left
    }
}

/// Point in `[lo, hi]` where a monotone `phi` crosses `level`; `rising`
/// says whether `phi` increases on the interval.
fn bisect_level(spec: &TruncationSpec, level: f64, mut lo: f64, mut hi: f64, rising: bool) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = spec.phi(mid) >= level;
        if above == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Right end of the search interval when `a = inf`.
fn right_limit(spec: &TruncationSpec, x_max: f64, level: f64) -> f64 {
    let mut r = x_max + 12.0 * (1.0 + x_max).sqrt();
    while spec.phi(r) >= level {
        r *= 2.0;
    }
    r
}

/// Points where `phi` has dropped `drop_nats` below its maximum, clamped to `[0, a]`.
fn level_window(spec: &TruncationSpec, drop_nats: f64) -> (f64, f64, f64, f64) {
    let x_max = spec.x_max();
    let phi_max = spec.phi(x_max);
    let level = phi_max - drop_nats;
    let left = if x_max == 0.0 || spec.phi(0.0) >= level {
        0.0
    } else {
        bisect_level(spec, level, 0.0, x_max, true)
    };
    let right = if spec.a.is_finite() && spec.phi(spec.a) >= level {
        spec.a
    } else {
        let hi = if spec.a.is_finite() { spec.a } else { right_limit(spec, x_max, level) };
        bisect_level(spec, level, x_max, hi, false)
    };
    (left, x_max, right, phi_max)
}

/// The half-max window of the log-concave integrand on `[0, a]`.
pub fn half_max_window(spec: &TruncationSpec) -> Result<HalfMaxWindow> {
    if spec.q == 0.0 {
        return Err(domain("half_max_window", "q = 0: x_max = 0 and the window is degenerate"));
    }
    let (x_left, x_max, x_right, phi_max) = level_window(spec, LN_2);
    Ok(HalfMaxWindow { x_left, x_max, x_right, f_max: LogValue::from_ln(phi_max) })
}

/// `∫_0^a x^q e^{-x^2/2} dx` with relative error below `1e-10`.
pub fn incomplete_integral(spec: &TruncationSpec) -> LogValue {
    let (lo, _, hi, phi_max) = level_window(spec, WINDOW_NATS);
    if hi <= lo {
        return LogValue::ZERO;
    }
    let r = integrate(|x| (spec.phi(x) - phi_max).exp(), lo, hi, QUAD_REL_TOL, 0.0);
    LogValue::from_ln(phi_max + r.value.ln())
}

/// `E(|g|^q 1{|g| <= a}) = sqrt(2/pi) I(q, a)`.
pub fn trunc_moment_chi(spec: &TruncationSpec) -> LogValue {
    LogValue::from_ln(LN_SQRT_2_OVER_PI) * incomplete_integral(spec)
}

/// `E min(|g|, a)^q = E(|g|^q 1{|g| <= a}) + a^q P{|g| > a}`.
pub fn trunc_moment_min(spec: &TruncationSpec) -> LogValue {
    let chi = trunc_moment_chi(spec);
    if spec.a.is_infinite() {
        return chi;
    }
    chi + LogValue::from_ln(spec.q * spec.a.ln() + ln_abs_tail(spec.a))
}

/// Closed-form orders for the truncated integral and its `E min` companion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBracket {
    pub regime: MomentRegime,
    /// `(q/e)^{q/2}` or `a^{q+1} e^{-a^2/2} / (a + q - a^2)`.
    pub order: LogValue,
    /// `[moment_lower * order, moment_upper * order]`, to contain `I(q, a)`.
    pub bracket: BoundBracket,
    /// Order of the upper bound on `E min(|g|, a)^q`: `(q/e)^{q/2}` when
    /// `q <= a^2`, else `q a^{q-1} e^{-a^2/2} / (a + q - a^2)`.
    pub min_upper_order: LogValue,
}

pub fn low_q_order(q: f64) -> LogValue {
    LogValue::from_ln(0.5 * q * (q.ln() - 1.0))
}

pub fn high_q_order(q: f64, a: f64) -> LogValue {
    LogValue::from_ln((q + 1.0) * a.ln() - 0.5 * a * a - (a + q - a * a).ln())
}

pub fn moment_bracket(spec: &TruncationSpec, c: &Constants) -> Result<MomentBracket> {
    let (q, a) = (spec.q, spec.a);
    if q < 1.0 || a < 1.0 {
        return Err(domain("moment_bracket", format!("need q, a >= 1, got q = {q}, a = {a}")));
    }
    let regime = spec.regime();
    let (order, min_upper_order) = match regime {
        MomentRegime::LowQ => (low_q_order(q), low_q_order(q)),
        MomentRegime::HighQ => {
            let order = high_q_order(q, a);
            // q a^{q-1} replaces a^{q+1}
            (order, order * LogValue::from_ln(q.ln() - 2.0 * a.ln()))
        }
    };
    let bracket = BoundBracket::new(
        LogValue::from_value(c.moment_lower) * order,
        LogValue::from_value(c.moment_upper) * order,
    )
    .with_constant("moment_lower", c.moment_lower)
    .with_constant("moment_upper", c.moment_upper);
    Ok(MomentBracket { regime, order, bracket, min_upper_order })
}
