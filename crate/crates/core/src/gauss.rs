//! Scalar Gaussian machinery: the law of `|g|`, its quantiles, absolute
//! moments, Mills-ratio bounds and a scale-stable `l_p` norm.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::special::{erf, ln_erfc, ln_gamma};
use crate::{BoundBracket, LogValue};

/// `ln sqrt(2/pi)`
pub(crate) const LN_SQRT_2_OVER_PI: f64 = -0.225_791_352_644_727_43;

/// `xi_alpha`: the point where `P{|g| <= xi_alpha} = alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub alpha: f64,
    pub value: f64,
}

/// `P{|g| <= t} = erf(t / sqrt 2)`.
pub fn abs_cdf(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(domain("abs_cdf", format!("t = {t} must be >= 0")));
    }
    Ok(erf(t * FRAC_1_SQRT_2))
}

/// `ln P{|g| >= t}`, full relative precision far into the tail.
pub fn ln_abs_tail(t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    ln_erfc(t * FRAC_1_SQRT_2)
}

/// `P{|g| >= t}`.
pub fn abs_tail(t: f64) -> f64 {
    ln_abs_tail(t).exp()
}

/// Density of `|g|` at `t >= 0`, in logs.
fn ln_abs_density(t: f64) -> f64 {
    LN_SQRT_2_OVER_PI - 0.5 * t * t
}

/// `xi_alpha` for `0 <= alpha < 1`.
pub fn quantile(alpha: f64) -> Result<Quantile> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(domain("quantile", format!("alpha = {alpha} outside [0, 1)")));
    }
    let value = if alpha == 0.0 {
        0.0
    } else if alpha < 0.5 {
        solve_cdf(alpha)
    } else {
        solve_tail(1.0 - alpha)
    };
    Ok(Quantile { alpha, value })
}

/// `xi_{1-beta}` computed from the tail mass `beta` directly, so that
/// `beta = i/n` with tiny `i/n` loses nothing to `1 - beta` rounding.
pub fn tail_quantile(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain("tail_quantile", format!("beta = {beta} outside (0, 1]")));
    }
    if beta == 1.0 {
        return Ok(0.0);
    }
    if beta > 0.5 {
        return Ok(solve_cdf(1.0 - beta));
    }
    Ok(solve_tail(beta))
}

/// Safeguarded Newton on `abs_cdf(t) = alpha` over `[0, 10]`.
fn solve_cdf(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
    let mut t = alpha * (PI / 2.0).sqrt(); // density at 0 is sqrt(2/pi)
    for _ in 0..200 {
        let h = erf(t * FRAC_1_SQRT_2) - alpha;
        if h > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let step = h / ln_abs_density(t).exp();
        let mut next = t - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-16 * t.max(1e-300) || hi - lo <= 1e-16 * hi {
            return next;
        }
        t = next;
    }
    t
}

/// Safeguarded Newton on `ln P{|g| >= t} = ln beta` over `[0, 40]`.
fn solve_tail(beta: f64) -> f64 {
    let target = beta.ln();
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    // Start from the two-term asymptotic inverse of the Mills ratio.
    let l = -2.0 * (beta * (PI / 2.0).sqrt()).ln();
    let mut t = if l > 1.0 { (l - l.ln()).max(1.0).sqrt() } else { 1.0 };
    for _ in 0..200 {
        let lt = ln_abs_tail(t);
        let h = lt - target;
        if h > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        // d/dt ln tail = -density / tail
        let slope = -(ln_abs_density(t) - lt).exp();
        let mut next = t - h / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 4e-16 * t || hi - lo <= 4e-16 * hi {
            return next;
        }
        t = next;
    }
    t
}

/// Two-term asymptotic `sqrt(2L) - (ln L / 2) / sqrt(2L)` with
/// `L = ln(n/i)`, an approximation of `xi_{1-i/n}`.
pub fn quantile_approx(n: u64, i: u64) -> Result<f64> {
    if i < 1 || 2 * i > n {
        return Err(domain("quantile_approx", format!("need 1 <= i <= n/2, got n = {n}, i = {i}")));
    }
    let l = (n as f64 / i as f64).ln();
    if l <= 1.0 {
        return Err(domain(
            "quantile_approx",
            format!("log(n/i) = {l} <= 1, log log(n/i) is not positive"),
        ));
    }
    let s = (2.0 * l).sqrt();
    Ok(s - 0.5 * l.ln() / s)
}

/// Mills-ratio bracket for `P{|g| >= t}`:
/// `sqrt(2/pi)(1/t - 1/t^3) e^{-t^2/2}` and `sqrt(2/pi)(1/t) e^{-t^2/2}`.
/// The lower side is clamped at zero for `t <= 1`.
pub fn mills_bounds(t: f64) -> Result<BoundBracket> {
    if t.is_nan() || t <= 0.0 {
        return Err(domain("mills_bounds", format!("t = {t} must be > 0")));
    }
    if t == f64::INFINITY {
        return Ok(BoundBracket::new(LogValue::ZERO, LogValue::ZERO));
    }
    let ln_upper = LN_SQRT_2_OVER_PI - t.ln() - 0.5 * t * t;
    let upper = LogValue::from_ln(ln_upper);
    let lower = if t <= 1.0 {
        LogValue::ZERO
    } else {
        // (1/t - 1/t^3) = (1/t)(1 - 1/t^2)
        LogValue::from_ln(ln_upper + (-1.0 / (t * t)).ln_1p())
    };
    Ok(BoundBracket::new(lower, upper))
}

/// `E|g|^p = 2^{p/2} Γ((p+1)/2) / sqrt(pi)` for `p > -1`.
pub fn abs_moment(p: f64) -> Result<LogValue> {
    if p.is_nan() || p <= -1.0 {
        return Err(domain("abs_moment", format!("p = {p} must be > -1")));
    }
    if p == f64::INFINITY {
        return Ok(LogValue::INFINITY);
    }
    Ok(LogValue::from_ln(0.5 * p * LN_2 + ln_gamma(0.5 * (p + 1.0)) - 0.5 * PI.ln()))
}

/// `||x||_p` for `p >= 1` or `p = inf`, computed as `m (sum (|x_i|/m)^p)^{1/p}`
/// with `m = max |x_i|` so that large `p` never overflows.
pub fn lp_norm(x: &[f64], p: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(domain("lp_norm", "empty vector"));
    }
    if p.is_nan() || p < 1.0 {
        return Err(domain("lp_norm", format!("p = {p} must be >= 1")));
    }
    let m = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if m == 0.0 || p == f64::INFINITY {
        return Ok(m);
    }
    let inv = 1.0 / m;
    let s: f64 = if p == 1.0 {
        x.iter().map(|v| v.abs() * inv).sum()
    } else if p == 2.0 {
        x.iter().map(|v| (v * inv) * (v * inv)).sum()
    } else {
        x.iter().map(|v| (v.abs() * inv).powf(p)).sum()
    };
    Ok(m * s.powf(1.0 / p))
}

/// `xi^{-1} exp(-xi^2/2) / (1 - alpha)`, the Feller-type quantile ratio.
pub fn feller_ratio(q: &Quantile) -> f64 {
    (-q.value.ln() - 0.5 * q.value * q.value).exp() / (1.0 - q.alpha)
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn abs_cdf_examples() {
        assert_eq!(abs_cdf(0.0).unwrap(), 0.0);
        assert_eq!(abs_cdf(f64::INFINITY).unwrap(), 1.0);
        // mpmath erf(1/sqrt 2)
        assert!(rel(abs_cdf(1.0).unwrap(), 0.682689492137085897170465091264) < 1e-14);
        assert!(abs_cdf(-1.0).is_err());
    }

    #[test]
    fn tail_has_relative_precision_to_forty() {
        // mpmath log(erfc(t/sqrt 2))
        let cases = [
            (6.0, -20.0436217694147603),
            (9.0, -42.9350019327721702),
            (40.0, -803.915294833193843),
        ];
        for (t, want) in cases {
            assert!(rel(ln_abs_tail(t), want) < 1e-14, "t = {t}: {}", ln_abs_tail(t));
        }
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(0.0).unwrap().value, 0.0);
        let q = quantile(0.682689492137085897).unwrap();
        assert!((q.value - 1.0).abs() < 1e-12);
        // mpmath: sqrt(2) erfinv(0.99)
        assert!((quantile(0.99).unwrap().value - 2.57582930354890076).abs() < 1e-13);
        assert!(quantile(1.0).is_err());
        assert!(quantile(-0.1).is_err());
    }

    #[test]
    fn tail_quantile_small_beta() {
        // mpmath: xi_{1-1e-4}, xi_{1-1e-6}, xi_{1-1e-8}
        assert!(rel(tail_quantile(1e-4).unwrap(), 3.89059188641309397) < 1e-14);
        assert!(rel(tail_quantile(1e-6).unwrap(), 4.89163847569859039) < 1e-14);
        assert!(rel(tail_quantile(1e-8).unwrap(), 5.73072886823628965) < 1e-14);
        assert_eq!(tail_quantile(1.0).unwrap(), 0.0);
        assert!(tail_quantile(0.0).is_err());
    }

    #[test]
    fn quantile_inverts_cdf_on_grid() {
        for i in 0..=8000 {
            let t = i as f64 * 1e-3;
            let a = abs_cdf(t).unwrap();
            if a >= 1.0 {
                continue;
            }
            let back = quantile(a).unwrap();
            assert!((abs_cdf(back.value).unwrap() - a).abs() <= 1e-12);
            // one ulp of alpha moves xi by ulp / density, which exceeds 1e-10 past t ~ 5
            let slack = 2.0 * f64::EPSILON / ln_abs_density(t).exp();
            assert!((back.value - t).abs() <= 1e-10 + slack, "t = {t}: {}", back.value);
        }
    }

    #[test]
    fn quantile_approx_examples() {
        let a = quantile_approx(10_000, 1).unwrap();
        assert!((a - 4.033_269_196_414_205).abs() < 1e-13, "{a}");
        let exact = tail_quantile(1e-4).unwrap();
        assert!((a - exact).abs() < 1.0 / (10_000f64.ln()).sqrt());
        let b = quantile_approx(1_000_000, 1).unwrap();
        assert!((b - 5.006_756_618_056_872).abs() < 1e-13, "{b}");
        assert!(quantile_approx(10_000, 5_000).is_err());
        assert!(quantile_approx(10_000, 0).is_err());
    }

    #[test]
    fn quantile_approx_discrepancy_bounded() {
        // |xi_{1-1/n} - approx| sqrt(log n) stays bounded
        for e in 3..=8 {
            let n = 10u64.pow(e);
            let exact = tail_quantile(1.0 / n as f64).unwrap();
            let approx = quantile_approx(n, 1).unwrap();
            let scaled = (exact - approx).abs() * (n as f64).ln().sqrt();
            assert!(scaled < 0.6, "n = {n}: {scaled}");
        }
    }

    #[test]
    fn feller_ratio_bounded() {
        for e in 2..=8 {
            let n = 10f64.powi(e);
            let q = Quantile { alpha: 1.0 - 1.0 / n, value: tail_quantile(1.0 / n).unwrap() };
            let r = feller_ratio(&q);
            assert!((1.2..=1.5).contains(&r), "n = {n}: {r}");
        }
    }

    #[test]
    fn mills_examples() {
        let b = mills_bounds(1.0).unwrap();
        assert!(b.lower.is_zero());
        assert!(rel(b.upper.value(), 0.483_941_449_038_286_7) < 1e-14);
        let b = mills_bounds(2.0).unwrap();
        assert!(rel(b.lower.value(), 0.040_493_224_884_891_04) < 1e-12);
        assert!(rel(b.upper.value(), 0.053_990_966_513_188_05) < 1e-12);
        assert!(b.strictly_contains(LogValue::from_value(abs_tail(2.0))));
        let far = mills_bounds(f64::INFINITY).unwrap();
        assert!(far.lower.is_zero() && far.upper.is_zero());
        assert!(mills_bounds(0.0).is_err());
        for t in [1.01, 1.1, 2.0, 3.0, 5.0] {
            let b = mills_bounds(t).unwrap();
            assert!(b.strictly_contains(LogValue::from_ln(ln_abs_tail(t))), "t = {t}");
        }
    }

    #[test]
    fn abs_moment_examples() {
        assert!((abs_moment(2.0).unwrap().value() - 1.0).abs() < 1e-14);
        assert!(rel(abs_moment(1.0).unwrap().value(), (2.0 / PI).sqrt()) < 1e-14);
        assert!(rel(abs_moment(4.0).unwrap().value(), 3.0) < 1e-14);
        assert!(abs_moment(-1.0).is_err());
        assert!(abs_moment(-0.5).unwrap().value().is_finite());
    }

    #[test]
    fn lp_norm_examples() {
        assert_eq!(lp_norm(&[3.0, 4.0], 2.0).unwrap(), 5.0);
        let ones = vec![1.0; 1000];
        for p in [1.0, 2.0, 3.5, 40.0] {
            assert!(rel(lp_norm(&ones, p).unwrap(), 1000f64.powf(1.0 / p)) < 1e-13);
        }
        assert_eq!(lp_norm(&ones, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(lp_norm(&[0.0, -0.0], 3.0).unwrap(), 0.0);
        assert!(lp_norm(&[], 2.0).is_err());
        assert!(lp_norm(&[1.0], 0.5).is_err());
        // no overflow at huge p
        assert!(rel(lp_norm(&[1e300, 1e300], 1e4).unwrap(), 1e300 * 2f64.powf(1e-4)) < 1e-13);
    }

    proptest! {
        #[test]
        fn pq_relation(x in proptest::collection::vec(-1e3f64..1e3, 1..40), p in 1.0f64..30.0, dq in 0.0f64..30.0) {
            let q = p + dq;
            let n = x.len() as f64;
            let np = lp_norm(&x, p).unwrap();
            let nq = lp_norm(&x, q).unwrap();
            prop_assert!(nq <= np * (1.0 + 1e-12));
            prop_assert!(np <= n.powf(1.0 / p - 1.0 / q) * nq * (1.0 + 1e-12) + 1e-300);
            let ninf = lp_norm(&x, f64::INFINITY).unwrap();
            prop_assert!(ninf <= nq * (1.0 + 1e-12));
        }

        #[test]
        fn single_coordinate_equality(v in -1e6f64..1e6, p in 1.0f64..100.0, len in 1usize..10) {
            let mut x = vec![0.0; len];
            x[len / 2] = v;
            prop_assert!((lp_norm(&x, p).unwrap() - v.abs()).abs() <= 1e-12 * v.abs());
        }

        #[test]
        fn quantile_monotone(a in 0.0f64..0.999_999, b in 0.0f64..0.999_999) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(quantile(lo).unwrap().value <= quantile(hi).unwrap().value);
        }
    }
}
