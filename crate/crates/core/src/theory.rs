//! Closed-form variance theory: regimes, the truncation level `M(p)`, the
//! three-piece predictor, small-ball and negative-moment bounds, the
//! `A`-quantity and the upper/lower variance envelopes.
//!
//! Every quantity is carried as a natural log. `p = f64::INFINITY` is
//! accepted wherever the `p -> inf` limit is finite.

use std::f64::consts::{E, LN_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::Constants;
use crate::error::{domain, Result};
use crate::gauss::tail_quantile;
use crate::logvalue::log_sum_exp;
use crate::trunc::{trunc_moment_chi, trunc_moment_min, TruncationSpec};
use crate::LogValue;

/// `ln(2e)`.
const LN_2E: f64 = 1.693_147_180_559_945_3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    Low,
    Mid,
    High,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Low => "LOW",
            Regime::Mid => "MID",
            Regime::High => "HIGH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimePoint {
    pub n: u64,
    pub p: f64,
    /// `xi_{1-1/n}`.
    pub xi: f64,
    /// `2 log n / log(2e)`.
    pub p1: f64,
    /// `xi^2`.
    pub p2: f64,
    pub regime: Regime,
}

impl RegimePoint {
    pub fn ln_n(&self) -> f64 {
        (self.n as f64).ln()
    }
}

/// `(xi, p1, p2)` for dimension `n >= 2`.
pub fn boundaries(n: u64) -> Result<(f64, f64, f64)> {
    if n < 2 {
        return Err(domain("boundaries", format!("n = {n} must be >= 2")));
    }
    let xi = tail_quantile(1.0 / n as f64)?;
    let ln_n = (n as f64).ln();
    Ok((xi, 2.0 * ln_n / LN_2E, xi * xi))
}

fn check_p(op: &'static str, p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(domain(op, format!("p = {p} must be >= 1")));
    }
    Ok(())
}

/// Ties go left: `p = p1` is LOW, `p = p2` is MID.
pub fn classify(n: u64, p: f64, c: &Constants) -> Result<RegimePoint> {
    if (n as f64) < c.n_min {
        return Err(domain("classify", format!("n = {n} below n_min = {}", c.n_min)));
    }
    check_p("classify", p)?;
    let (xi, p1, p2) = boundaries(n)?;
    let regime = if p <= p1 {
        Regime::Low
    } else if p <= p2 {
        Regime::Mid
    } else {
        Regime::High
    };
    Ok(RegimePoint { n, p, xi, p1, p2, regime })
}

/// `ln M(p)`: `M^p = n (p/e)^{p/2}` for `p <= xi^2`, else `xi^p p / (xi + p - xi^2)`.
pub fn ln_truncation_level(n: u64, p: f64, xi: f64) -> f64 {
    let ln_n = (n as f64).ln();
    if p.is_infinite() {
        xi.ln()
    } else if p <= xi * xi {
        (ln_n + 0.5 * p * (p.ln() - 1.0)) / p
    } else {
        xi.ln() + (p / (xi + p - xi * xi)).ln() / p
    }
}

pub fn truncation_level_m(n: u64, p: f64, c: &Constants) -> Result<LogValue> {
    let rp = classify(n, p, c)?;
    Ok(LogValue::from_ln(ln_truncation_level(n, p, rp.xi)))
}

/// `ln((2^p / p) n^{2/p - 1})`.
pub fn ln_low_formula(n: u64, p: f64) -> f64 {
    let ln_n = (n as f64).ln();
    p * LN_2 - p.ln() + (2.0 / p - 1.0) * ln_n
}

/// `ln(exp(-(p/2e) n^{2/p} + log n) / (sqrt(log n) (sqrt(log n) + p - p1)))`.
pub fn ln_mid_formula(n: u64, p: f64) -> f64 {
    let ln_n = (n as f64).ln();
    let p1 = 2.0 * ln_n / LN_2E;
    let sq = ln_n.sqrt();
    -(p / (2.0 * E)) * (2.0 * ln_n / p).exp() + ln_n - sq.ln() - (sq + p - p1).ln()
}

/// `ln((1/log n)(1 - (xi^2 - xi)/p))`; NaN when `p <= xi^2 - xi`.
pub fn ln_high_formula(n: u64, p: f64, xi: f64) -> f64 {
    let ln_ln_n = (n as f64).ln().ln();
    if p.is_infinite() {
        return -ln_ln_n;
    }
    -ln_ln_n + (1.0 - (xi * xi - xi) / p).ln()
}

pub fn ln_regime_formula(regime: Regime, n: u64, p: f64, xi: f64) -> f64 {
    match regime {
        Regime::Low => ln_low_formula(n, p),
        Regime::Mid => ln_mid_formula(n, p),
        Regime::High => ln_high_formula(n, p, xi),
    }
}

/// The three-piece order of `Var ||G||_p`.
pub fn predict_variance(n: u64, p: f64, c: &Constants) -> Result<(LogValue, RegimePoint)> {
    let rp = classify(n, p, c)?;
    Ok((LogValue::from_ln(ln_regime_formula(rp.regime, n, p, rp.xi)), rp))
}

/// LOW from 1 to `p1` in steps of 1/2, MID and HIGH in steps of
/// `sqrt(log n)`, then `3 log n` and infinity. Both boundaries are included.
pub fn auto_p_grid(n: u64) -> Result<Vec<f64>> {
    let (_, p1, p2) = boundaries(n)?;
    let ln_n = (n as f64).ln();
    let step = ln_n.sqrt();
    let mut grid = Vec::new();
    let mut p = 1.0;
    while p < p1 {
        grid.push(p);
        p += 0.5;
    }
    grid.push(p1);
    let mut k = 1.0;
    while p1 + k * step < p2 {
        grid.push(p1 + k * step);
        k += 1.0;
    }
    grid.push(p2);
    let top = 3.0 * ln_n;
    let mut k = 1.0;
    while p2 + k * step < top {
        grid.push(p2 + k * step);
        k += 1.0;
    }
    if top > p2 {
        grid.push(top);
    }
    grid.push(f64::INFINITY);
    Ok(grid)
}

/// `min(C' exp(-c n^{(1-(2 tau)^{2/q})/4}), n (4 (2 tau)^{1/q} sqrt(2 log n))^{n/2})`,
/// capped at 1.
pub fn small_ball_bound(n: u64, q: f64, tau: f64, c: &Constants) -> Result<LogValue> {
    if !(tau > 0.0 && tau < 0.5) {
        return Err(domain("small_ball_bound", format!("tau = {tau} outside (0, 1/2)")));
    }
    if q.is_nan() || q < 1.0 {
        return Err(domain("small_ball_bound", format!("q = {q} must be >= 1")));
    }
    let nf = n as f64;
    let ln_n = nf.ln();
    let ln_2tau = (2.0 * tau).ln();
    let expo = (1.0 - (2.0 * ln_2tau / q).exp()) / 4.0;
    let first = c.small_ball_big_c.ln() - c.small_ball_c * (expo * ln_n).exp();
    let second = ln_n + 0.5 * nf * ((4.0f64).ln() + ln_2tau / q + 0.5 * (2.0 * ln_n).ln());
    Ok(LogValue::from_ln(first.min(second).min(0.0)))
}

/// `ln sum_{i=1}^n xi_{1-i/n}^q`, term by term.
pub fn ln_quantile_power_sum(n: u64, q: f64) -> Result<f64> {
    let nf = n as f64;
    let mut terms = Vec::with_capacity(n as usize);
    for i in 1..n {
        terms.push(q * tail_quantile(i as f64 / nf)?.ln());
    }
    Ok(log_sum_exp(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeMomentBound {
    /// `(n E min(|g|, xi)^q)^{-L}`.
    pub value: LogValue,
    /// `(sum_i xi_{1-i/n}^q)^{-L}`.
    pub direct: LogValue,
    /// `sum_i xi_{1-i/n}^q / (n E min(|g|, xi)^q)`.
    pub sum_ratio: f64,
}

/// `(sum_i xi_{1-i/n}^q)^{-L}` for `q >= 1`, `L > 0`, `q L <= K log n`.
pub fn negative_moment_bound(n: u64, q: f64, l: f64, c: &Constants) -> Result<NegativeMomentBound> {
    if q.is_nan() || q < 1.0 {
        return Err(domain("negative_moment_bound", format!("q = {q} must be >= 1")));
    }
    if !(l > 0.0) {
        return Err(domain("negative_moment_bound", format!("L = {l} must be > 0")));
    }
    let ln_n = (n as f64).ln();
    if q * l > c.negative_k * ln_n {
        return Err(domain(
            "negative_moment_bound",
            format!("q L = {} exceeds K log n = {}", q * l, c.negative_k * ln_n),
        ));
    }
    let (xi, _, _) = boundaries(n)?;
    let ln_min = ln_n + trunc_moment_min(&TruncationSpec::new(q, xi)?).ln();
    let ln_direct = ln_quantile_power_sum(n, q)?;
    Ok(NegativeMomentBound {
        value: LogValue::from_ln(-l * ln_min),
        direct: LogValue::from_ln(-l * ln_direct),
        sum_ratio: (ln_direct - ln_min).exp(),
    })
}

fn check_truncation(op: &'static str, n: u64, t: f64) -> Result<f64> {
    let (xi, _, _) = boundaries(n)?;
    if t.is_nan() || t < xi * (1.0 - 1e-12) {
        return Err(domain(op, format!("T = {t} below xi = {xi}")));
    }
    Ok(xi)
}

/// `n T^{-3} exp(-T^2/2)` for `T >= xi`.
pub fn tail_term(n: u64, p: f64, t: f64) -> Result<LogValue> {
    check_p("tail_term", p)?;
    check_truncation("tail_term", n, t)?;
    if t.is_infinite() {
        return Ok(LogValue::ZERO);
    }
    Ok(LogValue::from_ln((n as f64).ln() - 3.0 * t.ln() - 0.5 * t * t))
}

/// Moments entering the `A`-quantity at truncation `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TalagrandTerms {
    /// `E |g|^{2p-2} 1{|g| <= T}`.
    pub m_2p_2: LogValue,
    /// `E |g|^{p-1} 1{|g| <= T}`.
    pub m_p_1: LogValue,
    /// `E min(xi, |g|)^p`.
    pub min_xi: LogValue,
    /// `E min(T, |g|)^p`.
    pub min_t: LogValue,
    pub a: LogValue,
}

fn check_p_range(op: &'static str, n: u64, p: f64) -> Result<()> {
    check_p(op, p)?;
    let top = 3.0 * (n as f64).ln();
    if p > top {
        return Err(domain(op, format!("p = {p} above 3 log n = {top}")));
    }
    Ok(())
}

pub fn talagrand_terms(n: u64, p: f64, t: f64) -> Result<TalagrandTerms> {
    check_p_range("a_quantity", n, p)?;
    let xi = check_truncation("a_quantity", n, t)?;
    let m_2p_2 = trunc_moment_chi(&TruncationSpec::new(2.0 * p - 2.0, t)?);
    let m_p_1 = trunc_moment_chi(&TruncationSpec::new(p - 1.0, t)?);
    let min_xi = trunc_moment_min(&TruncationSpec::new(p, xi)?);
    let min_t = trunc_moment_min(&TruncationSpec::new(p, t)?);
    let nl = LogValue::from_value(n as f64);
    let e = 2.0 - 2.0 / p;
    let denom = LogValue::from_ln((2.0 * p - 2.0) * t.ln()) + (nl * min_t).powf(e);
    let ratio = m_2p_2 / m_p_1.powf(2.0) * (nl * min_xi).powf(e) / denom;
    Ok(TalagrandTerms { m_2p_2, m_p_1, min_xi, min_t, a: ratio.max(LogValue::ONE) })
}

pub fn a_quantity(n: u64, p: f64, t: f64) -> Result<LogValue> {
    Ok(talagrand_terms(n, p, t)?.a)
}

/// `tail_term + n^{-1+2/p} / (1 + log A) * E(|g|^{2p-2} 1{|g| <= T}) / (E min(xi, |g|)^p)^{2-2/p}`.
pub fn combined_upper(n: u64, p: f64, t: f64) -> Result<LogValue> {
    let terms = talagrand_terms(n, p, t)?;
    let ln_n = (n as f64).ln();
    let lead = LogValue::from_ln((2.0 / p - 1.0) * ln_n - (1.0 + terms.a.ln()).ln());
    let body = lead * terms.m_2p_2 / terms.min_xi.powf(2.0 - 2.0 / p);
    Ok(tail_term(n, p, t)? + body)
}

/// Same formulas as [`predict_variance`] for `p <= 3 log n`; `1/log n` beyond.
pub fn upper_envelope(n: u64, p: f64, c: &Constants) -> Result<LogValue> {
    let rp = classify(n, p, c)?;
    if p > 3.0 * rp.ln_n() {
        return Ok(LogValue::from_ln(-rp.ln_n().ln()));
    }
    Ok(LogValue::from_ln(ln_regime_formula(rp.regime, n, p, rp.xi)))
}

/// LOW and MID as [`predict_variance`]; HIGH is `(xi^4/p^3)(1 - (xi^2 - xi)/p)`,
/// floored at `c / log n` once `p >= C log n`.
pub fn lower_envelope(n: u64, p: f64, c: &Constants) -> Result<LogValue> {
    let rp = classify(n, p, c)?;
    let ln_n = rp.ln_n();
    let floor = LogValue::from_ln(c.pvz_lower_c.ln() - ln_n.ln());
    if p.is_infinite() {
        return Ok(floor);
    }
    let v = match rp.regime {
        Regime::Low => LogValue::from_ln(ln_low_formula(n, p)),
        Regime::Mid => LogValue::from_ln(ln_mid_formula(n, p)),
        Regime::High => {
            let xi = rp.xi;
            LogValue::from_ln(4.0 * xi.ln() - 3.0 * p.ln() + (1.0 - (xi * xi - xi) / p).ln())
        }
    };
    if p >= c.pvz_lower_big_c * ln_n {
        Ok(v.max(floor))
    } else {
        Ok(v)
    }
}

/// One pointwise check from [`lemma_checks`]: `lower <= value <= upper` in logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub n: u64,
    pub p: f64,
    pub regime: Regime,
    pub check: String,
    pub ln_value: f64,
    pub ln_lower: f64,
    pub ln_upper: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub checks: Vec<LemmaCheck>,
}

impl LemmaReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Slack for checks that hold with equality at a regime boundary.
const EQ_TOL: f64 = 1e-9;

/// Pointwise checks of the truncation-level properties:
///
/// * `a`: `M >= xi`
/// * `b`: `2p - 2 <= M^2` (LOW)
/// * `c`: `p <= M^2 <= 2p` (MID)
/// * `d`: `M^2 <= p^{1+1/p}` (HIGH)
/// * `e`: `exp(-n^{2/p} p/(2e)) <= n^{-2} 2^p` for `p <= 2 log n`
/// * `f`: `E |g|^{2p-2} 1{|g| <= M}` within `[twop_lower, twop_upper]` of its closed forms
/// * `g`: `M^{-1} e^{-M^2/2}` within `[mexpm_lower, mexpm_upper]` of its closed forms
/// * `h`: `1 + log A >= c_A p` at `T = M` for `p <= 3 log n`
///
/// `p_grid = None` uses [`auto_p_grid`] for each `n`.
pub fn lemma_checks(n_grid: &[u64], p_grid: Option<&[f64]>, c: &Constants) -> Result<LemmaReport> {
    let mut report = LemmaReport::default();
    for &n in n_grid {
        let grid = match p_grid {
            Some(g) => g.to_vec(),
            None => auto_p_grid(n)?,
        };
        for &p in &grid {
            check_point(n, p, c, &mut report.checks)?;
        }
    }
    Ok(report)
}

fn check_point(n: u64, p: f64, c: &Constants, out: &mut Vec<LemmaCheck>) -> Result<()> {
    let rp = classify(n, p, c)?;
    let (xi, ln_n) = (rp.xi, rp.ln_n());
    let ln_m = ln_truncation_level(n, p, xi);
    let ln_m2 = 2.0 * ln_m;
    let mut push = |check: &str, ln_value: f64, ln_lower: f64, ln_upper: f64| {
        let passed = ln_value >= ln_lower - EQ_TOL && ln_value <= ln_upper + EQ_TOL;
        out.push(LemmaCheck {
            n,
            p,
            regime: rp.regime,
            check: check.to_string(),
            ln_value,
            ln_lower,
            ln_upper,
            passed,
        });
    };

    push("a", ln_m, xi.ln(), f64::INFINITY);
    match rp.regime {
        Regime::Low if p > 1.0 => push("b", ln_m2, (2.0 * p - 2.0).ln(), f64::INFINITY),
        Regime::Low => {}
        Regime::Mid => push("c", ln_m2, p.ln(), (2.0 * p).ln()),
        Regime::High => push("d", ln_m2, f64::NEG_INFINITY, (1.0 + 1.0 / p) * p.ln()),
    }
    if p <= 2.0 * ln_n {
        let lhs = -(2.0 * ln_n / p).exp() * p / (2.0 * E);
        push("e", lhs, f64::NEG_INFINITY, -2.0 * ln_n + p * LN_2);
    }
    if p.is_infinite() {
        return Ok(());
    }

    let m = ln_m.exp();
    let moment = trunc_moment_chi(&TruncationSpec::new(2.0 * p - 2.0, m)?).ln();
    let (lo, hi) = (c.twop_lower.ln(), c.twop_upper.ln());
    match rp.regime {
        Regime::Low => {
            let closed = (p - 1.0) * (2.0 * p / E).ln();
            push("f", moment - closed, lo, hi);
        }
        Regime::Mid => {
            let sq = ln_n.sqrt();
            let closed = -0.5 * ln_n.ln() + 2.0 * ln_n + p * (p.ln() - 1.0)
                - (sq + p - rp.p1).ln()
                - (p / (2.0 * E)) * (2.0 * ln_n / p).exp();
            push("f", moment - closed, lo, hi);
        }
        Regime::High => {
            let d = (xi + p - xi * xi).ln();
            let lower = 2.0 * p * xi.ln() - ln_n - d;
            let upper = p.ln() + (2.0 * p - 2.0) * xi.ln() - ln_n - d;
            push("f", moment, lower + lo, upper + hi);
        }
    }

    let mexpm = -ln_m - 0.5 * m * m;
    let closed = match rp.regime {
        Regime::Low | Regime::Mid => -ln_n / p - 0.5 * p.ln() - (p / (2.0 * E)) * (2.0 * ln_n / p).exp(),
        Regime::High => -ln_n + (1.0 - (xi * xi - xi) / p).ln(),
    };
    push("g", mexpm - closed, c.mexpm_lower.ln(), c.mexpm_upper.ln());

    if p <= 3.0 * ln_n {
        let a = a_quantity(n, p, m)?;
        push("h", (1.0 + a.ln()).ln(), (c.c_a * p).ln(), f64::INFINITY);
    }
    Ok(())
}
