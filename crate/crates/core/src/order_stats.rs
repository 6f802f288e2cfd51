//! Order statistics `g_1* >= g_2* >= ...` of `|G|`: exact law, Chernoff and
//! lower-deviation bounds, and a top-k sampler.

use crate::constants::Constants;
use crate::error::{domain, Result};
use crate::gauss::tail_quantile;
use crate::logvalue::log_sum_exp;
use crate::rng::RngStream;
use crate::LogValue;

fn check_i_beta(op: &'static str, n: u64, i: u64, beta: f64) -> Result<()> {
    if n == 0 || i < 1 || i > n {
        return Err(domain(op, format!("need 1 <= i <= n, got n = {n}, i = {i}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(domain(op, format!("beta = {beta} outside (0, 1)")));
    }
    Ok(())
}

/// `ln P{g_i* <= xi_{1-beta}} = ln sum_{j<i} C(n,j) beta^j (1-beta)^{n-j}`.
pub fn ln_orderstat_cdf_exact(n: u64, i: u64, beta: f64) -> Result<f64> {
    check_i_beta("orderstat_cdf_exact", n, i, beta)?;
    let (lb, lq) = (beta.ln(), (-beta).ln_1p());
    let nf = n as f64;
    let mut ln_binom = 0.0;
    let mut terms = Vec::with_capacity(i as usize);
    for j in 0..i {
        let jf = j as f64;
        terms.push(ln_binom + jf * lb + (nf - jf) * lq);
        ln_binom += ((nf - jf) / (jf + 1.0)).ln();
    }
    Ok(log_sum_exp(&terms).min(0.0))
}

pub fn orderstat_cdf_exact(n: u64, i: u64, beta: f64) -> Result<f64> {
    Ok(ln_orderstat_cdf_exact(n, i, beta)?.exp())
}

/// `P{g_i* <= t}` for a threshold `t` rather than a tail mass.
pub fn ln_orderstat_cdf_at(n: u64, i: u64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let beta = crate::gauss::abs_tail(t);
    if beta >= 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if beta <= 0.0 {
        return Ok(0.0);
    }
    ln_orderstat_cdf_exact(n, i, beta)
}

/// `exp(-(beta n - i + 1)^2 / (2 beta n))` for `1 <= i <= beta n`.
pub fn chernoff_bound(n: u64, i: u64, beta: f64) -> Result<f64> {
    check_i_beta("chernoff_bound", n, i, beta)?;
    let bn = beta * n as f64;
    if i as f64 > bn * (1.0 + 1e-12) {
        return Err(domain("chernoff_bound", format!("i = {i} > beta n = {bn}")));
    }
    let d = bn - i as f64 + 1.0;
    Ok((-d * d / (2.0 * bn)).exp())
}

/// `exp(-(c i / u) (n / (i sqrt(log n)))^{1-u^2})` for `i <= sqrt n` and
/// `1/sqrt(log n) <= u <= 1 - C/log n`.
pub fn deviation_bound_initial(n: u64, i: u64, u: f64, c: &Constants) -> Result<LogValue> {
    let nf = n as f64;
    let ln_n = nf.ln();
    if i < 1 || (i as f64) > nf.sqrt() {
        return Err(domain("deviation_bound_initial", format!("need 1 <= i <= sqrt n, got n = {n}, i = {i}")));
    }
    let (u_lo, u_hi) = (1.0 / ln_n.sqrt(), 1.0 - c.big_c_initial / ln_n);
    if !(u >= u_lo && u <= u_hi) {
        return Err(domain(
            "deviation_bound_initial",
            format!("u = {u} outside [{u_lo}, {u_hi}]"),
        ));
    }
    Ok(LogValue::from_ln(initial_exponent(n, i, u, c.c_initial)))
}

/// The exponent of [`deviation_bound_initial`] without the range checks.
pub fn initial_exponent(n: u64, i: u64, u: f64, c: f64) -> f64 {
    let nf = n as f64;
    let base = nf / (i as f64 * nf.ln().sqrt());
    -(c * i as f64 / u) * base.powf(1.0 - u * u)
}

/// `exp(-c (1-u)^2 i log(n/i))` for `i <= n/2`, `0 < u < 1`.
pub fn deviation_bound_intermediate(n: u64, i: u64, u: f64, c: &Constants) -> Result<LogValue> {
    if i < 1 || 2 * i > n {
        return Err(domain("deviation_bound_intermediate", format!("need 1 <= i <= n/2, got n = {n}, i = {i}")));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(domain("deviation_bound_intermediate", format!("u = {u} outside (0, 1)")));
    }
    Ok(LogValue::from_ln(intermediate_exponent(n, i, u, c.c_intermediate)))
}

pub fn intermediate_exponent(n: u64, i: u64, u: f64, c: f64) -> f64 {
    let d = 1.0 - u;
    -c * d * d * i as f64 * (n as f64 / i as f64).ln()
}

/// `min(1, (4u)^{n/2})`, valid for every `i <= n/2`.
pub fn deviation_bound_crude(n: u64, u: f64) -> Result<LogValue> {
    if u.is_nan() || u < 0.0 {
        return Err(domain("deviation_bound_crude", format!("u = {u} must be >= 0")));
    }
    if u == 0.0 {
        return Ok(LogValue::ZERO);
    }
    Ok(LogValue::from_ln((0.5 * n as f64 * (4.0 * u).ln()).min(0.0)))
}

/// The `k_top` largest of `|g_1|, ..., |g_n|`, in decreasing order.
///
/// The tail masses of the top order statistics are the smallest uniform
/// order statistics, generated from exponential spacings:
/// `U_(j) = 1 - exp(-sum_{m<=j} E_m / (n - m + 1))`.
pub fn sample_top_orderstats(n: u64, k_top: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if k_top < 1 || k_top as u64 > n {
        return Err(domain("sample_top_orderstats", format!("need 1 <= k_top <= n, got {k_top}, n = {n}")));
    }
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(k_top);
    for m in 0..k_top as u64 {
        acc += rng.next_exp() / (n - m) as f64;
        let beta = -(-acc).exp_m1();
        out.push(tail_quantile(beta.clamp(f64::MIN_POSITIVE, 1.0))?);
    }
    Ok(out)
}

/// Reference sampler: all `n` values drawn and sorted.
pub fn sample_top_orderstats_naive(n: u64, k_top: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.next_gaussian().abs()).collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v.truncate(k_top);
    v
}
