//! Seeded Monte Carlo estimators over standard Gaussian vectors.
//!
//! A run of `samples` draws is split over `streams` counter-based streams;
//! stream `s` owns `RngStream::new(seed, s)` and the first `samples % streams`
//! streams take one extra draw. Streams run in parallel and their
//! accumulators are merged by [`merge_tree`] in stream order, so the output
//! bits depend only on `(seed, streams, samples)`.

use rayon::prelude::*;

use crate::constants::Constants;
use crate::error::{domain, Error, Result};
use crate::gauss::lp_norm;
use crate::logvalue::log_sum_exp;
use crate::rng::RngStream;
use crate::stats::{merge_tree, MCEstimate, MomentAccumulator, ProportionEstimate};
use crate::theory::{boundaries, ln_quantile_power_sum};

/// Terms of a max-factored power sum below `e^-40` of the largest are dropped.
const NEGLIGIBLE_NATS: f64 = 40.0;

/// Draws assigned to stream `s`.
pub fn stream_samples(samples: u64, streams: u64, s: u64) -> u64 {
    samples / streams + u64::from(s < samples % streams)
}

fn check_layout(op: &'static str, samples: u64, streams: u64) -> Result<()> {
    if samples < 2 {
        return Err(domain(op, format!("samples = {samples} must be >= 2")));
    }
    if streams < 1 {
        return Err(domain(op, "streams must be >= 1"));
    }
    Ok(())
}

/// Runs `f(rng, count)` for every stream in parallel; results are in stream order.
pub fn run_streams<R, F>(samples: u64, seed: u64, streams: u64, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&mut RngStream, u64) -> Result<R> + Sync,
{
    (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::new(seed, s);
            f(&mut rng, stream_samples(samples, streams, s))
        })
        .collect()
}

/// Bytes of per-stream scratch a run over dimension `n` needs.
pub fn working_set_bytes(n: u64, streams: u64, vectors_per_sample: u64) -> u64 {
    n.saturating_mul(vectors_per_sample).saturating_mul(streams).saturating_mul(8)
}

pub fn check_memory(n: u64, streams: u64, vectors_per_sample: u64, c: &Constants) -> Result<()> {
    let requested = working_set_bytes(n, streams, vectors_per_sample);
    let limit = c.mem_guard_bytes as u64;
    if requested > limit {
        return Err(Error::Budget { requested, limit });
    }
    Ok(())
}

/// `(m, ln sum_i (x_i / m)^p)` with `m = max |x_i|`; `x` holds absolute values.
fn scaled_power_sum(x: &[f64], p: f64, m: f64) -> f64 {
    let ln_m = m.ln();
    let mut s = 0.0;
    for &v in x {
        let t = p * (v.ln() - ln_m);
        if t > -NEGLIGIBLE_NATS {
            s += t.exp();
        }
    }
    s.ln()
}

fn abs_max(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Mean and variance of `||G||_p` for `G ~ N(0, I_n)`.
pub fn mc_norm_stats(n: u64, p: f64, samples: u64, seed: u64, streams: u64) -> Result<MCEstimate> {
    check_layout("mc_norm_stats", samples, streams)?;
    if n < 1 || p.is_nan() || p < 1.0 {
        return Err(domain("mc_norm_stats", format!("need n >= 1 and p >= 1, got n = {n}, p = {p}")));
    }
    let parts = run_streams(samples, seed, streams, |rng, count| {
        let mut x = vec![0.0; n as usize];
        let mut acc = MomentAccumulator::new();
        for _ in 0..count {
            rng.fill_gaussian(&mut x);
            acc.push(lp_norm(&x, p)?);
        }
        Ok(acc)
    })?;
    Ok(MCEstimate::from_accumulator(&merge_tree(&parts), seed, streams))
}

/// [`mc_norm_stats`] for several exponents on shared samples.
pub fn mc_norm_stats_multi(n: u64, ps: &[f64], samples: u64, seed: u64, streams: u64) -> Result<Vec<MCEstimate>> {
    check_layout("mc_norm_stats_multi", samples, streams)?;
    if n < 1 {
        return Err(domain("mc_norm_stats_multi", "n must be >= 1"));
    }
    if let Some(p) = ps.iter().find(|p| p.is_nan() || **p < 1.0) {
        return Err(domain("mc_norm_stats_multi", format!("p = {p} must be >= 1")));
    }
    let parts = run_streams(samples, seed, streams, |rng, count| {
        let mut x = vec![0.0; n as usize];
        let mut r = vec![0.0; n as usize];
        let mut accs = vec![MomentAccumulator::new(); ps.len()];
        for _ in 0..count {
            rng.fill_gaussian(&mut x);
            let m = abs_max(&x);
            let ln_m = m.ln();
            for (ri, xi) in r.iter_mut().zip(&x) {
                *ri = xi.abs().ln() - ln_m;
            }
            for (acc, &p) in accs.iter_mut().zip(ps) {
                if p.is_infinite() {
                    acc.push(m);
                    continue;
                }
                let mut s = 0.0;
                for &ri in &r {
                    let t = p * ri;
                    if t > -NEGLIGIBLE_NATS {
                        s += t.exp();
                    }
                }
                acc.push(m * (s.ln() / p).exp());
            }
        }
        Ok(accs)
    })?;
    Ok((0..ps.len())
        .map(|j| {
            let column: Vec<MomentAccumulator> = parts.iter().map(|a| a[j]).collect();
            MCEstimate::from_accumulator(&merge_tree(&column), seed, streams)
        })
        .collect())
}

/// `(||G||_p, f_T(G))` with `f_T = (sum_i min(T, |g_i|)^p)^{1/p}`, and the gap
/// `||G||_p - f_T` computed without cancellation.
pub fn truncated_norm(x: &[f64], p: f64, t: f64) -> (f64, f64, f64) {
    let m = abs_max(x);
    if m == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if p.is_infinite() {
        let f = m.min(t);
        return (m, f, (m - t).max(0.0));
    }
    let ln_m = m.ln();
    let ln_t = t.ln();
    let (mut s_t, mut excess) = (0.0, 0.0);
    for &v in x {
        let a = v.abs();
        if a > t {
            let full = (p * (a.ln() - ln_m)).exp();
            let cap = (p * (ln_t - ln_m)).exp();
            s_t += cap;
            excess += full - cap;
        } else {
            let e = p * (a.ln() - ln_m);
            if e > -NEGLIGIBLE_NATS {
                s_t += e.exp();
            }
        }
    }
    let f = m * (s_t.ln() / p).exp();
    let gap = f * ((excess / s_t).ln_1p() / p).exp_m1();
    (f + gap, f, gap)
}

/// Estimates for `f_T(G)` and `(||G||_p - f_T(G))^2` on shared samples.
pub fn mc_truncated_stats(
    n: u64,
    p: f64,
    t: f64,
    samples: u64,
    seed: u64,
    streams: u64,
) -> Result<(MCEstimate, MCEstimate)> {
    check_layout("mc_truncated_stats", samples, streams)?;
    if !(t > 0.0) || p.is_nan() || p < 1.0 || n < 1 {
        return Err(domain("mc_truncated_stats", format!("need n >= 1, p >= 1, T > 0; got n = {n}, p = {p}, T = {t}")));
    }
    let parts = run_streams(samples, seed, streams, |rng, count| {
        let mut x = vec![0.0; n as usize];
        let (mut f_acc, mut gap_acc) = (MomentAccumulator::new(), MomentAccumulator::new());
        for _ in 0..count {
            rng.fill_gaussian(&mut x);
            let (_, f, gap) = truncated_norm(&x, p, t);
            f_acc.push(f);
            gap_acc.push(gap * gap);
        }
        Ok((f_acc, gap_acc))
    })?;
    let f: Vec<_> = parts.iter().map(|a| a.0).collect();
    let g: Vec<_> = parts.iter().map(|a| a.1).collect();
    Ok((
        MCEstimate::from_accumulator(&merge_tree(&f), seed, streams),
        MCEstimate::from_accumulator(&merge_tree(&g), seed, streams),
    ))
}

/// `ln sum_i min(|x_i|, T)^q`.
fn ln_capped_power_sum(x: &mut [f64], q: f64, t: f64) -> f64 {
    for v in x.iter_mut() {
        *v = v.abs().min(t);
    }
    let m = x.iter().fold(0.0f64, |a, &b| a.max(b));
    q * m.ln() + scaled_power_sum(x, q, m)
}

/// `E (sum_i min(|g_i|, T)^q)^{-L}` for `T >= xi` or `T = inf`, `q L <= K log n`.
#[allow(clippy::too_many_arguments)]
pub fn mc_negative_moment(
    n: u64,
    q: f64,
    l: f64,
    t: f64,
    samples: u64,
    seed: u64,
    streams: u64,
    c: &Constants,
) -> Result<MCEstimate> {
    check_layout("mc_negative_moment", samples, streams)?;
    if q.is_nan() || q < 1.0 || l.is_nan() || l < 0.0 {
        return Err(domain("mc_negative_moment", format!("need q >= 1, L >= 0; got q = {q}, L = {l}")));
    }
    let ln_n = (n as f64).ln();
    if q * l > c.negative_k * ln_n {
        return Err(domain("mc_negative_moment", format!("q L = {} exceeds K log n = {}", q * l, c.negative_k * ln_n)));
    }
    let (xi, _, _) = boundaries(n)?;
    if t < xi {
        return Err(domain("mc_negative_moment", format!("T = {t} below xi = {xi}")));
    }
    let parts = run_streams(samples, seed, streams, |rng, count| {
        let mut x = vec![0.0; n as usize];
        let mut acc = MomentAccumulator::new();
        for _ in 0..count {
            rng.fill_gaussian(&mut x);
            acc.push((-l * ln_capped_power_sum(&mut x, q, t)).exp());
        }
        Ok(acc)
    })?;
    Ok(MCEstimate::from_accumulator(&merge_tree(&parts), seed, streams))
}

/// `(n / 2p^2) E[(|g_1|^p - |g_1'|^p)^2 (||G||_p^p + ||G'||_p^p)^{2/p-2}]`
/// over independent pairs `(G, G')`; finite `p` only.
pub fn mc_lower_identity(n: u64, p: f64, samples: u64, seed: u64, streams: u64) -> Result<MCEstimate> {
    check_layout("mc_lower_identity", samples, streams)?;
    if n < 1 || p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(domain("mc_lower_identity", format!("need n >= 1 and finite p >= 1, got n = {n}, p = {p}")));
    }
    let prefactor = (n as f64 / (2.0 * p * p)).ln();
    let parts = run_streams(samples, seed, streams, |rng, count| {
        let mut x = vec![0.0; 2 * n as usize];
        let mut acc = MomentAccumulator::new();
        for _ in 0..count {
            rng.fill_gaussian(&mut x);
            for v in x.iter_mut() {
                *v = p * v.abs().ln();
            }
            let (a, b) = (x[0], x[n as usize]);
            let diff = -(-(a - b).abs()).exp_m1();
            let ln_v = prefactor + 2.0 * a.max(b) + 2.0 * diff.ln() + (2.0 / p - 2.0) * log_sum_exp(&x);
            acc.push(ln_v.exp());
        }
        Ok(acc)
    })?;
    Ok(MCEstimate::from_accumulator(&merge_tree(&parts), seed, streams))
}

/// Frequency of `sum_i min(|g_i|, T)^q <= tau sum_i xi_{1-i/n}^q`.
pub fn mc_small_ball(
    n: u64,
    q: f64,
    tau: f64,
    t: f64,
    samples: u64,
    seed: u64,
    streams: u64,
) -> Result<ProportionEstimate> {
    check_layout("mc_small_ball", samples, streams)?;
    if !(tau > 0.0 && tau < 0.5) || q.is_nan() || q < 1.0 || !(t > 0.0) {
        return Err(domain("mc_small_ball", format!("need tau in (0, 1/2), q >= 1, T > 0; got {tau}, {q}, {t}")));
    }
    let threshold = tau.ln() + ln_quantile_power_sum(n, q)?;
    let hits = run_streams(samples, seed, streams, |rng, count| {
        let mut x = vec![0.0; n as usize];
        let mut hits = 0u64;
        for _ in 0..count {
            rng.fill_gaussian(&mut x);
            hits += u64::from(ln_capped_power_sum(&mut x, q, t) <= threshold);
        }
        Ok(hits)
    })?;
    Ok(ProportionEstimate::new(hits.iter().sum(), samples))
}
