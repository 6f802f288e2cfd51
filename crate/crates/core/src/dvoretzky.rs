//! Random subspaces of `R^n` and net-certified distortion of `||.||_p`
//! against `||.||_2` on them.
//!
//! For an orthonormal basis `U` the ratio on the subspace sphere is
//! `r(x) = ||U x||_p`, `|x| = 1`. If every sphere point is within `rho` of the
//! net, then with `S, I` the net max and min,
//! `sup r <= S / (1 - rho)` and `inf r >= I - rho S / (1 - rho)`.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gauss::lp_norm;
use crate::rng::RngStream;
use crate::stats::ProportionEstimate;

/// Largest `k` with an enumerable net.
pub const MAX_CERTIFIED_K: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub n: usize,
    pub k: usize,
    /// `k` orthonormal vectors of length `n`.
    pub columns: Vec<Vec<f64>>,
}

impl SubspaceBasis {
    /// `U x` for coefficients `x` of length `k`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (c, &w) in self.columns.iter().zip(x) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.k {
            for j in 0..=i {
                let d: f64 = self.columns[i].iter().zip(&self.columns[j]).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((d - target).abs());
            }
        }
        worst
    }

    /// The same subspace in another orthonormal basis, `V = U Q` for an
    /// orthogonal `k x k` matrix `Q` given by rows.
    pub fn rotated(&self, q: &[Vec<f64>]) -> SubspaceBasis {
        let columns = (0..self.k)
            .map(|j| {
                let coeffs: Vec<f64> = (0..self.k).map(|i| q[i][j]).collect();
                let mut out = vec![0.0; self.n];
                self.apply(&coeffs, &mut out);
                out
            })
            .collect();
        SubspaceBasis { n: self.n, k: self.k, columns }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian columns orthonormalised by modified Gram-Schmidt, run twice.
/// A column that collapses is redrawn from the same stream.
pub fn random_subspace(n: usize, k: usize, rng: &mut RngStream) -> Result<SubspaceBasis> {
    if k < 1 || k > n {
        return Err(domain("random_subspace", format!("need 1 <= k <= n, got n = {n}, k = {k}")));
    }
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(k);
    while columns.len() < k {
        let mut v = vec![0.0; n];
        rng.fill_gaussian(&mut v);
        let norm0 = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for c in &columns {
                let d = dot(&v, c);
                v.iter_mut().zip(c).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= 1e-10 * norm0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        columns.push(v);
    }
    Ok(SubspaceBasis { n, k, columns })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionResult {
    /// Largest ratio over the evaluated points.
    pub sup_ratio: f64,
    /// Smallest ratio over the evaluated points.
    pub inf_ratio: f64,
    /// `sup_ratio / inf_ratio`, a lower bound on the true distortion.
    pub distortion: f64,
    pub net_resolution: f64,
    /// `rho / (1 - rho) * sup / inf`.
    pub certified_rel_error: f64,
    /// Upper bound on the true distortion; infinite if the net is too coarse.
    pub certified_upper: f64,
    pub certified: bool,
    pub net_points: usize,
}

impl DistortionResult {
    fn from_extremes(sup: f64, inf: f64, rho: f64, certified: bool, net_points: usize) -> Self {
        let sup_true = sup / (1.0 - rho);
        let inf_true = inf - rho * sup_true;
        let certified_upper = if certified && inf_true > 0.0 { sup_true / inf_true } else { f64::INFINITY };
        DistortionResult {
            sup_ratio: sup,
            inf_ratio: inf,
            distortion: sup / inf,
            net_resolution: rho,
            certified_rel_error: if certified { rho / (1.0 - rho) * sup / inf } else { f64::NAN },
            certified_upper,
            certified,
            net_points,
        }
    }
}

/// Net of the unit sphere in `R^k` modulo `x ~ -x`, with covering radius `<= rho`.
///
/// `k = 2`: `N = ceil(pi / (2 rho))` equally spaced angles on `[0, pi)`.
/// `k = 3, 4`: cell centres of an `m^{k-1}` grid on the `k` faces `x_j = 1` of
/// the cube, projected radially; a face point is within `(h/2) sqrt(k-1)` of a
/// centre (`h = 2/m`), and radial projection from outside the ball is
/// 1-Lipschitz.
pub fn sphere_net(k: usize, rho: f64) -> Result<Vec<Vec<f64>>> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(domain("sphere_net", format!("resolution {rho} outside (0, 1)")));
    }
    match k {
        1 => Ok(vec![vec![1.0]]),
        2 => {
            let count = (std::f64::consts::PI / (2.0 * rho)).ceil() as usize;
            Ok((0..count)
                .map(|j| {
                    let t = std::f64::consts::PI * j as f64 / count as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect())
        }
        3 | 4 => {
            let m = (((k - 1) as f64).sqrt() / rho).ceil() as usize;
            let h = 2.0 / m as f64;
            let cells = m.pow((k - 1) as u32);
            let mut net = Vec::with_capacity(k * cells);
            for face in 0..k {
                for cell in 0..cells {
                    let mut x = vec![0.0; k];
                    let mut rest = cell;
                    for (j, xj) in x.iter_mut().enumerate() {
                        if j == face {
                            *xj = 1.0;
                        } else {
                            *xj = -1.0 + h * ((rest % m) as f64 + 0.5);
                            rest /= m;
                        }
                    }
                    let norm = dot(&x, &x).sqrt();
                    x.iter_mut().for_each(|v| *v /= norm);
                    net.push(x);
                }
            }
            Ok(net)
        }
        _ => Err(Error::Uncertified { k }),
    }
}

fn extremes(basis: &SubspaceBasis, p: f64, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let mut y = vec![0.0; basis.n];
    let (mut sup, mut inf) = (0.0f64, f64::INFINITY);
    for x in points {
        basis.apply(x, &mut y);
        let r = lp_norm(&y, p)?;
        sup = sup.max(r);
        inf = inf.min(r);
    }
    Ok((sup, inf))
}

/// Certified distortion over a net of resolution `net_resolution`; `k <= 4`.
pub fn distortion(basis: &SubspaceBasis, p: f64, net_resolution: f64) -> Result<DistortionResult> {
    if basis.k > MAX_CERTIFIED_K {
        return Err(Error::Uncertified { k: basis.k });
    }
    let net = sphere_net(basis.k, net_resolution)?;
    let (sup, inf) = extremes(basis, p, &net)?;
    Ok(DistortionResult::from_extremes(sup, inf, net_resolution, true, net.len()))
}

/// Distortion over `directions` uniform random unit vectors; any `k`, never certified.
pub fn distortion_sampled(
    basis: &SubspaceBasis,
    p: f64,
    directions: usize,
    rng: &mut RngStream,
) -> Result<DistortionResult> {
    let points: Vec<Vec<f64>> = (0..directions.max(1))
        .map(|_| {
            let mut x = vec![0.0; basis.k];
            rng.fill_gaussian(&mut x);
            let norm = dot(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            x
        })
        .collect();
    let (sup, inf) = extremes(basis, p, &points)?;
    Ok(DistortionResult::from_extremes(sup, inf, f64::NAN, false, points.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialOutcome {
    /// Certified distortion `<= 1 + epsilon`.
    Success,
    /// Net distortion alone exceeds `1 + epsilon`.
    Failure,
    /// Neither, at the finest resolution tried.
    Ambiguous,
}

/// How each trial's distortion is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetMode {
    /// Certified nets of resolution `rho`, refined `16 rho -> 4 rho -> rho`; `k <= 4`.
    Certified { resolution: f64 },
    /// Random directions; failures are still rigorous, nothing is certified spherical.
    Sampled { directions: usize },
}

/// Classifies one subspace. In certified mode the net is refined until decided.
pub fn classify_trial(
    basis: &SubspaceBasis,
    p: f64,
    epsilon: f64,
    mode: NetMode,
    rng: &mut RngStream,
) -> Result<(TrialOutcome, DistortionResult)> {
    let rho = match mode {
        NetMode::Certified { resolution } => resolution,
        NetMode::Sampled { directions } => {
            let d = distortion_sampled(basis, p, directions, rng)?;
            let outcome = if d.distortion > 1.0 + epsilon { TrialOutcome::Failure } else { TrialOutcome::Ambiguous };
            return Ok((outcome, d));
        }
    };
    let mut last = None;
    for scale in [16.0, 4.0, 1.0] {
        let r = rho * scale;
        if r >= 0.5 && scale > 1.0 {
            continue;
        }
        let d = distortion(basis, p, r)?;
        if d.certified_upper <= 1.0 + epsilon {
            return Ok((TrialOutcome::Success, d));
        }
        if d.distortion > 1.0 + epsilon {
            return Ok((TrialOutcome::Failure, d));
        }
        last = Some(d);
    }
    Ok((TrialOutcome::Ambiguous, last.expect("finest resolution always runs")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericityResult {
    pub success: ProportionEstimate,
    pub failure: ProportionEstimate,
    pub ambiguous: u64,
    pub trials: u64,
}

/// Trial `t` draws its subspace from `RngStream::new(seed, t)`.
pub fn sphericity_experiment(
    n: usize,
    k: usize,
    p: f64,
    epsilon: f64,
    trials: u64,
    mode: NetMode,
    seed: u64,
) -> Result<SphericityResult> {
    if trials < 1 {
        return Err(domain("sphericity_experiment", "trials must be >= 1"));
    }
    if !(epsilon > 0.0) {
        return Err(domain("sphericity_experiment", format!("epsilon = {epsilon} must be > 0")));
    }
    if let NetMode::Certified { .. } = mode {
        if k > MAX_CERTIFIED_K {
            return Err(Error::Uncertified { k });
        }
    }
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::new(seed, t);
            let basis = random_subspace(n, k, &mut rng)?;
            Ok(classify_trial(&basis, p, epsilon, mode, &mut rng)?.0)
        })
        .collect::<Result<_>>()?;
    let count = |o: TrialOutcome| outcomes.iter().filter(|&&x| x == o).count() as u64;
    Ok(SphericityResult {
        success: ProportionEstimate::new(count(TrialOutcome::Success), trials),
        failure: ProportionEstimate::new(count(TrialOutcome::Failure), trials),
        ambiguous: count(TrialOutcome::Ambiguous),
        trials,
    })
}

/// `epsilon` on each side of `p = 2 log n`: fixed below, `w / log n` above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRule {
    pub sub_epsilon: f64,
    pub super_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Sub,
    Super,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub side: Side,
    pub p: f64,
    pub epsilon: f64,
    pub trials: u64,
    pub successes: u64,
    pub failures: u64,
    pub ambiguous: u64,
    pub success_prob: f64,
    pub success_lo: f64,
    pub success_hi: f64,
    pub failure_prob: f64,
    pub failure_lo: f64,
    pub failure_hi: f64,
    /// `delta = 0` sits inside the transition window; no direction is asserted.
    pub in_window: bool,
}

/// One experiment per `(delta, side)` at `p = (2 -/+ delta) log n`; all rows
/// share `seed`, so every row sees the same subspaces.
pub fn transition_sweep(
    n: usize,
    k: usize,
    delta_grid: &[f64],
    rule: EpsilonRule,
    trials: u64,
    mode: NetMode,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let ln_n = (n as f64).ln();
    let mut rows = Vec::new();
    for &delta in delta_grid {
        if !(0.0..2.0).contains(&delta) {
            return Err(domain("transition_sweep", format!("delta = {delta} outside [0, 2)")));
        }
        let sides: &[Side] = if delta == 0.0 { &[Side::Sub] } else { &[Side::Sub, Side::Super] };
        for &side in sides {
            let (p, epsilon) = match side {
                Side::Sub => ((2.0 - delta) * ln_n, rule.sub_epsilon),
                Side::Super => ((2.0 + delta) * ln_n, rule.super_w / ln_n),
            };
            let r = sphericity_experiment(n, k, p.max(1.0), epsilon, trials, mode, seed)?;
            rows.push(SweepRow {
                delta,
                side,
                p: p.max(1.0),
                epsilon,
                trials,
                successes: r.success.successes,
                failures: r.failure.successes,
                ambiguous: r.ambiguous,
                success_prob: r.success.estimate,
                success_lo: r.success.wilson_lo,
                success_hi: r.success.wilson_hi,
                failure_prob: r.failure.estimate,
                failure_lo: r.failure.wilson_lo,
                failure_hi: r.failure.wilson_hi,
                in_window: delta == 0.0,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: io::Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r).map_err(|e| Error::Config(format!("csv: {e}")))?;
    }
    wtr.flush().map_err(|e| Error::Config(format!("csv: {e}")))?;
    Ok(())
}

pub fn read_sweep_csv<R: io::Read>(r: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| row.map_err(|e| Error::Config(format!("csv: {e}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_critical_1pct, ks_statistic};

    fn identity(n: usize) -> SubspaceBasis {
        let columns = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v
            })
            .collect();
        SubspaceBasis { n, k: n, columns }
    }

    #[test]
    fn orthonormal_columns() {
        let mut rng = RngStream::new(1, 0);
        for (n, k) in [(5, 5), (100, 1), (1000, 4), (30, 17)] {
            let b = random_subspace(n, k, &mut rng).unwrap();
            assert!(b.orthonormality_error() <= 1e-10, "n = {n}, k = {k}");
        }
        assert!(random_subspace(3, 4, &mut rng).is_err());
    }

    #[test]
    fn first_coordinate_law_for_lines() {
        let (n, m) = (20, 3000);
        let mut rng = RngStream::new(2, 0);
        let a: Vec<f64> = (0..m).map(|_| random_subspace(n, 1, &mut rng).unwrap().columns[0][0].abs()).collect();
        let mut rng = RngStream::new(3, 0);
        let b: Vec<f64> = (0..m)
            .map(|_| {
                let mut g = vec![0.0; n];
                rng.fill_gaussian(&mut g);
                g[0].abs() / dot(&g, &g).sqrt()
            })
            .collect();
        assert!(ks_statistic(&a, &b) < ks_critical_1pct(m, m));
    }

    #[test]
    fn trivial_distortions() {
        let mut rng = RngStream::new(4, 0);
        let b = random_subspace(300, 2, &mut rng).unwrap();
        let d = distortion(&b, 2.0, 0.05).unwrap();
        assert!((d.distortion - 1.0).abs() < 1e-12);
        let line = random_subspace(300, 1, &mut rng).unwrap();
        assert_eq!(distortion(&line, 7.0, 0.05).unwrap().distortion, 1.0);
    }

    #[test]
    fn l_infinity_on_the_plane() {
        let d = distortion(&identity(2), f64::INFINITY, 0.01).unwrap();
        let s2 = 2f64.sqrt();
        assert!(d.distortion <= s2 + 1e-12 && d.certified_upper >= s2);
        assert!(s2 - d.distortion < 0.02);
        let exact = distortion(&identity(2), f64::INFINITY, std::f64::consts::PI / 16.0).unwrap();
        assert!((exact.distortion - s2).abs() < 1e-12);
    }

    #[test]
    fn nets_cover() {
        // Random sphere points are within the claimed radius of the net.
        let mut rng = RngStream::new(5, 0);
        for (k, rho) in [(2usize, 0.05), (3, 0.1), (4, 0.25)] {
            let net = sphere_net(k, rho).unwrap();
            for _ in 0..300 {
                let mut x = vec![0.0; k];
                rng.fill_gaussian(&mut x);
                let norm = dot(&x, &x).sqrt();
                x.iter_mut().for_each(|v| *v /= norm);
                let best = net
                    .iter()
                    .map(|y| {
                        let plus: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                        let minus: f64 = x.iter().zip(y).map(|(a, b)| (a + b) * (a + b)).sum();
                        plus.min(minus).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= rho, "k = {k}: {best}");
            }
        }
        assert!(matches!(sphere_net(5, 0.1), Err(Error::Uncertified { k: 5 })));
    }

    #[test]
    fn certified_bounds_bracket_dense_estimate() {
        let mut rng = RngStream::new(6, 0);
        let b = random_subspace(2000, 2, &mut rng).unwrap();
        let p = 12.0;
        let dense = distortion(&b, p, 1e-4).unwrap().distortion;
        let mut prev = f64::INFINITY;
        for rho in [0.04, 0.02, 0.01] {
            let d = distortion(&b, p, rho).unwrap();
            assert!(d.distortion <= dense + 1e-12 && dense <= d.certified_upper);
            assert!(prev / d.certified_rel_error >= 1.5);
            prev = d.certified_rel_error;
        }
    }

    #[test]
    fn distortion_depends_on_subspace_only() {
        let mut rng = RngStream::new(7, 0);
        let b = random_subspace(1000, 3, &mut rng).unwrap();
        let q = random_subspace(3, 3, &mut rng).unwrap().columns;
        let r = b.rotated(&q);
        assert!(r.orthonormality_error() < 1e-10);
        let (d1, d2) = (distortion(&b, 10.0, 0.05).unwrap(), distortion(&r, 10.0, 0.05).unwrap());
        let tol = d1.certified_upper - d1.distortion + d2.certified_upper - d2.distortion;
        assert!((d1.distortion - d2.distortion).abs() <= tol);
    }

    #[test]
    fn large_k_needs_sampling() {
        let mut rng = RngStream::new(8, 0);
        let b = random_subspace(200, 6, &mut rng).unwrap();
        assert!(matches!(distortion(&b, 3.0, 0.1), Err(Error::Uncertified { k: 6 })));
        let d = distortion_sampled(&b, 3.0, 500, &mut rng).unwrap();
        assert!(!d.certified && d.distortion >= 1.0 && d.certified_upper.is_infinite());
    }

    #[test]
    fn l2_is_always_spherical() {
        let r = sphericity_experiment(100, 2, 2.0, 1e-3, 20, NetMode::Certified { resolution: 1e-4 }, 1).unwrap();
        assert_eq!(r.success.successes, 20);
        let sampled = NetMode::Sampled { directions: 64 };
        let r = sphericity_experiment(100, 6, 2.0, 1e-3, 20, sampled, 1).unwrap();
        assert_eq!((r.success.successes, r.ambiguous), (0, 20));
        assert!(sphericity_experiment(100, 6, 2.0, 0.1, 5, NetMode::Certified { resolution: 0.1 }, 1).is_err());
        let r = sphericity_experiment(300, 5, f64::INFINITY, 0.01, 10, sampled, 2).unwrap();
        assert_eq!(r.failure.successes, 10);
    }

    #[test]
    fn sweep_csv_round_trip() {
        let rule = EpsilonRule { sub_epsilon: 0.2, super_w: 0.5 };
        let rows = transition_sweep(300, 2, &[0.0, 0.5], rule, 8, NetMode::Certified { resolution: 0.02 }, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].in_window && !rows[1].in_window);
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(read_sweep_csv(&buf[..]).unwrap(), rows);
    }
}
