//! Measurements behind the committed constants. Ignored by default; run with
//! `cargo test -p lplab-core --test calibration -- --ignored --nocapture`.

use lplab_core::mc::{mc_negative_moment, mc_norm_stats_multi, mc_small_ball, mc_truncated_stats};
use lplab_core::order_stats::{initial_exponent, intermediate_exponent, sample_top_orderstats};
use lplab_core::theory::{
    a_quantity, auto_p_grid, boundaries, lower_envelope, negative_moment_bound, predict_variance, small_ball_bound,
    tail_term, truncation_level_m, upper_envelope,
};
use lplab_core::{Constants, RngStream};

#[test]
#[ignore]
fn variance_ratios() {
    let c = Constants::default();
    for (n, samples) in [(1_000u64, 100_000u64), (10_000, 10_000)] {
        let grid = auto_p_grid(n).unwrap();
        let est = mc_norm_stats_multi(n, &grid, samples, 11, 16).unwrap();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (p, e) in grid.iter().zip(&est) {
            let (pred, rp) = predict_variance(n, *p, &c).unwrap();
            let r = e.variance / pred.value();
            let (le, ue) = (lower_envelope(n, *p, &c).unwrap().value(), upper_envelope(n, *p, &c).unwrap().value());
            lo = lo.min(r);
            hi = hi.max(r);
            println!(
                "n={n} p={p:8.3} {:?} var={:.4e} se={:.1e} pred={:.4e} ratio={r:.4} mc/lower={:.4} mc/upper={:.4}",
                rp.regime,
                e.variance,
                e.stderr_variance,
                pred.value(),
                e.variance / le,
                e.variance / ue
            );
        }
        println!("n={n} ratio range [{lo:.4}, {hi:.4}]");
    }
}

#[test]
#[ignore]
fn transition_contrast() {
    let n = 10_000u64;
    let ln_n = (n as f64).ln();
    let est = mc_norm_stats_multi(n, &[1.5 * ln_n, 2.5 * ln_n], 20_000, 5, 16).unwrap();
    println!("sub {:.4e} super {:.4e} factor {:.3}", est[0].variance, est[1].variance, est[1].variance / est[0].variance);
}

#[test]
#[ignore]
fn deviation_constants() {
    // Largest c with exponent(c) >= ln(empirical frequency) at each point.
    let mut rng = RngStream::new(21, 0);
    for n in [1_000u64, 10_000] {
        let k_top = (n / 2) as usize;
        let trials = 4_000;
        let tops: Vec<Vec<f64>> = (0..trials).map(|_| sample_top_orderstats(n, k_top, &mut rng).unwrap()).collect();
        let ln_n = (n as f64).ln();
        for i in [1u64, 2, 4, 8, 16, 32, (n as f64).sqrt() as u64, n / 10, n / 2] {
            let xi_i = lplab_core::gauss::tail_quantile(i as f64 / n as f64).unwrap();
            for u in [0.3, 0.5, 0.7, 0.8, 0.9] {
                let hits = tops.iter().filter(|v| v[i as usize - 1] <= u * xi_i).count();
                let freq = (hits as f64 + 1.0) / (trials as f64 + 1.0);
                let init = if (i as f64) <= (n as f64).sqrt() && u >= 1.0 / ln_n.sqrt() {
                    freq.ln() / initial_exponent(n, i, u, 1.0)
                } else {
                    f64::NAN
                };
                let inter = if 2 * i <= n { freq.ln() / intermediate_exponent(n, i, u, 1.0) } else { f64::NAN };
                println!("n={n} i={i} u={u} hits={hits} c_init<={init:.4} c_inter<={inter:.4}");
            }
        }
    }
}

#[test]
#[ignore]
fn truncation_tails() {
    let c = Constants::default();
    let n = 1_000u64;
    let (xi, p1, _) = boundaries(n).unwrap();
    let ln_n = (n as f64).ln();
    for p in [p1, 2.0 * ln_n] {
        let m = truncation_level_m(n, p, &c).unwrap().value();
        for t in [xi, m] {
            let (_, gap2) = mc_truncated_stats(n, p, t, 100_000, 3, 16).unwrap();
            let tail = tail_term(n, p, t).unwrap().value();
            println!("p={p:.3} T={t:.4} gap2={:.4e} se={:.1e} tail={tail:.4e} ratio={:.4}", gap2.mean, gap2.stderr_mean, gap2.mean / tail);
        }
    }
}

#[test]
#[ignore]
fn negative_moments() {
    let c = Constants::default();
    let n = 1_000u64;
    let (xi, _, _) = boundaries(n).unwrap();
    let ln_n = (n as f64).ln();
    for q in [1.0, ln_n, 2.0 * ln_n] {
        for l in [0.5, 1.0, 2.0] {
            let b = negative_moment_bound(n, q, l, &c).unwrap();
            let e = mc_negative_moment(n, q, l, xi, 20_000, 4, 16, &c).unwrap();
            let e_inf = mc_negative_moment(n, q, l, f64::INFINITY, 20_000, 4, 16, &c).unwrap();
            println!(
                "q={q:.3} L={l} mc(T=xi)={:.4e} mc(T=inf)={:.4e} direct={:.4e} ratio={:.4}",
                e.mean,
                e_inf.mean,
                b.direct.value(),
                e.mean / b.direct.value()
            );
        }
    }
}

#[test]
#[ignore]
fn small_balls() {
    let c = Constants::default();
    let n = 1_000u64;
    let (xi, _, _) = boundaries(n).unwrap();
    for q in [1.0, 2.0, 6.9] {
        for tau in [0.1, 0.25, 0.4, 0.45] {
            let f = mc_small_ball(n, q, tau, xi, 20_000, 9, 16).unwrap();
            let b = small_ball_bound(n, q, tau, &c).unwrap();
            println!("q={q} tau={tau} freq={:.4e} hi={:.4e} bound={:.4e}", f.estimate, f.wilson_hi, b.value());
        }
    }
}

#[test]
#[ignore]
fn log_a_slopes() {
    let c = Constants::default();
    for n in [1_000u64, 10_000, 1_000_000] {
        let ln_n = (n as f64).ln();
        let mut worst = f64::INFINITY;
        for p in auto_p_grid(n).unwrap().into_iter().filter(|p| *p <= 3.0 * ln_n) {
            let m = truncation_level_m(n, p, &c).unwrap().value();
            let a = a_quantity(n, p, m).unwrap();
            worst = worst.min((1.0 + a.ln()) / p);
        }
        println!("n={n} min (1 + log A)/p = {worst:.4}");
    }
}

#[test]
#[ignore]
fn dvoretzky_direction() {
    use lplab_core::dvoretzky::{sphericity_experiment, NetMode};
    let mode = NetMode::Certified { resolution: 0.005 };
    let n = 10_000usize;
    let ln_n = (n as f64).ln();
    let t = std::time::Instant::now();
    let s = sphericity_experiment(n, 2, 1.5 * ln_n, 0.1, 400, mode, 13).unwrap();
    println!("sub: {s:?} {:?}", t.elapsed());
    let t = std::time::Instant::now();
    let f = sphericity_experiment(n, 2, 2.5 * ln_n, 0.5 / ln_n, 400, mode, 13).unwrap();
    println!("super: {f:?} {:?}", t.elapsed());
}
