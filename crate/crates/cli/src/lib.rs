//! `lplab` command-line front end.

pub mod output;

use std::ffi::OsString;
use std::fs;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use lplab_core::dvoretzky::{transition_sweep, EpsilonRule, NetMode, Side, MAX_CERTIFIED_K};
use lplab_core::gauss::{quantile, quantile_approx, tail_quantile};
use lplab_core::mc::{check_memory, mc_negative_moment, mc_norm_stats_multi, mc_truncated_stats};
use lplab_core::order_stats::{
    chernoff_bound, deviation_bound_crude, deviation_bound_initial, deviation_bound_intermediate,
    ln_orderstat_cdf_at, ln_orderstat_cdf_exact,
};
use lplab_core::theory::{
    auto_p_grid, boundaries, lemma_checks, lower_envelope, negative_moment_bound, predict_variance, tail_term,
    truncation_level_m, upper_envelope,
};
use lplab_core::{Constants, LogValue};

pub use output::{Cell, OutputFormat, RunConfig, Table, SCHEMA_VERSION};

pub const ENV_CONSTANTS: &str = "LPLAB_CONSTANTS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "lplab", version, about = "Variance of Gaussian l_p norms: theory, bounds and Monte Carlo")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Master seed for all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: u64,
    /// Independent random streams (the unit of parallel work).
    #[arg(long, global = true, default_value_t = 16)]
    pub streams: u64,
    /// Constants file (key = value); overrides LPLAB_CONSTANTS.
    #[arg(long, global = true)]
    pub constants: Option<String>,
    /// Override one constant, e.g. `--set c_a=0.3`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write to a file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Quantiles of |g|.
    Quantile(QuantileArgs),
    /// Predicted variance, envelopes and truncation level over a p grid.
    Predict(PredictArgs),
    /// Monte Carlo estimates with ratios against the predictor.
    Mc(McArgs),
    /// Order-statistic laws against their bounds.
    Orderstats(OrderstatsArgs),
    /// Pointwise lemma checks; exits 1 on any failure.
    Checks(ChecksArgs),
    /// Sphericity of random subspaces around p = 2 log n.
    Dvoretzky(DvoretzkyArgs),
}

#[derive(Debug, Args)]
pub struct QuantileArgs {
    /// Levels alpha in [0, 1).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// With --i, alpha = 1 - i/n.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub i: Vec<u64>,
    /// Also report the two-term asymptotic approximation and its gap.
    #[arg(long)]
    pub approx: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    /// `auto`, a list `2,5,inf`, or a range `start:stop:step`.
    #[arg(long = "p-grid", alias = "p", default_value = "auto")]
    pub p_grid: String,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub n: u64,
    /// `auto`, a list or a range, as for `predict`.
    #[arg(long = "p", alias = "p-grid", default_value = "2")]
    pub p_grid: String,
    /// Truncation level T: report f_T and the gap instead of the norm.
    #[arg(long)]
    pub truncate: Option<f64>,
    /// Negative moment E (sum min(|g_i|, T)^q)^{-L}, given as `q L`.
    #[arg(long, num_args = 2, value_names = ["Q", "L"])]
    pub negative: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct OrderstatsArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, value_delimiter = ',', required = true)]
    pub i: Vec<u64>,
    /// Tail masses for the exact CDF and Chernoff bound.
    #[arg(long, value_delimiter = ',')]
    pub beta: Vec<f64>,
    /// Fractions u for P{g_i* <= u xi_{1-i/n}} and the deviation bounds.
    #[arg(long, value_delimiter = ',')]
    pub u: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ChecksArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1_000u64, 10_000])]
    pub n: Vec<u64>,
    #[arg(long = "p-grid", alias = "p", default_value = "auto")]
    pub p_grid: String,
}

#[derive(Debug, Args)]
pub struct DvoretzkyArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Offsets delta; each gives p = (2 -/+ delta) log n.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5])]
    pub delta: Vec<f64>,
    #[arg(long, default_value_t = 400)]
    pub trials: u64,
    /// epsilon below 2 log n.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// epsilon = w / log n above 2 log n.
    #[arg(long, default_value_t = 0.5)]
    pub w: f64,
    /// Finest certified net resolution.
    #[arg(long, default_value_t = 0.005)]
    pub net_resolution: f64,
    /// Random directions instead of a certified net (required for k > 4).
    #[arg(long)]
    pub uncertified: bool,
    #[arg(long, default_value_t = 4096)]
    pub directions: usize,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

impl From<lplab_core::Error> for Failure {
    fn from(e: lplab_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

type CmdResult = Result<(Table, Vec<String>), Failure>;

/// Runs the CLI with `LPLAB_CONSTANTS` taken from the environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var(ENV_CONSTANTS).ok(), out, err)
}

pub fn run_with_env<I, T>(args: I, env_constants: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let command = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>().join(" ");
    match execute(&cli, command, env_constants, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Check(msg)) => {
            let _ = writeln!(err, "{msg}");
            EXIT_CHECK_FAILED
        }
    }
}

/// `--constants` > `LPLAB_CONSTANTS` > built-in defaults, then `--set`.
pub fn load_constants(path: Option<&str>, env_path: Option<&str>, sets: &[String]) -> lplab_core::Result<Constants> {
    let mut c = Constants::default();
    if let Some(p) = path.or(env_path) {
        let text = fs::read_to_string(p).map_err(|e| lplab_core::Error::Config(format!("{p}: {e}")))?;
        c.apply(&text)?;
    }
    for s in sets {
        c.apply(s)?;
    }
    Ok(c)
}

fn execute(cli: &Cli, command: String, env_constants: Option<String>, out: &mut dyn Write) -> Result<(), Failure> {
    let g = &cli.global;
    let c = load_constants(g.constants.as_deref(), env_constants.as_deref(), &g.set)?;
    let config = RunConfig {
        version: lplab_core::VERSION.to_string(),
        command,
        seed: g.seed,
        samples: g.samples,
        streams: g.streams,
        constants: c.to_map(),
        output_format: g.format,
        output_path: g.output.clone(),
    };
    let result = match &cli.command {
        Command::Quantile(a) => cmd_quantile(a),
        Command::Predict(a) => cmd_predict(a, &c),
        Command::Mc(a) => cmd_mc(a, g, &c),
        Command::Orderstats(a) => cmd_orderstats(a),
        Command::Checks(a) => cmd_checks(a, &c),
        Command::Dvoretzky(a) => cmd_dvoretzky(a, g, &c),
    };
    let (table, failures) = result?;
    match &g.output {
        Some(path) => {
            let mut f = fs::File::create(path)?;
            table.write(&config, &mut f)?;
        }
        None => table.write(&config, out)?,
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failures.join("\n")))
    }
}

/// `auto` (needs `n`), `a,b,c` or `start:stop:step`; sorted ascending.
pub fn parse_p_grid(spec: &str, n: Option<u64>) -> Result<Vec<f64>, String> {
    let spec = spec.trim();
    let mut grid = if spec == "auto" {
        let n = n.ok_or("`auto` needs a single n")?;
        auto_p_grid(n).map_err(|e| e.to_string())?
    } else if let Some((start, rest)) = spec.split_once(':') {
        let (stop, step) = rest.split_once(':').ok_or("range must be start:stop:step")?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"));
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
            return Err("range needs finite ends and a positive step".into());
        }
        let count = ((stop - start) / step + 1e-9).floor().max(-1.0) as i64 + 1;
        (0..count).map(|k| start + k as f64 * step).collect()
    } else {
        spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| format!("`{s}`: {e}"))).collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.iter().any(|p| p.is_nan()) {
        return Err(format!("empty or invalid p grid `{spec}`"));
    }
    grid.sort_by(f64::total_cmp);
    Ok(grid)
}

fn grid_for(spec: &str, n: u64) -> Result<Vec<f64>, Failure> {
    parse_p_grid(spec, Some(n)).map_err(Failure::Usage)
}

fn log10_of(v: LogValue) -> Cell {
    v.log10().into()
}

/// `(value, log10)` cells; NaN when the quantity is undefined at this point.
fn maybe(v: Option<LogValue>) -> [Cell; 2] {
    match v {
        Some(v) => [v.value().into(), v.log10().into()],
        None => [f64::NAN.into(), f64::NAN.into()],
    }
}

fn cmd_quantile(a: &QuantileArgs) -> CmdResult {
    let mut t = Table::new(&["alpha", "xi", "xi_approx", "gap"]);
    if !a.alpha.is_empty() {
        if a.approx {
            return Err(Failure::Usage("--approx needs --n and --i".into()));
        }
        for &alpha in &a.alpha {
            let xi = quantile(alpha)?.value;
            t.push(vec![alpha.into(), xi.into(), f64::NAN.into(), f64::NAN.into()]);
        }
    } else if let (Some(n), false) = (a.n, a.i.is_empty()) {
        for &i in &a.i {
            if i < 1 || i > n {
                return Err(Failure::Usage(format!("need 1 <= i <= n, got i = {i}, n = {n}")));
            }
            let beta = i as f64 / n as f64;
            let xi = tail_quantile(beta)?;
            let (xa, gap) = if a.approx {
                let xa = quantile_approx(n, i)?;
                (xa, xa - xi)
            } else {
                (f64::NAN, f64::NAN)
            };
            t.push(vec![(1.0 - beta).into(), xi.into(), xa.into(), gap.into()]);
        }
    } else {
        return Err(Failure::Usage("quantile needs --alpha, or --n with --i".into()));
    }
    Ok((t, vec![]))
}

fn cmd_predict(a: &PredictArgs, c: &Constants) -> CmdResult {
    let mut t = Table::new(&[
        "n",
        "p",
        "regime",
        "predicted",
        "log10_predicted",
        "lower_env",
        "log10_lower_env",
        "upper_env",
        "log10_upper_env",
        "m",
        "log10_m",
        "p1",
        "p2",
    ]);
    for &n in &a.n {
        for p in grid_for(&a.p_grid, n)? {
            let (pred, rp) = predict_variance(n, p, c)?;
            let lo = lower_envelope(n, p, c)?;
            let hi = upper_envelope(n, p, c)?;
            let m = truncation_level_m(n, p, c)?;
            t.push(vec![
                n.into(),
                p.into(),
                rp.regime.to_string().into(),
                pred.value().into(),
                log10_of(pred),
                lo.value().into(),
                log10_of(lo),
                hi.value().into(),
                log10_of(hi),
                m.value().into(),
                log10_of(m),
                rp.p1.into(),
                rp.p2.into(),
            ]);
        }
    }
    Ok((t, vec![]))
}

fn cmd_mc(a: &McArgs, g: &GlobalArgs, c: &Constants) -> CmdResult {
    let n = a.n;
    let grid = match a.p_grid.as_str() {
        "auto" => grid_for("auto", n)?,
        s => parse_p_grid(s, None).map_err(Failure::Usage)?,
    };
    let (seed, samples, streams) = (g.seed, g.samples, g.streams);
    if let Some(qa) = &a.negative {
        check_memory(n, streams, 1, c)?;
        let (q, l) = (qa[0], qa[1]);
        let tr = a.truncate.unwrap_or(f64::INFINITY);
        let e = mc_negative_moment(n, q, l, tr, samples, seed, streams, c)?;
        let bound = negative_moment_bound(n, q, l, c).ok().map(|b| b.direct);
        let [b_value, b_log10] = maybe(bound);
        let ratio = bound.map_or(f64::NAN, |b| e.mean / b.value());
        let mut t = Table::new(&[
            "n", "q", "l", "t", "mean", "stderr_mean", "bound", "log10_bound", "ratio", "samples", "seed", "streams",
        ]);
        t.push(vec![
            n.into(),
            q.into(),
            l.into(),
            tr.into(),
            e.mean.into(),
            e.stderr_mean.into(),
            b_value,
            b_log10,
            ratio.into(),
            e.samples.into(),
            seed.into(),
            streams.into(),
        ]);
        return Ok((t, vec![]));
    }
    if let Some(tr) = a.truncate {
        check_memory(n, streams, 1, c)?;
        let mut t = Table::new(&[
            "n",
            "p",
            "t",
            "f_mean",
            "f_variance",
            "f_stderr_variance",
            "gap2_mean",
            "gap2_stderr",
            "tail_term",
            "tail_ratio",
            "samples",
            "seed",
            "streams",
        ]);
        for p in grid {
            let (f, gap2) = mc_truncated_stats(n, p, tr, samples, seed, streams)?;
            let tail = tail_term(n, p, tr).map(|v| v.value()).unwrap_or(f64::NAN);
            t.push(vec![
                n.into(),
                p.into(),
                tr.into(),
                f.mean.into(),
                f.variance.into(),
                f.stderr_variance.into(),
                gap2.mean.into(),
                gap2.stderr_mean.into(),
                tail.into(),
                (gap2.mean / tail).into(),
                f.samples.into(),
                seed.into(),
                streams.into(),
            ]);
        }
        return Ok((t, vec![]));
    }
    check_memory(n, streams, 1, c)?;
    let est = mc_norm_stats_multi(n, &grid, samples, seed, streams)?;
    let mut t = Table::new(&[
        "n",
        "p",
        "mean",
        "variance",
        "stderr_mean",
        "stderr_variance",
        "samples",
        "seed",
        "streams",
        "predicted",
        "log10_predicted",
        "ratio",
    ]);
    for (p, e) in grid.iter().zip(&est) {
        let pred = predict_variance(n, *p, c).ok().map(|v| v.0);
        let [pred_value, pred_log10] = maybe(pred);
        let ratio = pred.map_or(f64::NAN, |v| e.variance / v.value());
        t.push(vec![
            n.into(),
            (*p).into(),
            e.mean.into(),
            e.variance.into(),
            e.stderr_mean.into(),
            e.stderr_variance.into(),
            e.samples.into(),
            e.seed.into(),
            e.streams.into(),
            pred_value,
            pred_log10,
            ratio.into(),
        ]);
    }
    Ok((t, vec![]))
}

fn cmd_orderstats(a: &OrderstatsArgs) -> CmdResult {
    let n = a.n;
    let mut failures = Vec::new();
    if !a.beta.is_empty() {
        let mut t = Table::new(&[
            "n",
            "i",
            "beta",
            "exact",
            "log10_exact",
            "chernoff",
            "log10_chernoff",
            "chernoff_valid",
            "dominates",
        ]);
        for &beta in &a.beta {
            for &i in &a.i {
                let exact = LogValue::from_ln(ln_orderstat_cdf_exact(n, i, beta)?);
                let (ch, valid) = match chernoff_bound(n, i, beta) {
                    Ok(b) => (b, true),
                    Err(_) => (f64::NAN, false),
                };
                let dominates = valid && ch >= exact.value();
                if valid && !dominates {
                    failures.push(format!("chernoff below exact: n = {n}, i = {i}, beta = {beta}"));
                }
                t.push(vec![
                    n.into(),
                    i.into(),
                    beta.into(),
                    exact.value().into(),
                    log10_of(exact),
                    ch.into(),
                    ch.log10().into(),
                    valid.into(),
                    dominates.into(),
                ]);
            }
        }
        return Ok((t, failures));
    }
    if a.u.is_empty() {
        return Err(Failure::Usage("orderstats needs --beta or --u".into()));
    }
    let c = Constants::default();
    let mut t = Table::new(&[
        "n",
        "i",
        "u",
        "threshold",
        "exact",
        "log10_exact",
        "initial",
        "log10_initial",
        "intermediate",
        "log10_intermediate",
        "crude",
        "log10_crude",
    ]);
    for &i in &a.i {
        if i < 1 || i > n {
            return Err(Failure::Usage(format!("need 1 <= i <= n, got i = {i}")));
        }
        let xi_i = tail_quantile(i as f64 / n as f64)?;
        for &u in &a.u {
            let threshold = u * xi_i;
            let exact = LogValue::from_ln(ln_orderstat_cdf_at(n, i, threshold)?);
            let [init, init_log10] = maybe(deviation_bound_initial(n, i, u, &c).ok());
            let [inter, inter_log10] = maybe(deviation_bound_intermediate(n, i, u, &c).ok());
            let crude = deviation_bound_crude(n, u)?;
            t.push(vec![
                n.into(),
                i.into(),
                u.into(),
                threshold.into(),
                exact.value().into(),
                log10_of(exact),
                init,
                init_log10,
                inter,
                inter_log10,
                crude.value().into(),
                log10_of(crude),
            ]);
        }
    }
    Ok((t, failures))
}

fn cmd_checks(a: &ChecksArgs, c: &Constants) -> CmdResult {
    let mut t = Table::new(&["n", "p", "regime", "check", "ln_value", "ln_lower", "ln_upper", "passed"]);
    let mut failures = Vec::new();
    for &n in &a.n {
        let grid = grid_for(&a.p_grid, n)?;
        let report = lemma_checks(&[n], Some(&grid), c)?;
        for ch in &report.checks {
            if !ch.passed {
                failures.push(format!(
                    "check {} failed: n = {}, p = {}, ln value {} outside [{}, {}]",
                    ch.check, ch.n, ch.p, ch.ln_value, ch.ln_lower, ch.ln_upper
                ));
            }
            t.push(vec![
                ch.n.into(),
                ch.p.into(),
                ch.regime.to_string().into(),
                ch.check.as_str().into(),
                ch.ln_value.into(),
                ch.ln_lower.into(),
                ch.ln_upper.into(),
                ch.passed.into(),
            ]);
        }
    }
    Ok((t, failures))
}

fn cmd_dvoretzky(a: &DvoretzkyArgs, g: &GlobalArgs, c: &Constants) -> CmdResult {
    if a.k > MAX_CERTIFIED_K && !a.uncertified {
        return Err(Failure::Usage(format!(
            "k = {} has no certified net (k <= {MAX_CERTIFIED_K}); pass --uncertified",
            a.k
        )));
    }
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get() as u64);
    check_memory(a.n as u64, workers, a.k as u64 + 1, c)?;
    boundaries(a.n as u64)?;
    let mode = if a.uncertified {
        NetMode::Sampled { directions: a.directions }
    } else {
        NetMode::Certified { resolution: a.net_resolution }
    };
    let rule = EpsilonRule { sub_epsilon: a.epsilon, super_w: a.w };
    let rows = transition_sweep(a.n, a.k, &a.delta, rule, a.trials, mode, g.seed)?;
    let mut t = Table::new(&[
        "n",
        "k",
        "delta",
        "side",
        "p",
        "epsilon",
        "trials",
        "successes",
        "failures",
        "ambiguous",
        "success_prob",
        "success_lo",
        "success_hi",
        "failure_prob",
        "failure_lo",
        "failure_hi",
        "in_window",
        "certified",
    ]);
    for r in rows {
        let side = match r.side {
            Side::Sub => "sub",
            Side::Super => "super",
        };
        t.push(vec![
            (a.n as u64).into(),
            (a.k as u64).into(),
            r.delta.into(),
            side.into(),
            r.p.into(),
            r.epsilon.into(),
            r.trials.into(),
            r.successes.into(),
            r.failures.into(),
            r.ambiguous.into(),
            r.success_prob.into(),
            r.success_lo.into(),
            r.success_hi.into(),
            r.failure_prob.into(),
            r.failure_lo.into(),
            r.failure_hi.into(),
            r.in_window.into(),
            (!a.uncertified).into(),
        ]);
    }
    Ok((t, vec![]))
}
