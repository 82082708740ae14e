use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, DEFAULT_VARIANCE_WINDOW};
use super::report::{ExperimentReport, GridCheck, NamedMoments, ReplicateSummary, Row, RunInfo, Verdict, SCHEMA_VERSION};
use super::stats::{clopper_pearson_lower, clopper_pearson_upper, linear_fit, log_mean_exp, Moments, Z99};
use crate::bounds::{fbm_constants, levy_exp_moment_check, mgf_coefficients, DiffusionBoundParams, TailModel};
use crate::error::{invalid, Error, Result};
use crate::path::SampledPath;
use crate::pathsim::{ProcessSpec, Sampler};
use crate::rng::splitmix;
use crate::tv::truncated_variation;

pub const THREADS_ENV: &str = "TRUVAR_THREADS";
pub const SEED_SCHEME: &str = "replicate i uses splitmix(base_seed, i)";
const CP_LEVEL: f64 = 0.99;
const CAP_SENSITIVITY: f64 = 0.01;
const STABLE_CHANGE: f64 = 0.05;
const CAP_GROWTH: f64 = 0.5;

/// Worker count: `explicit`, else `TRUVAR_THREADS`, else machine parallelism.
pub fn resolve_threads(explicit: Option<usize>) -> Result<usize> {
    if let Some(t) = explicit {
        return Ok(t.max(1));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|t| t.max(1))
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs `f(0), ..., f(count - 1)` on `threads` workers and returns the results
/// in index order. On failure, the error of the lowest failing index is
/// returned, wrapped with that index.
pub fn run_replicates<T, F>(count: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let wrap = |i: usize| f(i).map_err(|e| Error::Replicate { index: i, source: Box::new(e) });
    let results: Vec<Result<T>> = if threads <= 1 {
        (0..count).map(wrap).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| invalid(format!("cannot start {threads} workers: {e}")))?;
        pool.install(|| (0..count).into_par_iter().map(wrap).collect())
    };
    results.into_iter().collect()
}

/// Where replicate paths come from.
pub enum PathSource<'a> {
    /// Replicate `i` is generated with seed `splitmix(base_seed, i)`.
    Generated,
    /// Replicate `i` is `paths[i]`; `replicates` in the config is ignored.
    Paths(&'a [SampledPath]),
}

/// One sampler and the config levels evaluated on its paths.
struct Plan {
    spec: ProcessSpec,
    sampler: Option<Sampler>,
    levels: Vec<usize>,
}

fn plans(config: &ExperimentConfig, source: &PathSource) -> Result<Vec<Plan>> {
    let all: Vec<usize> = (0..config.c.len()).collect();
    match source {
        PathSource::Paths(paths) => {
            if config.grid_ratio.is_some() {
                return Err(invalid("grid_ratio regenerates paths and cannot be used with path files"));
            }
            let n = paths.first().map_or(config.process.n(), |p| p.intervals());
            Ok(vec![Plan { spec: config.process.with_grid(n), sampler: None, levels: all }])
        }
        PathSource::Generated => match (config.grid_ratio, &config.process) {
            (Some(ratio), ProcessSpec::Fbm(f)) => config
                .c
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    // c / dt^H >= ratio with dt = S / n.
                    let n = (f.horizon * (ratio / c).powf(1.0 / f.hurst)).ceil() as usize;
                    let spec = config.process.with_grid(n.max(1));
                    Ok(Plan { sampler: Some(spec.sampler()?), spec, levels: vec![k] })
                })
                .collect(),
            _ => Ok(vec![Plan { sampler: Some(config.process.sampler()?), spec: config.process.clone(), levels: all }]),
        },
    }
}

fn grid_checks(config: &ExperimentConfig, plans: &[Plan]) -> Result<Vec<GridCheck>> {
    let mut out = Vec::new();
    for plan in plans {
        let scale = plan.spec.increment_scale()?;
        for &k in &plan.levels {
            let c = config.c[k];
            let ratio = c / scale;
            out.push(GridCheck {
                c,
                n: plan.spec.n(),
                increment_scale: scale,
                ratio,
                required: config.guard_ratio,
                flagged: ratio < config.guard_ratio,
            });
        }
    }
    Ok(out)
}

fn summarize(config: &ExperimentConfig, plans: &[Plan], source: &PathSource, index: usize) -> Result<ReplicateSummary> {
    let mut tv = vec![0.0; config.c.len()];
    let mut qv = None;
    let seed = match source {
        PathSource::Generated => Some(splitmix(config.base_seed, index as u64)),
        PathSource::Paths(_) => None,
    };
    for (p, plan) in plans.iter().enumerate() {
        let generated;
        let path = match (source, &plan.sampler) {
            (PathSource::Paths(paths), _) => &paths[index],
            (PathSource::Generated, Some(s)) => {
                generated = s.sample(seed.expect("generated replicates have seeds"))?;
                &generated
            }
            (PathSource::Generated, None) => unreachable!("generated plans carry a sampler"),
        };
        if p == 0 {
            qv = path.final_qv();
        }
        for &k in &plan.levels {
            tv[k] = truncated_variation(path, config.c[k])?.value;
        }
    }
    Ok(ReplicateSummary { index, seed, tv, qv })
}

/// Runs an experiment on generated paths.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    run_experiment_with(config, PathSource::Generated, threads)
}

/// Runs an experiment on existing paths, one replicate per path.
pub fn run_experiment_on_paths(config: &ExperimentConfig, paths: &[SampledPath], threads: usize) -> Result<ExperimentReport> {
    if paths.is_empty() {
        return Err(invalid("no paths given"));
    }
    run_experiment_with(config, PathSource::Paths(paths), threads)
}

fn run_experiment_with(config: &ExperimentConfig, source: PathSource, threads: usize) -> Result<ExperimentReport> {
    let start = Instant::now();
    config.validate()?;
    let config = config.resolved();
    let plans = plans(&config, &source)?;
    let grid = grid_checks(&config, &plans)?;
    let count = match source {
        PathSource::Generated => config.replicates,
        PathSource::Paths(p) => p.len(),
    };
    let replicates = run_replicates(count, threads, |i| summarize(&config, &plans, &source, i))?;

    let mut a = Analysis::default();
    match config.kind {
        ExperimentKind::Lln => lln(&config, &replicates, &mut a)?,
        ExperimentKind::Clt => clt(&config, &replicates, &mut a)?,
        ExperimentKind::TailVsBound => tail(&config, &replicates, &mut a)?,
        ExperimentKind::MgfVsBound => mgf(&config, &replicates, &mut a)?,
        ExperimentKind::ScalingExponent => scaling(&config, &replicates, &mut a)?,
        ExperimentKind::MgfDivergence => divergence(&config, &replicates, &mut a)?,
    }
    for g in grid.iter().filter(|g| g.flagged) {
        a.warnings.push(format!(
            "grid guard: c = {} is only {:.3} grid increments (n = {}, need {})",
            g.c, g.ratio, g.n, g.required
        ));
    }
    let flagged = grid.iter().any(|g| g.flagged);
    let pass = a.verdicts.iter().all(|v| v.pass);
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        software_version: crate::VERSION.to_string(),
        config,
        source: match source {
            PathSource::Generated => "generated".into(),
            PathSource::Paths(_) => "paths".into(),
        },
        seed_scheme: SEED_SCHEME.into(),
        grid,
        replicates,
        moments: a.moments,
        rows: a.rows,
        verdicts: a.verdicts,
        warnings: a.warnings,
        flagged,
        pass,
        run: Some(RunInfo { threads, wall_time_s: start.elapsed().as_secs_f64() }),
    })
}

#[derive(Default)]
struct Analysis {
    moments: Vec<NamedMoments>,
    rows: Vec<Row>,
    verdicts: Vec<Verdict>,
    warnings: Vec<String>,
}

impl Analysis {
    fn moments(&mut self, name: &str, c: f64, xs: &[f64]) -> Moments {
        let m = Moments::of(xs);
        self.moments.push(NamedMoments { name: name.into(), c, moments: m });
        m
    }

    fn row(&mut self, series: &str, x: f64, estimate: f64, (ci_lo, ci_hi): (f64, f64), bound: f64) {
        self.rows.push(Row { series: series.into(), x, estimate, ci_lo, ci_hi, bound });
    }
}

fn column(reps: &[ReplicateSummary], k: usize) -> Vec<f64> {
    reps.iter().map(|r| r.tv[k]).collect()
}

fn qv_column(reps: &[ReplicateSummary], kind: ExperimentKind) -> Result<Vec<f64>> {
    reps.iter()
        .map(|r| {
            r.qv.ok_or_else(|| {
                invalid(format!("{} needs a quadratic variation track (replicate {} has none)", kind.name(), r.index))
            })
        })
        .collect()
}

fn lln(config: &ExperimentConfig, reps: &[ReplicateSummary], a: &mut Analysis) -> Result<()> {
    let qv = qv_column(reps, config.kind)?;
    let target = a.moments("qv", f64::NAN, &qv).mean;
    let mut errors = Vec::new();
    for (k, &c) in config.c.iter().enumerate() {
        let tv = column(reps, k);
        let m = a.moments("tv", c, &tv);
        let diff: Vec<f64> = tv.iter().zip(&qv).map(|(t, q)| c * t - q).collect();
        a.moments("c_tv_minus_qv", c, &diff);
        // c times the mean of TV^c, so this matches the scaling view exactly.
        let (lo, hi) = m.ci();
        a.row("c_tv", c, c * m.mean, (c * lo, c * hi), target);
        errors.push((c * m.mean - target).abs());
    }
    let worst_rise = errors.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    a.verdicts.push(Verdict::at_most(
        "error nonincreasing along ladder",
        worst_rise,
        0.0,
        format!("absolute errors {errors:?}"),
    ));
    let tol = config.tolerance_or_default();
    let last = *errors.last().expect("ladder is nonempty");
    a.verdicts.push(Verdict::at_most(
        "final error within tolerance",
        last,
        tol,
        format!("c = {}, target {target}", config.c[config.c.len() - 1]),
    ));
    Ok(())
}

fn clt(config: &ExperimentConfig, reps: &[ReplicateSummary], a: &mut Analysis) -> Result<()> {
    let c = config.c[0];
    let qv = qv_column(reps, config.kind)?;
    let target = a.moments("qv", f64::NAN, &qv).mean / 3.0;
    let stat: Vec<f64> = column(reps, 0).iter().zip(&qv).map(|(t, q)| t - q / c).collect();
    let m = a.moments("tv_minus_qv_over_c", c, &stat);
    let se_var = m.variance * ((m.excess_kurtosis + 2.0).max(0.0) / m.count as f64).sqrt();
    a.row("variance", c, m.variance, (m.variance - Z99 * se_var, m.variance + Z99 * se_var), target);
    let [lo, hi] = config
        .variance_range
        .unwrap_or([DEFAULT_VARIANCE_WINDOW[0] * target, DEFAULT_VARIANCE_WINDOW[1] * target]);
    a.verdicts.push(Verdict::within(
        "variance in range",
        m.variance,
        lo,
        hi,
        format!("target {target}, range [{lo}, {hi}], skewness {}, excess kurtosis {}", m.skewness, m.excess_kurtosis),
    ));
    a.verdicts.push(Verdict::at_most(
        "mean within 3 standard errors",
        m.mean.abs(),
        3.0 * m.std_error,
        format!("mean {}, standard error {}", m.mean, m.std_error),
    ));
    Ok(())
}

fn tail(config: &ExperimentConfig, reps: &[ReplicateSummary], a: &mut Analysis) -> Result<()> {
    let ProcessSpec::Fbm(f) = &config.process else {
        return Err(invalid("tail-vs-bound needs an fbm process"));
    };
    let c = config.c[0];
    let tv = column(reps, 0);
    a.moments("tv", c, &tv);
    let consts = fbm_constants(f.hurst)?;
    let n = tv.len() as u64;
    for &u in &config.u {
        let b = consts.tail(f.horizon, c, u)?;
        let k = tv.iter().filter(|&&t| t >= b.threshold).count() as u64;
        let upper = clopper_pearson_upper(k, n, CP_LEVEL);
        a.row("tail", u, k as f64 / n as f64, (clopper_pearson_lower(k, n, CP_LEVEL), upper), b.prob_bound);
        a.verdicts.push(Verdict::at_most(
            format!("tail u = {u}"),
            upper,
            b.prob_bound,
            format!("threshold {}, exceedances {k}/{n}", b.threshold),
        ));
    }
    Ok(())
}

fn mgf(config: &ExperimentConfig, reps: &[ReplicateSummary], a: &mut Analysis) -> Result<()> {
    let c = config.c[0];
    let cap = config.cap.expect("validated");
    let s = config.horizon();
    let tv = column(reps, 0);
    a.moments("tv", c, &tv);
    let bound: Box<dyn Fn(f64) -> Result<f64>> = match &config.process {
        ProcessSpec::Fbm(_) => {
            let co = mgf_coefficients(TailModel::Gaussian, 1.0)?;
            Box::new(move |l| Ok(co.bm(s, c, l)?.ln_value))
        }
        ProcessSpec::Diffusion(d) => {
            let base = DiffusionBoundParams {
                sigma_max: d.sigma_max,
                mu_const: d.mu_const,
                mu_lin: d.mu_lin,
                x0: d.x0,
                horizon: d.horizon,
                c,
                lambda: 0.0,
            };
            let derived = base.derived()?;
            Box::new(move |l| {
                Ok(crate::bounds::diffusion_mgf_bound_with(&DiffusionBoundParams { lambda: l, ..base }, &derived)?.ln_value)
            })
        }
        ProcessSpec::Levy(_) => return Err(invalid("mgf-vs-bound needs Brownian motion or a diffusion")),
    };
    for &l in &config.lambda {
        let at = |m: f64| -> Result<_> {
            let e: Vec<f64> = tv.iter().map(|t| l * t.min(m)).collect();
            log_mean_exp(&e).ok_or_else(|| Error::Overflow(format!("lambda = {l}, cap = {m}")))
        };
        let (est, est2) = (at(cap)?, at(2.0 * cap)?);
        let ln_bound = bound(l)?;
        a.row("ln_mgf", l, est.ln_mean, (est.ln_ci_lo, est.ln_ci_hi), ln_bound);
        a.verdicts.push(Verdict::at_most(
            format!("mgf lambda = {l}"),
            est.ln_ci_hi,
            ln_bound,
            "log scale: upper confidence limit of ln E exp(lambda min(TV, M)) vs ln bound",
        ));
        let sensitivity = (est2.ln_mean - est.ln_mean).exp_m1().abs();
        a.verdicts.push(Verdict::at_most(
            format!("cap sensitivity lambda = {l}"),
            sensitivity,
            CAP_SENSITIVITY,
            format!("relative change from cap {cap} to {}", 2.0 * cap),
        ));
    }
    Ok(())
}

fn scaling(config: &ExperimentConfig, reps: &[ReplicateSummary], a: &mut Analysis) -> Result<()> {
    let ProcessSpec::Fbm(f) = &config.process else {
        return Err(invalid("scaling-exponent needs an fbm process"));
    };
    let h = f.hurst;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, &c) in config.c.iter().enumerate() {
        let m = a.moments("tv", c, &column(reps, k));
        if !(m.mean > 0.0) {
            return Err(invalid(format!("mean TV^c at c = {c} is {}, cannot take logs", m.mean)));
        }
        a.row("mean_tv", c, m.mean, m.ci(), c.powf((h - 1.0) / h) * f.horizon);
        xs.push(c.ln());
        ys.push(m.mean.ln());
    }
    let (slope, _) = linear_fit(&xs, &ys);
    let target = (h - 1.0) / h;
    a.verdicts.push(Verdict::at_most(
        "slope",
        (slope - target).abs(),
        config.tolerance_or_default(),
        format!("fitted slope {slope}, target {target}"),
    ));
    Ok(())
}

fn divergence(config: &ExperimentConfig, reps: &[ReplicateSummary], a: &mut Analysis) -> Result<()> {
    let ProcessSpec::Levy(l) = &config.process else {
        return Err(invalid("mgf-divergence needs a levy process"));
    };
    let c = config.c[0];
    let cap = config.cap.expect("validated");
    let (lo, hi) = (config.alpha_lo.expect("validated"), config.alpha_hi.expect("validated"));
    let tv = column(reps, 0);
    a.moments("tv", c, &tv);
    if tv.len() < 2 {
        return Err(invalid("mgf-divergence needs at least two replicates"));
    }
    let threshold = l.nu.exp_moment_threshold();
    for (alpha, want_finite) in [(lo, true), (hi, false)] {
        let check = levy_exp_moment_check(&l.nu, alpha)?;
        if check.finite != want_finite {
            a.warnings.push(format!(
                "alpha = {alpha} is on the unexpected side of the integrability threshold {threshold} (finite: {})",
                check.finite
            ));
        }
    }
    let estimate = |alpha: f64, m: f64, take: usize| -> Result<(f64, (f64, f64))> {
        let e: Vec<f64> = tv[..take].iter().map(|t| alpha * t.min(m)).collect();
        let r = log_mean_exp(&e).ok_or_else(|| Error::Overflow(format!("alpha = {alpha}, cap = {m}")))?;
        let v = r.ln_mean.exp();
        if !v.is_finite() {
            return Err(Error::Overflow(format!("exp({alpha} * {m}) overflows; lower the cap")));
        }
        Ok((v, (r.ln_ci_lo.exp(), r.ln_ci_hi.exp())))
    };
    let mut sizes = Vec::new();
    let mut m = tv.len();
    while m >= 2 && sizes.len() < 12 {
        sizes.push(m);
        m /= 2;
    }
    sizes.reverse();
    for (series, alpha) in [("alpha_lo", lo), ("alpha_hi", hi)] {
        for &take in &sizes {
            let (v, ci) = estimate(alpha, cap, take)?;
            a.row(series, take as f64, v, ci, f64::NAN);
        }
    }
    let n = tv.len();
    let half = sizes[sizes.len() - 2];
    let change = (estimate(lo, cap, n)?.0 / estimate(lo, cap, half)?.0 - 1.0).abs();
    a.verdicts.push(Verdict::at_most(
        "stabilizes below threshold",
        change,
        STABLE_CHANGE,
        format!("alpha {lo}, relative change from {half} to {n} samples, threshold {threshold}"),
    ));
    let growth = estimate(hi, 2.0 * cap, n)?.0 / estimate(hi, cap, n)?.0 - 1.0;
    a.verdicts.push(Verdict::above(
        "cap-limited growth above threshold",
        growth,
        CAP_GROWTH,
        format!("alpha {hi}, relative growth from cap {cap} to {}, threshold {threshold}", 2.0 * cap),
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str, process: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml_str(&format!("{extra}\n{process}")).unwrap()
    }

    const BM: &str = "[process.fbm]\nhurst = 0.5\nhorizon = 1.0\nn = 2000\n";

    #[test]
    fn single_replicate_matches_direct_pipeline() {
        let cfg = config("kind = \"lln\"\nreplicates = 1\nbase_seed = 11\nc = [0.3, 0.2]", BM);
        let report = run_experiment(&cfg, 1).unwrap();
        let path = cfg.process.with_seed(splitmix(11, 0)).generate().unwrap();
        for (k, &c) in cfg.c.iter().enumerate() {
            assert_eq!(report.replicates[0].tv[k], truncated_variation(&path, c).unwrap().value);
        }
        assert_eq!(report.replicates[0].seed, Some(splitmix(11, 0)));
    }

    #[test]
    fn serial_and_parallel_reports_are_identical() {
        let cfg = config("kind = \"clt\"\nreplicates = 40\nbase_seed = 5\nc = [0.2]", BM);
        let a = run_experiment(&cfg, 1).unwrap();
        let b = run_experiment(&cfg, 4).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json());
        assert_eq!(a.canonical_json(), run_experiment(&cfg, 1).unwrap().canonical_json());
    }

    #[test]
    fn failing_replicate_index_is_reported() {
        let err = run_replicates(10, 3, |i| if i >= 6 { Err(invalid("boom")) } else { Ok(i) }).unwrap_err();
        match err {
            Error::Replicate { index, .. } => assert_eq!(index, 6),
            other => panic!("{other}"),
        }
        assert_eq!(run_replicates(5, 2, Ok).unwrap(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn coefficient_violation_carries_replicate() {
        let cfg = config(
            "kind = \"lln\"\nreplicates = 3\nc = [0.5]",
            "[process.diffusion]\nmu = \"0\"\nsigma = \"2\"\nsigma_max = 1\nhorizon = 1\nn = 10\n",
        );
        assert!(matches!(run_experiment(&cfg, 1), Err(Error::Replicate { index: 0, .. })));
    }

    #[test]
    fn zero_lambda_gives_exactly_one() {
        let cfg = config("kind = \"mgf-vs-bound\"\nreplicates = 20\nc = [0.2]\nlambda = [0.0, 0.5]\ncap = 50.0", BM);
        let r = run_experiment(&cfg, 1).unwrap();
        assert_eq!(r.rows[0].estimate, 0.0);
        assert_eq!(r.rows[0].bound, std::f64::consts::LN_2);
        assert!(r.verdicts.iter().all(|v| v.pass), "{}", r.summary());
    }

    #[test]
    fn tail_at_huge_u_has_no_exceedances() {
        let cfg = config("kind = \"tail-vs-bound\"\nreplicates = 20\nc = [0.2]\nu = [1e300]", BM);
        let r = run_experiment(&cfg, 1).unwrap();
        assert_eq!(r.rows[0].estimate, 0.0);
    }

    #[test]
    fn deterministic_drift_has_zero_lln_target() {
        let cfg = config(
            "kind = \"lln\"\nreplicates = 2\nc = [0.5, 0.25]",
            "[process.diffusion]\nmu = \"1\"\nsigma = \"0\"\nmu_const = 1\nsigma_max = 1\nhorizon = 2\nn = 100\n",
        );
        let r = run_experiment(&cfg, 1).unwrap();
        // TV^c of a straight line rising by 2 is 2 - c.
        assert!((r.replicates[0].tv[0] - 1.5).abs() < 1e-12);
        assert_eq!(r.rows[0].bound, 0.0);
        assert!((r.rows[1].estimate - 0.25 * 1.75).abs() < 1e-12);
    }

    #[test]
    fn lln_and_scaling_share_aggregates() {
        let ladder = "c = [0.4, 0.2]\nreplicates = 8\nbase_seed = 3";
        let lln = run_experiment(&config(&format!("kind = \"lln\"\n{ladder}"), BM), 1).unwrap();
        let sc = run_experiment(&config(&format!("kind = \"scaling-exponent\"\n{ladder}"), BM), 1).unwrap();
        for (a, b) in lln.rows.iter().zip(&sc.rows) {
            assert_eq!(a.estimate, a.x * b.estimate);
        }
    }

    #[test]
    fn from_paths_uses_given_paths() {
        let cfg = config("kind = \"lln\"\nreplicates = 1\nc = [0.5]", BM);
        let p = SampledPath::from_values(vec![0.0, 1.0, 0.0, 1.0]).unwrap().with_qv(vec![0.0; 4]).unwrap();
        let r = run_experiment_on_paths(&cfg, &[p.clone(), p], 1).unwrap();
        assert_eq!(r.replicates.len(), 2);
        assert_eq!(r.replicates[1].tv[0], 1.5);
        assert_eq!(r.replicates[1].seed, None);
    }
}
