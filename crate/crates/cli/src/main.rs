use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use truvar::bounds::{
    diffusion_mgf_bound_with, fbm_constants, levy_exp_moment_check, mgf_coefficients, optimized_pipeline,
    orlicz_spec, pipeline_at, subgaussian_orlicz_scale, DiffusionBoundParams, TailModel,
};
use truvar::harness::{resolve_threads, run_experiment, run_experiment_on_paths, ExperimentConfig, ExperimentReport};
use truvar::pathsim::ProcessSpec;
use truvar::rng::splitmix;
use truvar::tv::{
    levy_skeleton, minimal_envelope, sup_distance, total_variation, truncated_variation, tv_oracle_dp,
    tv_oracle_exhaustive, TvAlgorithm, DP_MAX_POINTS, EXHAUSTIVE_MAX_POINTS,
};
use truvar::{Error, Interpretation, SampledPath};

#[derive(Parser)]
#[command(name = "truvar", version, about = "Truncated variation of sampled paths, explicit bounds, Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate sample paths from a process spec (TOML with [fbm], [diffusion] or [levy]).
    Simulate(SimulateArgs),
    /// Truncated variation of a path CSV.
    Tv(TvArgs),
    /// Bound curves and constants tables.
    Bound {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Run a Monte Carlo experiment from a TOML config.
    Experiment(ExperimentArgs),
    /// Render a saved experiment report.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the seed in the process file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the grid size in the process file.
    #[arg(long)]
    n: Option<usize>,
    /// Output file; stdout when absent. With --count, a directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of paths; path i uses seed splitmix(seed, i) and is written to OUT/path_<i>.csv.
    #[arg(long)]
    count: Option<usize>,
}

#[derive(Args)]
struct TvArgs {
    #[arg(long)]
    input: PathBuf,
    /// One level or a comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    c: Vec<f64>,
    #[arg(long, default_value = "streaming")]
    algorithm: TvAlgorithm,
    #[arg(long, default_value = "piecewise-linear")]
    interpretation: Interpretation,
    /// Cross-check against the oracles and the envelope (and the skeleton with
    /// --skeleton); exit 2 on any violation.
    #[arg(long)]
    check: bool,
    /// Add skeleton columns (stops, skeleton variation, worst overshoot).
    #[arg(long)]
    skeleton: bool,
    /// Write the minimal envelope at the first level to this CSV.
    #[arg(long)]
    envelope: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Tail bound curve `u,threshold,prob_bound` for fBm.
    Fbm {
        #[arg(long = "H")]
        hurst: f64,
        #[arg(long = "S", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
    },
    /// MGF bound curve `lambda,bound,ln_bound` for standard Brownian motion.
    Bm {
        #[arg(long = "S", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
    /// MGF bound curve for a diffusion with |sigma| <= R and |mu| <= C + D|x|.
    Diffusion {
        #[arg(long = "R")]
        sigma_max: f64,
        #[arg(long = "C", default_value_t = 0.0)]
        mu_const: f64,
        #[arg(long = "D", default_value_t = 0.0)]
        mu_lin: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x0: f64,
        #[arg(long = "S", default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        c: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
    /// JSON table of chaining and corollary constants.
    Constants {
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Net ratio; optimized over the grid when absent.
        #[arg(long)]
        r: Option<f64>,
        /// Orlicz scale; defaults to the Gaussian scale at unit variance.
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Exponential-moment integrability of a Lévy measure, `alpha,finite,integral,threshold`.
    Levy {
        /// TOML with a [levy] section.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-ready CSV (one file per series).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Path CSVs (or directories of them) used as replicates instead of generating.
    #[arg(long, num_args = 1..)]
    from_paths: Vec<PathBuf>,
    /// Worker count; overrides TRUVAR_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    /// Write plot-ready CSV here instead of printing the summary.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Print the report JSON.
    #[arg(long)]
    json: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::NegativeLevel(_)
            | Error::UnsortedLevels(_)
            | Error::TooLarge { .. }
            | Error::Expr { .. }
            | Error::Csv { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::Json(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write_out(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Usage(e.to_string())),
    }
}

fn read_path(path: &Path, interpretation: Interpretation) -> Result<SampledPath, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    SampledPath::read_csv(io::BufReader::new(file), interpretation)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

/// Resolved configuration, printed before any work.
fn announce(lines: &[(&str, String)]) {
    let mut err = io::stderr().lock();
    let _ = writeln!(err, "# resolved configuration");
    for (k, v) in lines {
        let _ = writeln!(err, "{k} = {v}");
    }
}

fn simulate(a: SimulateArgs) -> Outcome {
    let mut spec = ProcessSpec::from_toml_str(&read_file(&a.spec)?)?;
    if let Some(n) = a.n {
        spec = spec.with_grid(n);
    }
    if let Some(s) = a.seed {
        spec = spec.with_seed(s);
    }
    spec.validate()?;
    eprint!("# resolved configuration\n{}", spec.to_toml_string());
    let sampler = spec.sampler()?;
    match a.count {
        None => {
            let path = sampler.sample(spec.seed())?;
            for w in path.warnings() {
                eprintln!("warning: {w}");
            }
            write_out(a.out.as_deref(), &path.to_csv_string())
        }
        Some(count) => {
            let dir = a.out.ok_or_else(|| Failure::Usage("--count needs --out DIR".into()))?;
            fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
            let width = count.saturating_sub(1).to_string().len();
            for i in 0..count {
                let path = sampler.sample(splitmix(spec.seed(), i as u64))?;
                let file = dir.join(format!("path_{i:0width$}.csv"));
                write_out(Some(&file), &path.to_csv_string())?;
            }
            eprintln!("wrote {count} paths to {}", dir.display());
            Ok(())
        }
    }
}

fn tv(a: TvArgs) -> Outcome {
    announce(&[
        ("input", a.input.display().to_string()),
        ("c", format!("{:?}", a.c)),
        ("algorithm", a.algorithm.name().into()),
        ("interpretation", serde_json::to_string(&a.interpretation).expect("serializes")),
        ("check", a.check.to_string()),
        ("skeleton", a.skeleton.to_string()),
    ]);
    let path = read_path(&a.input, a.interpretation)?;
    let mut out = String::from("c,value,algorithm");
    if a.skeleton {
        out.push_str(",stops,skeleton_tv,overshoot_events,max_overshoot");
    }
    out.push('\n');
    let mut problems = Vec::new();
    for &c in &a.c {
        let r = match a.algorithm {
            TvAlgorithm::Streaming => truncated_variation(&path, c)?,
            TvAlgorithm::Dp => tv_oracle_dp(&path, c)?,
            TvAlgorithm::Exhaustive => tv_oracle_exhaustive(&path, c)?,
        };
        out.push_str(&format!("{:?},{:?},{}", c, r.value, r.algorithm.name()));
        let skel = if a.skeleton && c > 0.0 { Some(levy_skeleton(&path, c)?) } else { None };
        if a.skeleton {
            match &skel {
                Some(s) => out.push_str(&format!(
                    ",{},{:?},{},{:?}",
                    s.stop_indices.len(),
                    total_variation(&s.skel),
                    s.overshoot_events,
                    s.max_overshoot.map_or(0.0, |o| o.magnitude)
                )),
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
        if a.check {
            problems.extend(check_level(&path, c, r.value, skel.as_ref(), a.interpretation)?);
        }
    }
    if let Some(env_out) = &a.envelope {
        let env = minimal_envelope(&path, a.c[0])?;
        write_out(Some(env_out), &env.to_csv_string())?;
    }
    write_out(None, &out)?;
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numeric(problems.join("; ")))
    }
}

fn check_level(
    path: &SampledPath,
    c: f64,
    value: f64,
    skel: Option<&truvar::tv::Skeleton>,
    interpretation: Interpretation,
) -> Result<Vec<String>, Failure> {
    let mut problems = Vec::new();
    let tol = 1e-9 * (1.0 + value.abs());
    if path.len() <= DP_MAX_POINTS {
        let dp = tv_oracle_dp(path, c)?.value;
        if (dp - value).abs() > tol {
            problems.push(format!("c = {c}: value {value} differs from DP oracle {dp}"));
        }
    }
    if path.len() <= EXHAUSTIVE_MAX_POINTS {
        let ex = tv_oracle_exhaustive(path, c)?.value;
        if (ex - value).abs() > tol {
            problems.push(format!("c = {c}: value {value} differs from exhaustive oracle {ex}"));
        }
    }
    let env = minimal_envelope(path, c)?;
    let env_tv = total_variation(&env);
    if (env_tv - value).abs() > tol {
        problems.push(format!("c = {c}: envelope variation {env_tv} differs from {value}"));
    }
    let dist = sup_distance(path, &env);
    if dist > 0.5 * c + 1e-12 {
        problems.push(format!("c = {c}: envelope is {dist} from the path, more than c/2"));
    }
    if let Some(s) = skel {
        let skel_tv = total_variation(&s.skel);
        if value > skel_tv + tol {
            problems.push(format!("c = {c}: TV^c {value} exceeds skeleton variation {skel_tv}"));
        }
        if let Some(o) = s.violation(interpretation) {
            problems.push(format!(
                "c = {c}: skeleton overshoots c/2 by {} at grid index {}",
                o.magnitude, o.index
            ));
        }
    }
    Ok(problems)
}

fn csv_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn bound(which: BoundCommand) -> Outcome {
    let mut out = String::new();
    match which {
        BoundCommand::Fbm { hurst, horizon, c, u } => {
            announce(&[("H", hurst.to_string()), ("S", horizon.to_string()), ("c", c.to_string()), ("u", format!("{u:?}"))]);
            let k = fbm_constants(hurst)?;
            out.push_str("u,threshold,prob_bound\n");
            for u in u {
                let b = k.tail(horizon, c, u)?;
                out.push_str(&format!("{},{},{}\n", csv_float(u), csv_float(b.threshold), csv_float(b.prob_bound)));
            }
        }
        BoundCommand::Bm { horizon, c, lambda } => {
            announce(&[("S", horizon.to_string()), ("c", c.to_string()), ("lambda", format!("{lambda:?}"))]);
            let co = mgf_coefficients(TailModel::Gaussian, 1.0)?;
            out.push_str("lambda,bound,ln_bound\n");
            for l in lambda {
                let b = co.bm(horizon, c, l)?;
                out.push_str(&format!("{},{},{}\n", csv_float(l), csv_float(b.value), csv_float(b.ln_value)));
            }
        }
        BoundCommand::Diffusion { sigma_max, mu_const, mu_lin, x0, horizon, c, lambda } => {
            let base = DiffusionBoundParams { sigma_max, mu_const, mu_lin, x0, horizon, c, lambda: 0.0 };
            base.validate()?;
            let derived = base.derived()?;
            announce(&[
                ("R", sigma_max.to_string()),
                ("C", mu_const.to_string()),
                ("D", mu_lin.to_string()),
                ("x0", x0.to_string()),
                ("S", horizon.to_string()),
                ("c", c.to_string()),
                ("lambda", format!("{lambda:?}")),
                ("derived", serde_json::to_string(&derived).expect("derived constants serialize")),
            ]);
            out.push_str("lambda,bound,ln_bound\n");
            for l in lambda {
                let b = diffusion_mgf_bound_with(&DiffusionBoundParams { lambda: l, ..base }, &derived)?;
                out.push_str(&format!("{},{},{}\n", csv_float(l), csv_float(b.value), csv_float(b.ln_value)));
            }
        }
        BoundCommand::Constants { p, q, r, scale } => {
            let spec = orlicz_spec(p, q)?;
            let scale = match scale {
                Some(s) => s,
                None => subgaussian_orlicz_scale(TailModel::Gaussian, 1.0)?,
            };
            announce(&[
                ("p", p.to_string()),
                ("q", q.to_string()),
                ("r", r.map_or("optimized".into(), |r| r.to_string())),
                ("scale", scale.to_string()),
            ]);
            let pipeline = match r {
                Some(r) => pipeline_at(&spec, r, scale)?,
                None => optimized_pipeline(&spec, scale)?,
            };
            let table = serde_json::json!({
                "inputs": { "p": p, "q": q, "r": pipeline.chain.r, "scale": scale, "r_optimized": r.is_none() },
                "orlicz": pipeline.orlicz,
                "chain": pipeline.chain,
                "corollary": pipeline.corollary,
            });
            out = serde_json::to_string_pretty(&table).expect("constants serialize") + "\n";
        }
        BoundCommand::Levy { spec, alpha } => {
            let ProcessSpec::Levy(l) = ProcessSpec::from_toml_str(&read_file(&spec)?)? else {
                return Err(Failure::Usage(format!("{} has no [levy] section", spec.display())));
            };
            announce(&[("nu", serde_json::to_string(&l.nu).expect("measures serialize")), ("alpha", format!("{alpha:?}"))]);
            out.push_str("alpha,finite,integral,threshold\n");
            for a in alpha {
                let r = levy_exp_moment_check(&l.nu, a)?;
                out.push_str(&format!("{},{},{},{}\n", csv_float(a), r.finite, csv_float(r.integral), csv_float(r.threshold)));
            }
        }
    }
    write_out(None, &out)
}

fn collect_paths(inputs: &[PathBuf]) -> Result<Vec<SampledPath>, Failure> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Failure::Usage(format!("cannot list {}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        return Err(Failure::Usage("--from-paths matched no CSV files".into()));
    }
    files.iter().map(|f| read_path(f, Interpretation::PiecewiseLinear)).collect()
}

fn finish_report(report: &ExperimentReport, out: Option<&Path>, csv: Option<&Path>) -> Outcome {
    eprint!("{}", report.summary());
    write_out(out, &(report.to_json() + "\n"))?;
    if let Some(csv) = csv {
        for f in report.write_csv(csv)? {
            eprintln!("wrote {}", f.display());
        }
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Numeric("experiment verdict FAIL".into()))
    }
}

fn experiment(a: ExperimentArgs) -> Outcome {
    let config = ExperimentConfig::from_toml_str(&read_file(&a.config)?)?;
    let threads = resolve_threads(a.threads)?;
    eprint!("# resolved configuration\n{}threads = {threads}\n", config.resolved().to_toml_string());
    let report = if a.from_paths.is_empty() {
        run_experiment(&config, threads)?
    } else {
        let paths = collect_paths(&a.from_paths)?;
        eprintln!("from_paths = {} files", paths.len());
        run_experiment_on_paths(&config, &paths, threads)?
    };
    finish_report(&report, a.out.as_deref(), a.csv.as_deref())
}

fn report(a: ReportArgs) -> Outcome {
    announce(&[("input", a.input.display().to_string()), ("json", a.json.to_string())]);
    let r = ExperimentReport::from_json(&read_file(&a.input)?)?;
    if let Some(csv) = &a.csv {
        for f in r.write_csv(csv)? {
            eprintln!("wrote {}", f.display());
        }
    } else if a.json {
        write_out(None, &(r.to_json() + "\n"))?;
    } else {
        write_out(None, &r.summary())?;
    }
    if r.pass {
        Ok(())
    } else {
        Err(Failure::Numeric("report verdict FAIL".into()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Tv(a) => tv(a),
        Command::Bound { which } => bound(which),
        Command::Experiment(a) => experiment(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
