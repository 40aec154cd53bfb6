//! `sgverify`: verification runs for the surface growth equation from the
//! command line.
//!
//! Parses an initial condition like `"1.5*sin(x)+sin(2x)"`, runs the solver
//! plus one or both rigorous bound pipelines, and writes plot-ready CSV/JSON
//! artifacts into the output directory.
//!
//! Exit codes: 0 when the verdict certifies regularity (smallness or
//! horizon), 2 when the certified bound blows up or the run ends
//! undecided, 1 on usage or runtime errors.

mod ic;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use sgverify_core::eigen::convergence_study;
use sgverify_core::verify::{
    compare_methods, run, write_comparison_csv, write_convergence_csv, write_report_files,
    write_smallness_csv, Method, VerificationConfig, VerificationReport, Verdict,
};
use sgverify_core::{FourierField, SolverConfig};

#[derive(Parser, Debug, Clone)]
#[command(
    name = "sgverify",
    about = "Rigorous a-posteriori verification for u_t = -u_xxxx - ((u_x)^2)_xx"
)]
struct Cli {
    /// Initial condition, e.g. "2*sin(x)" or "sin(2x)+cos(2x)"
    #[arg(long)]
    ic: Option<String>,

    /// Spectral bandwidth N of the Galerkin solver
    #[arg(long)]
    modes: Option<usize>,

    /// Time step h
    #[arg(long)]
    dt: Option<f64>,

    /// End time of the run
    #[arg(long = "t-end")]
    t_end: Option<f64>,

    /// Bound pipeline: worst-case estimate, eigenvalue bound, or both
    #[arg(long, value_parser = parse_method)]
    method: Option<MethodChoice>,

    /// Projection size n for the eigenvalue bound
    #[arg(long = "eig-n")]
    eig_n: Option<usize>,

    /// Smallness threshold (default 0.5)
    #[arg(long)]
    threshold: Option<f64>,

    /// Optional time horizon T*; reaching it certified ends the run
    #[arg(long)]
    horizon: Option<f64>,

    /// Re-optimize the (delta, eps) parameters every K steps
    #[arg(long = "reopt-every")]
    reopt_every: Option<usize>,

    /// Output directory for report.json and the CSVs
    #[arg(long)]
    out: Option<PathBuf>,

    /// Log every m-th step to steps.csv
    #[arg(long = "record-every")]
    record_every: Option<usize>,

    /// Safety factor multiplying the sampled residual norm
    #[arg(long)]
    safety: Option<f64>,

    /// Plain-text key=value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,

    /// Run the eigenvalue-bound convergence study over these projection
    /// sizes (comma-separated) instead of a time integration
    #[arg(long)]
    convergence: Option<String>,

    /// File with one initial condition per line; runs each into out/<i>/
    #[arg(long = "ic-list")]
    ic_list: Option<PathBuf>,

    /// Run built-in self-tests and exit
    #[arg(long = "seed-check")]
    seed_check: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MethodChoice {
    Worst,
    Eig,
    Both,
}

fn parse_method(s: &str) -> Result<MethodChoice, String> {
    match s {
        "worst" => Ok(MethodChoice::Worst),
        "eig" => Ok(MethodChoice::Eig),
        "both" => Ok(MethodChoice::Both),
        other => Err(format!("unknown method {other:?} (expected worst|eig|both)")),
    }
}

/// All settings after merging flags over the config file over defaults.
#[derive(Debug, Clone)]
struct Settings {
    ic: Option<String>,
    modes: usize,
    dt: f64,
    t_end: f64,
    method: MethodChoice,
    eig_n: usize,
    threshold: f64,
    horizon: Option<f64>,
    reopt_every: usize,
    out: PathBuf,
    record_every: usize,
    safety: f64,
}

fn merge_settings(cli: &Cli) -> Result<Settings, String> {
    let mut file = std::collections::HashMap::new();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", lineno + 1))?;
            file.insert(key.trim().to_string(), value.trim().to_string());
        }
    }
    fn from_file<T: std::str::FromStr>(
        file: &std::collections::HashMap<String, String>,
        key: &str,
    ) -> Result<Option<T>, String> {
        match file.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| format!("config key {key}: cannot parse {v:?}")),
        }
    }

    let method = match &cli.method {
        Some(m) => *m,
        None => match file.get("method").map(String::as_str) {
            None => MethodChoice::Both,
            Some(s) => parse_method(s)?,
        },
    };
    Ok(Settings {
        ic: cli.ic.clone().or_else(|| file.get("ic").cloned()),
        modes: cli.modes.map_or_else(|| from_file(&file, "modes"), |v| Ok(Some(v)))?.unwrap_or(128),
        dt: cli.dt.map_or_else(|| from_file(&file, "dt"), |v| Ok(Some(v)))?.unwrap_or(1e-5),
        t_end: cli.t_end.map_or_else(|| from_file(&file, "t-end"), |v| Ok(Some(v)))?.unwrap_or(0.01),
        method,
        eig_n: cli.eig_n.map_or_else(|| from_file(&file, "eig-n"), |v| Ok(Some(v)))?.unwrap_or(32),
        threshold: cli
            .threshold
            .map_or_else(|| from_file(&file, "threshold"), |v| Ok(Some(v)))?
            .unwrap_or(0.5),
        horizon: match cli.horizon {
            Some(v) => Some(v),
            None => from_file(&file, "horizon")?,
        },
        reopt_every: cli
            .reopt_every
            .map_or_else(|| from_file(&file, "reopt-every"), |v| Ok(Some(v)))?
            .unwrap_or(100),
        out: cli
            .out
            .clone()
            .or_else(|| file.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("sgverify-out")),
        record_every: cli
            .record_every
            .map_or_else(|| from_file(&file, "record-every"), |v| Ok(Some(v)))?
            .unwrap_or(1),
        safety: cli.safety.map_or_else(|| from_file(&file, "safety"), |v| Ok(Some(v)))?.unwrap_or(2.0),
    })
}

fn verification_config(s: &Settings, method: Method) -> VerificationConfig {
    VerificationConfig {
        method,
        smallness_threshold: s.threshold,
        time_horizon: s.horizon,
        eig_n: s.eig_n,
        reoptimize_every: s.reopt_every,
        residual_safety: s.safety,
        solver: SolverConfig {
            n_modes: s.modes,
            dt: s.dt,
            t_end: s.t_end,
            record_every: s.record_every,
        },
    }
}

fn exit_for(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::GlobalBySmallness | Verdict::VerifiedUntilHorizon => 0,
        Verdict::BoundBlowup | Verdict::Inconclusive => 2,
    }
}

fn describe(report: &VerificationReport) {
    println!(
        "{:?}: verdict {:?} at t = {:.6e}, peak bound {:.6e}, {} infeasible step(s)",
        report.method, report.verdict, report.t_final, report.peak_bound,
        report.feasibility_violations
    );
}

fn run_one(u0: &FourierField, s: &Settings, out: &Path) -> Result<u8, String> {
    std::fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    let code = match s.method {
        MethodChoice::Worst | MethodChoice::Eig => {
            let method = if s.method == MethodChoice::Worst {
                Method::WorstCase
            } else {
                Method::Eigenvalue
            };
            let report =
                run(u0, &verification_config(s, method)).map_err(|e| e.to_string())?;
            describe(&report);
            write_report_files(out, &report).map_err(|e| e.to_string())?;
            write_smallness_csv(&out.join("smallness.csv"), &report, s.threshold)
                .map_err(|e| e.to_string())?;
            exit_for(report.verdict)
        }
        MethodChoice::Both => {
            let outcome = compare_methods(u0, &verification_config(s, Method::Eigenvalue))
                .map_err(|e| e.to_string())?;
            describe(&outcome.worst);
            describe(&outcome.eigen);
            write_report_files(out, &outcome.eigen).map_err(|e| e.to_string())?;
            let worst_dir = out.join("worst");
            write_report_files(&worst_dir, &outcome.worst).map_err(|e| e.to_string())?;
            write_comparison_csv(&out.join("comparison.csv"), &outcome.trace)
                .map_err(|e| e.to_string())?;
            write_smallness_csv(&out.join("smallness.csv"), &outcome.eigen, s.threshold)
                .map_err(|e| e.to_string())?;
            write_smallness_csv(&worst_dir.join("smallness.csv"), &outcome.worst, s.threshold)
                .map_err(|e| e.to_string())?;
            // The stricter pipeline decides the exit code.
            exit_for(outcome.eigen.verdict)
        }
    };
    Ok(code)
}

fn run_convergence(u0: &FourierField, s: &Settings, list: &str) -> Result<u8, String> {
    let ns: Vec<usize> = list
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad projection size {t:?}")))
        .collect::<Result<_, _>>()?;
    if ns.is_empty() {
        return Err("empty --convergence list".into());
    }
    // Study the operator at the end state of a (possibly zero-length) run,
    // so `--t-end 0` studies the initial condition itself.
    let phi = if s.t_end > 0.0 {
        let cfg = SolverConfig {
            n_modes: s.modes,
            dt: s.dt,
            t_end: s.t_end,
            record_every: usize::MAX,
        };
        let traj = sgverify_core::integrate(u0, &cfg).map_err(|e| e.to_string())?;
        traj.states.last().expect("trajectory nonempty").clone()
    } else {
        u0.clone()
    };
    let records = convergence_study(&phi, &ns).map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&s.out)
        .map_err(|e| format!("cannot create {}: {e}", s.out.display()))?;
    let path = s.out.join("convergence.csv");
    write_convergence_csv(&path, &records).map_err(|e| e.to_string())?;
    for r in &records {
        let gap = r.gap.map_or_else(|| "infeasible".into(), |g| format!("{g:.6e}"));
        println!("n = {:5}: lambda_n = {:+.8e}, gap = {}", r.n, r.lambda_n, gap);
    }
    println!("wrote {}", path.display());
    Ok(0)
}

fn run_sweep(s: &Settings, list_path: &Path) -> Result<u8, String> {
    let text = std::fs::read_to_string(list_path)
        .map_err(|e| format!("cannot read {}: {e}", list_path.display()))?;
    let ics: Vec<(usize, String)> = text
        .lines()
        .map(str::trim)
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.to_string()))
        .collect();
    if ics.is_empty() {
        return Err("no initial conditions in --ic-list file".into());
    }
    let results: Vec<Result<u8, String>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ics
            .iter()
            .map(|(i, expr)| {
                let s = s.clone();
                scope.spawn(move || -> Result<u8, String> {
                    let parsed = ic::parse_ic(expr).map_err(|e| format!("ic {expr:?}: {e}"))?;
                    let out = s.out.join(format!("run-{i:03}"));
                    run_one(&parsed.to_field(), &s, &out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut worst = 0u8;
    for ((i, expr), result) in ics.iter().zip(results) {
        match result {
            Ok(code) => {
                println!("run-{i:03} ({expr}): exit {code}");
                worst = worst.max(code);
            }
            Err(e) => {
                eprintln!("run-{i:03} ({expr}): error: {e}");
                worst = worst.max(1);
            }
        }
    }
    Ok(worst)
}

/// Quick self-tests of the analytically known cases.
fn seed_check() -> Result<u8, String> {
    let mut log = String::new();

    // phi = 0: the operator is -d^4/dx^4, top eigenvalue -1.
    let report = sgverify_core::rigorous_bound(&FourierField::zero(4), 6)
        .map_err(|e| e.to_string())?;
    let ok1 = (report.lambda_n + 1.0).abs() < 1e-10
        && (report.lambda_rigorous.unwrap_or(f64::NAN) + 1.0).abs() < 1e-10;
    writeln!(log, "lambda(phi=0) = {:+.3e} (expect -1): {}", report.lambda_n, pass(ok1)).unwrap();

    // Parser round-trip.
    let expr = ic::parse_ic("1.5*sin(x)+sin(2x)").map_err(|e| e.to_string())?;
    let ok2 = ic::parse_ic(&expr.render()).map(|e| e == expr).unwrap_or(false);
    writeln!(log, "parser round-trip: {}", pass(ok2)).unwrap();

    // Linear decay: one mode, no nonlinearity feedback at k=1 scale h.
    let u0 = FourierField::harmonic(1e-6, sgverify_core::Harmonic::Sin, 1);
    let cfg = SolverConfig { n_modes: 8, dt: 1e-3, t_end: 1e-2, record_every: 1 };
    let traj = sgverify_core::integrate(&u0, &cfg).map_err(|e| e.to_string())?;
    let decay = traj.states.last().unwrap().l2_norm() / u0.l2_norm();
    let ok3 = (decay - (1.0f64 + 1e-3).powi(-10)).abs() < 1e-6;
    writeln!(log, "semi-implicit linear decay: {}", pass(ok3)).unwrap();

    print!("{log}");
    Ok(if ok1 && ok2 && ok3 { 0 } else { 1 })
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn real_main() -> Result<u8, String> {
    let cli = Cli::parse();
    if cli.seed_check {
        return seed_check();
    }
    let settings = merge_settings(&cli)?;
    if let Some(list_path) = &cli.ic_list {
        if settings.ic.is_some() {
            return Err("--ic and --ic-list are mutually exclusive".into());
        }
        return run_sweep(&settings, list_path);
    }
    let ic_text = settings
        .ic
        .as_deref()
        .ok_or("missing --ic (or ic= in the config file)")?;
    let expr = ic::parse_ic(ic_text).map_err(|e| format!("invalid --ic: {e}"))?;
    let u0 = expr.to_field();
    if let Some(list) = &cli.convergence {
        return run_convergence(&u0, &settings, list);
    }
    run_one(&u0, &settings, &settings.out.clone())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
