//! The full a-posteriori verification pipeline: step the approximation,
//! bound the numerical range of the linearization, feed the scalar error
//! ODE, and render a verdict.
//!
//! A run certifies the true smooth solution on `[0, t]` as long as the
//! bound `y(t) >= ||d_x||^2` stays finite. It ends in one of four ways:
//! the smallness criterion `||phi_x|| + sqrt(y) < threshold` hands the rest
//! to small-data theory (global regularity), the configured time horizon is
//! reached, the bound blows up, or the run simply hits `t_end` undecided.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::bound::{
    advance_bound, method1_coefficients, method2_coefficients, optimize_params,
    residual_from_products, BoundParams, ErrorBoundState, StepCoefficients,
};
use crate::eigen::{
    assemble, lambda_n, lambda_n_warm, report_from_parts, worst_case_from_sup, ConvergenceRecord,
};
use crate::error::VerifyError;
use crate::field::FourierField;
use crate::solver::{SolverConfig, Stepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    WorstCase,
    Eigenvalue,
}

#[derive(Debug, Clone)]
pub struct VerificationConfig {
    pub method: Method,
    /// Threshold for the smallness criterion (1/2 by default).
    pub smallness_threshold: f64,
    /// Optional externally supplied horizon T*; regularity on `[0, T*]`
    /// rules out any later blow-up.
    pub time_horizon: Option<f64>,
    /// Projection size n for the eigenvalue bound.
    pub eig_n: usize,
    /// Re-run the parameter optimizer every this many steps.
    pub reoptimize_every: usize,
    /// Multiplier on the sampled residual norm.
    pub residual_safety: f64,
    /// Bandwidth, step size, end time; `record_every` sets the logging
    /// cadence of the per-step records.
    pub solver: SolverConfig,
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        self.solver.validate().map_err(VerifyError::Solver)?;
        if !(self.smallness_threshold > 0.0) {
            return Err(VerifyError::InvalidConfig {
                reason: "smallness threshold must be positive".into(),
            });
        }
        // The projection size only matters for the eigenvalue route.
        if self.method == Method::Eigenvalue
            && (self.eig_n < 1 || self.eig_n > self.solver.n_modes)
        {
            return Err(VerifyError::InvalidConfig {
                reason: format!(
                    "eig_n = {} must be in 1..={}",
                    self.eig_n, self.solver.n_modes
                ),
            });
        }
        if self.reoptimize_every < 1 {
            return Err(VerifyError::InvalidConfig {
                reason: "reoptimize_every must be >= 1".into(),
            });
        }
        if self.residual_safety < 1.0 {
            return Err(VerifyError::InvalidConfig {
                reason: "residual safety factor must be >= 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    GlobalBySmallness,
    VerifiedUntilHorizon,
    BoundBlowup,
    Inconclusive,
}

/// One logged step of a verification run.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub y: f64,
    pub sqrt_y: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub res: f64,
    pub lambda_n: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub worst_case: f64,
    pub delta: f64,
    pub eps_b: f64,
    pub eps_c: f64,
    pub eps_d: f64,
    pub feasible: bool,
    /// `||phi_x||` at the end of the step (H^1 norm of the approximation).
    pub phi_h1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub method: Method,
    pub verdict: Verdict,
    pub t_final: f64,
    pub peak_bound: f64,
    pub feasibility_violations: usize,
    #[serde(skip)]
    pub steps: Vec<StepRecord>,
    pub steps_logged: usize,
}

/// Per-step eigenvalue/worst-case trace of a method comparison.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub worst_case: f64,
    pub lambda_n: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub modes_needed: f64,
}

/// Everything both bound pipelines need from one solver step.
struct StepView {
    t_next: f64,
    res: f64,
    /// Sup-norm bound of `phi_xx`, maximized over the step endpoints
    /// (the l1 bound is convex along the linear interpolant).
    s2: f64,
    worst_case: f64,
    phi_h1_next: f64,
    lambda_n: Option<f64>,
    lambda_tilde: Option<f64>,
    feasible: bool,
    modes_needed: f64,
}

/// The scalar-bound side of one method, advanced along the shared
/// trajectory.
struct BoundTrack {
    method: Method,
    state: ErrorBoundState,
    reoptimize_every: usize,
    threshold: f64,
    horizon: Option<f64>,
    resolved: Option<(Verdict, f64)>,
    peak: f64,
    violations: usize,
    records: Vec<StepRecord>,
}

impl BoundTrack {
    fn new(method: Method, cfg: &VerificationConfig) -> Self {
        BoundTrack {
            method,
            state: ErrorBoundState::initial(0.0, BoundParams::fallback()),
            reoptimize_every: cfg.reoptimize_every,
            threshold: cfg.smallness_threshold,
            horizon: cfg.time_horizon,
            resolved: None,
            peak: 0.0,
            violations: 0,
            records: Vec::new(),
        }
    }

    fn needs_eigen(&self) -> bool {
        self.method == Method::Eigenvalue && self.resolved.is_none()
    }

    fn advance(&mut self, step_index: usize, view: &StepView, h: f64, log: bool) {
        if self.resolved.is_some() {
            return;
        }
        let (coeffs, stepped): (StepCoefficients, ErrorBoundState) = match self.method {
            Method::WorstCase => {
                let c = method1_coefficients(view.s2, view.res);
                (c, advance_bound(&self.state, &c, h))
            }
            Method::Eigenvalue => {
                // Infeasible steps fall back to the worst-case rate, which
                // stays a valid upper bound on the numerical range.
                let lambda_used = if view.feasible {
                    view.lambda_tilde.expect("feasible step carries lambda")
                } else {
                    self.violations += 1;
                    view.worst_case
                };
                if step_index % self.reoptimize_every == 0 {
                    self.state.params =
                        optimize_params(lambda_used, view.s2, view.res, self.state.y);
                }
                let mut c = method2_coefficients(lambda_used, view.s2, view.res, &self.state.params)
                    .expect("optimizer output is always feasible");
                let mut next = advance_bound(&self.state, &c, h);
                if next.blown_up {
                    // Parameters picked for an earlier y can be hopeless at
                    // the current one; re-optimize once before giving up.
                    // Any feasible parameters keep the bound valid.
                    self.state.params =
                        optimize_params(lambda_used, view.s2, view.res, self.state.y);
                    let retry =
                        method2_coefficients(lambda_used, view.s2, view.res, &self.state.params)
                            .expect("optimizer output is always feasible");
                    let again = advance_bound(&self.state, &retry, h);
                    if !again.blown_up {
                        c = retry;
                        next = again;
                    }
                }
                (c, next)
            }
        };
        self.state = stepped;
        self.peak = self.peak.max(self.state.y);

        if self.state.blown_up {
            self.resolved = Some((Verdict::BoundBlowup, view.t_next));
        } else if view.phi_h1_next + self.state.y.sqrt() < self.threshold {
            self.resolved = Some((Verdict::GlobalBySmallness, view.t_next));
        } else if self.horizon.is_some_and(|t_star| view.t_next >= t_star) {
            self.resolved = Some((Verdict::VerifiedUntilHorizon, view.t_next));
        }

        if log || self.resolved.is_some() {
            self.records.push(StepRecord {
                t: view.t_next,
                y: self.state.y,
                sqrt_y: self.state.y.sqrt(),
                alpha: coeffs.alpha,
                beta: coeffs.beta,
                gamma: coeffs.gamma,
                res: view.res,
                lambda_n: match self.method {
                    Method::WorstCase => None,
                    Method::Eigenvalue => view.lambda_n,
                },
                lambda_tilde: match self.method {
                    Method::WorstCase => None,
                    Method::Eigenvalue => view.lambda_tilde,
                },
                worst_case: view.worst_case,
                delta: self.state.params.delta,
                eps_b: self.state.params.eps_b,
                eps_c: self.state.params.eps_c,
                eps_d: self.state.params.eps_d,
                feasible: view.feasible,
                phi_h1: view.phi_h1_next,
            });
        }
    }

    fn into_report(self, t_end: f64) -> VerificationReport {
        let (verdict, t_final) = self.resolved.unwrap_or((Verdict::Inconclusive, t_end));
        let steps_logged = self.records.len();
        VerificationReport {
            method: self.method,
            verdict,
            t_final,
            peak_bound: self.peak,
            feasibility_violations: self.violations,
            steps: self.records,
            steps_logged,
        }
    }
}

fn sup_bound_interval(a: &FourierField, b: &FourierField, order: u32) -> f64 {
    a.derivative(order)
        .sup_norm_bound()
        .max(b.derivative(order).sup_norm_bound())
}

fn run_tracks(
    u0: &FourierField,
    cfg: &VerificationConfig,
    methods: &[Method],
    want_trace: bool,
) -> Result<(Vec<VerificationReport>, Vec<TraceRecord>), VerifyError> {
    cfg.validate()?;
    let n = cfg.solver.n_modes;
    let h = cfg.solver.dt;
    let n_steps = (cfg.solver.t_end / h).ceil() as usize;
    let log_every = cfg.solver.record_every;

    let mut tracks: Vec<BoundTrack> = methods.iter().map(|&m| BoundTrack::new(m, cfg)).collect();
    let mut trace = Vec::new();

    let mut phi = u0
        .zero_padded(n)
        .map_err(crate::error::SolverError::Field)?;

    // Smallness can already hold at t = 0 (y starts at 0 because the
    // approximation starts exactly on the initial data).
    let phi_h1_0 = phi.sobolev_norm(1);
    for track in &mut tracks {
        if phi_h1_0 < track.threshold {
            track.resolved = Some((Verdict::GlobalBySmallness, 0.0));
        }
    }

    let mut stepper = Stepper::new(n, h);
    let mut p_prev = stepper.nonlinearity_full(&phi);
    let mut eig_guess: Option<DVector<f64>> = None;
    let sqrt2 = std::f64::consts::SQRT_2;

    for j in 0..n_steps {
        if tracks.iter().all(|t| t.resolved.is_some()) {
            break;
        }
        let t_next = (j + 1) as f64 * h;
        let phi_next = stepper.step_with_nonlinearity(&phi, &p_prev);
        if !phi_next.is_finite() {
            return Err(VerifyError::Solver(crate::error::SolverError::NonFinite {
                t: t_next,
                step: j + 1,
            }));
        }
        let p_cross = stepper.cross_product_full(&phi, &phi_next);
        let p_next = stepper.nonlinearity_full(&phi_next);
        let res = residual_from_products(
            &phi,
            &phi_next,
            h,
            &p_prev,
            &p_cross,
            &p_next,
            &[0.0, 0.5, 1.0],
        ) * cfg.residual_safety;

        let s1 = sup_bound_interval(&phi, &phi_next, 1);
        let s2 = sup_bound_interval(&phi, &phi_next, 2);
        let s3 = sup_bound_interval(&phi, &phi_next, 3);
        let worst_case = worst_case_from_sup(s2);
        let c = 2.0 * s3 + 6.0 * s2 + 4.0 * s1;
        let feasible = cfg.eig_n as f64 >= sqrt2 * c;

        let need_eigen = want_trace || tracks.iter().any(|t| t.needs_eigen());
        let (lam_n, lam_tilde) = if need_eigen {
            let matrix = assemble(&phi, cfg.eig_n);
            let pair = match &eig_guess {
                Some(g) => lambda_n_warm(&matrix, g)?,
                None => lambda_n(&matrix)?,
            };
            eig_guess = Some(pair.vector.clone());
            let report = report_from_parts(cfg.eig_n, c, pair.certified_upper(), s2, worst_case);
            (Some(pair.value), report.lambda_rigorous)
        } else {
            (None, None)
        };

        let view = StepView {
            t_next,
            res,
            s2,
            worst_case,
            phi_h1_next: phi_next.sobolev_norm(1),
            lambda_n: lam_n,
            lambda_tilde: lam_tilde,
            feasible,
            modes_needed: 2.0 * sqrt2 * c + 1.0,
        };
        let log = (j + 1) % log_every == 0 || j + 1 == n_steps;
        for track in &mut tracks {
            track.advance(j, &view, h, log);
        }
        if want_trace && log {
            trace.push(TraceRecord {
                t: view.t_next,
                // The figure convention: the worst-case growth rate of the
                // (1/2) d/dt ||d_x||^2 inequality, 9 s^2 - 1/4, which is what
                // the eigenvalue route's lambda-tilde competes against.
                worst_case: 9.0 * view.s2 * view.s2 - 0.25,
                lambda_n: view.lambda_n,
                lambda_tilde: view.lambda_tilde,
                modes_needed: view.modes_needed,
            });
        }

        phi = phi_next;
        p_prev = p_next;
    }

    let t_end = cfg.solver.t_end;
    Ok((
        tracks.into_iter().map(|t| t.into_report(t_end)).collect(),
        trace,
    ))
}

/// Runs the verification pipeline with the configured method.
pub fn run(u0: &FourierField, cfg: &VerificationConfig) -> Result<VerificationReport, VerifyError> {
    let (mut reports, _) = run_tracks(u0, cfg, &[cfg.method], false)?;
    Ok(reports.remove(0))
}

/// Result of running both bound pipelines over one shared trajectory.
#[derive(Debug)]
pub struct ComparisonOutcome {
    pub worst: VerificationReport,
    pub eigen: VerificationReport,
    pub trace: Vec<TraceRecord>,
}

/// Runs both methods on the identical trajectory (the PDE is solved once)
/// and collects aligned traces of the two operator bounds.
pub fn compare_methods(
    u0: &FourierField,
    cfg: &VerificationConfig,
) -> Result<ComparisonOutcome, VerifyError> {
    let (mut reports, trace) =
        run_tracks(u0, cfg, &[Method::WorstCase, Method::Eigenvalue], true)?;
    let eigen = reports.remove(1);
    let worst = reports.remove(0);
    Ok(ComparisonOutcome { worst, eigen, trace })
}

fn fmt(x: f64) -> String {
    format!("{:.16e}", x)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

/// Writes `report.json` and `steps.csv` into `dir`.
pub fn write_report_files(dir: &Path, report: &VerificationReport) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(dir.join("report.json"), json)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("steps.csv"))?);
    writeln!(
        w,
        "t,y,sqrt_y,alpha,beta,gamma,res,lambda_n,lambda_tilde,worst_case,delta,eps_b,eps_c,eps_d,feasible"
    )?;
    for r in &report.steps {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt(r.t),
            fmt(r.y),
            fmt(r.sqrt_y),
            fmt(r.alpha),
            fmt(r.beta),
            fmt(r.gamma),
            fmt(r.res),
            fmt_opt(r.lambda_n),
            fmt_opt(r.lambda_tilde),
            fmt(r.worst_case),
            fmt(r.delta),
            fmt(r.eps_b),
            fmt(r.eps_c),
            fmt(r.eps_d),
            r.feasible
        )?;
    }
    w.flush()
}

/// Figure data: the two operator-bound traces over time.
pub fn write_comparison_csv(path: &Path, trace: &[TraceRecord]) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,worst_case,lambda_n,lambda_tilde,modes_needed")?;
    for r in trace {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(r.t),
            fmt(r.worst_case),
            fmt_opt(r.lambda_n),
            fmt_opt(r.lambda_tilde),
            fmt(r.modes_needed)
        )?;
    }
    w.flush()
}

/// Figure data: convergence of the rigorous bound to `lambda_n`.
pub fn write_convergence_csv(path: &Path, records: &[ConvergenceRecord]) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "n,lambda_n,lambda_tilde,gap")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{}",
            r.n,
            fmt(r.lambda_n),
            fmt_opt(r.lambda_tilde),
            fmt_opt(r.gap)
        )?;
    }
    w.flush()
}

/// Figure data: the smallness criterion band
/// `[||phi_x|| - sqrt(y), ||phi_x|| + sqrt(y)]` against the threshold.
pub fn write_smallness_csv(
    path: &Path,
    report: &VerificationReport,
    threshold: f64,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,phi_h1,lower,upper,threshold")?;
    for r in &report.steps {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt(r.t),
            fmt(r.phi_h1),
            fmt((r.phi_h1 - r.sqrt_y).max(0.0)),
            fmt(r.phi_h1 + r.sqrt_y),
            fmt(threshold)
        )?;
    }
    w.flush()
}
