use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use apdfp_core::diagnostics::{accuracy, certificate_check, fit_rate, psnr, DiagnosticMonitor};
use apdfp_core::functions::{L1Norm, Logistic, ProxTerm, ZeroProx};
use apdfp_core::linops::{power_method, GramMode, SparseMatrix};
use apdfp_core::problems::{
    build_graph_matrix, parse_libsvm, read_triplets, split_train_test, synthetic_classification,
    CtInstance, Dataset, QuadraticToy,
};
use apdfp_core::solvers::{
    check_schedule, schedule_sequences, Algorithm, Cadence, NoMonitor, PdfpParams, Problem,
    RunResult, SolverConfig, StepRule, ThetaRule, Trace,
};

use crate::config::{AlgoSpec, Experiment, RunConfig};
use crate::error::{CliError, CliResult};
use crate::image::{write_pgm, write_raw};
use crate::trace_io::{write_timing, write_trace};

/// Relative objective errors at which first-hit iterations are reported.
pub const HIT_LEVELS: [f64; 3] = [1e-2, 1e-3, 1e-4];

enum Context {
    Logreg { test: Dataset, edges: usize },
    Ct(CtInstance),
    Quad(QuadraticToy),
}

struct Prepared {
    problem: Problem,
    context: Context,
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn load_libsvm(path: &Path, n_features: Option<usize>) -> CliResult<Dataset> {
    parse_libsvm(open(path)?, n_features)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `rho_max(BB^T)`, treating an edgeless graph as the zero map.
fn sparse_norm_sq(b: &SparseMatrix) -> CliResult<f64> {
    if b.nnz() == 0 {
        return Ok(0.0);
    }
    Ok(power_method(b, GramMode::BtB, 1e-12, 50_000, 0)?.value)
}

fn prepare_logreg(cfg: &RunConfig) -> CliResult<Prepared> {
    let o = &cfg.logreg;
    if !(o.mu1 >= 0.0 && o.mu2 >= 0.0) {
        return Err(CliError::Config("mu1 and mu2 must be nonnegative".into()));
    }
    if !(o.threshold > 0.0 && o.threshold < 1.0) {
        return Err(CliError::Config(format!(
            "threshold must lie in (0, 1), got {}",
            o.threshold
        )));
    }
    let (train, test) = match (&o.input, &o.test_input) {
        (Some(input), Some(test_input)) => {
            let train = load_libsvm(input, o.n_features)?;
            let test = load_libsvm(test_input, Some(train.n_features()))?;
            (train, test)
        }
        (Some(input), None) => split_train_test(
            &load_libsvm(input, o.n_features)?,
            o.train_fraction,
            cfg.seed,
        )?,
        (None, Some(_)) => return Err(CliError::Config("test_input needs input".into())),
        (None, None) => {
            let (ds, _) = synthetic_classification(o.samples, o.features, cfg.seed)?;
            split_train_test(&ds, o.train_fraction, cfg.seed)?
        }
    };
    let b = match &o.graph {
        Some(path) => {
            let b = read_triplets(open(path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            if b.cols() != train.n_features() {
                return Err(CliError::Input(format!(
                    "{}: graph has {} columns but the data have {} features",
                    path.display(),
                    b.cols(),
                    train.n_features()
                )));
            }
            b
        }
        None => build_graph_matrix(&train, o.threshold)?,
    };
    let edges = b.rows();
    let b_norm_sq = sparse_norm_sq(&b)?;
    let f = Logistic::new(Arc::new(train.samples.clone()), train.labels.clone(), o.mu1)?;
    let g: Arc<dyn ProxTerm> = if o.mu2 > 0.0 {
        Arc::new(L1Norm::new(o.mu2)?)
    } else {
        Arc::new(ZeroProx)
    };
    let problem = Problem::with_b_norm_sq(Arc::new(f), g, Arc::new(b), b_norm_sq)?;
    Ok(Prepared {
        problem,
        context: Context::Logreg { test, edges },
    })
}

fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    match cfg.experiment {
        Experiment::Logreg => prepare_logreg(cfg),
        Experiment::Ct => {
            let ct = CtInstance::new(cfg.ct)?;
            Ok(Prepared {
                problem: ct.problem()?,
                context: Context::Ct(ct),
            })
        }
        Experiment::Quad => {
            let toy = apdfp_core::problems::make_quadratic_toy(cfg.quad)?;
            Ok(Prepared {
                problem: toy.problem()?,
                context: Context::Quad(toy),
            })
        }
    }
}

struct JobOutput {
    spec: AlgoSpec,
    algorithm: Algorithm,
    result: RunResult,
    /// `(Omega1, Omega2, uncertified gap evaluations)` when gaps were traced.
    gap_info: Option<(f64, f64, usize)>,
}

fn run_job(
    cfg: &RunConfig,
    prep: &Prepared,
    spec: AlgoSpec,
    algorithm: Algorithm,
) -> CliResult<JobOutput> {
    let problem = &prep.problem;
    let config = SolverConfig {
        max_iters: cfg.max_iters,
        stop_tol: cfg.stop_tol,
        cadence: cfg.cadence,
        ..SolverConfig::default()
    };
    let mut monitor = DiagnosticMonitor::new(problem);
    let mut gap = false;
    match &prep.context {
        Context::Logreg { test, .. } => {
            monitor = monitor
                .with_metric(move |x| accuracy(x, &test.samples, &test.labels).unwrap_or(f64::NAN));
        }
        Context::Ct(ct) => {
            monitor = monitor.with_metric(move |x| psnr(x, &ct.phantom).unwrap_or(f64::NAN));
        }
        Context::Quad(toy) => {
            let spec = toy.gap_spec();
            monitor = monitor.with_gap(spec.clone());
            monitor.observe_start(&spec.primal_center, &spec.dual_center);
            gap = true;
        }
    }
    let result = algorithm.run(problem, &config, &mut monitor)?;
    let gap_info = (gap && result.trace.records().iter().any(|r| r.gap.is_some())).then(|| {
        let spec = match &prep.context {
            Context::Quad(toy) => toy.gap_spec(),
            _ => unreachable!("gaps are traced for the toy only"),
        };
        (
            (monitor.max_primal_dist() + spec.primal_radius).powi(2),
            (monitor.max_dual_dist() + spec.dual_radius).powi(2),
            monitor.uncertified(),
        )
    });
    Ok(JobOutput {
        spec,
        algorithm,
        result,
        gap_info,
    })
}

struct Reference {
    objective: f64,
    iterations: usize,
    residual: f64,
    source: &'static str,
}

fn run_reference(cfg: &RunConfig, prep: &Prepared) -> CliResult<Reference> {
    if let Context::Quad(toy) = &prep.context {
        return Ok(Reference {
            objective: toy.reference_objective()?,
            iterations: 0,
            residual: toy.residual,
            source: "active-set solve verified by the fixed-point residual",
        });
    }
    let config = SolverConfig {
        max_iters: cfg.reference_iters,
        stop_tol: None,
        cadence: Cadence::Every(cfg.reference_iters),
        ..SolverConfig::default()
    };
    let res = Algorithm::Pdfp(PdfpParams::default()).run(&prep.problem, &config, &mut NoMonitor)?;
    let last = res
        .trace
        .last()
        .expect("reference run records its final iteration");
    Ok(Reference {
        objective: last.objective,
        iterations: res.trace.iterations,
        residual: last.rel_err,
        source: "long PDFP run",
    })
}

fn rel_error(value: f64, reference: f64) -> f64 {
    (value - reference) / reference.abs().max(f64::MIN_POSITIVE)
}

/// First traced iteration whose relative objective error is at most `level`.
pub fn first_hit(trace: &Trace, reference: f64, level: f64) -> Option<usize> {
    trace.first_iter_where(|r| rel_error(r.objective, reference) <= level)
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".to_string(), |k| k.to_string())
}

fn create_file(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> CliResult<()> {
    let mut w = create_file(path)?;
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn write_image(dir: &Path, stem: &str, n: usize, data: &[f64]) -> CliResult<()> {
    write_with(&dir.join(format!("{stem}.pgm")), |w| {
        write_pgm(w, n, n, data, 0.0, 1.0)
    })?;
    write_with(&dir.join(format!("{stem}.raw")), |w| {
        write_raw(w, n, n, data)
    })
}

fn certificate_section(
    cfg: &RunConfig,
    problem: &Problem,
    job: &JobOutput,
    out: &mut String,
) -> CliResult<Option<(f64, f64)>> {
    let Some((omega1, omega2, uncertified)) = job.gap_info else {
        return Ok(None);
    };
    let series: Vec<(usize, f64)> = job
        .result
        .trace
        .records()
        .iter()
        .filter_map(|r| Some((r.iter, r.gap?)))
        .collect();
    let (lo, hi) = cfg.window;
    let slope = fit_rate(&series, lo, hi.min(job.result.trace.iterations))
        .ok()
        .map(|f| f.slope);
    let _ = writeln!(out, "[{}]", job.spec.label);
    let _ = writeln!(out, "slope_window {lo} {hi}");
    let _ = writeln!(
        out,
        "gap_slope {}",
        slope.map_or("-".into(), |s| format!("{s:.6}"))
    );
    let _ = writeln!(out, "uncertified_gaps {uncertified}");
    let mut pass_rate = None;
    if let Algorithm::Apdfp(p) = &job.algorithm {
        if p.theta == ThetaRule::Nesterov {
            let step: StepRule = p.step;
            let lambda = p.lambda.unwrap_or_else(|| problem.default_lambda());
            let report = certificate_check(problem, &series, step, lambda, omega1, omega2)?;
            let _ = writeln!(out, "omega1 {omega1:.16e}");
            let _ = writeln!(out, "omega2 {omega2:.16e}");
            let _ = writeln!(out, "shifted_radius {:.16e}", report.shifted_radius);
            let _ = writeln!(out, "certificate_pass_rate {:.6}", report.pass_rate());
            let _ = writeln!(out, "k,gap,bound,holds");
            for e in &report.entries {
                let _ = writeln!(out, "{},{:.16e},{:.16e},{}", e.k, e.gap, e.bound, e.holds);
            }
            pass_rate = Some(report.pass_rate());
        }
    }
    let _ = writeln!(out);
    Ok(slope.map(|s| (s, pass_rate.unwrap_or(f64::NAN))))
}

/// Outcome of one experiment command: the written directory and the
/// summary text (also saved as `summary.txt`).
pub struct ExperimentReport {
    pub out: PathBuf,
    pub summary: String,
}

pub fn run_experiment(cfg: &RunConfig) -> CliResult<ExperimentReport> {
    let prep = prepare(cfg)?;
    let jobs: Vec<(AlgoSpec, Algorithm)> = cfg
        .algorithms
        .iter()
        .map(|s| s.instantiate(&prep.problem).map(|a| (s.clone(), a)))
        .collect::<CliResult<_>>()?;

    // Independent runs over the shared problem; files are written afterwards.
    let (reference, outputs) = std::thread::scope(|scope| {
        let prep = &prep;
        let reference = scope.spawn(move || run_reference(cfg, prep));
        let handles: Vec<_> = jobs
            .into_iter()
            .map(|(spec, alg)| scope.spawn(move || run_job(cfg, prep, spec, alg)))
            .collect();
        let outputs: Vec<CliResult<JobOutput>> = handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect();
        (
            reference.join().expect("reference thread panicked"),
            outputs,
        )
    });
    let reference = reference?;
    let outputs: Vec<JobOutput> = outputs.into_iter().collect::<CliResult<_>>()?;

    let dir = &cfg.out;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut summary = String::new();
    let _ = writeln!(summary, "experiment {}", cfg.experiment.name());
    let _ = writeln!(
        summary,
        "dimensions x={} y={}",
        prep.problem.x_dim(),
        prep.problem.y_dim()
    );
    let _ = writeln!(summary, "lipschitz {:.16e}", prep.problem.lipschitz());
    let _ = writeln!(summary, "b_norm_sq {:.16e}", prep.problem.b_norm_sq());
    if let Context::Logreg { edges, .. } = &prep.context {
        let _ = writeln!(summary, "graph_edges {edges}");
    }
    let _ = writeln!(summary, "reference_objective {:.16e}", reference.objective);
    write_with(&dir.join("reference.txt"), |w| {
        writeln!(w, "source {}", reference.source)?;
        writeln!(w, "objective {:.16e}", reference.objective)?;
        writeln!(w, "iterations {}", reference.iterations)?;
        writeln!(w, "residual {:.16e}", reference.residual)
    })?;

    let mut certificate = String::new();
    for job in &outputs {
        let label = &job.spec.label;
        let trace = &job.result.trace;
        write_with(&dir.join(format!("{label}.csv")), |w| {
            write_trace(trace, cfg.wall_clock, w)
        })?;
        write_with(&dir.join(format!("{label}_timing.csv")), |w| {
            write_timing(trace, w)
        })?;
        let last = trace.last().expect("every run records its final iteration");
        let final_objective = prep.problem.objective(&job.result.x);
        let hits: Vec<String> = HIT_LEVELS
            .iter()
            .map(|&l| {
                format!(
                    "first_{l:e}={}",
                    fmt_opt(first_hit(trace, reference.objective, l))
                )
            })
            .collect();
        let _ = write!(
            summary,
            "{label} iterations={} stop={:?} final_objective={final_objective:.16e} rel_objective_error={:.6e} {}",
            trace.iterations,
            trace.stop,
            rel_error(final_objective, reference.objective),
            hits.join(" "),
        );
        if let Some(m) = last.metric {
            let _ = write!(summary, " final_metric={m:.6}");
        }
        if let Some(g) = last.gap {
            let _ = write!(summary, " final_gap={g:.6e}");
        }
        if let Some((slope, rate)) = certificate_section(cfg, &prep.problem, job, &mut certificate)?
        {
            let _ = write!(summary, " gap_slope={slope:.4}");
            if rate.is_finite() {
                let _ = write!(summary, " certificate_pass_rate={rate:.4}");
            }
        }
        let _ = writeln!(summary);
        if let Context::Ct(ct) = &prep.context {
            write_image(dir, label, ct.spec.n, &job.result.x)?;
        }
    }
    if let Context::Ct(ct) = &prep.context {
        write_image(dir, "phantom", ct.spec.n, &ct.phantom)?;
    }
    if let Context::Quad(toy) = &prep.context {
        let mut head = String::new();
        let q = toy.spec;
        let _ = writeln!(
            head,
            "toy dim={} rows={} mu={} condition={} b_scale={} seed={}",
            q.dim, q.rows, q.mu, q.condition, q.b_scale, q.seed
        );
        let _ = writeln!(head, "reference_residual {:.6e}\n", toy.residual);
        write_with(&dir.join("certificate.txt"), |w| {
            w.write_all((head + &certificate).as_bytes())
        })?;
    }
    write_with(&dir.join("summary.txt"), |w| {
        w.write_all(summary.as_bytes())
    })?;
    Ok(ExperimentReport {
        out: dir.clone(),
        summary,
    })
}

pub struct ScheduleOutcome {
    pub text: String,
    pub passed: bool,
}

/// Checks the accelerated schedule (or a constant-step override) for `K` steps.
pub fn run_check_schedule(
    lipschitz: f64,
    c: f64,
    k_max: usize,
    gamma: Option<f64>,
) -> CliResult<ScheduleOutcome> {
    if k_max == 0 {
        return Err(CliError::Config("K must be at least 1".into()));
    }
    let (theta, mut gammas) = schedule_sequences(k_max, lipschitz, c)?;
    if let Some(g) = gamma {
        gammas.iter_mut().for_each(|v| *v = g);
    }
    let report = check_schedule(&theta, &gammas, lipschitz)?;
    let mut text = String::new();
    let step = gamma.map_or_else(
        || format!("1/(L_f + c k), c = {c}"),
        |g| format!("{g} (constant)"),
    );
    let _ = writeln!(
        text,
        "L_f = {lipschitz}, K = {k_max}, theta_k = 2/(k+1), gamma_k = {step}"
    );
    for clause in &report.clauses {
        let _ = writeln!(
            text,
            "{:<4} {:<70} worst slack {:.6e} at k = {}",
            if clause.passed { "PASS" } else { "FAIL" },
            clause.name,
            clause.worst_slack,
            clause.worst_k
        );
    }
    let _ = writeln!(
        text,
        "{}",
        if report.passed() {
            "all clauses pass"
        } else {
            "schedule rejected"
        }
    );
    Ok(ScheduleOutcome {
        text,
        passed: report.passed(),
    })
}
