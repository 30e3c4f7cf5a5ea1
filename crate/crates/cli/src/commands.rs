use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use viscofix::diagnostics::{
    export_trace, proof_step_report, ProofStepReport, ReportInputs, TraceFormat,
};
use viscofix::operators::{certify_norm_attainable_seeded, make_operator, NACertificate};
use viscofix::schemes::{
    anchored_implicit_solve, make_schedule, retraction_eval, viscosity_implicit_solve, Diagnostic,
    Problem, Solve, StepMap,
};
use viscofix::semigroup::{check_representation, make_family, FamilySpec, RepresentationReport};
use viscofix::{Matrix, Operator, Vector};

use crate::config::{config_hash, read_json, set_path, LoadedConfig, RunConfig, SchemeKind};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Stopped early: residual and step length both within `outer_tol`.
    Converged,
    /// Ran the whole schedule without a non-convergence diagnostic.
    Completed,
    NoCommonFixedPoint,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Converged | RunStatus::Completed => 0,
            RunStatus::NoCommonFixedPoint => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetractionEntry {
    pub anchor: Vector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<Vector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub seed: u64,
    pub problem_id: String,
    pub scheme: SchemeKind,
    pub schedule: String,
    pub status: RunStatus,
    pub limit: Vector,
    pub iterations: usize,
    pub final_fix_residual: f64,
    pub final_implicit_residual: f64,
    pub total_inner_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<Diagnostic>,
    pub report: ProofStepReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retraction: Option<Vec<RetractionEntry>>,
}

fn build_step(config: &RunConfig) -> Result<StepMap, CliError> {
    let p = &config.problem;
    let seed = config.options.seed;
    match (&p.operator, &p.family) {
        (Some(op), _) => StepMap::single(make_operator(op)?, seed).map_err(CliError::config),
        (_, Some(fam)) => StepMap::round_robin(make_family(fam)?, p.indices.clone(), seed)
            .map_err(CliError::config),
        (None, None) => Err(CliError::config("problem needs an operator or a family")),
    }
}

fn build_problem(config: &RunConfig, step: StepMap) -> Result<Problem, CliError> {
    let p = &config.problem;
    let built = match p.scheme {
        SchemeKind::Viscosity => {
            let f = make_operator(p.contraction.as_ref().expect("validated"))?;
            Problem::new(p.id.clone(), f, step)
        }
        SchemeKind::Anchored => {
            Problem::anchored(p.id.clone(), p.anchor.as_ref().expect("validated"), step)
        }
    };
    built.map_err(CliError::config)
}

/// Limit the Step (iv) pairing is measured against, when it is known.
fn known_limit(config: &RunConfig, problem: &Problem) -> Option<Vector> {
    if let Some(l) = &config.problem.oracle_limit {
        return Some(l.clone());
    }
    match (config.problem.scheme, &config.problem.anchor) {
        (SchemeKind::Anchored, Some(x)) => problem
            .step
            .linear_fixed_set(config.options.tolerance_policy.abs_tol)
            .ok()
            .and_then(|fix| fix.project(x).ok()),
        _ => None,
    }
}

/// Solves the configured problem, runs the checks, and writes `trace.csv`,
/// `trace.json` and `summary.json` into `out_dir`.
pub fn execute_run(loaded: &LoadedConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    let config = &loaded.config;
    let hash = loaded.hash();
    let opts = &config.options;
    let schedule = make_schedule(&config.schedule)?;
    let step = build_step(config)?;
    let problem = build_problem(config, step.clone())?;
    if let Some(p) = &config.problem.fixed_point {
        if p.dim() != problem.dim() {
            return Err(CliError::config(
                "problem.fixed_point has the wrong dimension",
            ));
        }
    }

    let Solve {
        result,
        mut trace,
        inner,
        diagnostic,
    } = match config.problem.scheme {
        SchemeKind::Viscosity => viscosity_implicit_solve(&problem, &schedule, opts)?,
        SchemeKind::Anchored => anchored_implicit_solve(
            config.problem.anchor.as_ref().expect("validated"),
            &step,
            schedule.n_max(),
            opts,
        )?,
    };
    trace.metadata.problem_id = config.problem.id.clone();
    trace.metadata.config_hash = Some(hash.clone());
    trace.metadata.seed = config.seed;

    let retraction = match &config.anchors {
        Some(anchors) => Some(
            retraction_eval(&step, anchors, schedule.n_max(), opts)?
                .into_iter()
                .map(|rv| match rv.outcome {
                    Ok(r) => RetractionEntry {
                        anchor: rv.anchor,
                        limit: Some(r.point),
                        error: None,
                    },
                    Err(e) => RetractionEntry {
                        anchor: rv.anchor,
                        limit: None,
                        error: Some(e.to_string()),
                    },
                })
                .collect::<Vec<_>>(),
        ),
        None => None,
    };
    let pairs: Option<Vec<(Vector, Vector)>> = retraction.as_ref().map(|entries| {
        entries
            .iter()
            .filter_map(|e| e.limit.clone().map(|l| (e.anchor.clone(), l)))
            .collect()
    });

    let fixed_point = config.problem.fixed_point.clone().or_else(|| {
        step.linear_fixed_set(opts.tolerance_policy.abs_tol)
            .ok()
            .map(|_| Vector::zeros(problem.dim()))
    });
    let limit = known_limit(config, &problem);
    let vi_anchor = match (&limit, config.problem.scheme) {
        (Some(l), SchemeKind::Viscosity) => Some(problem.contraction.apply(l)?),
        (Some(_), SchemeKind::Anchored) => config.problem.anchor.clone(),
        (None, _) => None,
    };
    let inputs = ReportInputs {
        fixed_point: fixed_point.as_ref(),
        vi: vi_anchor.as_ref().zip(limit.as_ref()),
        oracle_limit: config.problem.oracle_limit.as_ref(),
        retraction: pairs.as_deref().filter(|p| p.len() >= 2),
    };
    let report = proof_step_report(&trace, &problem, opts, &inputs).map_err(CliError::config)?;

    let status = match (&diagnostic, result.converged) {
        (Some(_), _) => RunStatus::NoCommonFixedPoint,
        (None, true) => RunStatus::Converged,
        (None, false) => RunStatus::Completed,
    };
    let last = trace.last().expect("solves record at least one step");
    let summary = RunSummary {
        config_hash: hash,
        seed: config.seed,
        problem_id: config.problem.id.clone(),
        scheme: config.problem.scheme,
        schedule: trace.metadata.schedule_kind.clone(),
        status,
        limit: result.point.clone(),
        iterations: result.iterations,
        final_fix_residual: result.residual,
        final_implicit_residual: last.implicit_residual,
        total_inner_iterations: inner.iter().map(|s| s.iterations).sum(),
        diagnostic,
        report,
        retraction,
    };

    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    export_trace(&trace, TraceFormat::Csv, &out_dir.join("trace.csv"))?;
    export_trace(&trace, TraceFormat::Json, &out_dir.join("trace.json"))?;
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    fs::write(out_dir.join("summary.json"), text).map_err(|e| CliError::io(out_dir, e))?;
    Ok(summary)
}

pub fn cmd_run(
    path: &Path,
    seed: Option<u64>,
    tol: Option<f64>,
    quiet: bool,
) -> Result<i32, CliError> {
    let loaded = LoadedConfig::from_value(read_json(path)?, seed, tol)?;
    let out_dir = loaded.config.output_dir.clone();
    let summary = execute_run(&loaded, &out_dir)?;
    if !quiet {
        println!(
            "{}: {} after {} steps, fixed-point residual {:.3e}, {} inner iterations",
            summary.problem_id,
            status_label(summary.status),
            summary.iterations,
            summary.final_fix_residual,
            summary.total_inner_iterations
        );
        if let Some(Diagnostic::NoCommonFixedPoint { head, tail }) = summary.diagnostic {
            println!(
                "no common fixed point: residual stayed at {tail:.3e} (started at {head:.3e})"
            );
        }
        println!("wrote {}", out_dir.display());
    }
    Ok(summary.status.exit_code())
}

fn status_label(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Converged => "converged",
        RunStatus::Completed => "completed",
        RunStatus::NoCommonFixedPoint => "stalled",
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Bare(Matrix),
    Wrapped { matrix: Matrix },
}

#[derive(Debug, Serialize)]
pub struct CertificateOutput {
    #[serde(flatten)]
    pub certificate: NACertificate,
    pub tol: f64,
    pub config_hash: String,
    pub seed: u64,
}

pub fn cmd_certify_na(path: &Path, tol: f64, seed: u64) -> Result<i32, CliError> {
    if !(tol > 0.0) {
        return Err(CliError::config(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let value = read_json(path)?;
    let hash = config_hash(&value);
    let matrix = match serde_json::from_value::<MatrixFile>(value).map_err(|_| {
        CliError::config("expected a matrix as a list of equal-length rows of finite numbers")
    })? {
        MatrixFile::Bare(m) | MatrixFile::Wrapped { matrix: m } => m,
    };
    let op = Operator::linear(matrix).map_err(CliError::config)?;
    let certificate = certify_norm_attainable_seeded(&op, tol, seed)?;
    let ok = certificate.residual <= tol;
    let out = CertificateOutput {
        certificate,
        tol,
        config_hash: hash,
        seed,
    };
    println!(
        "{}",
        serde_json::to_string(&out).expect("certificate serializes")
    );
    Ok(if ok { 0 } else { 2 })
}

#[derive(Debug, Serialize)]
pub struct FamilyOutput {
    #[serde(flatten)]
    pub report: RepresentationReport,
    pub config_hash: String,
    pub seed: u64,
}

/// Accepts a bare family spec, `{"family": …}`, or a run config whose
/// problem has a family.
fn family_spec(value: &Value) -> Result<FamilySpec, CliError> {
    let spec = if value.get("kind").is_some() {
        value
    } else if let Some(f) = value.get("family") {
        f
    } else if let Some(f) = value.get("problem").and_then(|p| p.get("family")) {
        f
    } else {
        return Err(CliError::config("no family spec found"));
    };
    serde_json::from_value(spec.clone())
        .map_err(|e| CliError::config(format!("invalid family spec: {e}")))
}

pub fn cmd_check_family(
    path: &Path,
    pairs: usize,
    vectors: usize,
    tol: f64,
    seed: u64,
) -> Result<i32, CliError> {
    if pairs == 0 || vectors == 0 {
        return Err(CliError::config("--pairs and --vectors must be positive"));
    }
    let value = read_json(path)?;
    let family = make_family(&family_spec(&value)?).map_err(CliError::config)?;
    let report = check_representation(&family, pairs, vectors, tol, seed)?;
    let accepted = report.accepted;
    let out = FamilyOutput {
        report,
        config_hash: config_hash(&value),
        seed,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("report serializes")
    );
    Ok(if accepted { 0 } else { 2 })
}

#[derive(Debug, Serialize)]
struct SweepRow {
    value: f64,
    status: String,
    final_fix_residual: Option<f64>,
    step5_distance: Option<f64>,
    total_inner_iterations: Option<usize>,
    config_hash: Option<String>,
    error: Option<String>,
}

/// Runs one solve per value of the dotted parameter, concurrently, each in
/// its own subdirectory of the base config's `output_dir`, then writes
/// `sweep_summary.csv` there.
pub fn cmd_sweep(
    path: &Path,
    param: &str,
    values: &[f64],
    seed: Option<u64>,
    tol: Option<f64>,
    quiet: bool,
) -> Result<i32, CliError> {
    if values.is_empty() {
        return Err(CliError::config("no sweep values given"));
    }
    let base = LoadedConfig::from_value(read_json(path)?, seed, tol)?;
    let base_dir = base.config.output_dir.clone();
    // surface a bad path as a config error before any run starts
    set_path(&mut base.value.clone(), param, values[0])?;

    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| {
            let dir: PathBuf = base_dir.join(format!("{param}={v}"));
            let mut value = base.value.clone();
            let outcome = set_path(&mut value, param, v)
                .and_then(|_| LoadedConfig::from_value(value, None, None))
                .and_then(|loaded| {
                    let h = loaded.hash();
                    execute_run(&loaded, &dir).map(|s| (s, h))
                });
            match outcome {
                Ok((s, h)) => SweepRow {
                    value: v,
                    status: status_label(s.status).into(),
                    final_fix_residual: Some(s.final_fix_residual),
                    step5_distance: Some(s.report.step5_distance),
                    total_inner_iterations: Some(s.total_inner_iterations),
                    config_hash: Some(h),
                    error: None,
                },
                Err(e) => SweepRow {
                    value: v,
                    status: "error".into(),
                    final_fix_residual: None,
                    step5_distance: None,
                    total_inner_iterations: None,
                    config_hash: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    fs::create_dir_all(&base_dir).map_err(|e| CliError::io(&base_dir, e))?;
    let summary_path = base_dir.join("sweep_summary.csv");
    let mut file = fs::File::create(&summary_path).map_err(|e| CliError::io(&summary_path, e))?;
    let meta =
        serde_json::json!({"config_hash": base.hash(), "seed": base.config.seed, "param": param});
    writeln!(file, "# {meta}").map_err(|e| CliError::io(&summary_path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in &rows {
        w.serialize(r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(&summary_path, e))?;

    let ok = rows
        .iter()
        .filter(|r| r.status == "converged" || r.status == "completed")
        .count();
    if !quiet {
        for r in &rows {
            match &r.error {
                Some(e) => println!("{param}={}: error: {e}", r.value),
                None => println!(
                    "{param}={}: {}, residual {:.3e}",
                    r.value,
                    r.status,
                    r.final_fix_residual.unwrap_or(f64::NAN)
                ),
            }
        }
        println!(
            "{ok} of {} runs finished; wrote {}",
            rows.len(),
            summary_path.display()
        );
    }
    Ok(if ok > 0 { 0 } else { 2 })
}
