//! Acceptance criteria, one pass/fail line each. Exits nonzero if any fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use viscofix::diagnostics::{
    check_retraction_nonexpansive, check_step2_bound, check_step4_vi, check_step5_convergence,
    ConvergenceTrace,
};
use viscofix::operators::certify_norm_attainable_seeded;
use viscofix::sampling::Sampler;
use viscofix::schemes::{
    anchored_implicit_solve, make_schedule, picard_iterate, retraction_eval,
    viscosity_implicit_solve, EpsilonSchedule, Problem, ScheduleSpec, Solve, SolveOptions, StepMap,
};
use viscofix::semigroup::{check_representation, make_family, make_power_family, FamilySpec};
use viscofix::{Matrix, Operator, Vector};
use viscofix_cli::commands::execute_run;
use viscofix_cli::config::{read_json, LoadedConfig};

type Check = Result<(bool, String), String>;
type Criterion = (&'static str, Box<dyn Fn() -> Check>);

const SEED: u64 = 42;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn v(x: &[f64]) -> Vector {
    Vector::new(x.to_vec()).unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn opts(outer_tol: f64, max_iter: usize) -> SolveOptions {
    let mut o = SolveOptions {
        outer_tol,
        seed: SEED,
        ..SolveOptions::default()
    };
    o.tolerance_policy.max_iter = max_iter;
    o
}

fn harmonic(n_max: usize) -> EpsilonSchedule {
    make_schedule(&ScheduleSpec::Harmonic { p: 1.0, n_max }).unwrap()
}

struct Catalog {
    name: &'static str,
    problem: Problem,
    schedule: EpsilonSchedule,
    opts: SolveOptions,
    anchored: Option<Vector>,
}

impl Catalog {
    fn solve(&self) -> Result<Solve, String> {
        match &self.anchored {
            Some(a) => {
                anchored_implicit_solve(a, &self.problem.step, self.schedule.n_max(), &self.opts)
            }
            None => viscosity_implicit_solve(&self.problem, &self.schedule, &self.opts),
        }
        .map_err(err)
    }
}

fn ball() -> Catalog {
    let t = Operator::projection_ball(Vector::zeros(2), 1.0).unwrap();
    let f = Operator::constant(v(&[2.0, 0.0]));
    Catalog {
        name: "ball",
        problem: Problem::new("ball", f, StepMap::single(t, SEED).unwrap()).unwrap(),
        schedule: harmonic(200),
        opts: opts(1e-10, 10_000),
        anchored: None,
    }
}

fn anchored_scalar() -> Catalog {
    let anchor = v(&[1.0]);
    let step = StepMap::single(Operator::negation(1).unwrap(), SEED).unwrap();
    Catalog {
        name: "anchored-scalar",
        problem: Problem::anchored("anchored-scalar", &anchor, step).unwrap(),
        schedule: EpsilonSchedule::anchored(200).unwrap(),
        opts: opts(1e-10, 10_000),
        anchored: Some(anchor),
    }
}

fn rotation_step() -> StepMap {
    let family = make_family(&FamilySpec::RotationFlow {
        rates: vec![1.0],
        grid: vec![0.5, 1.0, 1.5, 2.0],
    })
    .unwrap();
    StepMap::round_robin(family, Some(vec![1.0]), SEED).unwrap()
}

fn rotation_contraction() -> Operator {
    Operator::affine(Matrix::diag(&[0.5, 0.5]), v(&[1.0, 0.0])).unwrap()
}

fn rotation(n_max: usize, outer_tol: f64, max_iter: usize) -> Catalog {
    Catalog {
        name: "rotation-flow",
        problem: Problem::new("rotation-flow", rotation_contraction(), rotation_step()).unwrap(),
        schedule: harmonic(n_max),
        opts: opts(outer_tol, max_iter),
        anchored: None,
    }
}

fn max_point_error(trace: &ConvergenceTrace, oracle: impl Fn(usize, f64) -> Vector) -> f64 {
    trace
        .steps
        .iter()
        .map(|s| s.point.dist(&oracle(s.n, s.eps)).unwrap())
        .fold(0.0, f64::max)
}

fn ac1() -> Check {
    let start = Instant::now();
    let c = ball();
    let solve = c.solve()?;
    let point_err = max_point_error(&solve.trace, |_, e| v(&[1.0 + e, 0.0]));
    let dist = check_step5_convergence(&solve.trace, Some(&v(&[1.0, 0.0]))).map_err(err)?;
    let dist_err = (dist - 1.0 / 201.0).abs();
    let secs = start.elapsed().as_secs_f64();
    let steps = solve.trace.len();
    Ok((
        steps == 200 && point_err <= 1e-8 && dist_err <= 1e-8 && secs < 1.0,
        format!(
            "ball projection, {steps} steps: max |xi_n - (1+eps_n)e1| = {point_err:.2e} (<= 1e-8), \
             |dist - 1/201| = {dist_err:.2e} (<= 1e-8), {secs:.3}s (< 1s)"
        ),
    ))
}

fn ac2() -> Check {
    let start = Instant::now();
    let c = anchored_scalar();
    let solve = c.solve()?;
    let point_err = max_point_error(&solve.trace, |n, _| v(&[1.0 / (2.0 * n as f64 - 1.0)]));
    let step2 = check_step2_bound(&solve.trace, &c.problem, &v(&[0.0]), &c.opts).map_err(err)?;
    let step4 = check_step4_vi(&solve.trace, &v(&[1.0]), &v(&[0.0]), 1e-6).map_err(err)?;
    let secs = start.elapsed().as_secs_f64();
    let steps = solve.trace.len();
    Ok((
        steps == 200 && point_err <= 1e-10 && step2.margin <= 0.0 && step4.fit_residual <= 0.2 && secs < 1.0,
        format!(
            "anchored scalar, {steps} steps: max |xi_n - 1/(2n-1)| = {point_err:.2e} (<= 1e-10), \
             step (ii) margin {:.2e} (<= 0), step (iv) fit residual {:.2e} (<= 0.2), {secs:.3}s (< 1s)",
            step2.margin, step4.fit_residual
        ),
    ))
}

/// `(1 − ε/2)ξ − (1 − ε)R(1)ξ = ε e1` solved by Cramer's rule.
fn rotation_oracle(eps: f64) -> Vector {
    let (s, c) = 1.0f64.sin_cos();
    let a = 1.0 - eps / 2.0 - (1.0 - eps) * c;
    let b = (1.0 - eps) * s;
    // [[a, b], [-b, a]] x = [eps, 0]
    let det = a * a + b * b;
    v(&[a * eps / det, b * eps / det])
}

fn ac3() -> Check {
    let start = Instant::now();
    let short = rotation(200, 1e-10, 10_000).solve()?;
    let point_err = max_point_error(&short.trace, |_, e| rotation_oracle(e));
    let norm200 = viscofix::norm(&short.result.point);
    let long = rotation(2000, 1e-6, 1_000_000).solve()?;
    let norm2000 = viscofix::norm(&long.result.point);
    let secs = start.elapsed().as_secs_f64();
    Ok((
        short.trace.len() == 200 && long.trace.len() == 2000 && point_err <= 1e-8 && norm200 < 1e-2
            && norm2000 < 1e-3 && secs < 5.0,
        format!(
            "rotation flow: max per-n oracle error {point_err:.2e} (<= 1e-8), |xi_200| = {norm200:.2e} (< 1e-2), \
             |xi_2000| = {norm2000:.2e} (< 1e-3), {secs:.3}s (< 5s)"
        ),
    ))
}

/// `‖g(x) − g(y)‖ / ‖x − y‖` for the inner map `g = εf + (1−ε)T`. When both
/// maps are affine the difference is pushed through their linear parts, so
/// the ratio is not swamped by rounding in the iterates themselves.
fn inner_ratio(
    eps: f64,
    f: &Operator,
    f_linear: Option<&Matrix>,
    t: &Operator,
    x: &Vector,
    y: &Vector,
) -> f64 {
    let d = x.sub(y).unwrap();
    let image = match (f_linear, t.linear_matrix()) {
        (Some(fm), Some(tm)) => {
            let fd = fm.mul_vector(&d).unwrap();
            let td = tm.mul_vector(&d).unwrap();
            fd.scale(eps).add(&td.scale(1.0 - eps)).unwrap()
        }
        _ => {
            let fd = f.apply(x).unwrap().sub(&f.apply(y).unwrap()).unwrap();
            let td = t.apply(x).unwrap().sub(&t.apply(y).unwrap()).unwrap();
            fd.scale(eps).add(&td.scale(1.0 - eps)).unwrap()
        }
    };
    viscofix::norm(&image) / viscofix::norm(&d)
}

/// Replays every inner solve of a catalog run and measures the contraction
/// factor of the inner map between successive iterates against
/// `1 − ε(1−α)`.
fn ac4() -> Check {
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_raw = f64::NEG_INFINITY;
    let mut worst_residual = f64::NEG_INFINITY;
    let mut inner_steps = 0usize;
    let catalog = [
        (ball(), None),
        (anchored_scalar(), Some(Matrix::zeros(1, 1))),
        (
            rotation(200, 1e-10, 10_000),
            Some(Matrix::diag(&[0.5, 0.5])),
        ),
    ];
    for (c, f_linear) in catalog {
        let solve = c.solve()?;
        let f = &c.problem.contraction;
        let alpha = c.problem.alpha;
        let mut prev = Vector::zeros(c.problem.dim());
        for s in &solve.trace.steps {
            let eps = s.eps;
            let t = c.problem.step.operator_at(s.n);
            let q = 1.0 - eps * (1.0 - alpha);
            let delta = c.opts.inner_tol(eps);
            let mut iterates = vec![prev.clone()];
            let g = |x: &Vector| {
                let y = Vector::new(
                    f.apply(x)?
                        .as_slice()
                        .iter()
                        .zip(t.apply(x)?.as_slice())
                        .map(|(a, b)| eps * a + (1.0 - eps) * b)
                        .collect(),
                )?;
                iterates.push(y.clone());
                Ok(y)
            };
            let (res, _) = picard_iterate(g, q, &prev, delta, c.opts.tolerance_policy.max_iter)
                .map_err(err)?;
            if res.point != s.point {
                return Ok((
                    false,
                    format!("{}: replayed inner solve differs at n = {}", c.name, s.n),
                ));
            }
            for w in iterates.windows(3) {
                if w[1] == w[0] {
                    continue;
                }
                inner_steps += 1;
                let ratio = inner_ratio(eps, f, f_linear.as_ref(), t, &w[1], &w[0]);
                worst_excess = worst_excess.max(ratio - (q + 1e-12));
                let raw = w[2].dist(&w[1]).unwrap() / w[1].dist(&w[0]).unwrap();
                worst_raw = worst_raw.max(raw - q);
            }
            worst_residual = worst_residual.max(s.implicit_residual - delta);
            prev = s.point.clone();
        }
    }
    Ok((
        worst_excess <= 0.0 && worst_residual <= 0.0,
        format!(
            "inner contraction over {inner_steps} steps on 3 problems: \
             max(factor - (1 - eps(1-alpha) + 1e-12)) = {worst_excess:.2e} (<= 0), \
             max(implicit residual - delta_n) = {worst_residual:.2e} (<= 0); \
             raw step-ratio excess incl. rounding {worst_raw:.2e}"
        ),
    ))
}

fn ac5() -> Check {
    let anchors1 = |xs: &[f64]| xs.iter().map(|&x| v(&[x])).collect::<Vec<_>>();
    let anchors2 = vec![
        v(&[2.0, 0.0]),
        v(&[0.0, 1.5]),
        v(&[-3.0, 1.0]),
        v(&[0.3, -0.2]),
        v(&[1.0, 1.0]),
        v(&[-0.5, -2.5]),
    ];
    let cases = [
        (ball(), anchors2.clone()),
        (anchored_scalar(), anchors1(&[1.0, -2.0, 0.5, 3.0, -0.25])),
        (rotation(200, 1e-10, 10_000), anchors2),
    ];
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    let mut ok = true;
    for (c, anchors) in cases {
        let values =
            retraction_eval(&c.problem.step, &anchors, c.schedule.n_max(), &c.opts).map_err(err)?;
        let pairs: Vec<(Vector, Vector)> = values
            .into_iter()
            .map(|r| r.outcome.map(|p| (r.anchor, p.point)))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let report = check_retraction_nonexpansive(&pairs, 1e-5).map_err(err)?;
        ok &= report.ok && pairs.len() >= 5;
        worst = worst.max(report.worst_margin);
        parts.push(format!(
            "{} {} anchors margin {:.2e}",
            c.name,
            pairs.len(),
            report.worst_margin
        ));
    }
    Ok((
        ok,
        format!(
            "retraction: {}; worst margin {worst:.2e} (<= 1e-5)",
            parts.join(", ")
        ),
    ))
}

/// Largest root of a monic polynomial with real roots in `[0, hi]`, by a
/// downward scan for a sign change followed by bisection.
fn largest_root(coeffs: &[f64], hi: f64) -> f64 {
    let p = |x: f64| coeffs.iter().fold(0.0, |acc, &c| acc * x + c);
    let cells = 100_000;
    let h = hi / cells as f64;
    let mut upper = hi;
    let mut lower = hi;
    for k in (0..cells).rev() {
        lower = h * k as f64;
        if p(lower) <= 0.0 {
            break;
        }
        upper = lower;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lower + upper);
        if p(mid) <= 0.0 {
            lower = mid;
        } else {
            upper = mid;
        }
    }
    0.5 * (lower + upper)
}

fn charpoly_sigma(m: &Matrix) -> f64 {
    let g = m.transpose().matmul(m).unwrap();
    let e = |i: usize, j: usize| g.get(i, j);
    let tr: f64 = (0..g.rows()).map(|i| e(i, i)).sum();
    let coeffs = match g.rows() {
        2 => vec![1.0, -tr, e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0)],
        3 => {
            let minors = e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0) + e(0, 0) * e(2, 2)
                - e(0, 2) * e(2, 0)
                + e(1, 1) * e(2, 2)
                - e(1, 2) * e(2, 1);
            let det = e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
                - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
                + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0));
            vec![1.0, -tr, minors, -det]
        }
        _ => unreachable!("oracle covers d <= 3"),
    };
    largest_root(&coeffs, tr + 1.0).sqrt()
}

fn ac6() -> Check {
    let start = Instant::now();
    let mut sampler = Sampler::new(SEED);
    let mut worst_residual: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let mut oracle_cases = 0;
    for i in 0..100 {
        let d = 2 + i % 49;
        let entries = sampler.matrix_entries(d * d);
        let m = Matrix::from_rows(entries.chunks(d).map(|r| r.to_vec()).collect()).map_err(err)?;
        let op = Operator::linear(m.clone()).map_err(err)?;
        let cert = certify_norm_attainable_seeded(&op, 1e-12, SEED).map_err(err)?;
        let attained = viscofix::norm(&op.apply(&cert.attaining_vector).map_err(err)?);
        let unit_err = (viscofix::norm(&cert.attaining_vector) - 1.0).abs();
        worst_residual = worst_residual
            .max((attained - cert.operator_norm).abs())
            .max(unit_err);
        if d <= 3 {
            oracle_cases += 1;
            worst_oracle = worst_oracle.max((charpoly_sigma(&m) - cert.operator_norm).abs());
        }
    }
    let diag: Vec<f64> = (1..=20).map(|k| k as f64 / (k as f64 + 1.0)).collect();
    let cert = certify_norm_attainable_seeded(
        &Operator::linear(Matrix::diag(&diag)).map_err(err)?,
        1e-10,
        SEED,
    )
    .map_err(err)?;
    let exact = cert.operator_norm == 20.0 / 21.0 && cert.attaining_vector == Vector::basis(20, 19);
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst_residual <= 1e-8 && worst_oracle <= 1e-8 && oracle_cases > 0 && exact && secs < 10.0,
        format!(
            "norm attainment on 100 matrices, d in 2..=50: max |‖Sx‖ - sigma| = {worst_residual:.2e} (<= 1e-8), \
             char-poly oracle on {oracle_cases} cases max gap {worst_oracle:.2e} (<= 1e-8), \
             diag k/(k+1) d=20 exact sigma=20/21 and e_20: {exact}, {secs:.3}s (< 10s)"
        ),
    ))
}

fn ac7() -> Check {
    let power = make_power_family(Operator::rotation(3, 0, 2, 0.3).map_err(err)?).map_err(err)?;
    let flow = make_family(&FamilySpec::RotationFlow {
        rates: vec![1.0, 0.5],
        grid: vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
    })
    .map_err(err)?;
    let planted_value = read_json(&configs().join("planted_defect.json")).map_err(err)?;
    let planted_spec: FamilySpec =
        serde_json::from_value(planted_value["family"].clone()).map_err(err)?;
    let planted = make_family(&planted_spec).map_err(err)?;
    let rp = check_representation(&power, 100, 3, 1e-12, SEED).map_err(err)?;
    let rf = check_representation(&flow, 100, 3, 1e-12, SEED).map_err(err)?;
    let rd = check_representation(&planted, 100, 3, 1e-12, SEED).map_err(err)?;
    Ok((
        rp.max_defect <= 1e-12
            && rf.max_defect <= 1e-12
            && rd.max_defect >= 0.09
            && rp.samples_checked >= 100
            && rf.samples_checked >= 100
            && rd.samples_checked >= 100,
        format!(
            "semigroup law: power defect {:.2e} over {} triples, rotation-flow defect {:.2e} over {} (<= 1e-12); \
             planted defect {:.3} over {} (>= 0.09)",
            rp.max_defect, rp.samples_checked, rf.max_defect, rf.samples_checked, rd.max_defect, rd.samples_checked
        ),
    ))
}

fn ac8(suite_start: Instant) -> Check {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut identical = true;
    let mut files = 0;
    for name in ["ball.json", "anchored_scalar.json", "rotation_flow.json"] {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let loaded = LoadedConfig::from_value(
                read_json(&configs().join(name)).map_err(err)?,
                Some(SEED),
                None,
            )
            .map_err(err)?;
            let dir = tmp.path().join(format!("{name}-{run}"));
            execute_run(&loaded, &dir).map_err(err)?;
            outputs.push(dir);
        }
        for file in ["trace.csv", "trace.json", "summary.json"] {
            let a = fs::read(outputs[0].join(file)).map_err(err)?;
            let b = fs::read(outputs[1].join(file)).map_err(err)?;
            identical &= a == b;
            files += 1;
        }
    }
    let secs = suite_start.elapsed().as_secs_f64();
    Ok((
        identical && secs < 60.0,
        format!("determinism: {files} artifact pairs byte-identical: {identical}; acceptance run {secs:.2}s (< 60s)"),
    ))
}

fn main() {
    let start = Instant::now();
    let criteria: Vec<Criterion> = vec![
        ("AC1", Box::new(ac1)),
        ("AC2", Box::new(ac2)),
        ("AC3", Box::new(ac3)),
        ("AC4", Box::new(ac4)),
        ("AC5", Box::new(ac5)),
        ("AC6", Box::new(ac6)),
        ("AC7", Box::new(ac7)),
        ("AC8", Box::new(move || ac8(start))),
    ];
    let mut failed = 0;
    for (id, check) in &criteria {
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!("[{}] {id} {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
