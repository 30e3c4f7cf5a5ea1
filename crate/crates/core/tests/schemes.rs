use viscofix::diagnostics::{check_step3_decay, check_step4_vi};
use viscofix::operators::fixed_points_linear;
use viscofix::schemes::{
    anchored_implicit_solve, make_schedule, viscosity_implicit_solve, Problem, ScheduleSpec,
    SolveOptions, StepMap,
};
use viscofix::semigroup::make_rotation_flow;
use viscofix::{Matrix, Operator, Vector};

fn v(c: &[f64]) -> Vector {
    Vector::new(c.to_vec()).unwrap()
}

fn harmonic(p: f64, n_max: usize) -> viscofix::schemes::EpsilonSchedule {
    make_schedule(&ScheduleSpec::Harmonic { p, n_max }).unwrap()
}

fn opts(outer_tol: f64) -> SolveOptions {
    SolveOptions {
        outer_tol,
        ..Default::default()
    }
}

/// Solves `((1 − ε/2)I − (1 − ε)R_θ) ξ = ε·e_1` by Cramer's rule.
fn rotation_oracle(eps: f64, theta: f64) -> [f64; 2] {
    let a = 1.0 - eps / 2.0 - (1.0 - eps) * theta.cos();
    let b = (1.0 - eps) * theta.sin();
    // [[a, b], [-b, a]]
    let det = a * a + b * b;
    [eps * a / det, eps * b / det]
}

fn flow_problem() -> Problem {
    let flow = make_rotation_flow(&[1.0], &[1.0, 2.0]).unwrap();
    let step = StepMap::round_robin(flow, None, 42).unwrap();
    let f = Operator::affine(Matrix::identity(2).scale(0.5), v(&[1.0, 0.0])).unwrap();
    Problem::new("flow", f, step).unwrap()
}

#[test]
fn rotation_flow_matches_cramer_oracle() {
    let p = flow_problem();
    let s = viscosity_implicit_solve(&p, &harmonic(1.0, 200), &opts(1e-10)).unwrap();
    for r in &s.trace.steps {
        let theta = if r.n % 2 == 1 { 1.0 } else { 2.0 };
        let o = rotation_oracle(r.eps, theta);
        assert!(r.point.dist(&v(&o)).unwrap() <= 1e-8, "n = {}", r.n);
    }
    assert!(viscofix::norm(&s.result.point) < 1e-2);
}

#[test]
fn warm_and_cold_starts_agree() {
    let p = flow_problem();
    let warm = viscosity_implicit_solve(&p, &harmonic(1.0, 60), &opts(1e-10)).unwrap();
    let cold = viscosity_implicit_solve(
        &p,
        &harmonic(1.0, 60),
        &SolveOptions {
            warm_start: false,
            ..opts(1e-10)
        },
    )
    .unwrap();
    for (a, b) in warm.trace.steps.iter().zip(&cold.trace.steps) {
        assert!(a.point.dist(&b.point).unwrap() <= 1e-9);
    }
    assert!(warm.total_inner_iterations() < cold.total_inner_iterations());
}

#[test]
fn inner_steps_contract() {
    let p = flow_problem();
    let s = viscosity_implicit_solve(&p, &harmonic(1.0, 100), &opts(1e-10)).unwrap();
    for (r, st) in s.trace.steps.iter().zip(&s.inner) {
        assert!((st.modulus - (1.0 - r.eps * 0.5)).abs() < 1e-15);
        assert!(st.max_contraction_excess <= 1e-12);
        assert!(r.implicit_residual <= st.tol);
    }
}

#[test]
fn early_stop_settles() {
    // T = averaged negation is the zero map, so ξ_n = ε_n·c / (1 − ... ) settles fast
    let t = Operator::averaged(Operator::negation(2).unwrap(), 0.5).unwrap();
    let f = Operator::linear(Matrix::identity(2).scale(0.25)).unwrap();
    let p = Problem::new("zero", f, StepMap::single(t, 42).unwrap()).unwrap();
    let s = viscosity_implicit_solve(&p, &harmonic(1.0, 200), &opts(1e-8)).unwrap();
    assert!(s.result.converged);
    let r3 = check_step3_decay(&s.trace, 1e-8).unwrap();
    assert!(r3.ok, "{r3:?}");
}

#[test]
fn anchored_limit_is_projection_onto_fixed_set() {
    // R(x) for a linear nonexpansive T is the orthogonal projection onto Fix(T)
    let t = Operator::linear(Matrix::diag(&[1.0, -1.0, 0.5])).unwrap();
    let step = StepMap::single(t.clone(), 42).unwrap();
    let fix = fixed_points_linear(&t, 1e-10).unwrap();
    let x = v(&[2.0, 3.0, -1.0]);
    let mut o = opts(1e-10);
    o.tolerance_policy.max_iter = 1_000_000;
    let s = anchored_implicit_solve(&x, &step, 1000, &o).unwrap();
    let r = fix.project(&x).unwrap();
    assert!(s.result.point.dist(&r).unwrap() < 5e-3);
    let r4 = check_step4_vi(&s.trace, &x, &r, 1e-6).unwrap();
    assert!(r4.accepted, "{r4:?}");
}

#[test]
fn square_summable_weights_still_converge() {
    let neg = StepMap::single(Operator::negation(1).unwrap(), 42).unwrap();
    let p = Problem::anchored("a", &v(&[1.0]), neg).unwrap();
    let mut o = opts(1e-6);
    o.tolerance_policy.max_iter = 1_000_000;
    let s = viscosity_implicit_solve(&p, &harmonic(2.0, 100), &o).unwrap();
    assert!(s.result.point[0].abs() < 1e-3);
}

#[test]
fn solves_are_deterministic() {
    let p = flow_problem();
    let a = viscosity_implicit_solve(&p, &harmonic(1.0, 50), &opts(1e-10)).unwrap();
    let b = viscosity_implicit_solve(&p, &harmonic(1.0, 50), &opts(1e-10)).unwrap();
    assert_eq!(a.trace, b.trace);
}
