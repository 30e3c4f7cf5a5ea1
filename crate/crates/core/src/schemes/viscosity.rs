use serde::{Deserialize, Serialize};

use crate::diagnostics::{detect_stall, ConvergenceTrace, StepRecord, TraceMetadata};
use crate::error::{Error, Result};
use crate::hilbert::{norm, Vector};
use crate::matrix::Matrix;
use crate::operators::{
    classify_empirically, fixed_points_linear, FixedPointSet, LipschitzClass, Operator,
};
use crate::semigroup::OperatorFamily;

use super::picard::{implicit_step, InnerStats};
use super::{EpsilonSchedule, FixedPointResult, SolveOptions};

/// The nonexpansive part of the scheme: one operator, or a family whose
/// indices are visited round-robin, one per outer step.
#[derive(Clone, Debug, PartialEq)]
pub enum StepMap {
    Single(Operator),
    RoundRobin {
        family: OperatorFamily,
        indices: Vec<f64>,
        operators: Vec<Operator>,
    },
}

fn ensure_nonexpansive(op: Operator, seed: u64) -> Result<Operator> {
    match classify_empirically(&op, 1000, 1e-9, seed) {
        LipschitzClass::Unknown => Err(Error::NotNonexpansive { ratio: f64::NAN }),
        c if c == op.class() => Ok(op),
        c => Ok(op.with_class(c)),
    }
}

impl StepMap {
    /// Wraps a single operator. Operators of unknown class are admitted
    /// only if the sampled nonexpansivity check passes.
    pub fn single(op: Operator, seed: u64) -> Result<Self> {
        Ok(StepMap::Single(ensure_nonexpansive(op, seed)?))
    }

    /// Cycles through `T_t` for `t` in `indices`; defaults to the family's
    /// generators when `indices` is `None`.
    pub fn round_robin(
        family: OperatorFamily,
        indices: Option<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let indices = indices.unwrap_or_else(|| family.generators().to_vec());
        if indices.is_empty() {
            return Err(Error::InvalidSpec(
                "round-robin needs at least one index".into(),
            ));
        }
        let operators = indices
            .iter()
            .map(|&t| ensure_nonexpansive(family.evaluate(t)?, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(StepMap::RoundRobin {
            family,
            indices,
            operators,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            StepMap::Single(op) => op.dim(),
            StepMap::RoundRobin { family, .. } => family.dim(),
        }
    }

    /// Operator used at outer step `n >= 1`.
    pub fn operator_at(&self, n: usize) -> &Operator {
        match self {
            StepMap::Single(op) => op,
            StepMap::RoundRobin { operators, .. } => &operators[(n - 1) % operators.len()],
        }
    }

    pub fn operators(&self) -> &[Operator] {
        match self {
            StepMap::Single(op) => std::slice::from_ref(op),
            StepMap::RoundRobin { operators, .. } => operators,
        }
    }

    /// `max_T ‖x − T(x)‖` over the operators in play.
    pub fn residual(&self, x: &Vector) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for op in self.operators() {
            worst = worst.max(norm(&x.sub(&op.apply(x)?)?));
        }
        Ok(worst)
    }

    /// Common fixed subspace when every operator is linear.
    pub fn linear_fixed_set(&self, tol: f64) -> Result<FixedPointSet> {
        match self {
            StepMap::Single(op) => fixed_points_linear(op, tol),
            StepMap::RoundRobin { operators, .. } => {
                let d = self.dim();
                let blocks = operators
                    .iter()
                    .map(|op| {
                        let m = op.linear_matrix().ok_or(Error::NotLinear)?;
                        Matrix::identity(d).combine(1.0, &m, -1.0)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(FixedPointSet::from_null_space(
                    &Matrix::vstack(&blocks)?,
                    tol,
                ))
            }
        }
    }
}

/// A viscosity problem: contraction `f` with modulus `alpha`, and the
/// nonexpansive step map.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub id: String,
    pub contraction: Operator,
    pub alpha: f64,
    pub step: StepMap,
}

impl Problem {
    pub fn new(id: impl Into<String>, contraction: Operator, step: StepMap) -> Result<Self> {
        let alpha = match contraction.class() {
            LipschitzClass::Contraction(a) if a < 1.0 => a,
            c => {
                return Err(Error::NotAContraction {
                    alpha: c.lipschitz_bound().unwrap_or(f64::NAN),
                })
            }
        };
        if contraction.dim() != step.dim() {
            return Err(Error::DimensionMismatch {
                expected: step.dim(),
                found: contraction.dim(),
            });
        }
        Ok(Problem {
            id: id.into(),
            contraction,
            alpha,
            step,
        })
    }

    /// `f ≡ anchor`, the anchored special case.
    pub fn anchored(id: impl Into<String>, anchor: &Vector, step: StepMap) -> Result<Self> {
        Problem::new(id, Operator::constant(anchor.clone()), step)
    }

    pub fn dim(&self) -> usize {
        self.step.dim()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// The fixed-point residual did not decay: the step map most likely
    /// has no (common) fixed point.
    NoCommonFixedPoint { head: f64, tail: f64 },
}

impl Diagnostic {
    pub fn into_error(self) -> Error {
        match self {
            Diagnostic::NoCommonFixedPoint { head, tail } => {
                Error::NoCommonFixedPoint { head, tail }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solve {
    pub result: FixedPointResult,
    pub trace: ConvergenceTrace,
    /// Per outer step, the inner Picard bookkeeping.
    pub inner: Vec<InnerStats>,
    pub diagnostic: Option<Diagnostic>,
}

impl Solve {
    pub fn total_inner_iterations(&self) -> usize {
        self.inner.iter().map(|s| s.iterations).sum()
    }
}

fn run_outer_loop(
    problem: &Problem,
    schedule: &EpsilonSchedule,
    opts: &SolveOptions,
) -> Result<Solve> {
    opts.validate()?;
    schedule.validate()?;
    let dim = problem.dim();
    let origin = Vector::zeros(dim);
    let mut trace = ConvergenceTrace::new(TraceMetadata {
        problem_id: problem.id.clone(),
        schedule_kind: schedule.label().to_string(),
        seed: opts.seed,
        dim,
        config_hash: None,
        timestamp: None,
    });
    let mut inner = Vec::with_capacity(schedule.n_max());
    let mut prev = origin.clone();
    let mut converged = false;

    for n in 1..=schedule.n_max() {
        let eps = schedule.eps(n);
        let delta = opts.inner_tol(eps);
        let warm = if opts.warm_start { &prev } else { &origin };
        let step = implicit_step(
            &problem.contraction,
            problem.step.operator_at(n),
            eps,
            warm,
            delta,
            &opts.tolerance_policy,
        )?;
        let fix_residual = problem.step.residual(&step.point)?;
        let step_delta = step.point.dist(&prev)?;
        trace.push(StepRecord {
            n,
            eps,
            point: step.point.clone(),
            implicit_residual: step.implicit_residual,
            fix_residual,
            inner_iters: step.inner.iterations,
            step_delta,
        });
        inner.push(step.inner);
        prev = step.point;
        if fix_residual <= opts.outer_tol && step_delta <= opts.outer_tol {
            converged = true;
            break;
        }
    }

    let last = trace.last().expect("schedule has at least one step");
    let result = FixedPointResult {
        point: last.point.clone(),
        residual: last.fix_residual,
        iterations: last.n,
        converged,
    };
    let diagnostic = if converged {
        None
    } else {
        detect_stall(&trace, opts.outer_tol)
    };
    Ok(Solve {
        result,
        trace,
        inner,
        diagnostic,
    })
}

/// Outer viscosity loop: for `n = 1..=N`, solve
/// `ξ_n = ε_n·f(ξ_n) + (1 − ε_n)·T_n(ξ_n)` to inner tolerance `δ_n`,
/// warm-started from `ξ_{n−1}` (or the origin). Stops early once both the
/// fixed-point residual and the step length fall below `outer_tol`.
pub fn viscosity_implicit_solve(
    problem: &Problem,
    schedule: &EpsilonSchedule,
    opts: &SolveOptions,
) -> Result<Solve> {
    if schedule.label().starts_with("anchored") {
        return Err(Error::InvalidSchedule(
            "the anchored schedule is reserved for anchored_implicit_solve".into(),
        ));
    }
    run_outer_loop(problem, schedule, opts)
}

/// `ξ_n = (1/n)·x + (1 − 1/n)·T(ξ_n)`: the viscosity loop with `f ≡ x` and
/// `ε_n = 1/n`. Its limit is the retraction of `x` onto the fixed set.
pub fn anchored_implicit_solve(
    anchor: &Vector,
    step: &StepMap,
    n_max: usize,
    opts: &SolveOptions,
) -> Result<Solve> {
    let problem = Problem::anchored("anchored", anchor, step.clone())?;
    run_outer_loop(&problem, &EpsilonSchedule::anchored(n_max)?, opts)
}

#[derive(Debug)]
pub struct RetractionValue {
    pub anchor: Vector,
    pub outcome: Result<FixedPointResult>,
}

/// Runs the anchored scheme from each anchor; failures are reported per
/// anchor.
pub fn retraction_eval(
    step: &StepMap,
    anchors: &[Vector],
    n_max: usize,
    opts: &SolveOptions,
) -> Result<Vec<RetractionValue>> {
    if anchors.is_empty() {
        return Err(Error::InvalidSpec("no anchors given".into()));
    }
    if let Some(a) = anchors.iter().find(|a| a.dim() != step.dim()) {
        return Err(Error::DimensionMismatch {
            expected: step.dim(),
            found: a.dim(),
        });
    }
    Ok(anchors
        .iter()
        .map(|a| RetractionValue {
            anchor: a.clone(),
            outcome: anchored_implicit_solve(a, step, n_max, opts).map(|s| s.result),
        })
        .collect())
}
