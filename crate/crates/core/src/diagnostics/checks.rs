use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{inner, norm, Vector};
use crate::operators::Operator;
use crate::schemes::{Diagnostic, Problem, SolveOptions};

use super::trace::{window_len, ConvergenceTrace};

/// Default acceptance threshold for the variational-inequality value.
pub const DEFAULT_VI_TOL: f64 = 1e-6;
/// Largest relative residual of the `c·ε_n` fit still read as `O(ε_n)` decay.
pub const VI_FIT_TOL: f64 = 0.2;
/// A stalled residual keeps at least this fraction of its early level.
const STALL_RATIO: f64 = 0.5;
const STALL_MIN_STEPS: usize = 10;

/// `‖x − T(x)‖`.
pub fn residual(t: &Operator, x: &Vector) -> Result<f64> {
    Ok(norm(&x.sub(&t.apply(x)?)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step2Report {
    pub ok: bool,
    /// `max_n (‖ξ_n − p‖ − bound − 10·δ_n)`; nonpositive when the bound holds.
    pub margin: f64,
    /// `‖f(p) − p‖ / (1 − α)`.
    pub bound: f64,
}

/// Boundedness of the iterates around a fixed point `p` of the step map.
pub fn check_step2_bound(
    trace: &ConvergenceTrace,
    problem: &Problem,
    p: &Vector,
    opts: &SolveOptions,
) -> Result<Step2Report> {
    let r = problem.step.residual(p)?;
    if r > 10.0 * opts.tolerance_policy.abs_tol {
        return Err(Error::NotAFixedPoint { residual: r });
    }
    let bound = problem.contraction.apply(p)?.dist(p)? / (1.0 - problem.alpha);
    let mut margin = f64::NEG_INFINITY;
    for s in &trace.steps {
        let gap = s.point.dist(p)? - bound - 10.0 * opts.inner_tol(s.eps);
        margin = margin.max(gap);
    }
    if trace.is_empty() {
        margin = 0.0;
    }
    Ok(Step2Report {
        ok: margin <= 0.0,
        margin,
        bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step3Report {
    pub final_residual: f64,
    /// Max over min of the fixed-point residual across the tail window.
    pub tail_spread: f64,
    /// Final residual within `outer_tol` and tail spread at most 2.
    pub ok: bool,
}

/// Decay of `‖ξ_n − T(ξ_n)‖`: small at the end and settled over the tail.
pub fn check_step3_decay(trace: &ConvergenceTrace, outer_tol: f64) -> Result<Step3Report> {
    let last = trace
        .last()
        .ok_or_else(|| Error::TraceFormat("empty trace".into()))?;
    let tail = &trace.steps[trace.tail_window()];
    let hi = tail.iter().map(|s| s.fix_residual).fold(0.0, f64::max);
    let lo = tail
        .iter()
        .map(|s| s.fix_residual)
        .fold(f64::INFINITY, f64::min);
    let tail_spread = if hi == 0.0 { 1.0 } else { hi / lo };
    Ok(Step3Report {
        final_residual: last.fix_residual,
        tail_spread,
        ok: last.fix_residual <= outer_tol && tail_spread <= 2.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step4Report {
    /// `max ⟨x − L, ξ_n − L⟩` over the tail window.
    pub value: f64,
    /// Least-squares `c` in `v_n ≈ c·ε_n` over the last half of the trace.
    pub fit_rate: f64,
    /// `‖v − c·ε‖ / ‖v‖` over the same steps.
    pub fit_residual: f64,
    pub accepted: bool,
}

/// The limsup variational inequality `⟨x − L, ξ_n − L⟩ ≤ 0` at finite `n`.
///
/// Accepted when the tail value is at most `vi_tol`, or when the values
/// decay like a nonnegative multiple of `ε_n`.
pub fn check_step4_vi(
    trace: &ConvergenceTrace,
    anchor_x: &Vector,
    limit: &Vector,
    vi_tol: f64,
) -> Result<Step4Report> {
    if trace.is_empty() {
        return Err(Error::TraceFormat("empty trace".into()));
    }
    let dir = anchor_x.sub(limit)?;
    let values = trace
        .steps
        .iter()
        .map(|s| inner(&dir, &s.point.sub(limit)?))
        .collect::<Result<Vec<_>>>()?;
    let value = values[trace.tail_window()]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);

    let half = trace.len() / 2;
    let (v, e): (Vec<f64>, Vec<f64>) = values[half..]
        .iter()
        .zip(&trace.steps[half..])
        .map(|(&v, s)| (v, s.eps))
        .unzip();
    let see: f64 = e.iter().map(|x| x * x).sum();
    let sve: f64 = v.iter().zip(&e).map(|(a, b)| a * b).sum();
    let fit_rate = sve / see;
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let rn = v
        .iter()
        .zip(&e)
        .map(|(a, b)| (a - fit_rate * b).powi(2))
        .sum::<f64>()
        .sqrt();
    let fit_residual = if vn == 0.0 { 0.0 } else { rn / vn };
    Ok(Step4Report {
        value,
        fit_rate,
        fit_residual,
        accepted: value <= vi_tol || (fit_rate >= 0.0 && fit_residual <= VI_FIT_TOL),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetractionReport {
    pub ok: bool,
    /// Anchor indices with the largest `‖Rx − Ry‖ − ‖x − y‖`.
    pub worst_pair: (usize, usize),
    pub worst_margin: f64,
}

/// `‖R(x) − R(y)‖ ≤ ‖x − y‖ + slack` over all pairs of `(anchor, value)`.
pub fn check_retraction_nonexpansive(
    pairs: &[(Vector, Vector)],
    slack: f64,
) -> Result<RetractionReport> {
    if pairs.len() < 2 {
        return Err(Error::InvalidSpec("need at least two anchors".into()));
    }
    let mut worst_pair = (0, 1);
    let mut worst_margin = f64::NEG_INFINITY;
    for i in 0..pairs.len() {
        for j in i + 1..pairs.len() {
            let m = pairs[i].1.dist(&pairs[j].1)? - pairs[i].0.dist(&pairs[j].0)?;
            if m > worst_margin {
                worst_margin = m;
                worst_pair = (i, j);
            }
        }
    }
    Ok(RetractionReport {
        ok: worst_margin <= slack,
        worst_pair,
        worst_margin,
    })
}

/// Distance of the last iterate to `oracle`, or without one the largest
/// step length over the tail window.
pub fn check_step5_convergence(trace: &ConvergenceTrace, oracle: Option<&Vector>) -> Result<f64> {
    let last = trace
        .last()
        .ok_or_else(|| Error::TraceFormat("empty trace".into()))?;
    match oracle {
        Some(o) => last.point.dist(o),
        None => Ok(trace.steps[trace.tail_window()]
            .iter()
            .map(|s| s.step_delta)
            .fold(0.0, f64::max)),
    }
}

/// Flags a run whose fixed-point residual never came down: the tail minimum
/// is above `outer_tol` and still at least half the head maximum.
pub fn detect_stall(trace: &ConvergenceTrace, outer_tol: f64) -> Option<Diagnostic> {
    if trace.len() < STALL_MIN_STEPS {
        return None;
    }
    let w = window_len(trace.len());
    let head = trace.steps[..w]
        .iter()
        .map(|s| s.fix_residual)
        .fold(0.0, f64::max);
    let tail = trace.steps[trace.len() - w..]
        .iter()
        .map(|s| s.fix_residual)
        .fold(f64::INFINITY, f64::min);
    (tail > outer_tol && tail >= STALL_RATIO * head)
        .then_some(Diagnostic::NoCommonFixedPoint { head, tail })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofStepReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step2: Option<Step2Report>,
    pub step3: Step3Report,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step4: Option<Step4Report>,
    /// Distance to the oracle limit, or the tail step length.
    pub step5_distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retraction: Option<RetractionReport>,
}

/// Inputs for the optional checks of a [`ProofStepReport`].
#[derive(Clone, Debug, Default)]
pub struct ReportInputs<'a> {
    /// A known fixed point of the step map.
    pub fixed_point: Option<&'a Vector>,
    /// Anchor and limit for the variational inequality.
    pub vi: Option<(&'a Vector, &'a Vector)>,
    pub oracle_limit: Option<&'a Vector>,
    pub retraction: Option<&'a [(Vector, Vector)]>,
}

pub fn proof_step_report(
    trace: &ConvergenceTrace,
    problem: &Problem,
    opts: &SolveOptions,
    inputs: &ReportInputs<'_>,
) -> Result<ProofStepReport> {
    let step2 = inputs
        .fixed_point
        .map(|p| check_step2_bound(trace, problem, p, opts))
        .transpose()?;
    let step4 = inputs
        .vi
        .map(|(x, l)| check_step4_vi(trace, x, l, DEFAULT_VI_TOL))
        .transpose()?;
    let retraction = inputs
        .retraction
        .map(|pairs| check_retraction_nonexpansive(pairs, 10.0 * opts.outer_tol))
        .transpose()?;
    Ok(ProofStepReport {
        step2,
        step3: check_step3_decay(trace, opts.outer_tol)?,
        step4,
        step5_distance: check_step5_convergence(trace, inputs.oracle_limit)?,
        retraction,
    })
}
