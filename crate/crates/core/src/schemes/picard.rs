use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{norm, TolerancePolicy, Vector};
use crate::operators::{estimate_lipschitz, LipschitzClass, Operator};
use crate::sampling::DEFAULT_SEED;

use super::FixedPointResult;

const ROUNDOFF_STEPS: f64 = 4.0;

/// Bookkeeping for one Picard run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerStats {
    /// Contraction modulus `q` the stopping rule was built on.
    pub modulus: f64,
    pub tol: f64,
    pub iterations: usize,
    /// `max_k (‖x_{k+1} − x_k‖ − q·‖x_k − x_{k−1}‖)`, floored at zero.
    pub max_contraction_excess: f64,
}

/// Picard iteration `x_{k+1} = g(x_k)` for a map with contraction modulus
/// `modulus < 1`.
///
/// Stops once `q·‖x_{k+1} − x_k‖ <= tol·(1 − q)`; the Banach a-posteriori
/// estimate then gives `‖x_{k+1} − x*‖ <= tol`, and that bound is what the
/// result reports as its residual. With `q = 0` the first step is exact.
/// Iteration also stops once the step is at the roundoff level of the
/// iterate, where no further progress is representable.
pub fn picard_iterate<G>(
    mut g: G,
    modulus: f64,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<(FixedPointResult, InnerStats)>
where
    G: FnMut(&Vector) -> Result<Vector>,
{
    let dim = x0.dim();
    iterate_in_place(
        |x, out| {
            let y = g(&Vector::from_raw(x.to_vec()))?;
            if y.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: y.dim(),
                });
            }
            out.copy_from_slice(y.as_slice());
            Ok(())
        },
        modulus,
        x0,
        tol,
        max_iter,
    )
}

fn iterate_in_place<G>(
    mut g: G,
    modulus: f64,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<(FixedPointResult, InnerStats)>
where
    G: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    if !(0.0..1.0).contains(&modulus) {
        return Err(Error::NotAContraction { alpha: modulus });
    }
    let mut x = x0.as_slice().to_vec();
    let mut next = vec![0.0; x.len()];
    let mut prev_step: Option<f64> = None;
    let mut excess: f64 = 0.0;
    let mut last_step = f64::INFINITY;
    for k in 1..=max_iter {
        g(&x, &mut next)?;
        let step = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if !step.is_finite() {
            return Err(Error::InvalidVector(format!(
                "Picard iterate diverged at step {k}"
            )));
        }
        if let Some(p) = prev_step {
            excess = excess.max(step - modulus * p);
        }
        std::mem::swap(&mut x, &mut next);
        prev_step = Some(step);
        last_step = step;
        let size = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        let floor = ROUNDOFF_STEPS * f64::EPSILON * size.max(1.0);
        if modulus * step <= tol * (1.0 - modulus) || step <= floor {
            let stats = InnerStats {
                modulus,
                tol,
                iterations: k,
                max_contraction_excess: excess,
            };
            let bound = if modulus == 0.0 {
                0.0
            } else {
                modulus * step / (1.0 - modulus)
            };
            return Ok((
                FixedPointResult {
                    point: Vector::from_raw(x),
                    residual: bound,
                    iterations: k,
                    converged: true,
                },
                stats,
            ));
        }
    }
    Err(Error::MaxIterExceeded {
        iterations: max_iter,
        modulus,
        last_step,
        tol,
    })
}

/// Banach fixed point of a contraction operator.
///
/// The modulus comes from the declared class; an `Unknown` operator is
/// accepted when its sampled Lipschitz estimate is at most `1 − 1e-6`.
pub fn picard_solve(
    g: &Operator,
    x0: &Vector,
    tol: f64,
    policy: &TolerancePolicy,
) -> Result<FixedPointResult> {
    let alpha = match g.class() {
        LipschitzClass::Contraction(a) => a,
        LipschitzClass::Unknown => {
            let radius = (2.0 * norm(x0)).max(1.0);
            let est = estimate_lipschitz(g, 1000, radius, DEFAULT_SEED)?;
            if est > 1.0 - 1e-6 {
                return Err(Error::NotAContraction { alpha: est });
            }
            est
        }
        LipschitzClass::Nonexpansive | LipschitzClass::Isometry => {
            return Err(Error::NotAContraction { alpha: 1.0 })
        }
    };
    iterate_in_place(
        |x, out| g.apply_into(x, out),
        alpha,
        x0,
        tol,
        policy.max_iter,
    )
    .map(|(r, _)| r)
}

/// Result of one implicit step `ξ = ε·f(ξ) + (1 − ε)·T(ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImplicitStep {
    pub point: Vector,
    /// `‖ξ − (ε·f(ξ) + (1 − ε)·T(ξ))‖`.
    pub implicit_residual: f64,
    pub inner: InnerStats,
}

/// Solves one implicit equation by Picard iteration on
/// `G(x) = eps·f(x) + (1 − eps)·T(x)`, a contraction with modulus
/// `q = eps·α + (1 − eps)`, starting from `warm`.
pub fn implicit_step(
    f: &Operator,
    t: &Operator,
    eps: f64,
    warm: &Vector,
    inner_tol: f64,
    policy: &TolerancePolicy,
) -> Result<ImplicitStep> {
    let alpha = f
        .class()
        .contraction_modulus()
        .ok_or(Error::NotAContraction {
            alpha: f.class().lipschitz_bound().unwrap_or(f64::NAN),
        })?;
    if !t.class().is_nonexpansive() {
        return Err(Error::NotNonexpansive { ratio: f64::NAN });
    }
    if f.dim() != t.dim() {
        return Err(Error::DimensionMismatch {
            expected: t.dim(),
            found: f.dim(),
        });
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidSchedule(format!(
            "weight {eps} outside (0, 1]"
        )));
    }
    let q = eps * alpha + (1.0 - eps);
    let mut fx = vec![0.0; t.dim()];
    let mut g = |x: &[f64], out: &mut [f64]| -> Result<()> {
        f.apply_into(x, &mut fx)?;
        t.apply_into(x, out)?;
        for (o, a) in out.iter_mut().zip(&fx) {
            *o = eps * a + (1.0 - eps) * *o;
        }
        Ok(())
    };
    let (res, inner) = iterate_in_place(&mut g, q, warm, inner_tol, policy.max_iter)?;
    let mut image = vec![0.0; t.dim()];
    g(res.point.as_slice(), &mut image)?;
    let implicit_residual = res.point.dist(&Vector::from_raw(image))?;
    Ok(ImplicitStep {
        point: res.point,
        implicit_residual,
        inner,
    })
}
