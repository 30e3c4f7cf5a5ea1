//! Operator norm by power iteration on `SᵀS`, and the norm-attainment
//! certificate built from it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{norm, Vector};
use crate::matrix::Matrix;
use crate::sampling::{Sampler, DEFAULT_SEED};

use super::Operator;

/// Maximum number of shifted inverse-iteration steps after power iteration.
const POLISH_STEPS: usize = 5;

/// Evidence that `S` attains its norm: a unit vector `x` with
/// `‖Sx‖ = ‖S‖` up to `residual`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NACertificate {
    #[serde(rename = "sigma")]
    pub operator_norm: f64,
    #[serde(rename = "vector")]
    pub attaining_vector: Vector,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct PowerResult {
    pub sigma: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = dot(&v, &v).sqrt();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

/// Largest-magnitude entry made positive; entries below roundoff relative
/// to it are flushed to zero and the vector renormalized.
fn canonical_sign(mut v: Vec<f64>) -> Vec<f64> {
    let lead = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    let sign = if lead < 0.0 { -1.0 } else { 1.0 };
    let floor = f64::EPSILON * lead.abs();
    for x in v.iter_mut() {
        *x = if x.abs() <= floor { 0.0 } else { sign * *x };
    }
    normalized(v.clone()).unwrap_or(v)
}

/// Largest singular value of `m` and a right singular vector.
///
/// Power iteration on `MᵀM` from the normalized all-ones vector (seeded
/// random restart if that start lies in the null space), stopped when two
/// successive Rayleigh quotients differ by at most `tol·max(1, quotient)`.
/// The direction is then polished with a few Rayleigh-shifted inverse
/// iteration steps; a step is rejected if it lowers the quotient.
pub(crate) fn spectral_norm(
    m: &Matrix,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<PowerResult> {
    let d = m.cols();
    if m.is_zero() {
        let mut e1 = vec![0.0; d];
        e1[0] = 1.0;
        return Ok(PowerResult {
            sigma: 0.0,
            vector: e1,
            iterations: 0,
        });
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let w = m.tmul_slice(&m.mul_slice(&v));
    if dot(&w, &w).sqrt() <= tol {
        v = Sampler::new(seed).unit_vector(d).into_vec();
    }

    let mut prev: Option<f64> = None;
    let mut lambda = 0.0;
    let mut iterations = 0;
    let mut settled = false;
    while iterations < max_iter {
        iterations += 1;
        let u = m.mul_slice(&v);
        lambda = dot(&u, &u);
        if let Some(p) = prev {
            if (lambda - p).abs() <= tol * lambda.max(1.0) {
                settled = true;
                break;
            }
        }
        prev = Some(lambda);
        match normalized(m.tmul_slice(&u)) {
            Some(next) => v = next,
            None => {
                // v is annihilated; the quotient is exactly zero and stable
                settled = true;
                break;
            }
        }
    }
    if !settled {
        return Err(Error::NoConvergence { iterations });
    }

    let gram = m.transpose().matmul(m)?;
    for _ in 0..POLISH_STEPS {
        // a shift equal to an eigenvalue in floating point is exactly
        // singular; nudge it by a few ulps
        let solve_at = |shift: f64| -> Result<Option<Vec<f64>>> {
            let shifted = gram.combine(1.0, &Matrix::identity(d), -shift)?;
            Ok(shifted.solve(&v).and_then(normalized))
        };
        let y = match solve_at(lambda)? {
            Some(y) => Some(y),
            None => solve_at(lambda + 8.0 * f64::EPSILON * lambda.max(1.0))?,
        };
        let Some(y) = y else {
            break;
        };
        let u = m.mul_slice(&y);
        let next = dot(&u, &u);
        if next < lambda - tol * lambda.max(1.0) {
            break;
        }
        let aligned = if dot(&y, &v) < 0.0 { -1.0 } else { 1.0 };
        let moved = y
            .iter()
            .zip(&v)
            .map(|(a, b)| (aligned * a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        v = y;
        lambda = next;
        iterations += 1;
        if moved <= 4.0 * f64::EPSILON {
            break;
        }
    }

    let v = canonical_sign(v);
    let u = m.mul_slice(&v);
    Ok(PowerResult {
        sigma: dot(&u, &u).sqrt(),
        vector: v,
        iterations,
    })
}

pub fn operator_norm(s: &Operator, tol: f64) -> Result<(f64, Vector)> {
    operator_norm_with(s, tol, crate::hilbert::TolerancePolicy::default().max_iter)
        .map(|(sigma, x, _)| (sigma, x))
}

/// Like [`operator_norm`] with an explicit iteration cap; also returns the
/// iteration count.
pub fn operator_norm_with(s: &Operator, tol: f64, max_iter: usize) -> Result<(f64, Vector, usize)> {
    let m = s.linear_matrix().ok_or(Error::NotLinear)?;
    let p = spectral_norm(&m, tol, max_iter, DEFAULT_SEED)?;
    Ok((p.sigma, Vector::from_raw(p.vector), p.iterations))
}

pub fn certify_norm_attainable(s: &Operator, tol: f64) -> Result<NACertificate> {
    certify_norm_attainable_seeded(s, tol, DEFAULT_SEED)
}

/// [`certify_norm_attainable`] with the seed of the restart vector.
pub fn certify_norm_attainable_seeded(s: &Operator, tol: f64, seed: u64) -> Result<NACertificate> {
    let m = s.linear_matrix().ok_or(Error::NotLinear)?;
    let p = spectral_norm(
        &m,
        tol,
        crate::hilbert::TolerancePolicy::default().max_iter,
        seed,
    )?;
    let (sigma, x, iterations) = (p.sigma, Vector::from_raw(p.vector), p.iterations);
    let residual = (norm(&s.apply(&x)?) - sigma).abs();
    Ok(NACertificate {
        operator_norm: sigma,
        attaining_vector: x,
        residual,
        iterations,
    })
}
