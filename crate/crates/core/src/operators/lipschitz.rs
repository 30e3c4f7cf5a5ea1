use crate::error::Result;
use crate::hilbert::Vector;
use crate::sampling::Sampler;

use super::{LipschitzClass, Operator};

/// Radius of the sampling ball used by [`check_nonexpansive`].
pub const SAMPLE_RADIUS: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub enum NonexpansiveCheck {
    Pass { max_ratio: f64 },
    Witness { x: Vector, y: Vector, ratio: f64 },
}

impl NonexpansiveCheck {
    pub fn passed(&self) -> bool {
        matches!(self, NonexpansiveCheck::Pass { .. })
    }
}

/// Draws a pair of distinct points. Even draws are independent points of
/// the ball; odd draws put `y` in a small neighborhood of `x`, which is
/// where nonsmooth maps show their local slope.
fn sample_pair(s: &mut Sampler, dim: usize, radius: f64, k: usize) -> (Vector, Vector) {
    loop {
        let x = s.in_ball(dim, radius);
        let y = if k.is_multiple_of(2) {
            s.in_ball(dim, radius)
        } else {
            let step = s.in_ball(dim, 1e-2 * radius);
            x.add(&step).expect("same dimension")
        };
        if x != y {
            return (x, y);
        }
    }
}

fn ratio(t: &Operator, x: &Vector, y: &Vector) -> Result<f64> {
    let num = t.apply(x)?.dist(&t.apply(y)?)?;
    Ok(num / x.dist(y)?)
}

/// Largest sampled ratio `‖T(x) − T(y)‖ / ‖x − y‖` over `n_samples` pairs
/// drawn from the ball of `radius` about the origin.
pub fn estimate_lipschitz(t: &Operator, n_samples: usize, radius: f64, seed: u64) -> Result<f64> {
    let mut s = Sampler::new(seed);
    let mut best: f64 = 0.0;
    for k in 0..n_samples.max(1) {
        let (x, y) = sample_pair(&mut s, t.dim(), radius, k);
        best = best.max(ratio(t, &x, &y)?);
    }
    Ok(best)
}

/// Samples pairs from the ball of [`SAMPLE_RADIUS`] and reports the first
/// pair whose ratio exceeds `1 + tol`.
pub fn check_nonexpansive(
    t: &Operator,
    n_samples: usize,
    tol: f64,
    seed: u64,
) -> NonexpansiveCheck {
    let mut s = Sampler::new(seed);
    let mut max_ratio: f64 = 0.0;
    for k in 0..n_samples.max(1) {
        let (x, y) = sample_pair(&mut s, t.dim(), SAMPLE_RADIUS, k);
        let r = ratio(t, &x, &y).expect("sampled points match the operator dimension");
        if r > 1.0 + tol {
            return NonexpansiveCheck::Witness { x, y, ratio: r };
        }
        max_ratio = max_ratio.max(r);
    }
    NonexpansiveCheck::Pass { max_ratio }
}

/// Class of an operator backed by evidence: the declared class when it is
/// informative, otherwise `Nonexpansive` if sampling finds no violation.
pub fn classify_empirically(t: &Operator, n_samples: usize, tol: f64, seed: u64) -> LipschitzClass {
    match t.class() {
        LipschitzClass::Unknown => {
            if check_nonexpansive(t, n_samples, tol, seed).passed() {
                LipschitzClass::Nonexpansive
            } else {
                LipschitzClass::Unknown
            }
        }
        c => c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::sampling::DEFAULT_SEED;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn estimate_examples() {
        let id = Operator::identity(3).unwrap();
        assert_eq!(
            estimate_lipschitz(&id, 100, 1.0, DEFAULT_SEED).unwrap(),
            1.0
        );
        let c = Operator::constant(v(&[1.0, 2.0]));
        assert_eq!(estimate_lipschitz(&c, 100, 1.0, DEFAULT_SEED).unwrap(), 0.0);
        let half = Operator::affine(Matrix::identity(3).scale(0.5), v(&[1.0, -1.0, 3.0])).unwrap();
        let l = estimate_lipschitz(&half, 1000, 10.0, DEFAULT_SEED).unwrap();
        assert!((l - 0.5).abs() <= 1e-12, "{l}");
    }

    #[test]
    fn estimate_is_deterministic() {
        let ball = Operator::projection_ball(v(&[0.5, 0.5]), 1.0).unwrap();
        let a = estimate_lipschitz(&ball, 200, 3.0, 9).unwrap();
        let b = estimate_lipschitz(&ball, 200, 3.0, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn check_examples() {
        let ball = Operator::projection_ball(Vector::zeros(2), 1.0).unwrap();
        assert!(check_nonexpansive(&ball, 1000, 1e-9, DEFAULT_SEED).passed());
        let double = Operator::affine(Matrix::identity(2).scale(2.0), Vector::zeros(2)).unwrap();
        match check_nonexpansive(&double, 1000, 1e-9, DEFAULT_SEED) {
            NonexpansiveCheck::Witness { ratio, .. } => assert!((ratio - 2.0).abs() < 1e-12),
            other => panic!("expected a witness, got {other:?}"),
        }
        let avg = Operator::averaged(Operator::negation(2).unwrap(), 0.5).unwrap();
        match check_nonexpansive(&avg, 1000, 1e-9, DEFAULT_SEED) {
            NonexpansiveCheck::Pass { max_ratio } => assert_eq!(max_ratio, 0.0),
            other => panic!("expected pass, got {other:?}"),
        }
    }

    #[test]
    fn empirical_classification() {
        let translation = Operator::affine(Matrix::identity(2), v(&[1.0, 0.0])).unwrap();
        assert_eq!(
            classify_empirically(&translation, 500, 1e-9, DEFAULT_SEED),
            LipschitzClass::Nonexpansive
        );
        let double = Operator::linear(Matrix::diag(&[2.0, 1.0])).unwrap();
        assert_eq!(
            classify_empirically(&double, 500, 1e-9, DEFAULT_SEED),
            LipschitzClass::Unknown
        );
    }
}
