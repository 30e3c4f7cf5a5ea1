//! Finite-dimensional real Hilbert space primitives.
//!
//! Everything downstream works on [`Vector`], an immutable point of `R^d`
//! with the Euclidean inner product. The duality mapping of the underlying
//! space is the identity here, so pairings are plain dot products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^d`. Always nonempty with finite coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidVector("dimension must be at least 1".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidVector(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Vector(coords))
    }

    /// Wraps coordinates produced by arithmetic on valid vectors.
    pub(crate) fn from_raw(coords: Vec<f64>) -> Self {
        debug_assert!(!coords.is_empty());
        Vector(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        Vector(vec![0.0; dim])
    }

    /// The `i`-th standard basis vector `e_i` (zero-based).
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim, "basis index {i} out of range for dimension {dim}");
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        convex_combine(1.0, self, 1.0, other)
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        convex_combine(1.0, self, -1.0, other)
    }

    pub fn scale(&self, a: f64) -> Vector {
        Vector(self.0.iter().map(|c| a * c).collect())
    }

    /// `‖self − other‖`.
    pub fn dist(&self, other: &Vector) -> Result<f64> {
        check_dims(self, other)?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Vector::new(coords)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub(crate) fn check_dims(u: &Vector, v: &Vector) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(())
}

pub fn inner(u: &Vector, v: &Vector) -> Result<f64> {
    check_dims(u, v)?;
    Ok(u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum())
}

pub fn norm(u: &Vector) -> f64 {
    u.0.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `a·u + b·v`, coordinatewise.
pub fn convex_combine(a: f64, u: &Vector, b: f64, v: &Vector) -> Result<Vector> {
    check_dims(u, v)?;
    Ok(Vector(
        u.0.iter().zip(&v.0).map(|(x, y)| a * x + b * y).collect(),
    ))
}

/// Absolute/relative tolerances and an iteration cap shared by the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancePolicy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl TolerancePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if !(self.rel_tol >= 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "rel_tol must be nonnegative, got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidSpec("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&v(&[3.0, 4.0]), &v(&[3.0, 4.0])).unwrap(), 25.0);
        // 1*4 + 2*5 + 3*6
        assert_eq!(
            inner(&v(&[1.0, 2.0, 3.0]), &v(&[4.0, 5.0, 6.0])).unwrap(),
            32.0
        );
    }

    #[test]
    fn inner_dimension_mismatch() {
        let err = inner(&v(&[1.0]), &v(&[1.0, 2.0])).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 1,
                found: 2
            }
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&Vector::zeros(3)), 0.0);
        assert_eq!(norm(&v(&[3.0, 4.0])), 5.0);
        assert_eq!(norm(&v(&[1.0, 1.0, 1.0, 1.0])), 2.0);
    }

    #[test]
    fn convex_combine_examples() {
        let mid = convex_combine(0.5, &v(&[2.0, 0.0]), 0.5, &v(&[0.0, 2.0])).unwrap();
        assert_eq!(mid, v(&[1.0, 1.0]));
        let u = v(&[-1.5, 7.0]);
        assert_eq!(convex_combine(1.0, &u, 0.0, &v(&[9.0, 9.0])).unwrap(), u);
        let c = convex_combine(0.25, &v(&[4.0, 8.0]), 0.75, &v(&[0.0, 0.0])).unwrap();
        assert_eq!(c, v(&[1.0, 2.0]));
        assert!(convex_combine(1.0, &u, 1.0, &v(&[1.0])).is_err());
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(Vector::new(vec![]).is_err());
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(serde_json::from_str::<Vector>("[]").is_err());
        assert_eq!(
            serde_json::from_str::<Vector>("[1,2.5]").unwrap(),
            v(&[1.0, 2.5])
        );
    }

    #[test]
    fn default_policy() {
        let p = TolerancePolicy::default();
        assert_eq!((p.abs_tol, p.rel_tol, p.max_iter), (1e-10, 1e-8, 10_000));
        p.validate().unwrap();
        let bad = TolerancePolicy { max_iter: 0, ..p };
        assert!(bad.validate().is_err());
    }

    fn pair() -> impl Strategy<Value = (Vector, Vector)> {
        (1usize..8).prop_flat_map(|d| {
            (
                prop::collection::vec(-100.0f64..100.0, d),
                prop::collection::vec(-100.0f64..100.0, d),
            )
                .prop_map(|(a, b)| (Vector::new(a).unwrap(), Vector::new(b).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn cauchy_schwarz((u, w) in pair()) {
            let tol = TolerancePolicy::default();
            let lhs = inner(&u, &w).unwrap().abs();
            let rhs = norm(&u) * norm(&w);
            prop_assert!(lhs <= rhs + tol.abs_tol + tol.rel_tol * rhs);
        }

        #[test]
        fn parallelogram_law((u, w) in pair()) {
            let tol = TolerancePolicy::default();
            let s = norm(&u.add(&w).unwrap()).powi(2) + norm(&u.sub(&w).unwrap()).powi(2);
            let t = 2.0 * norm(&u).powi(2) + 2.0 * norm(&w).powi(2);
            prop_assert!((s - t).abs() <= tol.rel_tol * t.max(1.0));
        }

        #[test]
        fn convex_combination_is_norm_convex((u, w) in pair(), lambda in 0.0f64..=1.0) {
            let c = convex_combine(lambda, &u, 1.0 - lambda, &w).unwrap();
            let bound = lambda * norm(&u) + (1.0 - lambda) * norm(&w);
            prop_assert!(norm(&c) <= bound + 1e-10 * bound.max(1.0));
        }

        #[test]
        fn inner_is_symmetric((u, w) in pair()) {
            prop_assert_eq!(inner(&u, &w).unwrap(), inner(&w, &u).unwrap());
        }
    }
}
