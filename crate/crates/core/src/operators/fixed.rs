use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::matrix::Matrix;

use super::Operator;

/// Orthonormal basis of a linear fixed-point subspace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointSet {
    pub basis: Vec<Vector>,
    pub tol_used: f64,
}

impl FixedPointSet {
    pub(crate) fn from_null_space(a: &Matrix, tol: f64) -> Self {
        FixedPointSet {
            basis: a
                .null_space(tol)
                .into_iter()
                .map(Vector::from_raw)
                .collect(),
            tol_used: tol,
        }
    }

    /// Dimension of the subspace; zero means only the origin is fixed.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        let mut out = Vector::zeros(x.dim());
        for b in &self.basis {
            let c = crate::hilbert::inner(x, b)?;
            out = crate::hilbert::convex_combine(1.0, &out, c, b)?;
        }
        Ok(out)
    }
}

/// `Fix(T) = null(I − T)` for linear `T`.
pub fn fixed_points_linear(t: &Operator, tol: f64) -> Result<FixedPointSet> {
    let m = t.linear_matrix().ok_or(Error::NotLinear)?;
    let a = Matrix::identity(t.dim()).combine(1.0, &m, -1.0)?;
    Ok(FixedPointSet::from_null_space(&a, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::norm;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn identity_fixes_everything() {
        let fp = fixed_points_linear(&Operator::identity(3).unwrap(), 1e-10).unwrap();
        assert_eq!(fp.dim(), 3);
    }

    #[test]
    fn negation_fixes_origin_only() {
        let fp = fixed_points_linear(&Operator::negation(2).unwrap(), 1e-10).unwrap();
        assert_eq!(fp.dim(), 0);
        let x = Vector::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(fp.project(&x).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn quarter_turn_plus_identity() {
        // I − T = [[1,1,0],[-1,1,0],[0,0,0]] has null space span{e3}
        let t = Operator::rotation(3, 0, 1, FRAC_PI_2).unwrap();
        let fp = fixed_points_linear(&t, 1e-10).unwrap();
        assert_eq!(fp.dim(), 1);
        let b = &fp.basis[0];
        assert!((b[2].abs() - 1.0).abs() < 1e-12);
        assert!(norm(&t.apply(b).unwrap().sub(b).unwrap()) <= 1e-9);
    }

    #[test]
    fn projections_are_not_linear() {
        let ball = Operator::projection_ball(Vector::zeros(2), 1.0).unwrap();
        assert!(matches!(
            fixed_points_linear(&ball, 1e-10),
            Err(Error::NotLinear)
        ));
    }
}
