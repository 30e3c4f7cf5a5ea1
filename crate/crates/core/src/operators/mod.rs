//! Self-maps of `R^d` with a declared Lipschitz class.
//!
//! The catalog covers the maps the solvers need: linear and affine maps,
//! metric projections onto balls and boxes, plane rotations, averaged maps,
//! constants, and compositions. Each constructor records the class that is
//! known analytically; anything else is `Unknown` and only ever classified
//! by sampling.

mod fixed;
mod lipschitz;
mod norm;

pub use fixed::{fixed_points_linear, FixedPointSet};
pub use lipschitz::{
    check_nonexpansive, classify_empirically, estimate_lipschitz, NonexpansiveCheck, SAMPLE_RADIUS,
};
pub use norm::{
    certify_norm_attainable, certify_norm_attainable_seeded, operator_norm, operator_norm_with,
    NACertificate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Vector;
use crate::matrix::Matrix;

/// Lipschitz class an operator is known to satisfy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", content = "alpha", rename_all = "snake_case")]
pub enum LipschitzClass {
    /// `‖Tx − Ty‖ <= alpha·‖x − y‖` with `alpha < 1`.
    Contraction(f64),
    /// `‖Tx − Ty‖ <= ‖x − y‖`.
    Nonexpansive,
    /// `‖Tx − Ty‖ = ‖x − y‖`.
    Isometry,
    Unknown,
}

impl LipschitzClass {
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match *self {
            LipschitzClass::Contraction(a) => Some(a),
            LipschitzClass::Nonexpansive | LipschitzClass::Isometry => Some(1.0),
            LipschitzClass::Unknown => None,
        }
    }

    pub fn is_nonexpansive(&self) -> bool {
        self.lipschitz_bound().is_some()
    }

    pub fn contraction_modulus(&self) -> Option<f64> {
        match *self {
            LipschitzClass::Contraction(a) => Some(a),
            _ => None,
        }
    }
}

/// Serializable description of an operator; see [`make_operator`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Linear {
        matrix: Matrix,
    },
    Affine {
        matrix: Matrix,
        offset: Vector,
    },
    ProjectionBall {
        center: Vector,
        radius: f64,
    },
    ProjectionBox {
        lower: Vector,
        upper: Vector,
    },
    Rotation {
        dim: usize,
        plane: (usize, usize),
        angle: f64,
    },
    Averaged {
        inner: Box<OperatorSpec>,
        lambda: f64,
    },
    Constant {
        value: Vector,
    },
    Negation {
        dim: usize,
    },
    Identity {
        dim: usize,
    },
    /// Applied in sequence order: the first entry acts first.
    Composite {
        sequence: Vec<OperatorSpec>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    Linear(Matrix),
    Affine {
        matrix: Matrix,
        offset: Vector,
    },
    ProjectionBall {
        center: Vector,
        radius: f64,
    },
    ProjectionBox {
        lower: Vector,
        upper: Vector,
    },
    /// `sin` and `cos` of the angle are cached.
    Rotation {
        plane: (usize, usize),
        angle: f64,
        sin: f64,
        cos: f64,
    },
    Averaged {
        inner: Box<Operator>,
        lambda: f64,
    },
    Constant(Vector),
    Negation,
    Identity,
    Composite(Vec<Operator>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    kind: OperatorKind,
    class: LipschitzClass,
    dim: usize,
}

pub fn make_operator(spec: &OperatorSpec) -> Result<Operator> {
    match spec {
        OperatorSpec::Linear { matrix } => Operator::linear(matrix.clone()),
        OperatorSpec::Affine { matrix, offset } => Operator::affine(matrix.clone(), offset.clone()),
        OperatorSpec::ProjectionBall { center, radius } => {
            Operator::projection_ball(center.clone(), *radius)
        }
        OperatorSpec::ProjectionBox { lower, upper } => {
            Operator::projection_box(lower.clone(), upper.clone())
        }
        OperatorSpec::Rotation { dim, plane, angle } => {
            Operator::rotation(*dim, plane.0, plane.1, *angle)
        }
        OperatorSpec::Averaged { inner, lambda } => {
            Operator::averaged(make_operator(inner)?, *lambda)
        }
        OperatorSpec::Constant { value } => Ok(Operator::constant(value.clone())),
        OperatorSpec::Negation { dim } => Operator::negation(*dim),
        OperatorSpec::Identity { dim } => Operator::identity(*dim),
        OperatorSpec::Composite { sequence } => Operator::composite(
            sequence
                .iter()
                .map(make_operator)
                .collect::<Result<Vec<_>>>()?,
        ),
    }
}

fn check_positive_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidSpec("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Class of `x ↦ Mx + b`: a contraction when the spectral norm is below one.
fn affine_class(matrix: &Matrix) -> LipschitzClass {
    match norm::spectral_norm(matrix, 1e-13, 10_000, crate::sampling::DEFAULT_SEED) {
        Ok(p) if p.sigma < 1.0 => LipschitzClass::Contraction(p.sigma),
        _ => LipschitzClass::Unknown,
    }
}

impl Operator {
    pub fn linear(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidSpec(format!(
                "linear operator needs a square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let dim = matrix.rows();
        let class = affine_class(&matrix);
        Ok(Operator {
            kind: OperatorKind::Linear(matrix),
            class,
            dim,
        })
    }

    pub fn affine(matrix: Matrix, offset: Vector) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != offset.dim() {
            return Err(Error::InvalidSpec(format!(
                "affine operator needs a square matrix matching the offset, got {}x{} and offset of dim {}",
                matrix.rows(),
                matrix.cols(),
                offset.dim()
            )));
        }
        let dim = offset.dim();
        let class = affine_class(&matrix);
        Ok(Operator {
            kind: OperatorKind::Affine { matrix, offset },
            class,
            dim,
        })
    }

    pub fn projection_ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        let dim = center.dim();
        Ok(Operator {
            kind: OperatorKind::ProjectionBall { center, radius },
            class: LipschitzClass::Nonexpansive,
            dim,
        })
    }

    pub fn projection_box(lower: Vector, upper: Vector) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(Error::InvalidSpec(format!(
                "box bounds have dims {} and {}",
                lower.dim(),
                upper.dim()
            )));
        }
        if let Some(i) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(Error::InvalidSpec(format!(
                "box lower bound exceeds upper bound in coordinate {i}"
            )));
        }
        let dim = lower.dim();
        Ok(Operator {
            kind: OperatorKind::ProjectionBox { lower, upper },
            class: LipschitzClass::Nonexpansive,
            dim,
        })
    }

    pub fn rotation(dim: usize, i: usize, j: usize, angle: f64) -> Result<Self> {
        if i == j || i >= dim || j >= dim {
            return Err(Error::InvalidSpec(format!(
                "rotation plane ({i}, {j}) invalid in dimension {dim}"
            )));
        }
        if !angle.is_finite() {
            return Err(Error::InvalidSpec("rotation angle must be finite".into()));
        }
        Ok(Operator {
            kind: OperatorKind::Rotation {
                plane: (i, j),
                angle,
                sin: angle.sin(),
                cos: angle.cos(),
            },
            class: LipschitzClass::Isometry,
            dim,
        })
    }

    /// `x ↦ (1 − lambda)·x + lambda·inner(x)`.
    pub fn averaged(inner: Operator, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "averaging weight must lie in (0, 1], got {lambda}"
            )));
        }
        let class = match inner.class {
            LipschitzClass::Contraction(a) => {
                LipschitzClass::Contraction((1.0 - lambda) + lambda * a)
            }
            LipschitzClass::Isometry if lambda == 1.0 => LipschitzClass::Isometry,
            LipschitzClass::Nonexpansive | LipschitzClass::Isometry => LipschitzClass::Nonexpansive,
            LipschitzClass::Unknown => LipschitzClass::Unknown,
        };
        let dim = inner.dim;
        Ok(Operator {
            kind: OperatorKind::Averaged {
                inner: Box::new(inner),
                lambda,
            },
            class,
            dim,
        })
    }

    pub fn constant(value: Vector) -> Self {
        let dim = value.dim();
        Operator {
            kind: OperatorKind::Constant(value),
            class: LipschitzClass::Contraction(0.0),
            dim,
        }
    }

    pub fn negation(dim: usize) -> Result<Self> {
        check_positive_dim(dim)?;
        Ok(Operator {
            kind: OperatorKind::Negation,
            class: LipschitzClass::Nonexpansive,
            dim,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_positive_dim(dim)?;
        Ok(Operator {
            kind: OperatorKind::Identity,
            class: LipschitzClass::Isometry,
            dim,
        })
    }

    pub fn composite(sequence: Vec<Operator>) -> Result<Self> {
        let dim = sequence
            .first()
            .map(|op| op.dim)
            .ok_or_else(|| Error::InvalidSpec("composite needs at least one operator".into()))?;
        if let Some(op) = sequence.iter().find(|op| op.dim != dim) {
            return Err(Error::InvalidSpec(format!(
                "composite mixes dimensions {dim} and {}",
                op.dim
            )));
        }
        let class = if sequence
            .iter()
            .all(|op| op.class == LipschitzClass::Isometry)
        {
            LipschitzClass::Isometry
        } else {
            match sequence
                .iter()
                .map(|op| op.class.lipschitz_bound())
                .product::<Option<f64>>()
            {
                Some(l) if l < 1.0 => LipschitzClass::Contraction(l),
                Some(_) => LipschitzClass::Nonexpansive,
                None => LipschitzClass::Unknown,
            }
        };
        Ok(Operator {
            kind: OperatorKind::Composite(sequence),
            class,
            dim,
        })
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn class(&self) -> LipschitzClass {
        self.class
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Replaces the declared class. Used after an empirical classification;
    /// the caller vouches for the new class.
    pub fn with_class(mut self, class: LipschitzClass) -> Self {
        self.class = class;
        self
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        let mut out = vec![0.0; self.dim];
        self.apply_into(x.as_slice(), &mut out)?;
        Ok(Vector::from_raw(out))
    }

    /// Writes `T(x)` into `out` without allocating for the non-nested kinds.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        for len in [x.len(), out.len()] {
            if len != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: len,
                });
            }
        }
        match &self.kind {
            OperatorKind::Linear(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = m.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            OperatorKind::Affine { matrix, offset } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = matrix.row(i).iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + offset[i];
                }
            }
            OperatorKind::ProjectionBall { center, radius } => {
                let r = x
                    .iter()
                    .zip(center.as_slice())
                    .map(|(a, c)| (a - c) * (a - c))
                    .sum::<f64>()
                    .sqrt();
                if r <= *radius {
                    out.copy_from_slice(x);
                } else {
                    let k = radius / r;
                    for ((o, a), c) in out.iter_mut().zip(x).zip(center.as_slice()) {
                        *o = c + k * (a - c);
                    }
                }
            }
            OperatorKind::ProjectionBox { lower, upper } => {
                for (((o, v), lo), hi) in out
                    .iter_mut()
                    .zip(x)
                    .zip(lower.as_slice())
                    .zip(upper.as_slice())
                {
                    *o = v.clamp(*lo, *hi);
                }
            }
            OperatorKind::Rotation {
                plane: (i, j),
                sin: s,
                cos: c,
                ..
            } => {
                out.copy_from_slice(x);
                out[*i] = c * x[*i] - s * x[*j];
                out[*j] = s * x[*i] + c * x[*j];
            }
            OperatorKind::Averaged { inner, lambda } => {
                inner.apply_into(x, out)?;
                for (o, a) in out.iter_mut().zip(x) {
                    *o = (1.0 - lambda) * a + lambda * *o;
                }
            }
            OperatorKind::Constant(c) => out.copy_from_slice(c.as_slice()),
            OperatorKind::Negation => {
                for (o, a) in out.iter_mut().zip(x) {
                    *o = -a;
                }
            }
            OperatorKind::Identity => out.copy_from_slice(x),
            OperatorKind::Composite(seq) => {
                let mut y = x.to_vec();
                for op in seq {
                    op.apply_into(&y, out)?;
                    y.copy_from_slice(out);
                }
            }
        }
        Ok(())
    }

    /// Matrix of the operator when it is linear (no offset, no projection).
    pub fn linear_matrix(&self) -> Option<Matrix> {
        let d = self.dim;
        match &self.kind {
            OperatorKind::Linear(m) => Some(m.clone()),
            OperatorKind::Affine { matrix, offset } => offset
                .as_slice()
                .iter()
                .all(|&b| b == 0.0)
                .then(|| matrix.clone()),
            OperatorKind::Rotation {
                plane: (i, j),
                angle,
                ..
            } => Some(Matrix::rotation(d, *i, *j, *angle)),
            OperatorKind::Averaged { inner, lambda } => inner
                .linear_matrix()
                .and_then(|m| Matrix::identity(d).combine(1.0 - lambda, &m, *lambda).ok()),
            OperatorKind::Constant(c) => c
                .as_slice()
                .iter()
                .all(|&v| v == 0.0)
                .then(|| Matrix::zeros(d, d)),
            OperatorKind::Negation => Some(Matrix::identity(d).scale(-1.0)),
            OperatorKind::Identity => Some(Matrix::identity(d)),
            OperatorKind::Composite(seq) => seq.iter().try_fold(Matrix::identity(d), |acc, op| {
                op.linear_matrix().and_then(|m| m.matmul(&acc).ok())
            }),
            OperatorKind::ProjectionBall { .. } | OperatorKind::ProjectionBox { .. } => None,
        }
    }
}
