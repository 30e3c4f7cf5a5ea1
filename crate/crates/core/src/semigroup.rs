//! Indexed operator families `{T_t : t ∈ Q}` over an additive index
//! semigroup, and checks of the composition law `T_{s+t} = T_s ∘ T_t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{norm, Vector};
use crate::matrix::Matrix;
use crate::operators::{
    check_nonexpansive, make_operator, FixedPointSet, NonexpansiveCheck, Operator, OperatorSpec,
};
use crate::sampling::{Sampler, DEFAULT_SEED};

/// Largest power sampled from a power family when none is configured.
pub const DEFAULT_POWER_SAMPLE_MAX: u64 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IndexKind {
    NaturalsAdd,
    NonnegRealsAdd { sample_grid: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSemigroup {
    pub kind: IndexKind,
    pub generators: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    Power { base: Operator, sample_max: u64 },
    RotationFlow { rates: Vec<f64> },
    Custom { table: BTreeMap<u64, Operator> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperatorFamily {
    index: IndexSemigroup,
    kind: FamilyKind,
    dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub index: u64,
    pub operator: OperatorSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    Power {
        base: OperatorSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sample_max: Option<u64>,
    },
    RotationFlow {
        rates: Vec<f64>,
        grid: Vec<f64>,
    },
    Custom {
        table: Vec<TableEntry>,
    },
}

pub fn make_family(spec: &FamilySpec) -> Result<OperatorFamily> {
    match spec {
        FamilySpec::Power { base, sample_max } => {
            let family = make_power_family(make_operator(base)?)?;
            Ok(match sample_max {
                Some(m) => family.with_power_sample_max(*m),
                None => family,
            })
        }
        FamilySpec::RotationFlow { rates, grid } => make_rotation_flow(rates, grid),
        FamilySpec::Custom { table } => make_custom_family(
            table
                .iter()
                .map(|e| Ok((e.index, make_operator(&e.operator)?)))
                .collect::<Result<BTreeMap<_, _>>>()?,
        ),
    }
}

/// `T_n = base^n` over `(ℕ, +)`. The base must be nonexpansive, either by
/// declaration or by passing a sampled check at tolerance `1e-9`.
pub fn make_power_family(base: Operator) -> Result<OperatorFamily> {
    let base = if base.class().is_nonexpansive() {
        base
    } else {
        match check_nonexpansive(&base, 1000, 1e-9, DEFAULT_SEED) {
            NonexpansiveCheck::Pass { .. } => {
                base.with_class(crate::operators::LipschitzClass::Nonexpansive)
            }
            NonexpansiveCheck::Witness { ratio, .. } => {
                return Err(Error::NotNonexpansive { ratio })
            }
        }
    };
    let dim = base.dim();
    Ok(OperatorFamily {
        index: IndexSemigroup {
            kind: IndexKind::NaturalsAdd,
            generators: vec![1.0],
        },
        kind: FamilyKind::Power {
            base,
            sample_max: DEFAULT_POWER_SAMPLE_MAX,
        },
        dim,
    })
}

/// `T_t` rotates plane `(2i, 2i+1)` by `rates[i]·t`.
pub fn make_rotation_flow(rates: &[f64], grid: &[f64]) -> Result<OperatorFamily> {
    if rates.is_empty() {
        return Err(Error::InvalidSpec(
            "rotation flow needs at least one rate".into(),
        ));
    }
    if rates.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidSpec("rotation rates must be finite".into()));
    }
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidSpec(
            "sample grid must be nonempty with finite nonnegative entries".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpec(
            "sample grid must be strictly ascending".into(),
        ));
    }
    let generators: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0).collect();
    if generators.is_empty() {
        return Err(Error::InvalidSpec(
            "sample grid needs a positive index".into(),
        ));
    }
    Ok(OperatorFamily {
        index: IndexSemigroup {
            kind: IndexKind::NonnegRealsAdd {
                sample_grid: grid.to_vec(),
            },
            generators,
        },
        kind: FamilyKind::RotationFlow {
            rates: rates.to_vec(),
        },
        dim: 2 * rates.len(),
    })
}

/// A finite table of operators over `(ℕ, +)`. No composition law is
/// assumed; [`check_representation`] is how one finds out.
pub fn make_custom_family(table: BTreeMap<u64, Operator>) -> Result<OperatorFamily> {
    let dim = table
        .values()
        .next()
        .map(Operator::dim)
        .ok_or_else(|| Error::InvalidSpec("custom family table is empty".into()))?;
    if table.values().any(|op| op.dim() != dim) {
        return Err(Error::InvalidSpec("custom family mixes dimensions".into()));
    }
    let generators: Vec<f64> = table
        .keys()
        .filter(|&&k| k > 0)
        .map(|&k| k as f64)
        .collect();
    if generators.is_empty() {
        return Err(Error::InvalidSpec(
            "custom family needs a positive index".into(),
        ));
    }
    Ok(OperatorFamily {
        index: IndexSemigroup {
            kind: IndexKind::NaturalsAdd,
            generators,
        },
        kind: FamilyKind::Custom { table },
        dim,
    })
}

fn as_natural(t: f64) -> Result<u64> {
    if t >= 0.0 && t.fract() == 0.0 && t <= u32::MAX as f64 {
        Ok(t as u64)
    } else {
        Err(Error::InvalidSpec(format!(
            "index {t} is not a natural number"
        )))
    }
}

impl OperatorFamily {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index(&self) -> &IndexSemigroup {
        &self.index
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn generators(&self) -> &[f64] {
        &self.index.generators
    }

    pub fn with_power_sample_max(mut self, max: u64) -> Self {
        if let FamilyKind::Power { sample_max, .. } = &mut self.kind {
            *sample_max = max;
        }
        self
    }

    pub fn evaluate(&self, t: f64) -> Result<Operator> {
        match &self.kind {
            FamilyKind::Power { base, .. } => {
                let n = as_natural(t)?;
                if n == 0 {
                    Operator::identity(self.dim)
                } else {
                    Operator::composite(vec![base.clone(); n as usize])
                }
            }
            FamilyKind::RotationFlow { rates } => {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(Error::InvalidSpec(format!("index {t} is not in R+")));
                }
                let planes = rates
                    .iter()
                    .enumerate()
                    .map(|(i, r)| Operator::rotation(self.dim, 2 * i, 2 * i + 1, r * t))
                    .collect::<Result<Vec<_>>>()?;
                if planes.len() == 1 {
                    Ok(planes.into_iter().next().expect("one plane"))
                } else {
                    Operator::composite(planes)
                }
            }
            FamilyKind::Custom { table } => {
                let n = as_natural(t)?;
                table
                    .get(&n)
                    .cloned()
                    .ok_or_else(|| Error::InvalidSpec(format!("index {n} not in family table")))
            }
        }
    }

    /// Whether `T_t` is defined.
    pub fn contains(&self, t: f64) -> bool {
        match &self.kind {
            FamilyKind::Power { .. } => as_natural(t).is_ok(),
            FamilyKind::RotationFlow { .. } => t >= 0.0 && t.is_finite(),
            FamilyKind::Custom { table } => as_natural(t).is_ok_and(|n| table.contains_key(&n)),
        }
    }

    /// The finite sample of indices the checks draw from.
    pub fn sample_indices(&self) -> Vec<f64> {
        match (&self.kind, &self.index.kind) {
            (FamilyKind::Power { sample_max, .. }, _) => {
                (0..=*sample_max).map(|n| n as f64).collect()
            }
            (FamilyKind::Custom { table }, _) => table.keys().map(|&k| k as f64).collect(),
            (_, IndexKind::NonnegRealsAdd { sample_grid }) => sample_grid.clone(),
            (_, IndexKind::NaturalsAdd) => self.index.generators.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub max_defect: f64,
    pub worst_pair: (f64, f64),
    pub samples_checked: usize,
    pub tol: f64,
    pub accepted: bool,
}

/// Samples index pairs `(s, t)` with `s + t` defined, and unit vectors `x`,
/// and reports the largest `‖T_{s+t}x − T_s(T_t x)‖`.
pub fn check_representation(
    family: &OperatorFamily,
    n_pairs: usize,
    n_vectors: usize,
    tol: f64,
    seed: u64,
) -> Result<RepresentationReport> {
    let idx = family.sample_indices();
    let pairs: Vec<(f64, f64)> = idx
        .iter()
        .flat_map(|&s| idx.iter().map(move |&t| (s, t)))
        .filter(|&(s, t)| family.contains(s + t))
        .collect();
    let mut report = RepresentationReport {
        max_defect: 0.0,
        worst_pair: (0.0, 0.0),
        samples_checked: 0,
        tol,
        accepted: true,
    };
    if pairs.is_empty() {
        return Ok(report);
    }
    let mut sampler = Sampler::new(seed);
    for _ in 0..n_pairs.max(1) {
        let (s, t) = pairs[sampler.index(pairs.len())];
        let ts = family.evaluate(s)?;
        let tt = family.evaluate(t)?;
        let tst = family.evaluate(s + t)?;
        for _ in 0..n_vectors.max(1) {
            let x = sampler.unit_vector(family.dim());
            let defect = tst.apply(&x)?.dist(&ts.apply(&tt.apply(&x)?)?)?;
            report.samples_checked += 1;
            if defect > report.max_defect {
                report.max_defect = defect;
                report.worst_pair = (s, t);
            }
        }
    }
    report.accepted = report.max_defect <= tol;
    Ok(report)
}

/// `max_t ‖x − T_t x‖` over the given indices.
pub fn common_fixed_residual(family: &OperatorFamily, x: &Vector, indices: &[f64]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::InvalidSpec("no indices to check".into()));
    }
    let mut worst: f64 = 0.0;
    for &t in indices {
        worst = worst.max(norm(&x.sub(&family.evaluate(t)?.apply(x)?)?));
    }
    Ok(worst)
}

/// `∩_g Fix(T_g)` over the generators, as the joint null space of the
/// stacked blocks `I − T_g`.
pub fn common_fixed_set_linear(family: &OperatorFamily, tol: f64) -> Result<FixedPointSet> {
    let d = family.dim();
    let blocks = family
        .generators()
        .iter()
        .map(|&g| {
            let m = family
                .evaluate(g)?
                .linear_matrix()
                .ok_or(Error::NotLinear)?;
            Matrix::identity(d).combine(1.0, &m, -1.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FixedPointSet::from_null_space(
        &Matrix::vstack(&blocks)?,
        tol,
    ))
}
