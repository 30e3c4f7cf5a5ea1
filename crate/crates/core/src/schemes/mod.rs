//! Iteration engines: Picard for contractions, the single implicit
//! viscosity step, the outer viscosity loop, and the anchored `1/n` scheme.

mod picard;
mod schedule;
mod viscosity;

pub use picard::{implicit_step, picard_iterate, picard_solve, ImplicitStep, InnerStats};
pub use schedule::{make_schedule, EpsilonSchedule, ScheduleSpec};
pub use viscosity::{
    anchored_implicit_solve, retraction_eval, viscosity_implicit_solve, Diagnostic, Problem,
    RetractionValue, Solve, StepMap,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{TolerancePolicy, Vector};
use crate::sampling::DEFAULT_SEED;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub point: Vector,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// How tightly each implicit equation is solved.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InnerTolRule {
    Fixed {
        delta: f64,
    },
    /// `δ_n = min(outer_tol, c·ε_n²)`.
    Coupled {
        c: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    pub outer_tol: f64,
    pub inner_tol_rule: InnerTolRule,
    pub warm_start: bool,
    pub tolerance_policy: TolerancePolicy,
    /// Seed for the sampled nonexpansivity check on unclassified operators.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            outer_tol: 1e-8,
            inner_tol_rule: InnerTolRule::Coupled { c: 1.0 },
            warm_start: true,
            tolerance_policy: TolerancePolicy::default(),
            seed: DEFAULT_SEED,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.outer_tol > 0.0) || !self.outer_tol.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "outer_tol must be positive, got {}",
                self.outer_tol
            )));
        }
        match self.inner_tol_rule {
            InnerTolRule::Fixed { delta } if !(delta > 0.0) => Err(Error::InvalidSpec(format!(
                "fixed inner tolerance must be positive, got {delta}"
            ))),
            InnerTolRule::Coupled { c } if !(c > 0.0) => Err(Error::InvalidSpec(format!(
                "coupling constant must be positive, got {c}"
            ))),
            _ => self.tolerance_policy.validate(),
        }
    }

    /// `δ_n` for outer weight `eps`.
    pub fn inner_tol(&self, eps: f64) -> f64 {
        match self.inner_tol_rule {
            InnerTolRule::Fixed { delta } => delta,
            InnerTolRule::Coupled { c } => self.outer_tol.min(c * eps * eps),
        }
    }
}
