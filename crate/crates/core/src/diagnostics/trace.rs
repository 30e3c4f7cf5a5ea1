use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::Vector;

pub const TRACE_SCHEMA: u32 = 1;

/// One outer step of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub eps: f64,
    pub point: Vector,
    pub implicit_residual: f64,
    /// `‖ξ_n − T(ξ_n)‖`; for a family, the maximum over the cycled indices.
    pub fix_residual: f64,
    pub inner_iters: usize,
    /// `‖ξ_n − ξ_{n−1}‖`, with `ξ_0` the initial point.
    pub step_delta: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub problem_id: String,
    pub schedule_kind: String,
    pub seed: u64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub schema: u32,
    pub metadata: TraceMetadata,
    pub steps: Vec<StepRecord>,
}

impl ConvergenceTrace {
    pub fn new(metadata: TraceMetadata) -> Self {
        ConvergenceTrace {
            schema: TRACE_SCHEMA,
            metadata,
            steps: Vec::new(),
        }
    }

    pub fn push(&mut self, record: StepRecord) {
        self.steps.push(record);
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.steps.last()
    }

    /// Steps ordered by strictly increasing `n`; weights strictly
    /// decreasing in `(0, 1]`.
    pub fn validate(&self) -> Result<()> {
        if self.schema != TRACE_SCHEMA {
            return Err(Error::TraceFormat(format!(
                "unsupported trace schema {}",
                self.schema
            )));
        }
        for w in self.steps.windows(2) {
            if w[1].n <= w[0].n {
                return Err(Error::TraceFormat(format!(
                    "step numbers not increasing at n = {}",
                    w[1].n
                )));
            }
            if w[1].eps >= w[0].eps {
                return Err(Error::TraceFormat(format!(
                    "weights not decreasing at n = {}",
                    w[1].n
                )));
            }
        }
        if let Some(s) = self.steps.iter().find(|s| !(s.eps > 0.0 && s.eps <= 1.0)) {
            return Err(Error::TraceFormat(format!(
                "weight out of range at n = {}",
                s.n
            )));
        }
        Ok(())
    }

    /// Index range of the trailing window: the last 10% of steps, at least
    /// five (or all, if fewer).
    pub fn tail_window(&self) -> std::ops::Range<usize> {
        let len = self.steps.len();
        len - window_len(len)..len
    }

    pub fn head_window(&self) -> std::ops::Range<usize> {
        0..window_len(self.steps.len())
    }
}

pub(crate) fn window_len(len: usize) -> usize {
    len.div_ceil(10).max(5).min(len)
}
