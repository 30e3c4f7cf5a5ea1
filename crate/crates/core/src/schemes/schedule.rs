use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// `ε_n = 1/(n+1)^p`.
    Harmonic {
        p: f64,
        n_max: usize,
    },
    /// `ε_n = r^n`.
    Geometric {
        r: f64,
        n_max: usize,
    },
    Explicit {
        values: Vec<f64>,
    },
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Harmonic { p: 1.0, n_max: 200 }
    }
}

impl ScheduleSpec {
    pub fn label(&self) -> String {
        match self {
            ScheduleSpec::Harmonic { p, .. } => format!("harmonic(p={p})"),
            ScheduleSpec::Geometric { r, .. } => format!("geometric(r={r})"),
            ScheduleSpec::Explicit { .. } => "explicit".to_string(),
        }
    }
}

/// Materialized weights `ε_1, …, ε_N` for the outer loop.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonSchedule {
    label: String,
    values: Vec<f64>,
}

pub fn make_schedule(spec: &ScheduleSpec) -> Result<EpsilonSchedule> {
    let values: Vec<f64> = match *spec {
        ScheduleSpec::Harmonic { p, n_max } => {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::InvalidSchedule(format!(
                    "harmonic exponent must be positive, got {p}"
                )));
            }
            (1..=n_max).map(|n| (n as f64 + 1.0).powf(-p)).collect()
        }
        ScheduleSpec::Geometric { r, n_max } => {
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidSchedule(format!(
                    "geometric ratio must lie in (0, 1), got {r}"
                )));
            }
            (1..=n_max).map(|n| r.powi(n as i32)).collect()
        }
        ScheduleSpec::Explicit { ref values } => values.clone(),
    };
    let schedule = EpsilonSchedule {
        label: spec.label(),
        values,
    };
    schedule.check(false).map_err(|e| match e {
        Error::NonDecreasingSchedule { n } => {
            Error::InvalidSchedule(format!("schedule not strictly decreasing at n = {n}"))
        }
        other => other,
    })?;
    Ok(schedule)
}

impl EpsilonSchedule {
    /// `ε_n = 1/n` for `n = 1..=n_max`. The first weight is exactly one,
    /// which makes the first anchored iterate the anchor itself.
    pub fn anchored(n_max: usize) -> Result<Self> {
        let schedule = EpsilonSchedule {
            label: "anchored(1/n)".to_string(),
            values: (1..=n_max).map(|n| 1.0 / n as f64).collect(),
        };
        schedule.check(true)?;
        Ok(schedule)
    }

    fn check(&self, allow_unit_start: bool) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidSchedule(
                "schedule needs at least one step".into(),
            ));
        }
        for (i, &e) in self.values.iter().enumerate() {
            let unit_ok = allow_unit_start && i == 0 && e == 1.0;
            if !(e > 0.0 && (e < 1.0 || unit_ok)) {
                return Err(Error::InvalidSchedule(format!(
                    "ε_{} = {e} lies outside (0, 1)",
                    i + 1
                )));
            }
        }
        if let Some(i) = self.values.windows(2).position(|w| w[1] >= w[0]) {
            return Err(Error::NonDecreasingSchedule { n: i + 2 });
        }
        Ok(())
    }

    /// Re-checks the invariants; the only first weight allowed to be one is
    /// the anchored schedule's.
    pub fn validate(&self) -> Result<()> {
        self.check(self.label.starts_with("anchored"))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// `ε_n`, one-based.
    pub fn eps(&self, n: usize) -> f64 {
        self.values[n - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
