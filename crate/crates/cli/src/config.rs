use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use viscofix::operators::OperatorSpec;
use viscofix::sampling::DEFAULT_SEED;
use viscofix::schemes::{ScheduleSpec, SolveOptions};
use viscofix::semigroup::FamilySpec;
use viscofix::Vector;

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    Viscosity,
    Anchored,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default = "default_id")]
    pub id: String,
    /// Step map given as a single operator.
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    /// Step map given as a family; outer steps cycle through `indices`
    /// (the family's generators by default).
    #[serde(default)]
    pub family: Option<FamilySpec>,
    #[serde(default)]
    pub indices: Option<Vec<f64>>,
    /// Required by the viscosity scheme.
    #[serde(default)]
    pub contraction: Option<OperatorSpec>,
    #[serde(default)]
    pub scheme: SchemeKind,
    /// Required by the anchored scheme.
    #[serde(default)]
    pub anchor: Option<Vector>,
    /// A known fixed point of the step map, for the boundedness check.
    #[serde(default)]
    pub fixed_point: Option<Vector>,
    /// Known limit of the iterates.
    #[serde(default)]
    pub oracle_limit: Option<Vector>,
}

fn default_id() -> String {
    "problem".into()
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    /// `options.seed` is replaced by the top-level `seed`.
    #[serde(default)]
    pub options: SolveOptions,
    #[serde(default)]
    pub anchors: Option<Vec<Vector>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        match (&p.operator, &p.family) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give either problem.operator or problem.family, not both",
                ))
            }
            (None, None) => return Err(CliError::config("problem needs an operator or a family")),
            _ => {}
        }
        if p.indices.is_some() && p.family.is_none() {
            return Err(CliError::config("problem.indices requires problem.family"));
        }
        match p.scheme {
            SchemeKind::Viscosity if p.contraction.is_none() => {
                return Err(CliError::config(
                    "the viscosity scheme needs problem.contraction",
                ))
            }
            SchemeKind::Anchored if p.anchor.is_none() => {
                return Err(CliError::config("the anchored scheme needs problem.anchor"))
            }
            _ => {}
        }
        self.options.validate().map_err(CliError::config)?;
        Ok(())
    }
}

/// A parsed config together with its canonical JSON form.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub value: Value,
    pub config: RunConfig,
}

impl LoadedConfig {
    pub fn from_value(
        mut value: Value,
        seed: Option<u64>,
        tol: Option<f64>,
    ) -> Result<Self, CliError> {
        let obj = value
            .as_object_mut()
            .ok_or_else(|| CliError::config("config must be a JSON object"))?;
        if let Some(s) = seed {
            obj.insert("seed".into(), s.into());
        }
        if let Some(t) = tol {
            let opts = obj
                .entry("options")
                .or_insert_with(|| Value::Object(Default::default()));
            opts.as_object_mut()
                .ok_or_else(|| CliError::config("options must be a JSON object"))?
                .insert("outer_tol".into(), t.into());
        }
        let mut config: RunConfig = serde_json::from_value(value.clone())
            .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
        config.options.seed = config.seed;
        config.validate()?;
        Ok(LoadedConfig { value, config })
    }

    pub fn hash(&self) -> String {
        config_hash(&self.value)
    }
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{} is not valid JSON: {e}", path.display())))
}

/// SHA-256 of the compact JSON rendering; object keys are kept sorted by
/// `serde_json`, so the digest ignores key order and whitespace.
pub fn config_hash(value: &Value) -> String {
    let canonical = serde_json::to_string(value).expect("JSON values always serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// Sets the number at a dotted path such as `schedule.p`, creating
/// intermediate objects as needed.
pub fn set_path(value: &mut Value, path: &str, number: f64) -> Result<(), CliError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::config(format!("bad parameter path {path:?}")));
    }
    let mut cur = value;
    for key in &keys[..keys.len() - 1] {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| CliError::config(format!("{path:?} does not name an object field")))?;
        cur = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = cur
        .as_object_mut()
        .ok_or_else(|| CliError::config(format!("{path:?} does not name an object field")))?;
    let n = serde_json::Number::from_f64(number)
        .ok_or_else(|| CliError::config(format!("value {number} is not finite")))?;
    obj.insert(keys[keys.len() - 1].to_string(), Value::Number(n));
    Ok(())
}
