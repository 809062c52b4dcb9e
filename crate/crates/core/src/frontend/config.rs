use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::evolution::EvolutionParams;

use super::FORMAT_VERSION;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("config must be a JSON object")]
    NotAnObject,
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("`{key}` out of range: {reason}")]
    OutOfRange { key: String, reason: String },
}

/// Run-level settings that sit next to the evolution parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
struct RunSection {
    format_version: u32,
    env: String,
    iset: String,
    seed: Option<u64>,
    nb_threads: Option<usize>,
    out: Option<PathBuf>,
    log: Option<PathBuf>,
    log_timings: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            env: "pendulum".into(),
            iset: "simple".into(),
            seed: None,
            nb_threads: None,
            out: None,
            log: None,
            log_timings: true,
        }
    }
}

const RUN_KEYS: [&str; 8] = ["formatVersion", "env", "iset", "seed", "nbThreads", "out", "log", "logTimings"];

/// Everything needed to start a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: EvolutionParams,
    pub env: String,
    pub iset: String,
    pub seed: Option<u64>,
    /// `None` defers to `TPG_THREADS`, then to the hardware thread count.
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub log_timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let run = RunSection::default();
        Self {
            params: EvolutionParams::default(),
            env: run.env,
            iset: run.iset,
            seed: run.seed,
            threads: run.nb_threads,
            out: run.out,
            log: run.log,
            log_timings: run.log_timings,
        }
    }
}

/// Deserializes `map` into `T`, attributing a failure to the first key that
/// fails on its own.
fn typed<T: DeserializeOwned>(map: Map<String, Value>) -> Result<T, ConfigError> {
    serde_json::from_value(Value::Object(map.clone())).map_err(|whole| {
        for (key, value) in &map {
            let single = Map::from_iter([(key.clone(), value.clone())]);
            if let Err(e) = serde_json::from_value::<T>(Value::Object(single)) {
                return ConfigError::InvalidValue {
                    key: key.clone(),
                    reason: e.to_string(),
                };
            }
        }
        ConfigError::Malformed(whole.to_string())
    })
}

/// Parses a JSON config. Missing keys take their defaults; every value is
/// range-checked.
pub fn load_config(json: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(json).map_err(|e| ConfigError::Malformed(e.to_string()))?;
    let Value::Object(object) = value else {
        return Err(ConfigError::NotAnObject);
    };
    let param_keys = match serde_json::to_value(EvolutionParams::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("params serialize to an object"),
    };
    let mut run = Map::new();
    let mut params = Map::new();
    for (key, value) in object {
        if RUN_KEYS.contains(&key.as_str()) {
            run.insert(key, value);
        } else if param_keys.contains_key(&key) {
            params.insert(key, value);
        } else {
            return Err(ConfigError::UnknownKey(key));
        }
    }
    let run: RunSection = typed(run)?;
    let params: EvolutionParams = typed(params)?;
    if run.format_version != FORMAT_VERSION {
        return Err(ConfigError::OutOfRange {
            key: "formatVersion".into(),
            reason: format!("{} is not supported, expected {FORMAT_VERSION}", run.format_version),
        });
    }
    if run.nb_threads == Some(0) {
        return Err(ConfigError::OutOfRange {
            key: "nbThreads".into(),
            reason: "must be at least 1".into(),
        });
    }
    params.validate().map_err(|e| ConfigError::OutOfRange {
        key: e.key.into(),
        reason: e.reason,
    })?;
    Ok(RunConfig {
        params,
        env: run.env,
        iset: run.iset,
        seed: run.seed,
        threads: run.nb_threads,
        out: run.out,
        log: run.log,
        log_timings: run.log_timings,
    })
}

impl RunConfig {
    /// Canonical JSON: every key present, sorted, pretty-printed.
    pub fn to_json(&self) -> String {
        let run = RunSection {
            format_version: FORMAT_VERSION,
            env: self.env.clone(),
            iset: self.iset.clone(),
            seed: self.seed,
            nb_threads: self.threads,
            out: self.out.clone(),
            log: self.log.clone(),
            log_timings: self.log_timings,
        };
        let mut object = match serde_json::to_value(&self.params) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("params serialize to an object"),
        };
        if let Ok(Value::Object(m)) = serde_json::to_value(run) {
            object.extend(m);
        }
        let sorted: std::collections::BTreeMap<_, _> = object.into_iter().collect();
        serde_json::to_string_pretty(&sorted).expect("plain values") + "\n"
    }
}
