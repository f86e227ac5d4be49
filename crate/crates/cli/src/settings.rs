//! Settings file and data-root resolution.
//!
//! The settings file is JSON. Each section is a partial override merged
//! over the built-in defaults, so a file may set a single field:
//!
//! ```json
//! { "eulerian": { "pressure": { "tolerance": 1e-6 } }, "data_root": "/scratch/lb" }
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Cli;
use crate::exit::usage;

pub const DEFAULT_DATA_ROOT: &str = "data";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Overrides for the scenario preset (geometry, gravity, motion).
    pub scenario: Option<Value>,
    pub eulerian: Option<Value>,
    pub sph: Option<Value>,
    pub data_root: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading settings {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| usage(format!("settings {}: {e}", path.display())))
    }
}

/// Resolved global options shared by every subcommand.
#[derive(Clone, Debug)]
pub struct Context {
    pub seed: u64,
    pub data_root: PathBuf,
    pub settings: Settings,
}

impl Context {
    /// Data root precedence: `--data-root`, then `LIQUIDBENCH_DATA`, then
    /// the settings file, then `./data`.
    pub fn from_cli(cli: &Cli) -> Result<Self> {
        let settings = match &cli.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        let data_root = cli
            .data_root
            .clone()
            .or_else(|| settings.data_root.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_DATA_ROOT));
        Ok(Self { seed: cli.seed, data_root, settings })
    }

    pub fn with_root(data_root: impl Into<PathBuf>) -> Self {
        Self { seed: 0, data_root: data_root.into(), settings: Settings::default() }
    }
}

/// `base` with the fields present in `overrides` replaced, recursively.
pub fn merged<T: Serialize + DeserializeOwned>(base: &T, overrides: Option<&Value>, section: &str) -> Result<T> {
    let Some(over) = overrides else {
        return Ok(serde_json::from_value(serde_json::to_value(base)?)?);
    };
    let mut v = serde_json::to_value(base)?;
    merge_into(&mut v, over);
    serde_json::from_value(v).map_err(|e| usage(format!("settings section `{section}`: {e}")))
}

fn merge_into(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge_into(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use liquidbench_core::eulerian::EulerianParams;
    use serde_json::json;

    #[test]
    fn partial_overrides_keep_other_defaults() {
        let base = EulerianParams::default();
        let p: EulerianParams = merged(&base, Some(&json!({"pressure": {"tolerance": 1e-6}, "cfl": 0.5})), "eulerian").unwrap();
        assert_eq!(p.pressure.tolerance, 1e-6);
        assert_eq!(p.cfl, 0.5);
        assert_eq!(p.flip_blend, base.flip_blend);
        assert_eq!(p.pressure.max_iterations, base.pressure.max_iterations);
    }

    #[test]
    fn bad_override_is_a_usage_error() {
        let err = merged(&EulerianParams::default(), Some(&json!({"cfl": "fast"})), "eulerian").unwrap_err();
        assert_eq!(crate::exit::exit_code(&err), crate::exit::CONFIG);
    }

    #[test]
    fn unknown_sections_are_rejected() {
        assert!(serde_json::from_str::<Settings>(r#"{"solver": {}}"#).is_err());
    }
}
