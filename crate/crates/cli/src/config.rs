//! Layered run configuration: scale preset, then an optional TOML file, then
//! `key=value` overrides, then `--seed`.

use std::path::Path;

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// Full-size runs matching the published hyperparameters.
    #[default]
    Paper,
    /// Reduced sizes for continuous integration.
    Ci,
}

/// A command configuration with scale presets and a seed.
pub trait RunConfig: Serialize + DeserializeOwned + Clone {
    const NAME: &'static str;

    fn preset(scale: Scale) -> Self;

    fn seed(&self) -> u64;

    /// Checks values that deserialize fine but make no sense.
    fn validate(&self) -> Result<()> {
        Ok(())
    }
}

fn to_table<T: Serialize>(value: &T) -> Result<Table> {
    match Value::try_from(value).map_err(|e| CliError::Config(e.to_string()))? {
        Value::Table(t) => Ok(t),
        _ => Err(CliError::Config("configuration must serialize to a table".into())),
    }
}

/// Recursively overlays `top` onto `base`. Unknown keys are kept so that
/// deserialization rejects them.
fn merge(base: &mut Table, top: Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (Some(slot), v) => *slot = v,
            // Optional keys are omitted from the serialized preset.
            (None, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string.
fn parse_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let mut cur = table;
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            cur.insert((*part).to_string(), parse_value(raw.trim()));
        } else {
            cur = match cur.entry((*part).to_string()).or_insert_with(|| Value::Table(Table::new())) {
                Value::Table(t) => t,
                _ => return Err(CliError::Config(format!("`{key}`: `{part}` is not a table"))),
            };
        }
    }
    Ok(())
}

/// Builds the final configuration.
pub fn resolve<C: RunConfig>(
    scale: Scale,
    file: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<C> {
    let mut table = to_table(&C::preset(scale))?;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let top: Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        merge(&mut table, top);
    }
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(s) = seed {
        let s = i64::try_from(s).map_err(|_| CliError::Config(format!("seed {s} does not fit in a TOML integer")))?;
        table.insert("seed".into(), Value::Integer(s));
    }
    let cfg: C = Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// The canonical TOML text of a configuration.
pub fn to_toml<C: Serialize>(cfg: &C) -> Result<String> {
    toml::to_string(cfg).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Inner {
        lr: f64,
    }

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Demo {
        seed: u64,
        steps: usize,
        name: String,
        inner: Inner,
    }

    impl RunConfig for Demo {
        const NAME: &'static str = "demo";
        fn preset(scale: Scale) -> Self {
            let steps = if scale == Scale::Ci { 3 } else { 30 };
            Self { seed: 0, steps, name: "a".into(), inner: Inner { lr: 0.1 } }
        }
        fn seed(&self) -> u64 {
            self.seed
        }
    }

    #[test]
    fn overrides_apply_in_order() {
        let sets = vec!["inner.lr=0.5".to_string(), "name=plain".to_string(), "steps=7".to_string()];
        let d: Demo = resolve(Scale::Ci, None, &sets, Some(9)).unwrap();
        assert_eq!(d, Demo { seed: 9, steps: 7, name: "plain".into(), inner: Inner { lr: 0.5 } });
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = resolve::<Demo>(Scale::Paper, None, &["stepz=1".into()], None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = resolve::<Demo>(Scale::Paper, None, &["steps".into()], None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
