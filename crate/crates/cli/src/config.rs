//! Config loading. Configs are plain JSON; `--set a.b.c=value` overrides
//! apply before deserialization, values parsed as JSON with a bareword
//! string fallback. A manifest from a previous run is accepted in place
//! of a config: its embedded snapshot is extracted, which is what makes
//! `--config <old-run>/manifest.json` reproduce the original run.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::{CliError, Result};

pub fn load(path: &Path, sets: &[String]) -> Result<Value> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("config {} is not valid JSON: {e}", path.display())))?;
    if let Some(snapshot) = manifest_snapshot(&value) {
        value = snapshot;
    }
    for spec in sets {
        apply_set(&mut value, spec)?;
    }
    Ok(value)
}

/// A manifest carries the original config under "config" next to a
/// "command" field; plain configs have no "command".
fn manifest_snapshot(value: &Value) -> Option<Value> {
    if value.get("command").is_some() {
        value.get("config").cloned()
    } else {
        None
    }
}

fn apply_set(value: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::validation(format!("--set needs KEY=VALUE, got `{spec}`")))?;
    if path.is_empty() {
        return Err(CliError::validation("--set key is empty"));
    }
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cursor = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cursor.is_object() {
            return Err(CliError::validation(format!(
                "--set {path}: `{}` is not an object",
                parts[..i].join(".")
            )));
        }
        let map = cursor.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), new);
            return Ok(());
        }
        cursor = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("parts is never empty");
}

/// Deserialize a config value, naming the failing field on error.
pub fn parse<T: serde::de::DeserializeOwned>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| CliError::validation(format!("bad config: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn set_overrides_nested_and_creates_paths() {
        let mut v = json!({"train": {"epochs": 30}});
        apply_set(&mut v, "train.epochs=5").unwrap();
        apply_set(&mut v, "binding.seed=9").unwrap();
        apply_set(&mut v, "name=shapes").unwrap();
        assert_eq!(v["train"]["epochs"], json!(5));
        assert_eq!(v["binding"]["seed"], json!(9));
        assert_eq!(v["name"], json!("shapes"));
    }

    #[test]
    fn set_rejects_scalar_traversal() {
        let mut v = json!({"count": 3});
        assert!(apply_set(&mut v, "count.inner=1").is_err());
        assert!(apply_set(&mut v, "nonsense").is_err());
    }

    #[test]
    fn manifest_unwraps_to_snapshot() {
        let manifest = json!({"command": "gen", "config": {"count": 7}, "seeds": [1]});
        assert_eq!(manifest_snapshot(&manifest), Some(json!({"count": 7})));
        assert_eq!(manifest_snapshot(&json!({"count": 7})), None);
    }
}
