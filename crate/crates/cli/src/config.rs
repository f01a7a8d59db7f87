//! Run configuration and `--set` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

/// Reads the file, applies overrides in order, then parses the result.
pub fn load(path: &Path, overrides: &[String]) -> Result<(RunConfig, Value), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("config", "config file exists and is readable", format!("{}: {e}", path.display())))?;
    let mut raw: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::validation("config", "config parses as JSON", e.to_string()))?;
    for o in overrides {
        apply_override(&mut raw, o)?;
    }
    let cfg: RunConfig = serde_json::from_value(raw.clone())
        .map_err(|e| CliError::validation("config", "config matches {command, params, output_dir, seed}", e.to_string()))?;
    Ok((cfg, raw))
}

/// `a.b.c=value`; the value is read as JSON, falling back to a bare string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::validation("set", "override has the form key=value", assignment))?;
    let path: Vec<&str> = key.split('.').collect();
    if key.is_empty() || path.iter().any(|p| p.is_empty()) {
        return Err(CliError::validation("set", "dot-path has no empty segments", key));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = root;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| CliError::validation("set", "array segments are indices", key))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::validation("set", "array index in range", format!("{key} (len {len})")))?
            }
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), Value::Null);
                }
                map.entry(seg.to_string()).or_insert_with(empty_object)
            }
            _ => return Err(CliError::validation("set", "dot-path walks objects or arrays", key)),
        };
        if last {
            *cur = value;
            return Ok(());
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_override_creates_and_replaces() {
        let mut v = json!({"command": "lap-scan", "params": {"scan": {"s": 0.51, "box_list": [200, 400]}}});
        apply_override(&mut v, "params.scan.s=0.75").unwrap();
        apply_override(&mut v, "params.scan.box_list.1=800").unwrap();
        apply_override(&mut v, "params.label=free run").unwrap();
        apply_override(&mut v, "seed=7").unwrap();
        assert_eq!(v["params"]["scan"]["s"], json!(0.75));
        assert_eq!(v["params"]["scan"]["box_list"], json!([200, 800]));
        assert_eq!(v["params"]["label"], json!("free run"));
        assert_eq!(v["seed"], json!(7));
    }

    #[test]
    fn malformed_overrides_rejected() {
        let mut v = json!({"params": {"a": [1]}});
        for bad in ["noequals", "=1", "params..a=1", "params.a.5=1", "params.a.x=1"] {
            let e = apply_override(&mut v, bad).unwrap_err();
            assert!(matches!(e, CliError::Validation { .. }), "{bad}");
        }
    }
}
