//! The versioned report envelope and its text rendering.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;
use sode::serial::rational_to_string;
use sode::symbolic::{Assumptions, Symbol};

pub const SCHEMA: &str = "1";

#[derive(Debug, Serialize)]
pub struct AssumptionsReport {
    #[serde(rename = "box")]
    pub bounds: BTreeMap<String, [String; 2]>,
    pub relations: Vec<String>,
}

impl AssumptionsReport {
    pub fn new(a: &Assumptions, relations: &[String], vars: &[&str]) -> Self {
        let bounds = vars
            .iter()
            .map(|v| {
                let (lo, hi) = a.interval(&Symbol::new(v));
                (v.to_string(), [rational_to_string(&lo), rational_to_string(&hi)])
            })
            .collect();
        AssumptionsReport { bounds, relations: relations.to_vec() }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub input: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<AssumptionsReport>,
    pub seed: u64,
    pub result: Value,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str, input: Value, seed: u64, result: Value) -> Self {
        Report {
            schema: SCHEMA,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            assumptions: None,
            seed,
            result,
            warnings: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One `path  value` line per leaf, keys aligned.
    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        let mut lines = Vec::new();
        flatten("", &value, &mut lines);
        let width = lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        lines.iter().map(|(k, v)| format!("{k:width$}  {v}\n")).collect()
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let items: Vec<String> = a.iter().map(scalar).collect();
            out.push((prefix.to_string(), format!("[{}]", items.join(", "))));
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), v, out);
            }
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_is_aligned() {
        let r = Report::new("classify", json!("exp(-p)"), 0, json!({"family": "3c", "i": [1, 2]}));
        let text = r.to_text();
        assert!(text.contains("result.family"));
        assert!(text.contains("[1, 2]"));
        let col = text.lines().map(|l| l.find("  ").unwrap()).max().unwrap() + 2;
        assert!(text.lines().all(|l| !l[col..].starts_with(' ')));
    }
}
