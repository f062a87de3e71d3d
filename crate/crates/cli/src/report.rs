//! Output envelope shared by every subcommand.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use startreemix::rational::{parse_rational, to_decimal};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub version: u32,
    pub command: String,
    pub seed: u64,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decimal_view: Option<Value>,
}

impl Envelope {
    pub fn new(command: &str, seed: u64, result: Value, decimals: Option<usize>) -> Self {
        let decimal_view = decimals.map(|digits| decimal_view(&result, digits));
        Self {
            version: SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            result,
            decimal_view,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(self).expect("envelope serializes");
                text.push('\n');
                text
            }
            Format::Table => {
                let mut rows = vec![
                    ("command".to_string(), self.command.clone()),
                    ("seed".to_string(), self.seed.to_string()),
                ];
                flatten("", self.decimal_view.as_ref().unwrap_or(&self.result), &mut rows);
                let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
            }
        }
    }
}

/// Exact rationals as emitted by the library: `p` or `p/q`. Case labels such
/// as `1.2` are left alone.
fn is_exact_rational(text: &str) -> bool {
    let body = text.strip_prefix('-').unwrap_or(text);
    let mut parts = body.splitn(2, '/');
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    parts.next().is_some_and(digits) && parts.next().is_none_or(digits)
}

fn decimal_view(value: &Value, digits: usize) -> Value {
    match value {
        Value::String(s) if is_exact_rational(s) => {
            Value::String(to_decimal(&parse_rational(s).expect("checked form"), digits))
        }
        Value::Array(items) => Value::Array(items.iter().map(|v| decimal_view(v, digits)).collect()),
        Value::Object(map) => Value::Object(map.iter().map(|(k, v)| (k.clone(), decimal_view(v, digits))).collect()),
        other => other.clone(),
    }
}

fn scalar(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Null => Some("-".into()),
        Value::Bool(_) | Value::Number(_) => Some(value.to_string()),
        _ => None,
    }
}

fn flatten(prefix: &str, value: &Value, rows: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&key(k), v, rows);
            }
        }
        Value::Array(items) => {
            if let Some(cells) = items.iter().map(scalar).collect::<Option<Vec<_>>>() {
                rows.push((prefix.to_string(), format!("[{}]", cells.join(", "))));
            } else {
                for (i, v) in items.iter().enumerate() {
                    flatten(&key(&i.to_string()), v, rows);
                }
            }
        }
        other => rows.push((prefix.to_string(), scalar(other).expect("scalar"))),
    }
}
