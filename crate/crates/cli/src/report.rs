//! Key/value reports rendered as text, JSON or a one-row CSV.

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Json,
    Csv,
}

#[derive(Debug, Default)]
pub struct Report(Map<String, Value>);

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    /// Inserts anything serializable; used for the library's result types.
    pub fn set_serialized<S: Serialize>(&mut self, key: &str, value: &S) -> &mut Self {
        let v = serde_json::to_value(value).expect("result types serialize");
        self.0.insert(key.to_string(), v);
        self
    }

    /// Copies every field of a serializable struct to the top level.
    pub fn merge<S: Serialize>(&mut self, value: &S) -> &mut Self {
        if let Value::Object(fields) = serde_json::to_value(value).expect("result types serialize") {
            self.0.extend(fields);
        }
        self
    }

    fn flatten(&self) -> Vec<(String, String)> {
        fn walk(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
            match value {
                Value::Object(fields) => {
                    for (k, v) in fields {
                        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        walk(&key, v, out);
                    }
                }
                Value::String(s) => out.push((prefix.to_string(), s.clone())),
                Value::Null => out.push((prefix.to_string(), String::new())),
                other => out.push((prefix.to_string(), other.to_string())),
            }
        }
        let mut out = Vec::new();
        walk("", &Value::Object(self.0.clone()), &mut out);
        out
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(&self.0).expect("report serializes"),
            Format::Human => {
                let rows = self.flatten();
                let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                rows.iter()
                    .map(|(k, v)| format!("{k:<width$}  {v}"))
                    .collect::<Vec<_>>()
                    .join("\n")
            }
            Format::Csv => {
                let (keys, values): (Vec<_>, Vec<_>) = self.flatten().into_iter().unzip();
                let quote = |s: &String| {
                    if s.contains([',', '"', '\n']) {
                        format!("\"{}\"", s.replace('"', "\"\""))
                    } else {
                        s.clone()
                    }
                };
                let line = |cells: &[String]| cells.iter().map(quote).collect::<Vec<_>>().join(",");
                format!("{}\n{}", line(&keys), line(&values))
            }
        }
    }
}

