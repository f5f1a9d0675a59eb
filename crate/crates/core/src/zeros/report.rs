use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// Outcome of a check, serialised as `{name, pass, statistics, data}`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub statistics: BTreeMap<String, Value>,
    pub data: Value,
}

impl CheckReport {
    pub fn new(name: &str, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            pass,
            statistics: BTreeMap::new(),
            data: Value::Null,
        }
    }

    pub fn stat(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.statistics.insert(key.to_string(), v.into());
        self
    }

    pub fn with_data(mut self, data: Value) -> Self {
        self.data = data;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}
