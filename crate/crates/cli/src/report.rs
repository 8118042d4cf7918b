//! JSON reports: one entry per computed quantity, each carrying its
//! tolerance and verdict when a contract applies.

use serde_json::{Map, Value};
use sublinear::decimal::json_number;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub op: String,
    pub values: Vec<(String, f64)>,
    pub residual: Option<f64>,
    pub tolerance: Option<f64>,
    /// Human-readable form of the contract, e.g. `residual <= tolerance`.
    pub contract: Option<String>,
    pub pass: Option<bool>,
    pub note: Option<String>,
}

impl Entry {
    /// An informational value without a contract.
    pub fn value(op: impl Into<String>, value: f64) -> Self {
        Self::values(op, vec![("value".into(), value)])
    }

    pub fn values(op: impl Into<String>, values: Vec<(String, f64)>) -> Self {
        Self {
            op: op.into(),
            values,
            residual: None,
            tolerance: None,
            contract: None,
            pass: None,
            note: None,
        }
    }

    /// Passes when `residual <= tolerance`.
    pub fn within(mut self, residual: f64, tolerance: f64) -> Self {
        self.residual = Some(residual);
        self.tolerance = Some(tolerance);
        self.contract = Some("residual <= tolerance".into());
        self.pass = Some(residual <= tolerance);
        self
    }

    /// A contract that is not a plain residual bound.
    pub fn check(mut self, contract: impl Into<String>, pass: bool) -> Self {
        self.contract = Some(contract.into());
        self.pass = Some(pass);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = Some(tolerance);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("op".into(), Value::String(self.op.clone()));
        if let [(name, v)] = self.values.as_slice() {
            if name == "value" {
                m.insert("value".into(), json_number(*v));
            }
        }
        if !m.contains_key("value") && !self.values.is_empty() {
            let mut vs = Map::new();
            for (k, v) in &self.values {
                vs.insert(k.clone(), json_number(*v));
            }
            m.insert("values".into(), Value::Object(vs));
        }
        if let Some(r) = self.residual {
            m.insert("residual".into(), json_number(r));
        }
        if let Some(t) = self.tolerance {
            m.insert("tolerance".into(), json_number(t));
        }
        if let Some(c) = &self.contract {
            m.insert("contract".into(), Value::String(c.clone()));
        }
        if let Some(p) = self.pass {
            m.insert("pass".into(), Value::Bool(p));
        }
        if let Some(n) = &self.note {
            m.insert("note".into(), Value::String(n.clone()));
        }
        Value::Object(m)
    }

    pub fn csv_row(&self) -> String {
        let opt = |x: Option<f64>| x.map(sublinear::decimal::decimal).unwrap_or_default();
        let values = self
            .values
            .iter()
            .map(|(k, v)| format!("{k}={}", sublinear::decimal::decimal(*v)))
            .collect::<Vec<_>>()
            .join(";");
        let pass = self.pass.map(|p| p.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{}",
            self.op,
            values,
            opt(self.residual),
            opt(self.tolerance),
            pass
        )
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub entries: Vec<Entry>,
    /// Tabular output for `--out`; a generic entry table when absent.
    pub csv: Option<String>,
    pub wall_time_ms: f64,
}

impl Report {
    pub fn new(command: impl Into<String>, inputs: Value) -> Self {
        Self {
            command: command.into(),
            inputs,
            entries: Vec::new(),
            csv: None,
            wall_time_ms: 0.0,
        }
    }

    pub fn push(&mut self, entry: Entry) {
        self.entries.push(entry);
    }

    pub fn pass(&self) -> bool {
        !self.entries.iter().any(Entry::failed)
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("inputs".into(), self.inputs.clone());
        m.insert(
            "entries".into(),
            Value::Array(self.entries.iter().map(Entry::to_json).collect()),
        );
        m.insert("pass".into(), Value::Bool(self.pass()));
        m.insert("wall_time_ms".into(), json_number(self.wall_time_ms));
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("report serializes")
    }

    pub fn csv_text(&self) -> String {
        match &self.csv {
            Some(c) => c.clone(),
            None => {
                let mut s = String::from("op,values,residual,tolerance,pass\n");
                for e in &self.entries {
                    s.push_str(&e.csv_row());
                    s.push('\n');
                }
                s
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_json_shapes() {
        let e = Entry::value("mean", 0.5).within(1e-3, 1e-2);
        let j = e.to_json();
        assert_eq!(j["pass"], Value::Bool(true));
        assert_eq!(j["value"].to_string(), "5.0000000000000000e-1");
        let e = Entry::values("pair", vec![("upper".into(), 1.0), ("lower".into(), 0.25)])
            .check("upper >= lower", true);
        assert!(e.to_json()["values"].is_object());
        let mut r = Report::new("x", Value::Null);
        r.push(e);
        r.push(Entry::value("bad", 1.0).within(2.0, 1.0));
        assert!(!r.pass());
        assert!(r.csv_text().starts_with("op,values"));
    }
}
