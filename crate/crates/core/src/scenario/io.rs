//! JSON documents describing a scenario set and named random variables.
//!
//! ```json
//! {"outcomes": ["-1", "0", "1"],
//!  "measures": [[0.2, 0.6, 0.2], [0.25, 0.5, 0.25]],
//!  "variables": {"xi": [-1, 0, 1], "pair": [[1, 2], [3, 4], [5, 6]]}}
//! ```
//!
//! Outcome labels may be strings or numbers. A variable is either a list of
//! scalars or a list of equal-length vectors, one entry per outcome.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::{RandomVariable, ScenarioSet};
use crate::decimal::json_number;
use crate::error::{Error, Result};

// Numbers are read through `Value` because untagged enums cannot see
// arbitrary-precision numbers.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    outcomes: Vec<Value>,
    measures: Vec<Vec<f64>>,
    #[serde(default)]
    variables: BTreeMap<String, Vec<Value>>,
}

fn label(v: Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s),
        Value::Number(n) => {
            let x: f64 = n
                .to_string()
                .parse()
                .map_err(|_| Error::Parse(format!("bad label {n}")))?;
            Ok(format!("{x}"))
        }
        other => Err(Error::Parse(format!(
            "outcome label must be a string or number, got {other}"
        ))),
    }
}

fn number(v: &Value, name: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n
            .to_string()
            .parse()
            .map_err(|_| Error::Parse(format!("variable `{name}`: bad number {n}"))),
        other => Err(Error::Parse(format!(
            "variable `{name}`: expected a number, got {other}"
        ))),
    }
}

fn entry(v: &Value, name: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| number(x, name)).collect(),
        scalar => Ok(vec![number(scalar, name)?]),
    }
}

/// A scenario set with its named random variables.
#[derive(Debug, Clone)]
pub struct ScenarioDocument {
    pub set: ScenarioSet,
    pub variables: BTreeMap<String, RandomVariable>,
}

impl ScenarioDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawDocument = serde_json::from_str(text)?;
        let outcomes = raw
            .outcomes
            .into_iter()
            .map(label)
            .collect::<Result<Vec<_>>>()?;
        let set = ScenarioSet::new(outcomes, raw.measures)?;
        let mut variables = BTreeMap::new();
        for (name, entries) in raw.variables {
            if entries.len() != set.outcome_count() {
                return Err(Error::Domain(format!(
                    "variable `{name}` has {} entries for {} outcomes",
                    entries.len(),
                    set.outcome_count()
                )));
            }
            let values = entries
                .iter()
                .map(|e| entry(e, &name))
                .collect::<Result<Vec<_>>>()?;
            let var = RandomVariable::new(set.outcomes().to_vec(), values)
                .map_err(|e| Error::Construction(format!("variable `{name}`: {e}")))?;
            variables.insert(name, var);
        }
        Ok(Self { set, variables })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn variable(&self, name: &str) -> Result<&RandomVariable> {
        self.variables
            .get(name)
            .ok_or_else(|| Error::Argument(format!("no variable named `{name}`")))
    }

    pub fn to_json_value(&self) -> Value {
        let measures = self
            .set
            .measures()
            .iter()
            .map(|p| Value::Array(p.iter().map(|&w| json_number(w)).collect()))
            .collect();
        let mut vars = Map::new();
        for (name, var) in &self.variables {
            let entries = var
                .values()
                .iter()
                .map(|v| {
                    if v.len() == 1 {
                        json_number(v[0])
                    } else {
                        Value::Array(v.iter().map(|&x| json_number(x)).collect())
                    }
                })
                .collect();
            vars.insert(name.clone(), Value::Array(entries));
        }
        let mut doc = Map::new();
        doc.insert(
            "outcomes".into(),
            Value::Array(
                self.set
                    .outcomes()
                    .iter()
                    .cloned()
                    .map(Value::String)
                    .collect(),
            ),
        );
        doc.insert("measures".into(), Value::Array(measures));
        doc.insert("variables".into(), Value::Object(vars));
        Value::Object(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BALL: &str = r#"{
        "outcomes": [-1, 0, 1],
        "measures": [[0.2, 0.6, 0.2], [0.25, 0.5, 0.25]],
        "variables": {"xi": [-1, 0, 1], "pair": [[1, 2], [3, 4], [5, 6]]}
    }"#;

    #[test]
    fn loads_numeric_labels_and_vectors() {
        let doc = ScenarioDocument::from_json(BALL).unwrap();
        assert_eq!(doc.set.outcomes(), ["-1", "0", "1"]);
        assert_eq!(doc.variable("pair").unwrap().dim(), 2);
        let e = doc
            .set
            .expect(&doc.variable("xi").unwrap().map(f64::abs))
            .unwrap();
        assert!((e - 0.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_is_exact() {
        let doc = ScenarioDocument::from_json(BALL).unwrap();
        let again = ScenarioDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(doc.set, again.set);
        assert_eq!(doc.variables, again.variables);
        assert!(doc.to_json().contains("2.0000000000000001e-1"));
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(
            ScenarioDocument::from_json(r#"{"outcomes":["a"],"measures":[[1.0]],"extra":1}"#)
                .is_err()
        );
        assert!(
            ScenarioDocument::from_json(r#"{"outcomes":["a","b"],"measures":[[0.7,0.7]]}"#)
                .is_err()
        );
        assert!(matches!(
            ScenarioDocument::from_json(
                r#"{"outcomes":["a","b"],"measures":[[0.5,0.5]],"variables":{"x":[1]}}"#
            ),
            Err(Error::Domain(_))
        ));
    }
}
