//! Report documents and their serialization.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Serializes non-finite floats as the strings `"inf"`, `"-inf"`, `"nan"`.
mod float_repr {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("unexpected float text {other:?}"))),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One asserted numeric check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The library invariant the check instantiates.
    pub invariant: String,
    #[serde(with = "float_repr")]
    pub value: f64,
    pub relation: Relation,
    #[serde(with = "float_repr")]
    pub tolerance: f64,
    pub passed: bool,
}

impl PartialEq for Check {
    fn eq(&self, other: &Self) -> bool {
        let same = |a: f64, b: f64| a == b || (a.is_nan() && b.is_nan());
        self.name == other.name
            && self.invariant == other.invariant
            && same(self.value, other.value)
            && self.relation == other.relation
            && same(self.tolerance, other.tolerance)
            && self.passed == other.passed
    }
}

impl Check {
    pub fn at_most(name: &str, invariant: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), invariant: invariant.into(), value, relation: Relation::AtMost, tolerance, passed: value <= tolerance }
    }

    pub fn at_least(name: &str, invariant: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), invariant: invariant.into(), value, relation: Relation::AtLeast, tolerance, passed: value >= tolerance }
    }
}

/// A tabular section; column names match the report fields they come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    /// Set when a budget cut an experiment short.
    pub partial: bool,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub results: Value,
    pub tables: Vec<Table>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn checks_table(report: &Report) -> Result<Table, CliError> {
    const COLUMNS: [&str; 6] = ["name", "invariant", "value", "relation", "tolerance", "passed"];
    let mut t = Table::new("checks", &COLUMNS);
    for c in &report.checks {
        let v = serde_json::to_value(c).map_err(|e| CliError::Output(e.to_string()))?;
        t.push(COLUMNS.iter().map(|k| v[*k].clone()).collect());
    }
    Ok(t)
}

/// JSON emits the whole report; CSV emits every table followed by a
/// `checks` table, each preceded by a `# name` line and separated by a
/// blank line.
pub fn emit(report: &Report, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Output(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut out = String::new();
            let checks = checks_table(report)?;
            for (i, t) in report.tables.iter().chain([&checks]).enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                out.push_str(&format!("# {}\n", t.name));
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&t.columns).map_err(|e| CliError::Output(e.to_string()))?;
                for row in &t.rows {
                    w.write_record(row.iter().map(cell)).map_err(|e| CliError::Output(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
                out.push_str(&String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))?);
            }
            Ok(out)
        }
    }
}

pub fn parse_report(text: &str) -> Result<Report, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Output(format!("line {}, column {}: {e}", e.line(), e.column())))
}
