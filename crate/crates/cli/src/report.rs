//! Report documents and their JSON rendering.

use serde::Serialize;
use serde_json::{Map, Value};

/// Comparison rule for one reported quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum Expect {
    /// `|measured − value| ≤ tol`.
    Near { value: f64, tol: f64 },
    /// `measured ≤ value + tol`.
    AtMost { value: f64, tol: f64 },
    /// `lo < measured < hi`.
    Between { lo: f64, hi: f64 },
    /// Measured string equals the given verdict.
    Verdict { value: &'static str },
    /// Measured boolean is true.
    Holds,
}

impl Expect {
    pub fn check(&self, measured: &Value) -> bool {
        match (*self, measured) {
            (Expect::Near { value, tol }, Value::Number(n)) => {
                n.as_f64().is_some_and(|m| (m - value).abs() <= tol)
            }
            (Expect::AtMost { value, tol }, Value::Number(n)) => {
                n.as_f64().is_some_and(|m| m <= value + tol)
            }
            (Expect::Between { lo, hi }, Value::Number(n)) => {
                n.as_f64().is_some_and(|m| lo < m && m < hi)
            }
            (Expect::Verdict { value }, Value::String(s)) => s == value,
            (Expect::Holds, Value::Bool(b)) => *b,
            _ => false,
        }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        match self {
            Expect::Near { value, .. } => Expect::Near { value, tol },
            Expect::AtMost { value, .. } => Expect::AtMost { value, tol },
            other => other,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Expect::Near { value, tol } => format!("{value} ± {tol:e}"),
            Expect::AtMost { value, tol } => format!("≤ {value} + {tol:e}"),
            Expect::Between { lo, hi } => format!("in ({lo}, {hi})"),
            Expect::Verdict { value } => value.to_string(),
            Expect::Holds => "true".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub quantity: String,
    pub measured: Value,
    pub expected: Expect,
    pub pass: bool,
}

/// One JSON document per invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: Option<String>,
    pub inputs: Value,
    pub outputs: Value,
    pub tolerances: Value,
    pub checks: Vec<Check>,
    pub pass: Option<bool>,
    pub elapsed_ms: Option<f64>,
}

impl Report {
    pub fn new(inputs: Value, outputs: Value, tolerances: Value) -> Self {
        Self {
            scenario: None,
            inputs,
            outputs,
            tolerances,
            checks: Vec::new(),
            pass: None,
            elapsed_ms: None,
        }
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        if let Some(s) = &self.scenario {
            m.insert("scenario".into(), Value::String(s.clone()));
        }
        m.insert("inputs".into(), self.inputs.clone());
        m.insert("outputs".into(), self.outputs.clone());
        m.insert("tolerances".into(), self.tolerances.clone());
        if !self.checks.is_empty() {
            m.insert(
                "checks".into(),
                serde_json::to_value(&self.checks).expect("checks serialise"),
            );
        }
        if let Some(p) = self.pass {
            m.insert("pass".into(), Value::Bool(p));
        }
        if let Some(t) = self.elapsed_ms {
            m.insert("elapsed_ms".into(), num(t));
        }
        Value::Object(m)
    }
}

/// A JSON number, or `null` when not finite.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Renders `v` with every float written to 17 significant digits, which
/// round-trips any `f64`. Integers stay integers.
pub fn format_json(v: &Value, pretty: bool) -> String {
    let mut out = String::new();
    write_value(v, pretty, 0, &mut out);
    out
}

fn write_float(x: f64, out: &mut String) {
    if x == 0.0 {
        out.push_str(if x.is_sign_negative() { "-0.0" } else { "0.0" });
    } else {
        out.push_str(&format!("{x:.16e}"));
    }
}

fn indent(level: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(v: &Value, pretty: bool, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                write_float(n.as_f64().expect("f64 number"), out);
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // numeric rows stay on one line even when pretty
            let flat = !pretty
                || items
                    .iter()
                    .all(|i| !matches!(i, Value::Array(_) | Value::Object(_)));
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                    if flat && pretty {
                        out.push(' ');
                    }
                }
                if !flat {
                    indent(level + 1, out);
                }
                write_value(item, pretty, level + 1, out);
            }
            if !flat {
                indent(level, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push('{');
            for (k, (key, item)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                if pretty {
                    indent(level + 1, out);
                }
                out.push_str(&Value::String(key.clone()).to_string());
                out.push(':');
                if pretty {
                    out.push(' ');
                }
                write_value(item, pretty, level + 1, out);
            }
            if pretty {
                indent(level, out);
            }
            out.push('}');
        }
    }
}
