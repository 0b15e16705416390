//! Deterministic JSON/CSV reports with per-assertion margins.

use serde::{Serialize, Serializer};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Serializes non-finite values as `"inf"`, `"-inf"` or `"nan"`.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    num(*x).serialize(s)
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => num(*v).serialize(s),
        None => s.serialize_none(),
    }
}

/// JSON number, or a string sentinel for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

/// Any serializable value with non-finite floats replaced by sentinels.
pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// `lhs <= rhs` checked and recorded with `margin = rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    #[serde(serialize_with = "ser_f64")]
    pub lhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub rhs: f64,
    #[serde(serialize_with = "ser_f64")]
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub inputs_digest: String,
    pub results: Map<String, Value>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

pub fn digest(input: &str) -> String {
    let h = Sha256::digest(input.as_bytes());
    h.iter().map(|b| format!("{b:02x}")).collect()
}

impl Report {
    pub fn new(command: &str, seed: u64, inputs: &str) -> Self {
        Report {
            command: command.to_string(),
            seed,
            inputs_digest: digest(inputs),
            results: Map::new(),
            assertions: Vec::new(),
            passed: true,
            wall_time_s: None,
        }
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }

    /// Records `lhs <= rhs`; NaN on either side fails.
    pub fn le(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) -> bool {
        let pass = !lhs.is_nan() && !rhs.is_nan() && lhs <= rhs;
        self.push(name.into(), lhs, rhs, pass)
    }

    /// Records `|a - b| <= tol`.
    pub fn close(&mut self, name: impl Into<String>, a: f64, b: f64, tol: f64) -> bool {
        let d = if a == b { 0.0 } else { (a - b).abs() };
        self.push(name.into(), d, tol, d <= tol)
    }

    /// Records a boolean outcome as `0 <= 0` or `1 <= 0`.
    pub fn check(&mut self, name: impl Into<String>, ok: bool) -> bool {
        self.push(name.into(), if ok { 0.0 } else { 1.0 }, 0.0, ok)
    }

    fn push(&mut self, name: String, lhs: f64, rhs: f64, pass: bool) -> bool {
        let margin = rhs - lhs;
        self.assertions.push(Assertion { name, lhs, rhs, margin: if margin.is_nan() { 0.0 } else { margin }, pass });
        self.passed &= pass;
        pass
    }

    pub fn merge(&mut self, prefix: &str, other: Report) {
        for mut a in other.assertions {
            a.name = format!("{prefix}.{}", a.name);
            self.passed &= a.pass;
            self.assertions.push(a);
        }
        self.results.insert(prefix.to_string(), Value::Object(other.results));
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Assertions as CSV rows.
    pub fn assertions_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "lhs", "rhs", "margin", "pass"]).expect("in-memory write");
        for a in &self.assertions {
            w.write_record([
                a.name.clone(),
                fmt_f64(a.lhs),
                fmt_f64(a.rhs),
                fmt_f64(a.margin),
                a.pass.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Shortest round-trip text for a float, with `inf`/`nan` sentinels.
pub fn fmt_f64(x: f64) -> String {
    match num(x) {
        Value::String(s) => s,
        v => v.to_string(),
    }
}

/// Generic CSV table.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}
