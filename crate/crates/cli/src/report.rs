//! Reports: an ordered JSON value, rendered either as JSON or as indented text.

use std::collections::BTreeMap;
use std::fmt::Write;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::{Map, Value};

use nielsen_core::spectra::{Certification, Witness};

use crate::expr::{format_rat, Rat};
use crate::specfile::Assertion;

#[derive(Serialize, Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub claim: String,
    /// `certified`, `asserted`, `conditional` or `refuted`.
    pub status: String,
    pub detail: String,
}

impl Hypothesis {
    pub fn from_certification(claim: &str, cert: &Certification, assertion: Assertion) -> Self {
        let (status, detail) = match cert {
            Certification::Certified => ("certified", "exact certificate".to_string()),
            Certification::Refuted(w) => ("refuted", witness_text(w)),
            Certification::InconclusiveUpToBound(b) => {
                let status = if assertion == Assertion::Assert { "asserted" } else { "conditional" };
                (status, format!("no certificate or witness up to bound {b}"))
            }
        };
        Hypothesis {
            claim: claim.to_string(),
            status: status.to_string(),
            detail,
        }
    }

    pub fn is_refuted(&self) -> bool {
        self.status == "refuted"
    }
}

fn witness_text(w: &Witness) -> String {
    let level = w.level.map_or(String::new(), |l| format!("level {l}, "));
    format!("{level}exponents {:?} give a primitive root of unity of order {}", w.exponents, w.order)
}

#[derive(Serialize, Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub spec: String,
    pub parameters: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Hypothesis>,
    pub results: Map<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    /// Set when a cross-check disagrees.
    #[serde(skip)]
    pub failed: bool,
}

impl Report {
    pub fn new(command: impl Into<String>, spec: impl Into<String>, parameters: BTreeMap<String, String>) -> Self {
        Report {
            command: command.into(),
            spec: spec.into(),
            parameters,
            hypothesis: None,
            results: Map::new(),
            notes: Vec::new(),
            failed: false,
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.results.insert(key.to_string(), value.into());
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed {
            1
        } else if self.hypothesis.as_ref().is_some_and(Hypothesis::is_refuted) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "command: {}", self.command).unwrap();
        writeln!(out, "spec: {}", self.spec).unwrap();
        if !self.parameters.is_empty() {
            let p: Vec<String> = self.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(out, "parameters: {}", p.join(", ")).unwrap();
        }
        if let Some(h) = &self.hypothesis {
            writeln!(out, "hypothesis: {} is {} ({})", h.claim, h.status, h.detail).unwrap();
        }
        for (k, v) in &self.results {
            render(k, v, 0, &mut out);
        }
        if !self.notes.is_empty() {
            out.push_str("notes:\n");
            for n in &self.notes {
                writeln!(out, "  - {n}").unwrap();
            }
        }
        out
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("none".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            Some(format!("[{}]", items.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        Value::Array(items) if items.iter().all(|i| i.as_array().is_some_and(|r| r.iter().all(|x| !x.is_object() && !x.is_array()))) => {
            Some(format!("[{}]", items.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn render(key: &str, v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    if let Some(s) = scalar(v) {
        writeln!(out, "{pad}{key}: {s}").unwrap();
        return;
    }
    writeln!(out, "{pad}{key}:").unwrap();
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                render(k, x, indent + 1, out);
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(m) => {
                        let mut first = true;
                        for (k, x) in m {
                            let mut line = String::new();
                            render(k, x, indent + 2, &mut line);
                            let marker = if first { format!("{pad}  - ") } else { format!("{pad}    ") };
                            out.push_str(&marker);
                            out.push_str(line.trim_start_matches(' '));
                            first = false;
                        }
                    }
                    other => writeln!(out, "{pad}  - {}", scalar(other).unwrap_or_else(|| other.to_string())).unwrap(),
                }
            }
        }
        _ => unreachable!("scalars handled above"),
    }
}

/// Integers that fit in an `i64` as numbers, larger ones as strings.
pub fn int(n: &BigInt) -> Value {
    match n.to_i64() {
        Some(v) => Value::from(v),
        None => Value::from(n.to_string()),
    }
}

pub fn ints(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(int).collect())
}

pub fn rat(r: &Rat) -> Value {
    if r.is_integer() {
        int(&r.to_integer())
    } else {
        Value::from(format_rat(r))
    }
}

pub fn rats(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn text_layout() {
        let mut r = Report::new("nielsen", "demo", BTreeMap::from([("k".to_string(), "2".to_string())]));
        r.set("value", 12);
        r.set("terms", json!([{"coset": "e", "product": -6}, {"coset": "t", "product": 18}]));
        r.set("matrix", json!([[1, 0], [0, 1]]));
        r.notes.push("a note".into());
        let text = r.to_text();
        let expected = "command: nielsen\nspec: demo\nparameters: k=2\nvalue: 12\nterms:\n  - coset: e\n    product: -6\n  - coset: t\n    product: 18\nmatrix: [[1, 0], [0, 1]]\nnotes:\n  - a note\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn json_keeps_insertion_order() {
        let mut r = Report::new("x", "y", BTreeMap::new());
        r.set("zeta", 1);
        r.set("alpha", 2);
        let j = r.to_json();
        assert!(j.find("zeta").unwrap() < j.find("alpha").unwrap());
    }

    #[test]
    fn refuted_hypothesis_sets_exit_code() {
        let w = Witness {
            level: Some(2),
            exponents: vec![1],
            order: 2,
        };
        let mut r = Report::new("x", "y", BTreeMap::new());
        r.hypothesis = Some(Hypothesis::from_certification("NR", &Certification::Refuted(w), Assertion::Certify));
        assert_eq!(r.exit_code(), 2);
        let h = Hypothesis::from_certification("NR", &Certification::InconclusiveUpToBound(3), Assertion::Assert);
        assert_eq!(h.status, "asserted");
        let h = Hypothesis::from_certification("NR", &Certification::InconclusiveUpToBound(3), Assertion::Certify);
        assert_eq!(h.status, "conditional");
    }
}
