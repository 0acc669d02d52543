//! JSON reports written by the command-line tool (schema:
//! `schemas/report.schema.json`).
//!
//! Field order is fixed by the struct definitions, so identical inputs give
//! byte-identical output.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::check::parse_decimal;
use crate::corpus::HarnessReport;
use crate::discharge::{ExportFormat, ProofStatus};
use crate::interp::{CheckEvent, ExecStatus, ExecutionOutcome};
use crate::logic::{fmt_rational, NumericMode, Value};
use crate::vcgen::{InstanceVerdict, Obligation, TraceValidationReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    /// SHA-256 of the input file bytes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obligations: Option<Vec<ObligationRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<CheckEvent>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub harness: Option<Vec<HarnessRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<BTreeMap<String, u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        Report {
            tool: "miniwhy",
            version: env!("CARGO_PKG_VERSION"),
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            input: None,
            input_digest: None,
            obligations: None,
            run: None,
            checks: None,
            harness: None,
            summary: None,
            timing_ms: None,
        }
    }

    pub fn with_input(mut self, path: &str, bytes: &[u8]) -> Report {
        self.input = Some(path.to_string());
        self.input_digest = Some(sha256_hex(bytes));
        self
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ObligationRecord {
    pub id: String,
    pub name: String,
    pub kind: &'static str,
    pub method: String,
    pub line: u32,
    pub column: u32,
    pub status: String,
    /// Prover rules, the reason for `unknown`, a counterexample, trace
    /// validation counts or the export path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub formula: String,
}

impl ObligationRecord {
    /// A record with status `unknown` and no detail.
    pub fn new(ob: &Obligation) -> ObligationRecord {
        ObligationRecord {
            id: ob.id.clone(),
            name: ob.name.clone(),
            kind: ob.origin.kind.as_str(),
            method: ob.origin.method.clone(),
            line: ob.origin.line,
            column: ob.origin.column,
            status: "unknown".into(),
            detail: None,
            formula: ob.formula().to_string(),
        }
    }

    pub fn with_proof(mut self, status: &ProofStatus) -> ObligationRecord {
        self.status = status.label().to_string();
        self.detail = Some(match status {
            ProofStatus::ProvedInternal { rules } => rules.join(", "),
            ProofStatus::Unknown { reason } => reason.clone(),
            ProofStatus::Refuted { counterexample } => {
                let parts: Vec<String> = counterexample.iter().map(|(n, v)| format!("{n} = {v}")).collect();
                format!("counterexample: {}", parts.join(", "))
            }
        });
        self
    }

    pub fn exported(mut self, format: ExportFormat, path: &str) -> ObligationRecord {
        self.status = "exported".into();
        let prior = self.detail.take().map(|d| format!("{d}; ")).unwrap_or_default();
        self.detail = Some(format!("{prior}{} written to {path}", format.as_str()));
        self
    }
}

/// Summary counts of a trace validation, keyed by verdict.
pub fn trace_summary(report: &TraceValidationReport) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for r in &report.results {
        let key = match r.verdict {
            InstanceVerdict::Pass => "pass",
            InstanceVerdict::PassVacuous => "pass-vacuous",
            InstanceVerdict::Fail => "fail",
            InstanceVerdict::NotInstantiable => "not-instantiable",
        };
        *out.entry(key.to_string()).or_insert(0) += 1;
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationRecord {
    pub method: String,
    pub kind: &'static str,
    pub line: u32,
    pub column: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub clause: String,
    pub witness: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FaultRecord {
    pub method: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub method: String,
    pub mode: NumericMode,
    pub status: ExecStatus,
    pub result: Option<serde_json::Value>,
    pub violations: Vec<ViolationRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultRecord>,
}

impl RunRecord {
    pub fn from_outcome(o: &ExecutionOutcome) -> RunRecord {
        RunRecord {
            method: o.method.clone(),
            mode: o.mode,
            status: o.status,
            result: o.ret.as_ref().map(value_to_json),
            violations: o
                .violations
                .iter()
                .map(|v| ViolationRecord {
                    method: v.method.clone(),
                    kind: v.kind.as_str(),
                    line: v.line,
                    column: v.column,
                    label: v.label.clone(),
                    clause: v.clause.clone(),
                    witness: v.witness.iter().map(|(n, x)| (n.clone(), value_to_json(x))).collect(),
                })
                .collect(),
            fault: o.fault.as_ref().map(|f| FaultRecord {
                method: f.method.clone(),
                line: f.line,
                column: f.column,
                message: f.message.clone(),
            }),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FailureRecord {
    pub index: u64,
    pub args: Vec<serde_json::Value>,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HarnessRecord {
    pub entry: String,
    pub method: String,
    pub mode: NumericMode,
    pub seed: u64,
    pub cases: u64,
    pub exhaustive: bool,
    pub failure_count: usize,
    pub failures: Vec<FailureRecord>,
}

impl HarnessRecord {
    /// At most `limit` failures are listed; `failure_count` has the total.
    pub fn from_report(r: &HarnessReport, limit: usize) -> HarnessRecord {
        HarnessRecord {
            entry: r.entry.clone(),
            method: r.method.clone(),
            mode: r.mode,
            seed: r.seed,
            cases: r.cases,
            exhaustive: r.exhaustive,
            failure_count: r.failures.len(),
            failures: r
                .failures
                .iter()
                .take(limit)
                .map(|f| FailureRecord {
                    index: f.index,
                    args: f.args.iter().map(value_to_json).collect(),
                    reason: f.reason.clone(),
                })
                .collect(),
        }
    }
}

/// JSON rendering of a value. Rationals with a short terminating decimal
/// expansion and finite doubles become numbers; other rationals become
/// `"p/q"` strings and non-finite doubles become strings.
pub fn value_to_json(v: &Value) -> serde_json::Value {
    let number = |text: String| match serde_json::from_str::<serde_json::Number>(&text) {
        Ok(n) => serde_json::Value::Number(n),
        Err(_) => serde_json::Value::String(text),
    };
    match v {
        Value::Int(i) => number(i.to_string()),
        Value::Rat(q) => number(fmt_rational(q)),
        Value::F64(x) if x.is_finite() => number(format!("{x:?}")),
        Value::F64(x) => serde_json::Value::String(x.to_string()),
        Value::Bool(b) => serde_json::Value::Bool(*b),
        Value::Array(a) => serde_json::Value::Array(a.iter().map(value_to_json).collect()),
    }
}

/// Reads a JSON argument exactly: integer literals become integers, other
/// numbers exact rationals, `"p/q"` strings rationals.
pub fn value_from_json(j: &serde_json::Value) -> Result<Value, String> {
    match j {
        serde_json::Value::Bool(b) => Ok(Value::Bool(*b)),
        serde_json::Value::Number(n) => {
            let text = n.to_string();
            if let Ok(i) = text.parse::<BigInt>() {
                return Ok(Value::Int(i));
            }
            parse_decimal(&text).map(Value::Rat).ok_or_else(|| format!("cannot read number `{text}`"))
        }
        serde_json::Value::String(s) => {
            let parsed = match s.split_once('/') {
                Some((p, q)) => match (p.trim().parse::<BigInt>(), q.trim().parse::<BigInt>()) {
                    (Ok(p), Ok(q)) if q != BigInt::from(0) => Some(BigRational::new(p, q)),
                    _ => None,
                },
                None => parse_decimal(s.trim()),
            };
            parsed.map(Value::Rat).ok_or_else(|| format!("cannot read `{s}` as a number"))
        }
        serde_json::Value::Array(items) => Ok(Value::array(items.iter().map(value_from_json).collect::<Result<_, _>>()?)),
        other => Err(format!("unsupported argument `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_exactly() {
        let j: serde_json::Value = serde_json::from_str("[[3, 1.5, \"1/3\"], 1.2E-7, true]").unwrap();
        let v = value_from_json(&j).unwrap();
        let Value::Array(items) = &v else { panic!() };
        assert_eq!(items[1], Value::Rat(BigRational::new(12.into(), BigInt::from(10).pow(8))));
        assert_eq!(value_to_json(&v).to_string(), "[[3,1.5,\"1/3\"],0.00000012,true]");
        assert_eq!(value_to_json(&Value::F64(0.1)).to_string(), "0.1");
        assert_eq!(value_to_json(&Value::F64(f64::INFINITY)).to_string(), "\"inf\"");
        assert!(value_from_json(&serde_json::json!({"a": 1})).is_err());
    }

    #[test]
    fn reports_are_stable() {
        let r = Report::new("check").with_input("a.mjml", b"");
        let json = r.to_json();
        assert!(json.starts_with("{\n  \"tool\": \"miniwhy\""));
        assert!(json.contains("e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"));
        assert_eq!(json, r.to_json());
    }
}
