//! Checking obligations against recorded executions.
//!
//! An obligation's free symbols are bound to values observed in a trace:
//! current-state symbols to the method entry state, havoc symbols of loop
//! `k` to a snapshot taken at the head of loop `k`, and call results to the
//! value returned at that call site. Each consistent binding is one
//! instance; the obligation is then evaluated exactly.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::{HypKind, Obligation, ObligationSet, SiteKind};
use crate::interp::{ExecutionOutcome, TraceKind, TracePoint};
use crate::logic::{eval_bool, NumericMode, Tag, Value, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceVerdict {
    /// Hypotheses held and the goal held on at least one instance.
    Pass,
    /// Every instance had a false hypothesis.
    PassVacuous,
    /// Some instance satisfied the hypotheses but not the goal.
    Fail,
    /// No instance could be evaluated.
    NotInstantiable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObligationTraceResult {
    pub id: String,
    pub verdict: InstanceVerdict,
    pub instances: usize,
    pub passed: usize,
    pub vacuous: usize,
    /// Symbol values of the first failing instance.
    pub witness: Option<Vec<(String, Value)>>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceValidationReport {
    pub method: String,
    pub results: Vec<ObligationTraceResult>,
}

impl TraceValidationReport {
    pub fn count(&self, verdict: InstanceVerdict) -> usize {
        self.results.iter().filter(|r| r.verdict == verdict).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = &ObligationTraceResult> {
        self.results.iter().filter(|r| r.verdict == InstanceVerdict::Fail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("trace was recorded for a different unit")]
    UnitMismatch,
    #[error("obligations were generated for `{set}` but the trace is of `{trace}`")]
    MethodMismatch { set: String, trace: String },
    #[error("outcome has no trace (run with trace recording enabled)")]
    NoTrace,
}

/// Evaluates every obligation of `set` on the trace of `outcome`.
///
/// Obligations of other methods and lemma obligations are reported as
/// not instantiable.
pub fn instantiate_on_trace(set: &ObligationSet, outcome: &ExecutionOutcome) -> Result<TraceValidationReport, TraceError> {
    if set.unit_digest != outcome.unit_digest {
        return Err(TraceError::UnitMismatch);
    }
    if let Some(m) = &set.method {
        if *m != outcome.method {
            return Err(TraceError::MethodMismatch { set: m.clone(), trace: outcome.method.clone() });
        }
    }
    let entry = outcome.trace.iter().find(|p| p.kind == TraceKind::Entry).ok_or(TraceError::NoTrace)?;
    let results = set
        .obligations
        .iter()
        .map(|ob| {
            if ob.origin.method != outcome.method {
                return not_instantiable(ob, "no program point in this trace");
            }
            validate(ob, entry, &outcome.trace)
        })
        .collect();
    Ok(TraceValidationReport { method: outcome.method.clone(), results })
}

fn not_instantiable(ob: &Obligation, reason: &str) -> ObligationTraceResult {
    ObligationTraceResult {
        id: ob.id.clone(),
        verdict: InstanceVerdict::NotInstantiable,
        instances: 0,
        passed: 0,
        vacuous: 0,
        witness: None,
        reason: Some(reason.to_string()),
    }
}

struct Instance<'t> {
    entry: &'t TracePoint,
    loops: HashMap<u32, &'t TracePoint>,
    calls: HashMap<u32, &'t TracePoint>,
}

impl Instance<'_> {
    fn lookup(&self, v: &Var) -> Option<Value> {
        let point = match v.tag {
            Tag::Cur => Some(self.entry),
            Tag::Havoc(k) => self.loops.get(&k).copied(),
            Tag::CallResult(k) => self.calls.get(&k).copied(),
            _ => None,
        }?;
        point.get(&v.name).map(Value::to_exact)
    }
}

fn validate(ob: &Obligation, entry: &TracePoint, trace: &[TracePoint]) -> ObligationTraceResult {
    let havoc = ob.havoc_loops();
    let mut instances = Vec::new();
    let mut loops: HashMap<u32, &TracePoint> = HashMap::new();
    let mut calls: HashMap<u32, &TracePoint> = HashMap::new();
    // One instance per distinct combination of latest snapshots. A path can
    // end right before any snapshot (a do-loop head comes after its body's
    // inner loops), so every update starts a new instance.
    for (ix, p) in trace.iter().enumerate() {
        let (kind, id) = match p.kind {
            TraceKind::LoopHead { loop_id, .. } => (SiteKind::Loop, loop_id),
            TraceKind::CallReturn { call_id } => (SiteKind::Call, call_id),
            _ => continue,
        };
        let renamed = first_pass_ids(ob, trace, ix, kind, id);
        let ids = if renamed.is_empty() { vec![id] } else { renamed };
        for id in ids {
            match kind {
                SiteKind::Loop => loops.insert(id, p),
                SiteKind::Call => calls.insert(id, p),
            };
        }
        if !havoc.is_empty() && havoc.iter().all(|k| loops.contains_key(k)) {
            instances.push(Instance { entry, loops: loops.clone(), calls: calls.clone() });
        }
    }
    if havoc.is_empty() {
        instances.push(Instance { entry, loops, calls });
    }
    if instances.is_empty() {
        return not_instantiable(ob, "loop head never reached");
    }

    let mut res = ObligationTraceResult {
        id: ob.id.clone(),
        verdict: InstanceVerdict::NotInstantiable,
        instances: instances.len(),
        passed: 0,
        vacuous: 0,
        witness: None,
        reason: None,
    };
    let symbols = ob.symbols();
    for inst in &instances {
        let env = |v: &Var| inst.lookup(v);
        let mut vacuous = false;
        let mut error = None;
        for h in ob.hypotheses.iter().filter(|h| h.kind != HypKind::Lemma) {
            match eval_bool(&h.formula, &env, NumericMode::Rational) {
                Ok(true) => {}
                Ok(false) => {
                    vacuous = true;
                    break;
                }
                Err(e) => {
                    error = Some(e.to_string());
                    break;
                }
            }
        }
        if error.is_none() && !vacuous {
            match eval_bool(&ob.goal, &env, NumericMode::Rational) {
                Ok(true) => res.passed += 1,
                Ok(false) => {
                    if res.witness.is_none() {
                        let w: BTreeMap<String, Value> =
                            symbols.iter().filter_map(|v| inst.lookup(v).map(|x| (v.symbol(), x))).collect();
                        res.witness = Some(w.into_iter().collect());
                    }
                }
                Err(e) => error = Some(e.to_string()),
            }
        }
        if vacuous {
            res.vacuous += 1;
        }
        if let Some(e) = error {
            res.reason.get_or_insert(e);
        }
    }
    res.verdict = if res.witness.is_some() {
        InstanceVerdict::Fail
    } else if res.passed > 0 {
        InstanceVerdict::Pass
    } else if res.vacuous > 0 {
        InstanceVerdict::PassVacuous
    } else {
        InstanceVerdict::NotInstantiable
    };
    res
}

/// Fresh ids that the site reached at `trace[ix]` stands for, non-empty
/// when it lies in the first pass of an enclosing do-loop. That is the case
/// when the next head of the do-loop is its first.
fn first_pass_ids(ob: &Obligation, trace: &[TracePoint], ix: usize, kind: SiteKind, id: u32) -> Vec<u32> {
    ob.first_pass
        .iter()
        .filter(|e| e.kind == kind && e.from == id)
        .filter(|e| {
            trace[ix + 1..].iter().find_map(|q| match q.kind {
                TraceKind::LoopHead { loop_id, iteration } if loop_id == e.do_loop => Some(iteration == 0),
                _ => None,
            }) == Some(true)
        })
        .map(|e| e.to)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_source;
    use crate::interp::{exec_method_with, ExecOptions};
    use crate::logic::Term;
    use crate::vcgen::{generate_obligations, ObligationKind};

    const COUNT: &str = "
        /*@ requires n >= 0; ensures \\result == n; @*/
        int f(int n) {
            int i = 0;
            /*@ loop_invariant 0 <= i && i <= n;
              @ loop_variant n - i; @*/
            while (i < n) { i = i + 1; }
            return i;
        }";

    #[test]
    fn loop_obligations_pass_on_trace() {
        let u = check_source("t", COUNT).unwrap();
        let set = generate_obligations(&u, "f").unwrap();
        let out = exec_method_with(&u, "f", vec![Value::int(4)], &ExecOptions::new(NumericMode::Rational)).unwrap();
        let rep = instantiate_on_trace(&set, &out).unwrap();
        assert_eq!(rep.count(InstanceVerdict::Fail), 0);
        let preserve = set.obligations.iter().position(|o| o.origin.kind == ObligationKind::InvariantPreserve).unwrap();
        assert_eq!(rep.results[preserve].verdict, InstanceVerdict::Pass);
        assert_eq!(rep.results[preserve].instances, 5);
        assert_eq!(rep.results[preserve].passed, 4);
    }

    #[test]
    fn false_goal_fails_with_witness() {
        let u = check_source("t", COUNT).unwrap();
        let mut set = generate_obligations(&u, "f").unwrap();
        set.obligations[0].goal = Term::ff();
        let out = exec_method_with(&u, "f", vec![Value::int(2)], &ExecOptions::new(NumericMode::Rational)).unwrap();
        let rep = instantiate_on_trace(&set, &out).unwrap();
        assert_eq!(rep.results[0].verdict, InstanceVerdict::Fail);
        assert_eq!(rep.results[0].witness.as_ref().unwrap()[0].0, "n");
    }

    #[test]
    fn do_loop_first_pass_has_its_own_inner_loop() {
        let src = "
            /*@ requires n >= 1; ensures \\result == n; @*/
            int f(int n) {
                int i = 0; int k = 0;
                /*@ loop_invariant 1 <= i && i <= n && k == i;
                  @ loop_variant n - i; @*/
                do {
                    int j = 0;
                    /*@ loop_invariant 0 <= j && j <= 1;
                      @ loop_variant 1 - j; @*/
                    while (j < 1) { j = j + 1; }
                    i = i + j; k = k + 1;
                } while (i < n);
                return i;
            }";
        let u = check_source("t", src).unwrap();
        let set = generate_obligations(&u, "f").unwrap();
        assert!(set.obligations[0].first_pass.iter().any(|e| e.do_loop == 1 && e.from == 2));
        let out = exec_method_with(&u, "f", vec![Value::int(3)], &ExecOptions::new(NumericMode::Rational)).unwrap();
        let rep = instantiate_on_trace(&set, &out).unwrap();
        assert_eq!(rep.count(InstanceVerdict::Fail), 0);
        let preserve: Vec<_> = set
            .obligations
            .iter()
            .zip(&rep.results)
            .filter(|(o, _)| o.origin.kind == ObligationKind::InvariantPreserve && o.origin.loop_id == Some(1))
            .collect();
        assert!(!preserve.is_empty());
        assert!(preserve.iter().all(|(_, r)| r.verdict == InstanceVerdict::Pass));
    }

    #[test]
    fn lemma_is_not_instantiable() {
        let src = format!("/*@ lemma l: \\forall integer x; x + 0 == x; @*/ {COUNT}");
        let u = check_source("t", &src).unwrap();
        let set = generate_obligations(&u, "f").unwrap();
        let out = exec_method_with(&u, "f", vec![Value::int(1)], &ExecOptions::new(NumericMode::Rational)).unwrap();
        let rep = instantiate_on_trace(&set, &out).unwrap();
        assert_eq!(rep.results.last().unwrap().verdict, InstanceVerdict::NotInstantiable);
    }

    #[test]
    fn unit_mismatch() {
        let u = check_source("t", COUNT).unwrap();
        let other = check_source("t", "int f(int n) { return n; }").unwrap();
        let set = generate_obligations(&u, "f").unwrap();
        let out = exec_method_with(&other, "f", vec![Value::int(1)], &ExecOptions::new(NumericMode::Rational)).unwrap();
        assert_eq!(instantiate_on_trace(&set, &out), Err(TraceError::UnitMismatch));
    }
}
