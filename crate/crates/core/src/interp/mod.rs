//! Contract-checking interpreter.
//!
//! Executes a typechecked method and evaluates every contract clause at its
//! program point: preconditions at entry, loop invariants at loop entry and
//! after each iteration, variants before and after each iteration,
//! assertions where written, and postconditions and behaviours at return.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::check::{IrKind, IrStmt, SpecClause, TypedMethod, TypedUnit};
use crate::logic::{eval, Env, EvalError, NumericMode, Sort, Tag, Value, Var};
use crate::syntax::ast::Pos;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Requires,
    Ensures,
    BehaviourEnsures,
    InvariantEntry,
    InvariantPreserved,
    VariantNonneg,
    VariantDecrease,
    Assert,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Requires => "requires",
            CheckKind::Ensures => "ensures",
            CheckKind::BehaviourEnsures => "behaviour-ensures",
            CheckKind::InvariantEntry => "invariant-entry",
            CheckKind::InvariantPreserved => "invariant-preserved",
            CheckKind::VariantNonneg => "variant-nonneg",
            CheckKind::VariantDecrease => "variant-decrease",
            CheckKind::Assert => "assert",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckEvent {
    pub method: String,
    pub kind: CheckKind,
    pub line: u32,
    pub column: u32,
    /// Behaviour name for behaviour checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub passed: bool,
    /// Short hash of the state the clause was evaluated in.
    pub state_digest: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub method: String,
    pub kind: CheckKind,
    pub line: u32,
    pub column: u32,
    pub label: Option<String>,
    pub clause: String,
    pub witness: Vec<(String, Value)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeFault {
    pub method: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecStatus {
    Normal,
    ContractViolation,
    RuntimeError,
}

/// Where a trace snapshot was taken.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceKind {
    Entry,
    /// Head of a loop: `iteration` 0 is the entry check.
    LoopHead { loop_id: u32, iteration: u64 },
    /// A call returned; the snapshot holds `result` and the callee's final
    /// parameter values.
    CallReturn { call_id: u32 },
    Exit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TracePoint {
    pub kind: TraceKind,
    pub state: Vec<(Arc<str>, Value)>,
}

impl TracePoint {
    pub fn get(&self, name: &str) -> Option<&Value> {
        self.state.iter().find(|(n, _)| &**n == name).map(|(_, v)| v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionOutcome {
    pub unit_digest: String,
    pub method: String,
    pub mode: NumericMode,
    pub status: ExecStatus,
    pub ret: Option<Value>,
    pub events: Vec<CheckEvent>,
    pub violations: Vec<Violation>,
    pub fault: Option<RuntimeFault>,
    pub trace: Vec<TracePoint>,
    /// Parameter and local values when the top-level method returned.
    pub final_state: Vec<(String, Value)>,
}

impl ExecutionOutcome {
    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

#[derive(Clone, Debug)]
pub struct ExecOptions {
    pub mode: NumericMode,
    /// Stop at the first failed check (otherwise record it and continue).
    pub halt_on_violation: bool,
    pub record_events: bool,
    pub record_trace: bool,
    pub max_depth: usize,
    pub max_loop_steps: u64,
}

impl ExecOptions {
    pub fn new(mode: NumericMode) -> ExecOptions {
        ExecOptions {
            mode,
            halt_on_violation: true,
            record_events: true,
            record_trace: true,
            max_depth: 10_000,
            max_loop_steps: 1_000_000,
        }
    }

    /// Options for bulk runs: no event log, no trace.
    pub fn quiet(mode: NumericMode) -> ExecOptions {
        ExecOptions { record_events: false, record_trace: false, ..ExecOptions::new(mode) }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("`{method}` expects {expected} argument(s), got {got}")]
    Arity { method: String, expected: usize, got: usize },
    #[error("argument `{param}` expects {expected}, got {got}")]
    ArgumentType { param: String, expected: Sort, got: String },
}

/// Runs `method` with default options.
pub fn exec_method(unit: &TypedUnit, method: &str, args: Vec<Value>, mode: NumericMode) -> Result<ExecutionOutcome, ExecError> {
    exec_method_with(unit, method, args, &ExecOptions::new(mode))
}

/// Converts an argument to the representation of `sort` in `mode`.
pub fn coerce_arg(v: Value, sort: Sort, mode: NumericMode) -> Option<Value> {
    match (sort, v) {
        (Sort::Int, Value::Int(i)) => Some(Value::Int(i)),
        (Sort::Int, Value::Rat(q)) if q.is_integer() => Some(Value::Int(q.to_integer())),
        (Sort::Real, Value::Int(i)) => Some(Value::Rat(BigRational::from_integer(i)).to_mode(mode)),
        (Sort::Real, v @ (Value::Rat(_) | Value::F64(_))) => Some(v.to_mode(mode)),
        (Sort::Bool, Value::Bool(b)) => Some(Value::Bool(b)),
        (Sort::IntArray | Sort::RealArray, Value::Array(items)) => {
            let elem = sort.elem().unwrap();
            let mut out = Vec::with_capacity(items.len());
            for it in items.iter() {
                out.push(coerce_arg(it.clone(), elem, mode)?);
            }
            Some(Value::array(out))
        }
        _ => None,
    }
}

pub fn exec_method_with(unit: &TypedUnit, method: &str, args: Vec<Value>, opts: &ExecOptions) -> Result<ExecutionOutcome, ExecError> {
    let m = unit.method(method).ok_or_else(|| ExecError::UnknownMethod(method.to_string()))?;
    if m.params.len() != args.len() {
        return Err(ExecError::Arity { method: method.to_string(), expected: m.params.len(), got: args.len() });
    }
    let mut vals = Vec::with_capacity(args.len());
    for (p, a) in m.params.iter().zip(args) {
        let shown = a.to_string();
        let v = coerce_arg(a, p.sort, opts.mode).ok_or_else(|| ExecError::ArgumentType {
            param: p.name.to_string(),
            expected: p.sort,
            got: shown,
        })?;
        vals.push(v);
    }
    let mut ex = Executor { unit, opts, events: Vec::new(), violations: Vec::new(), trace: Vec::new(), steps: 0, final_state: Vec::new() };
    let r = ex.call(m, vals, 0, true);
    let (status, ret, fault) = match r {
        Ok(v) => (if ex.violations.is_empty() { ExecStatus::Normal } else { ExecStatus::ContractViolation }, v, None),
        Err(Stop::Violation) => (ExecStatus::ContractViolation, None, None),
        Err(Stop::Fault(f)) => (ExecStatus::RuntimeError, None, Some(f)),
    };
    Ok(ExecutionOutcome {
        unit_digest: unit.digest.clone(),
        method: method.to_string(),
        mode: opts.mode,
        status,
        ret,
        events: ex.events,
        violations: ex.violations,
        fault,
        trace: ex.trace,
        final_state: ex.final_state,
    })
}

enum Stop {
    /// Halted on a violation already recorded in `violations`.
    Violation,
    Fault(RuntimeFault),
}

enum Flow {
    Normal,
    Return(Option<Value>),
}

type Exec<T> = Result<T, Stop>;

struct Frame<'m> {
    m: &'m TypedMethod,
    vals: Vec<Option<Value>>,
    old: Vec<Option<Value>>,
    loop_entry: HashMap<u32, Vec<Option<Value>>>,
    result: Option<Value>,
    /// The top-level frame records the trace.
    top: bool,
}

impl Env for Frame<'_> {
    fn lookup(&self, var: &Var) -> Result<Value, EvalError> {
        let slot = var.slot as usize;
        let found = match var.tag {
            Tag::Cur => self.vals.get(slot).cloned().flatten(),
            Tag::Old => self.old.get(slot).cloned().flatten(),
            Tag::LoopEntry(k) => self.loop_entry.get(&k).and_then(|s| s.get(slot).cloned().flatten()),
            Tag::Result => self.result.clone(),
            _ => None,
        };
        found.ok_or_else(|| EvalError::Unbound(var.symbol()))
    }
}

impl Frame<'_> {
    fn snapshot(&self) -> Vec<(Arc<str>, Value)> {
        self.vals
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_ref().map(|v| (Arc::from(self.m.vars[i].name.as_str()), v.clone())))
            .collect()
    }

    fn witness(&self) -> Vec<(String, Value)> {
        let mut w: Vec<(String, Value)> = self
            .vals
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_ref().map(|v| (self.m.vars[i].name.clone(), v.clone())))
            .collect();
        for (i, v) in self.old.iter().enumerate() {
            if let Some(v) = v {
                w.push((format!("{}@old", self.m.vars[i].name), v.clone()));
            }
        }
        if let Some(r) = &self.result {
            w.push(("\\result".into(), r.clone()));
        }
        w
    }

    fn digest(&self) -> String {
        let mut h = Sha256::new();
        for (i, v) in self.vals.iter().enumerate() {
            if let Some(v) = v {
                h.update(format!("{}={v};", self.m.vars[i].name).as_bytes());
            }
        }
        if let Some(r) = &self.result {
            h.update(format!("\\result={r};").as_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

struct Executor<'u> {
    unit: &'u TypedUnit,
    opts: &'u ExecOptions,
    events: Vec<CheckEvent>,
    violations: Vec<Violation>,
    trace: Vec<TracePoint>,
    steps: u64,
    final_state: Vec<(String, Value)>,
}

fn fault(m: &TypedMethod, pos: Pos, message: impl Into<String>) -> Stop {
    Stop::Fault(RuntimeFault { method: m.name.clone(), line: pos.line, column: pos.col, message: message.into() })
}

impl<'u> Executor<'u> {
    fn eval(&self, f: &Frame, t: &crate::logic::Term, pos: Pos) -> Exec<Value> {
        eval(t, f, self.opts.mode).map_err(|e| fault(f.m, pos, e.to_string()))
    }

    fn eval_bool(&self, f: &Frame, t: &crate::logic::Term, pos: Pos) -> Exec<bool> {
        match self.eval(f, t, pos)? {
            Value::Bool(b) => Ok(b),
            v => Err(fault(f.m, pos, format!("internal type error: expected bool, got {v}"))),
        }
    }

    fn eval_int(&self, f: &Frame, t: &crate::logic::Term, pos: Pos) -> Exec<BigInt> {
        match self.eval(f, t, pos)? {
            Value::Int(i) => Ok(i),
            v => Err(fault(f.m, pos, format!("internal type error: expected int, got {v}"))),
        }
    }

    /// Records the outcome of a check; halts on failure if configured to.
    fn verdict(&mut self, f: &Frame, kind: CheckKind, pos: Pos, label: Option<&str>, passed: bool, clause: &dyn Fn() -> String) -> Exec<()> {
        if self.opts.record_events {
            self.events.push(CheckEvent {
                method: f.m.name.clone(),
                kind,
                line: pos.line,
                column: pos.col,
                label: label.map(str::to_string),
                passed,
                state_digest: f.digest(),
            });
        }
        if !passed {
            self.violations.push(Violation {
                method: f.m.name.clone(),
                kind,
                line: pos.line,
                column: pos.col,
                label: label.map(str::to_string),
                clause: clause(),
                witness: f.witness(),
            });
            if self.opts.halt_on_violation {
                return Err(Stop::Violation);
            }
        }
        Ok(())
    }

    fn check(&mut self, f: &Frame, kind: CheckKind, c: &SpecClause, label: Option<&str>) -> Exec<()> {
        let ok = self.eval_bool(f, &c.formula, c.pos)?;
        self.verdict(f, kind, c.pos, label, ok, &|| c.formula.to_string())
    }

    fn call(&mut self, m: &'u TypedMethod, args: Vec<Value>, depth: usize, top: bool) -> Exec<Option<Value>> {
        if depth >= self.opts.max_depth {
            return Err(fault(m, m.pos, format!("call depth limit of {} exceeded", self.opts.max_depth)));
        }
        stacker::maybe_grow(256 * 1024, 8 * 1024 * 1024, || self.call_inner(m, args, depth, top))
    }

    fn call_inner(&mut self, m: &'u TypedMethod, args: Vec<Value>, depth: usize, top: bool) -> Exec<Option<Value>> {
        let mut vals = vec![None; m.vars.len()];
        for (p, a) in m.params.iter().zip(args) {
            vals[p.slot as usize] = Some(a);
        }
        let mut f = Frame { m, old: vals.clone(), vals, loop_entry: HashMap::new(), result: None, top };
        if top && self.opts.record_trace {
            self.trace.push(TracePoint { kind: TraceKind::Entry, state: f.snapshot() });
        }
        for c in &m.requires {
            self.check(&f, CheckKind::Requires, c, None)?;
        }
        let mut active = Vec::new();
        for b in &m.behaviours {
            let applies = match &b.assumes {
                Some(a) => self.eval_bool(&f, &a.formula, a.pos)?,
                None => true,
            };
            active.push(applies);
        }
        let ret = match self.block(&mut f, &m.body, depth)? {
            Flow::Return(v) => v,
            Flow::Normal => None,
        };
        f.result = ret.clone();
        for c in &m.ensures {
            self.check(&f, CheckKind::Ensures, c, None)?;
        }
        for (b, applies) in m.behaviours.iter().zip(active) {
            if let (true, Some(e)) = (applies, &b.ensures) {
                self.check(&f, CheckKind::BehaviourEnsures, e, Some(&b.name))?;
            }
        }
        if top {
            if self.opts.record_trace {
                let mut state = f.snapshot();
                if let Some(r) = &ret {
                    state.push((Arc::from("\\result"), r.clone()));
                }
                self.trace.push(TracePoint { kind: TraceKind::Exit, state });
            }
            self.final_state = f.witness().into_iter().filter(|(n, _)| !n.contains('@') && n != "\\result").collect();
        }
        Ok(ret)
    }

    fn block(&mut self, f: &mut Frame<'u>, stmts: &'u [IrStmt], depth: usize) -> Exec<Flow> {
        for s in stmts {
            if let Flow::Return(v) = self.stmt(f, s, depth)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, f: &mut Frame<'u>, s: &'u IrStmt, depth: usize) -> Exec<Flow> {
        match &s.kind {
            IrKind::Assign { var, value, .. } => {
                let v = self.eval(f, value, s.pos)?;
                f.vals[var.slot as usize] = Some(v);
            }
            IrKind::Store { var, index, value, .. } => {
                let i = self.eval_int(f, index, s.pos)?;
                let v = self.eval(f, value, s.pos)?;
                let Some(Value::Array(arr)) = &mut f.vals[var.slot as usize] else {
                    return Err(fault(f.m, s.pos, format!("`{}` is not an initialized array", var.name)));
                };
                let len = arr.len();
                match i.to_usize().filter(|k| *k < len) {
                    Some(k) => Arc::make_mut(arr)[k] = v,
                    None => return Err(fault(f.m, s.pos, format!("array index {i} out of bounds for length {len}"))),
                }
            }
            IrKind::Call { target, method, args, id } => {
                let callee = self.unit.method(method).expect("typechecked call");
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(f, a, s.pos)?);
                }
                let trace_call = f.top && self.opts.record_trace;
                let saved = if trace_call { Some(std::mem::take(&mut self.trace)) } else { None };
                let r = self.call(callee, vals, depth + 1, false);
                if let Some(saved) = saved {
                    self.trace = saved;
                }
                let r = r?;
                if trace_call {
                    let mut state = Vec::new();
                    if let Some(v) = &r {
                        state.push((Arc::from("result"), v.clone()));
                    }
                    self.trace.push(TracePoint { kind: TraceKind::CallReturn { call_id: *id }, state });
                }
                if let Some(t) = target {
                    let Some(v) = r else {
                        return Err(fault(f.m, s.pos, format!("`{method}` returned no value")));
                    };
                    f.vals[t.slot as usize] = Some(v);
                }
            }
            IrKind::If { cond, then_b, else_b } => {
                let c = self.eval_bool(f, cond, s.pos)?;
                return self.block(f, if c { then_b } else { else_b }, depth);
            }
            IrKind::Loop { id, do_while, cond, invariant, variant, body } => {
                if *do_while {
                    if let Flow::Return(v) = self.block(f, body, depth)? {
                        return Ok(Flow::Return(v));
                    }
                    self.count_step(f, s.pos)?;
                }
                f.loop_entry.insert(*id, f.vals.clone());
                self.loop_head(f, *id, 0);
                self.check(f, CheckKind::InvariantEntry, invariant, None)?;
                let mut iteration = 0u64;
                while self.eval_bool(f, cond, s.pos)? {
                    let before = match variant {
                        Some(v) => {
                            let x = self.eval_int(f, &v.formula, v.pos)?;
                            let ok = !x.is_negative();
                            self.verdict(f, CheckKind::VariantNonneg, v.pos, None, ok, &|| format!("{} >= 0", v.formula))?;
                            Some(x)
                        }
                        None => None,
                    };
                    if let Flow::Return(v) = self.block(f, body, depth)? {
                        return Ok(Flow::Return(v));
                    }
                    self.count_step(f, s.pos)?;
                    iteration += 1;
                    self.loop_head(f, *id, iteration);
                    self.check(f, CheckKind::InvariantPreserved, invariant, None)?;
                    if let (Some(v), Some(x0)) = (variant, before) {
                        let x1 = self.eval_int(f, &v.formula, v.pos)?;
                        let ok = x1 < x0;
                        self.verdict(f, CheckKind::VariantDecrease, v.pos, None, ok, &|| {
                            format!("{} < {x0} (value at iteration start)", v.formula)
                        })?;
                    }
                }
            }
            IrKind::Return(v) => {
                let val = match v {
                    Some(e) => Some(self.eval(f, e, s.pos)?),
                    None => None,
                };
                return Ok(Flow::Return(val));
            }
            IrKind::Assert(c) => self.check(f, CheckKind::Assert, c, None)?,
        }
        Ok(Flow::Normal)
    }

    fn loop_head(&mut self, f: &Frame, loop_id: u32, iteration: u64) {
        if f.top && self.opts.record_trace {
            self.trace.push(TracePoint { kind: TraceKind::LoopHead { loop_id, iteration }, state: f.snapshot() });
        }
    }

    fn count_step(&mut self, f: &Frame, pos: Pos) -> Exec<()> {
        self.steps += 1;
        if self.steps > self.opts.max_loop_steps {
            return Err(fault(f.m, pos, format!("loop step limit of {} exceeded", self.opts.max_loop_steps)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_source;

    fn reals(xs: &[i64]) -> Value {
        Value::array(xs.iter().map(|&x| Value::rat(x, 1)).collect())
    }

    #[test]
    fn wrong_variant_is_caught() {
        let src = "
            int f(int n) {
                int i = 0;
                /*@ loop_invariant i >= 0;
                  @ loop_variant i; @*/
                while (i < n) { i = i + 1; }
                return i;
            }";
        let u = check_source("t", src).unwrap();
        let out = exec_method(&u, "f", vec![Value::int(3)], NumericMode::Rational).unwrap();
        assert_eq!(out.status, ExecStatus::ContractViolation);
        assert_eq!(out.violations[0].kind, CheckKind::VariantDecrease);
    }

    #[test]
    fn failing_assert_continues_when_asked() {
        let src = "int f(int n) { /*@ assert n > 5; @*/ return n; }";
        let u = check_source("t", src).unwrap();
        let mut opts = ExecOptions::new(NumericMode::Rational);
        opts.halt_on_violation = false;
        let out = exec_method_with(&u, "f", vec![Value::int(3)], &opts).unwrap();
        assert_eq!(out.status, ExecStatus::ContractViolation);
        assert_eq!(out.ret, Some(Value::int(3)));
        assert_eq!(out.violations.len(), 1);
    }

    #[test]
    fn division_by_zero_is_runtime_error() {
        let u = check_source("t", "real f(real x) { return 1.0 / x; }").unwrap();
        let out = exec_method(&u, "f", vec![Value::rat(0, 1)], NumericMode::Rational).unwrap();
        assert_eq!(out.status, ExecStatus::RuntimeError);
        assert!(out.fault.unwrap().message.contains("division by zero"));
    }

    #[test]
    fn array_store_out_of_bounds() {
        let u = check_source("t", "void f(real[] a) { a[3] = 1.0; }").unwrap();
        let out = exec_method(&u, "f", vec![reals(&[1, 2])], NumericMode::Rational).unwrap();
        assert_eq!(out.status, ExecStatus::RuntimeError);
    }

    #[test]
    fn recursion_depth_limited() {
        let u = check_source("t", "int f(int n) { int r = f(n + 1); return r; }").unwrap();
        let mut opts = ExecOptions::new(NumericMode::Rational);
        opts.max_depth = 200;
        let out = exec_method_with(&u, "f", vec![Value::int(0)], &opts).unwrap();
        assert!(out.fault.unwrap().message.contains("depth limit"));
    }

    #[test]
    fn binary64_overflow_is_error() {
        let u = check_source("t", "real f(real x) { return x * x; }").unwrap();
        let out = exec_method(&u, "f", vec![Value::F64(1e200)], NumericMode::Binary64).unwrap();
        assert_eq!(out.status, ExecStatus::RuntimeError);
    }

    #[test]
    fn argument_checking() {
        let u = check_source("t", "int f(int n) { return n; }").unwrap();
        assert!(matches!(exec_method(&u, "g", vec![], NumericMode::Rational), Err(ExecError::UnknownMethod(_))));
        assert!(matches!(exec_method(&u, "f", vec![], NumericMode::Rational), Err(ExecError::Arity { .. })));
        assert!(matches!(
            exec_method(&u, "f", vec![Value::Bool(true)], NumericMode::Rational),
            Err(ExecError::ArgumentType { .. })
        ));
    }
}
