use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::quant::{self, RangeBound};
use super::term::{ArithOp, Tag, Term, Var};
use super::value::{check_permut, NumericMode, Value};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("array index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: String, len: usize },
    #[error("negative array size {0}")]
    NegativeSize(String),
    #[error("quantifier over `{0}` has no finite integer range")]
    UnboundedQuantifier(String),
    #[error("quantifier range of {0} elements is too large to enumerate")]
    RangeTooLarge(String),
    #[error("no value for `{0}`")]
    Unbound(String),
    #[error("binary64 overflow")]
    Overflow,
    #[error("{0}")]
    PermutBounds(String),
    #[error("internal type error: {0}")]
    Type(String),
}

/// Supplies values for free variables during evaluation.
pub trait Env {
    fn lookup(&self, var: &Var) -> Result<Value, EvalError>;
}

impl<F: Fn(&Var) -> Option<Value>> Env for F {
    fn lookup(&self, var: &Var) -> Result<Value, EvalError> {
        self(var).ok_or_else(|| EvalError::Unbound(var.symbol()))
    }
}

/// Largest quantifier range enumerated before giving up.
pub const MAX_RANGE: u64 = 10_000_000;

pub fn eval(t: &Term, env: &dyn Env, mode: NumericMode) -> Result<Value, EvalError> {
    Evaluator { env, mode, bound: Vec::new() }.eval(t)
}

pub fn eval_bool(t: &Term, env: &dyn Env, mode: NumericMode) -> Result<bool, EvalError> {
    match eval(t, env, mode)? {
        Value::Bool(b) => Ok(b),
        v => Err(EvalError::Type(format!("expected a truth value, got {v}"))),
    }
}

struct Evaluator<'a> {
    env: &'a dyn Env,
    mode: NumericMode,
    bound: Vec<(Arc<str>, Value)>,
}

fn type_err(what: &str, v: &Value) -> EvalError {
    EvalError::Type(format!("expected {what}, got {v}"))
}

pub fn real_from_literal(q: &BigRational, mode: NumericMode) -> Value {
    match mode {
        NumericMode::Rational => Value::Rat(q.clone()),
        NumericMode::Binary64 => Value::F64(q.to_f64().unwrap_or(f64::INFINITY)),
    }
}

fn checked_f64(x: f64) -> Result<Value, EvalError> {
    if x.is_finite() {
        Ok(Value::F64(x))
    } else {
        Err(EvalError::Overflow)
    }
}

pub fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value, EvalError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok(Value::Int(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => return Err(EvalError::Type("integer division".into())),
        })),
        (Value::Rat(x), Value::Rat(y)) => Ok(Value::Rat(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => {
                if y.is_zero() {
                    return Err(EvalError::DivisionByZero);
                }
                x / y
            }
        })),
        (Value::F64(x), Value::F64(y)) => checked_f64(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
            ArithOp::Div => {
                if y == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                x / y
            }
        }),
        (a, b) => Err(EvalError::Type(format!("arithmetic on {a} and {b}"))),
    }
}

pub fn compare(a: &Value, b: &Value) -> Result<Ordering, EvalError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Ok(x.cmp(y)),
        (Value::Rat(x), Value::Rat(y)) => Ok(x.cmp(y)),
        (Value::F64(x), Value::F64(y)) => x.partial_cmp(y).ok_or(EvalError::Overflow),
        (Value::Bool(x), Value::Bool(y)) => Ok(x.cmp(y)),
        (a, b) => match (a.to_rational(), b.to_rational()) {
            (Some(x), Some(y)) => Ok(x.cmp(&y)),
            _ => Err(EvalError::Type(format!("comparison of {a} and {b}"))),
        },
    }
}

fn index_of(i: &Value, len: usize) -> Result<usize, EvalError> {
    let i = i.as_int().ok_or_else(|| type_err("an integer index", i))?;
    match i.to_usize() {
        Some(k) if k < len => Ok(k),
        _ => Err(EvalError::IndexOutOfBounds { index: i.to_string(), len }),
    }
}

impl Evaluator<'_> {
    fn eval(&mut self, t: &Term) -> Result<Value, EvalError> {
        stacker::maybe_grow(32 * 1024, 1024 * 1024, || self.eval_inner(t))
    }

    fn eval_bool(&mut self, t: &Term) -> Result<bool, EvalError> {
        let v = self.eval(t)?;
        v.as_bool().ok_or_else(|| type_err("a truth value", &v))
    }

    fn eval_int(&mut self, t: &Term) -> Result<BigInt, EvalError> {
        match self.eval(t)? {
            Value::Int(i) => Ok(i),
            v => Err(type_err("an integer", &v)),
        }
    }

    fn eval_array(&mut self, t: &Term) -> Result<Arc<Vec<Value>>, EvalError> {
        match self.eval(t)? {
            Value::Array(a) => Ok(a),
            v => Err(type_err("an array", &v)),
        }
    }

    fn lookup(&self, v: &Var) -> Result<Value, EvalError> {
        if v.tag == Tag::Bound {
            if let Some((_, val)) = self.bound.iter().rev().find(|(n, _)| *n == v.name) {
                return Ok(val.clone());
            }
        }
        self.env.lookup(v)
    }

    fn eval_inner(&mut self, t: &Term) -> Result<Value, EvalError> {
        match t {
            Term::Int(i) => Ok(Value::Int(i.clone())),
            Term::Real(q) => Ok(real_from_literal(q, self.mode)),
            Term::Bool(b) => Ok(Value::Bool(*b)),
            Term::Var(v) => self.lookup(v),
            Term::Neg(a) => match self.eval(a)? {
                Value::Int(i) => Ok(Value::Int(-i)),
                Value::Rat(q) => Ok(Value::Rat(-q)),
                Value::F64(x) => Ok(Value::F64(-x)),
                v => Err(type_err("a number", &v)),
            },
            Term::Not(a) => Ok(Value::Bool(!self.eval_bool(a)?)),
            Term::Arith(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                arith(*op, x, y)
            }
            Term::Cmp(op, a, b) => {
                let x = self.eval(a)?;
                let y = self.eval(b)?;
                Ok(Value::Bool(op.holds(compare(&x, &y)?)))
            }
            Term::And(parts) => {
                for p in parts {
                    if !self.eval_bool(p)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Ok(Value::Bool(true))
            }
            Term::Or(parts) => {
                for p in parts {
                    if self.eval_bool(p)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Ok(Value::Bool(false))
            }
            Term::Implies(a, b) => {
                if !self.eval_bool(a)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(self.eval_bool(b)?))
            }
            Term::ToReal(a) => {
                let i = self.eval_int(a)?;
                Ok(match self.mode {
                    NumericMode::Rational => Value::Rat(BigRational::from_integer(i)),
                    NumericMode::Binary64 => {
                        checked_f64(i.to_f64().unwrap_or(f64::INFINITY))?
                    }
                })
            }
            Term::Select(a, i) => {
                let arr = self.eval_array(a)?;
                let iv = self.eval(i)?;
                let k = index_of(&iv, arr.len())?;
                Ok(arr[k].clone())
            }
            Term::Store(a, i, v) => {
                let mut arr = self.eval_array(a)?;
                let iv = self.eval(i)?;
                let val = self.eval(v)?;
                let k = index_of(&iv, arr.len())?;
                Arc::make_mut(&mut arr)[k] = val;
                Ok(Value::Array(arr))
            }
            Term::Length(a) => Ok(Value::Int(BigInt::from(self.eval_array(a)?.len()))),
            Term::NewArray(elem, n) => {
                let n = self.eval_int(n)?;
                if n.is_negative() {
                    return Err(EvalError::NegativeSize(n.to_string()));
                }
                let n = n.to_usize().filter(|n| *n as u64 <= MAX_RANGE).ok_or(EvalError::RangeTooLarge(n.to_string()))?;
                Ok(Value::array(vec![Value::zero(*elem, self.mode); n]))
            }
            Term::ArrayLit(_, items) => {
                let mut out = Vec::with_capacity(items.len());
                for it in items {
                    out.push(self.eval(it)?);
                }
                Ok(Value::array(out))
            }
            Term::Forall(binders, body) => {
                let Some(ranges) = quant::ranges(binders, body) else {
                    let names: Vec<&str> = binders.iter().map(|b| &*b.name).collect();
                    return Err(EvalError::UnboundedQuantifier(names.join(" ")));
                };
                Ok(Value::Bool(self.forall(binders, &ranges, body)?))
            }
            Term::Permut { left, right, lo, hi, .. } => {
                let a = self.eval_array(left)?;
                let b = self.eval_array(right)?;
                let lo = self.eval_int(lo)?;
                let hi = self.eval_int(hi)?;
                let (Some(lo), Some(hi)) = (lo.to_i64(), hi.to_i64()) else {
                    return Err(EvalError::PermutBounds(format!("Permut range [{lo}, {hi}] is out of bounds")));
                };
                check_permut(&a, &b, lo, hi).map(Value::Bool).map_err(|e| EvalError::PermutBounds(e.to_string()))
            }
        }
    }

    fn bound_value(&mut self, b: &RangeBound) -> Result<BigInt, EvalError> {
        match b {
            RangeBound::Term(t) => self.eval_int(t),
            RangeBound::Max(v) => {
                let mut best: Option<BigInt> = None;
                for x in v {
                    let x = self.bound_value(x)?;
                    best = Some(best.map_or(x.clone(), |b| b.max(x)));
                }
                best.ok_or_else(|| EvalError::Type("empty bound".into()))
            }
            RangeBound::Min(v) => {
                let mut best: Option<BigInt> = None;
                for x in v {
                    let x = self.bound_value(x)?;
                    best = Some(best.map_or(x.clone(), |b| b.min(x)));
                }
                best.ok_or_else(|| EvalError::Type("empty bound".into()))
            }
        }
    }

    fn forall(&mut self, binders: &[Var], ranges: &[quant::Range], body: &Term) -> Result<bool, EvalError> {
        let Some((b, rest)) = binders.split_first() else {
            return self.eval_bool(body);
        };
        let lo = self.bound_value(&ranges[0].lo)?;
        let hi = self.bound_value(&ranges[0].hi)?;
        if hi < lo {
            return Ok(true);
        }
        let count: BigInt = &hi - &lo + 1;
        if count > BigInt::from(MAX_RANGE) {
            return Err(EvalError::RangeTooLarge(count.to_string()));
        }
        let mut k = lo;
        while k <= hi {
            self.bound.push((b.name.clone(), Value::Int(k.clone())));
            let r = self.forall(rest, &ranges[1..], body);
            self.bound.pop();
            if !r? {
                return Ok(false);
            }
            k += 1;
        }
        Ok(true)
    }
}

/// Convenience environment backed by a list of symbol bindings.
#[derive(Clone, Debug, Default)]
pub struct MapEnv {
    pub bindings: Vec<(Var, Value)>,
}

impl MapEnv {
    pub fn bind(&mut self, v: Var, val: Value) {
        if let Some(slot) = self.bindings.iter_mut().find(|(x, _)| *x == v) {
            slot.1 = val;
        } else {
            self.bindings.push((v, val));
        }
    }
}

impl Env for MapEnv {
    fn lookup(&self, var: &Var) -> Result<Value, EvalError> {
        self.bindings
            .iter()
            .find(|(v, _)| v.name == var.name && v.tag == var.tag)
            .map(|(_, val)| val.clone())
            .ok_or_else(|| EvalError::Unbound(var.symbol()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::term::{CmpOp, Sort, StateLabel};

    fn v(name: &str, sort: Sort) -> Var {
        Var::new(name, Tag::Cur, sort, 0)
    }

    #[test]
    fn bounded_forall() {
        let buf = v("buf", Sort::RealArray);
        let k = Var::bound("k", Sort::Int);
        let kt = Term::Var(k.clone());
        let guard = Term::and(vec![
            Term::cmp(CmpOp::Le, Term::int(0), kt.clone()),
            Term::cmp(CmpOp::Le, kt.clone(), Term::int(1)),
        ]);
        let body = Term::cmp(
            CmpOp::Le,
            Term::select(Term::Var(buf.clone()), kt),
            Term::select(Term::Var(buf.clone()), Term::int(2)),
        );
        let f = Term::Forall(vec![k], Box::new(Term::implies(guard, body)));
        let mut env = MapEnv::default();
        env.bind(buf.clone(), Value::array(vec![Value::rat(1, 1), Value::rat(2, 1), Value::rat(5, 1)]));
        assert_eq!(eval_bool(&f, &env, NumericMode::Rational), Ok(true));
        env.bind(buf, Value::array(vec![Value::rat(6, 1), Value::rat(2, 1), Value::rat(5, 1)]));
        assert_eq!(eval_bool(&f, &env, NumericMode::Rational), Ok(false));
    }

    #[test]
    fn unbounded_forall_is_an_error() {
        let k = Var::bound("k", Sort::Int);
        let f = Term::Forall(vec![k.clone()], Box::new(Term::cmp(CmpOp::Ge, Term::Var(k), Term::int(0))));
        let env = MapEnv::default();
        assert!(matches!(eval(&f, &env, NumericMode::Rational), Err(EvalError::UnboundedQuantifier(_))));
    }

    #[test]
    fn exact_division() {
        let x = v("x", Sort::Real);
        let y = v("y", Sort::Real);
        let f = Term::cmp(
            CmpOp::Gt,
            Term::arith(ArithOp::Div, Term::Var(x.clone()), Term::Var(y.clone())),
            Term::zero(Sort::Real),
        );
        let mut env = MapEnv::default();
        env.bind(x, Value::rat(1, 1));
        env.bind(y, Value::rat(3, 1));
        assert_eq!(eval_bool(&f, &env, NumericMode::Rational), Ok(true));
    }

    #[test]
    fn permut_across_labels() {
        let old = Var::new("buf", Tag::Old, Sort::RealArray, 0);
        let cur = Var::new("buf", Tag::Cur, Sort::RealArray, 0);
        let f = Term::Permut {
            labels: (StateLabel::Old, StateLabel::Here),
            left: Box::new(Term::Var(old.clone())),
            right: Box::new(Term::Var(cur.clone())),
            lo: Box::new(Term::int(0)),
            hi: Box::new(Term::int(2)),
        };
        let arr = |xs: &[i64]| Value::array(xs.iter().map(|&x| Value::rat(x, 1)).collect());
        let mut env = MapEnv::default();
        env.bind(old, arr(&[1, 2, 3]));
        env.bind(cur, arr(&[3, 1, 2]));
        assert_eq!(eval_bool(&f, &env, NumericMode::Rational), Ok(true));
    }

    #[test]
    fn binary64_rounds_literals() {
        let q = BigRational::new(12.into(), 100_000_000.into());
        assert_eq!(real_from_literal(&q, NumericMode::Binary64), Value::F64(1.2E-7));
        let tenth = BigRational::new(1.into(), 10.into());
        assert_eq!(real_from_literal(&tenth, NumericMode::Binary64), Value::F64(0.1));
    }
}
