use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::term::{fmt_rational, Sort};

/// How real numbers are represented during one execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Rational,
    Binary64,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NumericMode::Rational => "rational",
            NumericMode::Binary64 => "binary64",
        })
    }
}

impl std::str::FromStr for NumericMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rational" => Ok(NumericMode::Rational),
            "binary64" => Ok(NumericMode::Binary64),
            _ => Err(format!("unknown numeric mode `{s}` (expected rational or binary64)")),
        }
    }
}

/// A runtime value. Arrays are immutable shared vectors; updates copy on
/// write, so snapshots of a state are cheap.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(BigInt),
    Rat(BigRational),
    F64(f64),
    Bool(bool),
    Array(Arc<Vec<Value>>),
}

impl Value {
    pub fn int(i: i64) -> Value {
        Value::Int(BigInt::from(i))
    }

    pub fn rat(n: i64, d: i64) -> Value {
        Value::Rat(BigRational::new(n.into(), d.into()))
    }

    pub fn array(items: Vec<Value>) -> Value {
        Value::Array(Arc::new(items))
    }

    pub fn zero(sort: Sort, mode: NumericMode) -> Value {
        match sort {
            Sort::Int => Value::Int(BigInt::zero()),
            Sort::Real => match mode {
                NumericMode::Rational => Value::Rat(BigRational::zero()),
                NumericMode::Binary64 => Value::F64(0.0),
            },
            Sort::Bool => Value::Bool(false),
            Sort::IntArray | Sort::RealArray => Value::array(Vec::new()),
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&Arc<Vec<Value>>> {
        match self {
            Value::Array(a) => Some(a),
            _ => None,
        }
    }

    /// Exact rational view of a numeric value (binary64 values convert
    /// exactly).
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Value::Int(i) => Some(BigRational::from_integer(i.clone())),
            Value::Rat(q) => Some(q.clone()),
            Value::F64(x) => BigRational::from_float(*x),
            _ => None,
        }
    }

    /// Converts every binary64 number to the exactly equal rational.
    pub fn to_exact(&self) -> Value {
        match self {
            Value::F64(x) => match BigRational::from_float(*x) {
                Some(q) => Value::Rat(q),
                None => self.clone(),
            },
            Value::Array(a) if a.iter().any(|v| matches!(v, Value::F64(_) | Value::Array(_))) => {
                Value::array(a.iter().map(Value::to_exact).collect())
            }
            _ => self.clone(),
        }
    }

    /// Converts real components to the representation of `mode`; rationals
    /// round to the nearest binary64.
    pub fn to_mode(&self, mode: NumericMode) -> Value {
        match (self, mode) {
            (Value::Rat(q), NumericMode::Binary64) => Value::F64(q.to_f64().unwrap_or(f64::NAN)),
            (Value::F64(_), NumericMode::Rational) => self.to_exact(),
            (Value::Array(a), _) => Value::array(a.iter().map(|v| v.to_mode(mode)).collect()),
            _ => self.clone(),
        }
    }

    /// A total order used for multiset comparison and sorting oracles.
    pub fn total_cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Rat(a), Value::Rat(b)) => a.cmp(b),
            (Value::F64(a), Value::F64(b)) => a.total_cmp(b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Array(a), Value::Array(b)) => {
                for (x, y) in a.iter().zip(b.iter()) {
                    let o = x.total_cmp(y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                a.len().cmp(&b.len())
            }
            (a, b) => match (a.to_rational(), b.to_rational()) {
                (Some(x), Some(y)) => x.cmp(&y),
                _ => a.rank().cmp(&b.rank()),
            },
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Int(_) => 0,
            Value::Rat(_) => 1,
            Value::F64(_) => 2,
            Value::Bool(_) => 3,
            Value::Array(_) => 4,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Rat(q) => f.write_str(&fmt_rational(q)),
            Value::F64(x) => write!(f, "{x:?}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Array(a) => {
                f.write_str("[")?;
                for (i, v) in a.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Multiset equality of `a1[lo..=hi]` and `a2[lo..=hi]`.
///
/// ```
/// use miniwhy::logic::{check_permut, Value};
/// let a = |xs: &[i64]| xs.iter().map(|&x| Value::int(x)).collect::<Vec<_>>();
/// assert_eq!(check_permut(&a(&[5, 1, 2, 9]), &a(&[5, 2, 1, 7]), 0, 2), Ok(true));
/// assert_eq!(check_permut(&a(&[1, 2, 3]), &a(&[1, 2, 4]), 0, 2), Ok(false));
/// assert_eq!(check_permut(&a(&[]), &a(&[]), 0, -1), Ok(true));
/// ```
pub fn check_permut(a1: &[Value], a2: &[Value], lo: i64, hi: i64) -> Result<bool, PermutBoundsError> {
    if lo < 0 || hi + 1 < lo || hi >= a1.len() as i64 || hi >= a2.len() as i64 {
        return Err(PermutBoundsError { lo, hi, len1: a1.len(), len2: a2.len() });
    }
    if hi < lo {
        return Ok(true);
    }
    let (lo, hi) = (lo as usize, hi as usize);
    let mut x: Vec<&Value> = a1[lo..=hi].iter().collect();
    let mut y: Vec<&Value> = a2[lo..=hi].iter().collect();
    x.sort_by(|a, b| a.total_cmp(b));
    y.sort_by(|a, b| a.total_cmp(b));
    Ok(x.iter().zip(y.iter()).all(|(a, b)| a.total_cmp(b) == Ordering::Equal))
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("Permut range [{lo}, {hi}] outside arrays of length {len1} and {len2}")]
pub struct PermutBoundsError {
    pub lo: i64,
    pub hi: i64,
    pub len1: usize,
    pub len2: usize,
}
