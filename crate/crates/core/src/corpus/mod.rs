//! The bundled programs, their oracles, and a seeded randomized harness.
//!
//! ```
//! use miniwhy::corpus;
//! let names: Vec<&str> = corpus::corpus_sources().iter().map(|e| e.name).collect();
//! assert!(names.contains(&"find_nth_lowest_number"));
//! ```

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::check::{check_source, TypedUnit};
use crate::interp::{coerce_arg, exec_method_with, ExecOptions, ExecStatus};
use crate::logic::{NumericMode, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    NthLowest,
    SqrtBound,
    StddevFormula,
    TranslateIdentity,
    None,
}

#[derive(Clone, Copy, Debug)]
pub struct CorpusEntry {
    pub name: &'static str,
    /// Path relative to the repository root.
    pub file: &'static str,
    pub source: &'static str,
    /// The method the harness drives; `None` for the lemma file.
    pub method: Option<&'static str>,
    pub oracle: OracleKind,
}

impl CorpusEntry {
    /// Parses and typechecks the entry. Corpus sources always check.
    pub fn unit(&self) -> TypedUnit {
        check_source(self.name, self.source).unwrap_or_else(|e| panic!("corpus entry {} does not check: {e}", self.name))
    }

    /// Binary64 for the Newton square root, which was written for doubles;
    /// exact rationals otherwise.
    pub fn default_mode(&self) -> NumericMode {
        if self.oracle == OracleKind::SqrtBound {
            NumericMode::Binary64
        } else {
            NumericMode::Rational
        }
    }
}

static ENTRIES: [CorpusEntry; 5] = [
    CorpusEntry {
        name: "rectangle_translate",
        file: "corpus/rectangle_translate.mjml",
        source: include_str!("../../../../corpus/rectangle_translate.mjml"),
        method: Some("translate"),
        oracle: OracleKind::TranslateIdentity,
    },
    CorpusEntry {
        name: "find_nth_lowest_number",
        file: "corpus/quickselect.mjml",
        source: include_str!("../../../../corpus/quickselect.mjml"),
        method: Some("find_nth_lowest_number"),
        oracle: OracleKind::NthLowest,
    },
    CorpusEntry {
        name: "sqrt_newton",
        file: "corpus/sqrt_newton.mjml",
        source: include_str!("../../../../corpus/sqrt_newton.mjml"),
        method: Some("sqrt"),
        oracle: OracleKind::SqrtBound,
    },
    CorpusEntry {
        name: "calculate_std_dev",
        file: "corpus/calculate_std_dev.mjml",
        source: include_str!("../../../../corpus/calculate_std_dev.mjml"),
        method: Some("calculate_std_dev"),
        oracle: OracleKind::StddevFormula,
    },
    CorpusEntry {
        name: "lemmas",
        file: "corpus/lemmas.mjml",
        source: include_str!("../../../../corpus/lemmas.mjml"),
        method: None,
        oracle: OracleKind::None,
    },
];

pub fn corpus_sources() -> &'static [CorpusEntry] {
    &ENTRIES
}

pub fn entry(name: &str) -> Option<&'static CorpusEntry> {
    ENTRIES.iter().find(|e| e.name == name)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("unknown corpus entry `{0}`")]
    UnknownEntry(String),
    #[error("corpus entry `{0}` has no method to run")]
    NoMethod(String),
    #[error("corpus entry `{0}` has no exhaustive grid")]
    NoGrid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("oracle precondition violated: {0}")]
pub struct OracleError(pub String);

/// The `n`-th smallest (0-based) of `buf[0..buf_length]`.
///
/// ```
/// use miniwhy::corpus::oracle_nth_lowest;
/// use num_rational::BigRational;
/// let q = |v: &[i64]| v.iter().map(|&x| BigRational::from_integer(x.into())).collect::<Vec<_>>();
/// assert_eq!(oracle_nth_lowest(&q(&[3, 1, 2]), 3, 1), Ok(q(&[2])[0].clone()));
/// ```
pub fn oracle_nth_lowest(buf: &[BigRational], buf_length: i64, n: i64) -> Result<BigRational, OracleError> {
    if buf_length < 1 || buf_length as usize > buf.len() {
        return Err(OracleError(format!("bufLength {buf_length} outside 1..={}", buf.len())));
    }
    if n < 0 || n >= buf_length {
        return Err(OracleError(format!("n {n} outside 0..{buf_length}")));
    }
    let mut prefix = buf[..buf_length as usize].to_vec();
    prefix.sort();
    Ok(prefix.swap_remove(n as usize))
}

/// The radicand of the standard deviation formula, or `None` when the
/// expected result is exactly zero.
pub fn oracle_std_dev_radicand(n: &BigRational, sum: &BigRational, sum2: &BigRational) -> Option<BigRational> {
    if !n.is_positive() {
        return None;
    }
    let v = (n * sum2 - sum * sum) / n;
    if !v.is_positive() {
        return None;
    }
    Some(v / (n - BigRational::from_integer(1.into())))
}

/// `r >= 0 && r*r >= v && r*r - v < eps`, exactly.
pub fn within_sqrt_bound(r: &BigRational, v: &BigRational, eps: &BigRational) -> bool {
    let sq = r * r;
    !r.is_negative() && &sq >= v && &(&sq - v) < eps
}

/// The bound the corpus uses for square roots, `1.2E-7`, exactly.
pub fn sqrt_eps() -> BigRational {
    BigRational::new(12.into(), BigInt::from(10).pow(8))
}

fn int(v: i64) -> Value {
    Value::int(v)
}

fn real(v: i64) -> Value {
    Value::Rat(BigRational::from_integer(v.into()))
}

fn rng_for(seed: u64, index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(b"miniwhy\0");
    ChaCha20Rng::from_seed(key)
}

/// Arguments for case `index` of `entry`, as exact values. The same
/// `(seed, index)` always gives the same arguments, and they satisfy the
/// method's precondition.
pub fn random_case(entry_name: &str, seed: u64, index: u64) -> Result<Vec<Value>, CorpusError> {
    let e = entry(entry_name).ok_or_else(|| CorpusError::UnknownEntry(entry_name.to_string()))?;
    let mut rng = rng_for(seed, index);
    Ok(match e.oracle {
        OracleKind::TranslateIdentity => {
            // Decimals with two fractional digits in [-1000, 1000].
            let mut dec = || Value::Rat(BigRational::new(rng.random_range(-100_000i64..=100_000).into(), 100.into()));
            vec![dec(), dec(), dec(), dec()]
        }
        OracleKind::NthLowest => {
            let len = rng.random_range(1..=32usize);
            let buf: Vec<Value> = (0..len).map(|_| real(rng.random_range(-100..=100))).collect();
            let buf_length = rng.random_range(1..=len as i64);
            let n = rng.random_range(0..buf_length);
            vec![Value::array(buf), int(buf_length), int(n)]
        }
        OracleKind::SqrtBound => {
            // Log-uniform on [1E-9, 1E9], drawn as a double and passed exactly.
            let c = 10f64.powf(rng.random_range(-9.0..=9.0)).clamp(1e-9, 1e9);
            vec![Value::F64(c).to_exact()]
        }
        OracleKind::StddevFormula => {
            if rng.random_bool(0.75) {
                // Realizable: n samples with integer values in [-10, 10].
                let k = if rng.random_bool(0.1) { 0 } else { rng.random_range(1..=20i64) };
                let xs: Vec<i64> = (0..k).map(|_| rng.random_range(-10..=10i64)).collect();
                let sum: i64 = xs.iter().sum();
                let sum2: i64 = xs.iter().map(|x| x * x).sum();
                vec![real(k), real(sum), real(sum2)]
            } else if rng.random_bool(0.5) {
                // Non-positive n with arbitrary sums.
                let n = BigRational::new(rng.random_range(-20..=0i64).into(), 2.into());
                vec![Value::Rat(n), real(rng.random_range(-50..=50)), real(rng.random_range(-50..=50))]
            } else {
                // n >= 2 with n*sum2 - sum*sum <= 0, which no sample produces.
                let n = rng.random_range(2..=20i64);
                let sum = rng.random_range(-50..=50i64);
                let sum2 = (sum * sum).div_euclid(n) - rng.random_range(0..=50i64);
                vec![real(n), real(sum), real(sum2)]
            }
        }
        OracleKind::None => return Err(CorpusError::NoMethod(entry_name.to_string())),
    })
}

/// Every quickselect input with length 1..=6, values in {0,1,2,3},
/// `bufLength` the full length and every valid `n`.
pub fn exhaustive_cases(entry_name: &str) -> Result<Vec<Vec<Value>>, CorpusError> {
    let e = entry(entry_name).ok_or_else(|| CorpusError::UnknownEntry(entry_name.to_string()))?;
    if e.oracle != OracleKind::NthLowest {
        return Err(CorpusError::NoGrid(entry_name.to_string()));
    }
    let mut out = Vec::new();
    for len in 1..=6u32 {
        for code in 0..4usize.pow(len) {
            let buf: Vec<Value> = (0..len).map(|k| real(((code >> (2 * k)) & 3) as i64)).collect();
            let buf = Value::array(buf);
            for n in 0..len as i64 {
                out.push(vec![buf.clone(), int(len as i64), int(n)]);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnessFailure {
    pub index: u64,
    #[serde(skip)]
    pub args: Vec<Value>,
    /// The violated clause or the oracle disagreement.
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnessReport {
    pub entry: String,
    pub method: String,
    pub mode: NumericMode,
    pub seed: u64,
    pub cases: u64,
    pub exhaustive: bool,
    pub failures: Vec<HarnessFailure>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl HarnessReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn rational(v: &Value) -> BigRational {
    v.to_rational().expect("numeric value")
}

/// Runs one case with full contract checking and consults the oracle.
/// Returns the reason for a failure, if any.
pub fn check_case(e: &CorpusEntry, unit: &TypedUnit, args: &[Value], mode: NumericMode) -> Option<String> {
    let method = e.method?;
    let m = unit.method(method)?;
    let mut actual = Vec::with_capacity(args.len());
    for (a, p) in args.iter().zip(&m.params) {
        actual.push(coerce_arg(a.clone(), p.sort, mode)?);
    }
    let outcome = match exec_method_with(unit, method, actual.clone(), &ExecOptions::quiet(mode)) {
        Ok(o) => o,
        Err(err) => return Some(err.to_string()),
    };
    match outcome.status {
        ExecStatus::Normal => {}
        ExecStatus::ContractViolation => {
            let v = outcome.first_violation()?;
            return Some(format!("{} violated in {} at {}:{}: {}", v.kind.as_str(), v.method, v.line, v.column, v.clause));
        }
        ExecStatus::RuntimeError => {
            let f = outcome.fault.as_ref()?;
            return Some(format!("runtime error in {} at {}:{}: {}", f.method, f.line, f.column, f.message));
        }
    }
    let ret = outcome.ret.as_ref()?;
    match e.oracle {
        OracleKind::NthLowest => {
            let buf: Vec<BigRational> = args[0].as_array()?.iter().map(rational).collect();
            let len = args[1].as_int()?.to_i64()?;
            let n = args[2].as_int()?.to_i64()?;
            let want = oracle_nth_lowest(&buf, len, n).ok()?;
            (rational(ret) != want).then(|| format!("returned {ret}, oracle says {}", Value::Rat(want)))
        }
        OracleKind::SqrtBound => {
            let c = rational(&actual[0]);
            let r = rational(ret);
            (!within_sqrt_bound(&r, &c, &sqrt_eps())).then(|| format!("sqrt({}) = {ret} misses the bound", actual[0]))
        }
        OracleKind::StddevFormula => {
            let [n, sum, sum2] = [0, 1, 2].map(|k| rational(&actual[k]));
            let r = rational(ret);
            match oracle_std_dev_radicand(&n, &sum, &sum2) {
                None => (!r.is_zero()).then(|| format!("returned {ret}, expected 0")),
                Some(v) => (!within_sqrt_bound(&r, &v, &sqrt_eps()))
                    .then(|| format!("returned {ret}, not within the bound of sqrt({})", Value::Rat(v))),
            }
        }
        OracleKind::TranslateIdentity => {
            let got = ret.as_array()?;
            let want = match mode {
                NumericMode::Rational => {
                    [(0, 2), (1, 3)].map(|(p, d)| Value::Rat(rational(&actual[p]) + rational(&actual[d])))
                }
                NumericMode::Binary64 => [(0, 2), (1, 3)].map(|(p, d)| {
                    let f = |v: &Value| if let Value::F64(x) = v { *x } else { f64::NAN };
                    Value::F64(f(&actual[p]) + f(&actual[d]))
                }),
            };
            (got.as_slice() != want.as_slice()).then(|| format!("returned {ret}, expected [{}, {}]", want[0], want[1]))
        }
        OracleKind::None => None,
    }
}

fn run_cases(
    e: &CorpusEntry,
    cases: Vec<(u64, Vec<Value>)>,
    seed: u64,
    mode: NumericMode,
    exhaustive: bool,
) -> Result<HarnessReport, CorpusError> {
    let method = e.method.ok_or_else(|| CorpusError::NoMethod(e.name.to_string()))?;
    let start = Instant::now();
    let unit = e.unit();
    let total = cases.len() as u64;
    let failures: Vec<HarnessFailure> = cases
        .into_par_iter()
        .filter_map(|(index, args)| check_case(e, &unit, &args, mode).map(|reason| HarnessFailure { index, args, reason }))
        .collect();
    Ok(HarnessReport {
        entry: e.name.to_string(),
        method: method.to_string(),
        mode,
        seed,
        cases: total,
        exhaustive,
        failures,
        elapsed: start.elapsed(),
    })
}

/// Runs `cases` seeded random cases of `entry` in parallel. Failures are
/// listed in case order.
pub fn run_randomized(entry_name: &str, cases: u64, seed: u64, mode: NumericMode) -> Result<HarnessReport, CorpusError> {
    let e = entry(entry_name).ok_or_else(|| CorpusError::UnknownEntry(entry_name.to_string()))?;
    let inputs = (0..cases).map(|i| random_case(entry_name, seed, i).map(|a| (i, a))).collect::<Result<Vec<_>, _>>()?;
    run_cases(e, inputs, seed, mode, false)
}

/// Runs the exhaustive grid of [`exhaustive_cases`].
pub fn run_exhaustive(entry_name: &str, mode: NumericMode) -> Result<HarnessReport, CorpusError> {
    let e = entry(entry_name).ok_or_else(|| CorpusError::UnknownEntry(entry_name.to_string()))?;
    let inputs = exhaustive_cases(entry_name)?.into_iter().enumerate().map(|(i, a)| (i as u64, a)).collect();
    run_cases(e, inputs, 0, mode, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn every_entry_checks() {
        for e in corpus_sources() {
            let unit = e.unit();
            if let Some(m) = e.method {
                assert!(unit.method(m).is_some(), "{}", e.name);
            }
        }
    }

    #[test]
    fn nth_lowest_oracle() {
        assert_eq!(oracle_nth_lowest(&[q(3), q(1), q(2)], 3, 1), Ok(q(2)));
        assert_eq!(oracle_nth_lowest(&[q(5)], 1, 0), Ok(q(5)));
        assert_eq!(oracle_nth_lowest(&[q(2), q(2), q(2), q(2)], 4, 2), Ok(q(2)));
        // Only the prefix counts.
        assert_eq!(oracle_nth_lowest(&[q(9), q(8), q(0)], 2, 0), Ok(q(8)));
        assert!(oracle_nth_lowest(&[q(1)], 2, 0).is_err());
        assert!(oracle_nth_lowest(&[q(1)], 1, 1).is_err());
    }

    #[test]
    fn std_dev_radicand() {
        assert_eq!(oracle_std_dev_radicand(&q(3), &q(6), &q(14)), Some(q(1)));
        assert_eq!(oracle_std_dev_radicand(&q(0), &q(6), &q(14)), None);
        assert_eq!(oracle_std_dev_radicand(&q(1), &q(4), &q(16)), None);
        assert_eq!(oracle_std_dev_radicand(&q(2), &q(0), &q(-1)), None);
    }

    #[test]
    fn random_cases_are_deterministic_and_valid() {
        for i in 0..200 {
            let a = random_case("find_nth_lowest_number", 7, i).unwrap();
            assert_eq!(a, random_case("find_nth_lowest_number", 7, i).unwrap());
            let len = a[0].as_array().unwrap().len() as i64;
            let bl = a[1].as_int().unwrap().to_i64().unwrap();
            let n = a[2].as_int().unwrap().to_i64().unwrap();
            assert!(1 <= bl && bl <= len && 0 <= n && n < bl);

            let c = rational(&random_case("sqrt_newton", 7, i).unwrap()[0]);
            assert!(c >= BigRational::new(1.into(), BigInt::from(10).pow(9)) && c <= q(1_000_000_000));

            let s = random_case("calculate_std_dev", 7, i).unwrap();
            let [n, sum, sum2] = [0, 1, 2].map(|k| rational(&s[k]));
            assert!(n <= q(0) || n >= q(1));
            assert!(n != q(1) || sum2 == &sum * &sum);
        }
        assert_ne!(random_case("sqrt_newton", 7, 0), random_case("sqrt_newton", 8, 0));
        assert!(matches!(random_case("lemmas", 0, 0), Err(CorpusError::NoMethod(_))));
        assert!(matches!(random_case("nope", 0, 0), Err(CorpusError::UnknownEntry(_))));
    }

    #[test]
    fn grid_size() {
        let expected: usize = (1..=6).map(|l| 4usize.pow(l) * l as usize).sum();
        assert_eq!(exhaustive_cases("find_nth_lowest_number").unwrap().len(), expected);
    }

    #[test]
    fn small_randomized_runs_pass() {
        for name in ["rectangle_translate", "find_nth_lowest_number", "calculate_std_dev"] {
            let r = run_randomized(name, 40, 1, NumericMode::Rational).unwrap();
            assert!(r.passed(), "{name}: {:?}", r.failures);
        }
        let r = run_randomized("rectangle_translate", 40, 1, NumericMode::Binary64).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
    }
}
