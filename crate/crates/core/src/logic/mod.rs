//! Typed logic terms, runtime values and the evaluator shared by the
//! interpreter, the obligation validator and the prover's counterexample
//! check.

mod eval;
pub mod quant;
mod term;
mod value;

pub use eval::{arith, compare, eval, eval_bool, real_from_literal, Env, EvalError, MapEnv, MAX_RANGE};
pub use term::{fmt_rational, ArithOp, CmpOp, Sort, StateLabel, Tag, Term, Var};
pub use value::{check_permut, NumericMode, PermutBoundsError, Value};
