//! `miniwhy` checks and proves small annotated programs.
//!
//! Programs are written in MiniJML, a JML-flavoured imperative language with
//! `requires`/`ensures` contracts, behaviours, loop invariants and variants,
//! ghost code and the two-state predicate `Permut`. The crate provides:
//!
//! - [`syntax`] and [`check`]: parsing, pretty printing and typechecking into
//!   a typed intermediate form whose expressions are logic [`logic::Term`]s;
//! - [`interp`]: an interpreter that checks every contract clause at run time,
//!   in exact rational or binary64 arithmetic;
//! - [`vcgen`]: a weakest-precondition generator producing named proof
//!   obligations, and validation of those obligations against execution traces;
//! - [`discharge`]: a simplifier, a small linear-arithmetic prover and
//!   exporters to SMT-LIB 2, an XML exchange format and ACL2-style
//!   s-expressions;
//! - [`corpus`]: the bundled example programs with oracles and a randomized
//!   test harness.
//!
//! ```
//! let unit = miniwhy::check::check_source("demo", "
//!     /*@ requires n >= 0;
//!       @ ensures \\result == n + 1;
//!       @*/
//!     int succ(int n) { return n + 1; }
//! ").unwrap();
//! let set = miniwhy::vcgen::generate_obligations(&unit, "succ").unwrap();
//! assert_eq!(set.obligations.len(), 1);
//! ```

pub mod check;
pub mod corpus;
pub mod discharge;
pub mod interp;
pub mod logic;
pub mod report;
pub mod syntax;
pub mod vcgen;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/language.md")]
    mod language {}
    #[doc = include_str!("../../../book/src/interpreter.md")]
    mod interpreter {}
    #[doc = include_str!("../../../book/src/obligations.md")]
    mod obligations {}
    #[doc = include_str!("../../../book/src/discharge.md")]
    mod discharge {}
    #[doc = include_str!("../../../book/src/corpus.md")]
    mod corpus {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
