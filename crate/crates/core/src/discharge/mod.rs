//! Discharging obligations: an internal decision procedure for linear
//! rational arithmetic with division sign rules, and exporters for the
//! obligations it cannot settle.

mod fm;
mod poly;
mod prover;
mod sexp;
mod simplify;
mod smtlib;
mod sx;
mod xml;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

pub use prover::{prove_internal, ProofStatus, MAX_BRANCHES, MAX_FORMULA_SIZE};
pub use sexp::{export_sexp, validate_sexp, SexpError};
pub use simplify::simplify;
pub use smtlib::{export_smtlib, validate_smtlib};
pub use xml::{export_xml, validate_xml};

use crate::vcgen::{Obligation, ObligationSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExportFormat {
    Smtlib2,
    XllXml,
    Sexp,
}

impl ExportFormat {
    pub const ALL: [ExportFormat; 3] = [ExportFormat::Smtlib2, ExportFormat::XllXml, ExportFormat::Sexp];

    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::Smtlib2 => "smt2",
            ExportFormat::XllXml => "xll.xml",
            ExportFormat::Sexp => "lisp.sexp",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExportFormat::Smtlib2 => "smtlib2",
            ExportFormat::XllXml => "xll-xml",
            ExportFormat::Sexp => "sexp",
        }
    }

    /// Runs the format's own well-formedness check on `text`.
    pub fn validate(self, text: &str) -> Result<(), String> {
        match self {
            ExportFormat::Smtlib2 => validate_smtlib(text),
            ExportFormat::XllXml => validate_xml(text),
            ExportFormat::Sexp => validate_sexp(text),
        }
    }
}

impl fmt::Display for ExportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smt2" | "smtlib2" => Ok(ExportFormat::Smtlib2),
            "xml" | "xll-xml" => Ok(ExportFormat::XllXml),
            "sexp" => Ok(ExportFormat::Sexp),
            _ => Err(format!("unknown export format `{s}` (expected smt2, xml or sexp)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExportDoc {
    pub format: ExportFormat,
    pub text: String,
    pub ids: Vec<String>,
}

/// Exports one obligation in `format`. XML documents hold a one-element set.
pub fn export(format: ExportFormat, unit: &str, unit_digest: &str, ob: &Obligation) -> Result<ExportDoc, SexpError> {
    let text = match format {
        ExportFormat::Smtlib2 => export_smtlib(ob),
        ExportFormat::Sexp => export_sexp(ob)?,
        ExportFormat::XllXml => export_xml(&ObligationSet {
            unit: unit.to_string(),
            unit_digest: unit_digest.to_string(),
            method: None,
            obligations: vec![ob.clone()],
        }),
    };
    Ok(ExportDoc { format, text, ids: vec![ob.id.clone()] })
}

/// Runs the internal prover on every obligation in parallel. Results come
/// back in the order of the set.
pub fn discharge_set(set: &ObligationSet) -> Vec<(String, ProofStatus)> {
    set.obligations.par_iter().map(|ob| (ob.id.clone(), prove_internal(ob))).collect()
}
