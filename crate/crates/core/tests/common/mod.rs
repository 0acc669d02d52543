//! Golden files: every export format and the obligation listing of each
//! corpus unit. Regenerate with `MINIWHY_BLESS=1 cargo test --test golden`.

use std::path::PathBuf;

use miniwhy::corpus::corpus_sources;
use miniwhy::discharge::{discharge_set, export_sexp, export_smtlib, export_xml};
use miniwhy::vcgen::generate_all;

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// `(file name, contents)` for every golden file.
pub fn render_goldens() -> Vec<(String, String)> {
    let mut out = Vec::new();
    for e in corpus_sources() {
        let stem = e.file.rsplit('/').next().unwrap().trim_end_matches(".mjml");
        let set = generate_all(&e.unit()).expect("corpus units generate");
        let statuses = discharge_set(&set);

        let mut listing = String::new();
        for (ob, (_, st)) in set.obligations.iter().zip(&statuses) {
            listing.push_str(&format!(
                "{} {} {}:{} {}\n  {}\n",
                ob.id,
                ob.origin.kind.as_str(),
                ob.origin.line,
                ob.origin.column,
                st.label(),
                ob.formula()
            ));
        }
        out.push((format!("{stem}.obligations.txt"), listing));

        let mut smt = String::new();
        let mut sexp = String::new();
        for ob in &set.obligations {
            smt.push_str(&format!("; ---- {}\n", ob.id));
            smt.push_str(&export_smtlib(ob));
            match export_sexp(ob) {
                Ok(s) => sexp.push_str(&s),
                Err(e) => sexp.push_str(&format!("; {e}\n")),
            }
        }
        out.push((format!("{stem}.smt2"), smt));
        out.push((format!("{stem}.lisp.sexp"), sexp));
        out.push((format!("{stem}.xll.xml"), export_xml(&set)));
    }
    out
}

/// Names of golden files whose contents differ from the rendering. With
/// `MINIWHY_BLESS` set, the files are rewritten instead.
pub fn compare_goldens() -> Vec<String> {
    let dir = golden_dir();
    let bless = std::env::var_os("MINIWHY_BLESS").is_some();
    let mut differ = Vec::new();
    for (name, text) in render_goldens() {
        let path = dir.join(&name);
        if bless {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &text).unwrap();
        } else if std::fs::read_to_string(&path).ok().as_deref() != Some(text.as_str()) {
            differ.push(name);
        }
    }
    differ
}
