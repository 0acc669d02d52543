//! `miniwhy`: check, run, generate obligations for, prove and test MiniJML
//! programs. Every command prints a JSON report (see
//! `schemas/report.schema.json`) unless it fails with a usage error.
//!
//! Exit codes: 0 success, 1 contract or proof failure, 2 usage error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use miniwhy::check::{check_source, TypedUnit};
use miniwhy::corpus::{self, HarnessReport};
use miniwhy::discharge::{discharge_set, export, ExportFormat, ProofStatus};
use miniwhy::interp::{coerce_arg, exec_method_with, ExecOptions, ExecStatus};
use miniwhy::logic::NumericMode;
use miniwhy::report::{value_from_json, HarnessRecord, ObligationRecord, Report, RunRecord};
use miniwhy::vcgen::{generate_all, generate_obligations};

#[derive(Parser)]
#[command(name = "miniwhy", version, about = "Contract checking and proof obligations for MiniJML programs")]
struct Cli {
    /// Include wall-clock timing in the report (makes output non-reproducible).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and typecheck a file.
    Check { file: PathBuf },
    /// Execute one method with run-time contract checking.
    Run {
        file: PathBuf,
        #[arg(long)]
        method: String,
        /// Arguments as a JSON array in parameter order, e.g. `[[3,1,2],3,1]`.
        #[arg(long)]
        args: String,
        #[arg(long, default_value = "rational")]
        mode: NumericMode,
        #[command(flatten)]
        out: Out,
    },
    /// Generate proof obligations.
    Vc {
        file: PathBuf,
        /// Only this method (plus the unit's lemmas).
        #[arg(long)]
        method: Option<String>,
        #[command(flatten)]
        out: Out,
    },
    /// Run the internal prover on every obligation and export the rest.
    Prove {
        file: PathBuf,
        /// Export format for obligations the prover does not prove: smt2, xml or sexp.
        #[arg(long, requires = "out_dir")]
        export_unproved: Option<ExportFormat>,
        #[arg(long, requires = "export_unproved")]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        out: Out,
    },
    /// Run the randomized (or exhaustive) harness over corpus entries.
    Test {
        #[arg(long)]
        entry: Option<String>,
        #[arg(long, default_value_t = 1000)]
        cases: u64,
        /// Defaults to $MINIWHY_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        /// Defaults to binary64 for sqrt_newton and rational otherwise.
        #[arg(long)]
        mode: Option<NumericMode>,
        /// Run the exhaustive quickselect grid instead of random cases.
        #[arg(long)]
        exhaustive: bool,
        #[command(flatten)]
        out: Out,
    },
    /// Inspect the bundled corpus.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
}

#[derive(Subcommand)]
enum CorpusAction {
    /// Print the entry names.
    List,
}

#[derive(Args)]
struct Out {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure that ends the command with exit code 2.
struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Usage {
        Usage(e.to_string())
    }
}

type Outcome = Result<u8, Usage>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Outcome {
    let start = Instant::now();
    let timing = cli.timing;
    let finish = |mut report: Report, out: &Out, code: u8| -> Outcome {
        if timing {
            report.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
        }
        write_report(&report, out.out.as_deref())?;
        Ok(code)
    };
    match cli.command {
        Command::Check { file } => {
            let (report, _) = load(&file, "check")?;
            finish(report, &Out { out: None }, 0)
        }
        Command::Run { file, method, args, mode, out } => {
            let (report, unit) = load(&file, "run")?;
            let (report, code) = run(report, &unit, &method, &args, mode)?;
            finish(report, &out, code)
        }
        Command::Vc { file, method, out } => {
            let (mut report, unit) = load(&file, "vc")?;
            let set = match &method {
                Some(m) => generate_obligations(&unit, m)?,
                None => generate_all(&unit)?,
            };
            report.obligations = Some(set.obligations.iter().map(ObligationRecord::new).collect());
            report.summary = Some(BTreeMap::from([("obligations".to_string(), set.obligations.len() as u64)]));
            finish(report, &out, 0)
        }
        Command::Prove { file, export_unproved, out_dir, out } => {
            let (report, unit) = load(&file, "prove")?;
            let target = export_unproved.zip(out_dir);
            let (report, code) = prove(report, &unit, target.as_ref().map(|(f, d)| (*f, d.as_path())))?;
            finish(report, &out, code)
        }
        Command::Test { entry, cases, seed, mode, exhaustive, out } => {
            let (report, code) = test(entry, cases, seed, mode, exhaustive)?;
            finish(report, &out, code)
        }
        Command::Corpus { action: CorpusAction::List } => {
            for e in corpus::corpus_sources() {
                println!("{}", e.name);
            }
            Ok(0)
        }
    }
}

fn write_report(report: &Report, path: Option<&Path>) -> Result<(), Usage> {
    let text = report.to_json();
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Reads and checks `file`; the unit is named after the file stem.
fn load(file: &Path, command: &str) -> Result<(Report, TypedUnit), Usage> {
    let bytes = fs::read(file).map_err(|e| Usage(format!("cannot read {}: {e}", file.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Usage(format!("{} is not UTF-8", file.display())))?;
    let name = file.file_stem().and_then(|s| s.to_str()).unwrap_or("unit");
    let unit = check_source(name, &text).map_err(|e| Usage(format!("{}: {e}", file.display())))?;
    let mut report = Report::new(command).with_input(&file.display().to_string(), &bytes);
    report.summary = Some(BTreeMap::from([
        ("lemmas".to_string(), unit.lemmas.len() as u64),
        ("methods".to_string(), unit.methods.len() as u64),
        ("predicates".to_string(), unit.predicates.len() as u64),
    ]));
    Ok((report, unit))
}

fn run(mut report: Report, unit: &TypedUnit, method: &str, args: &str, mode: NumericMode) -> Result<(Report, u8), Usage> {
    let m = unit.method(method).ok_or_else(|| Usage(format!("unknown method `{method}`")))?;
    let json: serde_json::Value = serde_json::from_str(args).map_err(|e| Usage(format!("--args is not JSON: {e}")))?;
    let serde_json::Value::Array(items) = json else {
        return Err(Usage("--args must be a JSON array".into()));
    };
    if items.len() != m.params.len() {
        return Err(Usage(format!("`{method}` expects {} argument(s), got {}", m.params.len(), items.len())));
    }
    let mut values = Vec::with_capacity(items.len());
    for (item, p) in items.iter().zip(&m.params) {
        let v = value_from_json(item).map_err(Usage)?;
        let v = coerce_arg(v, p.sort, mode).ok_or_else(|| Usage(format!("argument `{}` must be {}", p.name, p.sort)))?;
        values.push(v);
    }
    let outcome = exec_method_with(unit, method, values, &ExecOptions { record_trace: false, ..ExecOptions::new(mode) })?;
    report.summary = None;
    report.run = Some(RunRecord::from_outcome(&outcome));
    report.checks = Some(outcome.events.clone());
    let code = if outcome.status == ExecStatus::Normal { 0 } else { 1 };
    Ok((report, code))
}

fn prove(mut report: Report, unit: &TypedUnit, target: Option<(ExportFormat, &Path)>) -> Result<(Report, u8), Usage> {
    let set = generate_all(unit)?;
    let statuses = discharge_set(&set);
    if let Some((_, dir)) = target {
        fs::create_dir_all(dir).map_err(|e| Usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let mut records = Vec::new();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut failed = false;
    for (ob, (_, status)) in set.obligations.iter().zip(&statuses) {
        let mut rec = ObligationRecord::new(ob).with_proof(status);
        *counts.entry(status.label().to_string()).or_insert(0) += 1;
        match status {
            ProofStatus::ProvedInternal { .. } => {}
            _ => {
                let refuted = matches!(status, ProofStatus::Refuted { .. });
                match target {
                    Some((format, dir)) => match export(format, &set.unit, &set.unit_digest, ob) {
                        Ok(doc) => {
                            let path = dir.join(format!("{}.{}", ob.id, format.extension()));
                            fs::write(&path, &doc.text).map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?;
                            if !refuted {
                                rec = rec.exported(format, &path.display().to_string());
                                *counts.entry("exported".to_string()).or_insert(0) += 1;
                            }
                            failed |= refuted;
                        }
                        Err(e) => {
                            rec.detail = Some(format!("export failed: {e}"));
                            failed = true;
                        }
                    },
                    None => failed = true,
                }
            }
        }
        records.push(rec);
    }
    counts.insert("obligations".to_string(), set.obligations.len() as u64);
    report.obligations = Some(records);
    report.summary = Some(counts);
    Ok((report, u8::from(failed)))
}

fn test(entry: Option<String>, cases: u64, seed: Option<u64>, mode: Option<NumericMode>, exhaustive: bool) -> Result<(Report, u8), Usage> {
    let seed = match seed {
        Some(s) => s,
        None => match std::env::var("MINIWHY_SEED") {
            Ok(s) => s.trim().parse().map_err(|_| Usage(format!("MINIWHY_SEED `{s}` is not an unsigned integer")))?,
            Err(_) => 0,
        },
    };
    if cases == 0 {
        return Err(Usage("--cases must be at least 1".into()));
    }
    let entries: Vec<&corpus::CorpusEntry> = match &entry {
        Some(name) => {
            let e = corpus::entry(name).ok_or_else(|| Usage(format!("unknown corpus entry `{name}`")))?;
            if e.method.is_none() {
                return Err(Usage(format!("corpus entry `{name}` has no method to test")));
            }
            vec![e]
        }
        None => corpus::corpus_sources()
            .iter()
            .filter(|e| e.method.is_some() && (!exhaustive || corpus::exhaustive_cases(e.name).is_ok()))
            .collect(),
    };
    let mut reports: Vec<HarnessReport> = Vec::new();
    for e in entries {
        let m = mode.unwrap_or_else(|| e.default_mode());
        let r = if exhaustive { corpus::run_exhaustive(e.name, m)? } else { corpus::run_randomized(e.name, cases, seed, m)? };
        reports.push(r);
    }
    let failures: usize = reports.iter().map(|r| r.failures.len()).sum();
    let mut report = Report::new("test");
    report.harness = Some(reports.iter().map(|r| HarnessRecord::from_report(r, 20)).collect());
    report.summary = Some(BTreeMap::from([
        ("cases".to_string(), reports.iter().map(|r| r.cases).sum()),
        ("failures".to_string(), failures as u64),
    ]));
    Ok((report, u8::from(failures > 0)))
}
