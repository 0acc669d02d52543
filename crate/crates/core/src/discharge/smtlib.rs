//! SMT-LIB 2 export.

use std::collections::BTreeSet;
use std::fmt::Write;

use num_rational::BigRational;
use num_traits::Signed;

use super::sx::{parse_all, Sx};
use crate::logic::{fmt_rational, ArithOp, CmpOp, Sort, Tag, Term, Var};
use crate::vcgen::Obligation;

const BUILTINS: &[&str] = &[
    "and", "or", "not", "=>", "=", "distinct", "<", "<=", ">", ">=", "+", "-", "*", "/", "select", "store", "true", "false",
    "to_real", "forall", "exists", "as", "const", "Int", "Real", "Bool", "Array", "ite", "let", "div", "mod", "abs",
];

fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Real => "Real",
        Sort::Bool => "Bool",
        Sort::IntArray => "(Array Int Int)",
        Sort::RealArray => "(Array Int Real)",
    }
}

/// Suffix distinguishing the per-element-sort array functions.
fn elem_suffix(s: Sort) -> &'static str {
    if s == Sort::IntArray {
        "_int"
    } else {
        ""
    }
}

fn symbol(v: &Var) -> String {
    let s = match v.tag {
        Tag::Result => "_result".to_string(),
        _ => v.symbol(),
    };
    if BUILTINS.contains(&s.as_str()) || s.starts_with("length") || s.starts_with("Permut") {
        format!("|{s}|")
    } else {
        s
    }
}

fn real_lit(q: &BigRational) -> String {
    let mag = fmt_rational(&q.abs());
    let body = match mag.split_once('/') {
        Some((n, d)) => format!("(/ {n}.0 {d}.0)"),
        None => mag,
    };
    if q.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

#[derive(Default)]
struct Uses {
    length: BTreeSet<Sort>,
    permut: BTreeSet<Sort>,
}

fn term(t: &Term, u: &mut Uses) -> String {
    match t {
        Term::Int(i) if i.is_negative() => format!("(- {})", -i),
        Term::Int(i) => i.to_string(),
        Term::Real(q) => real_lit(q),
        Term::Bool(b) => b.to_string(),
        Term::Var(v) => symbol(v),
        Term::Neg(a) => format!("(- {})", term(a, u)),
        Term::Not(a) => format!("(not {})", term(a, u)),
        Term::Arith(op, a, b) => {
            let o = match op {
                ArithOp::Add => "+",
                ArithOp::Sub => "-",
                ArithOp::Mul => "*",
                ArithOp::Div => "/",
            };
            format!("({o} {} {})", term(a, u), term(b, u))
        }
        Term::Cmp(CmpOp::Ne, a, b) => format!("(not (= {} {}))", term(a, u), term(b, u)),
        Term::Cmp(op, a, b) => format!("({} {} {})", op.text().replace("==", "="), term(a, u), term(b, u)),
        Term::And(ps) if ps.is_empty() => "true".into(),
        Term::Or(ps) if ps.is_empty() => "false".into(),
        Term::And(ps) | Term::Or(ps) => {
            let o = if matches!(t, Term::And(_)) { "and" } else { "or" };
            let parts: Vec<String> = ps.iter().map(|p| term(p, u)).collect();
            format!("({o} {})", parts.join(" "))
        }
        Term::Implies(a, b) => format!("(=> {} {})", term(a, u), term(b, u)),
        Term::ToReal(a) => format!("(to_real {})", term(a, u)),
        Term::Select(a, i) => format!("(select {} {})", term(a, u), term(i, u)),
        Term::Store(a, i, v) => format!("(store {} {} {})", term(a, u), term(i, u), term(v, u)),
        Term::Length(a) => match &**a {
            Term::ArrayLit(_, items) => items.len().to_string(),
            Term::NewArray(_, n) => term(n, u),
            Term::Store(b, _, _) => term(&Term::Length(b.clone()), u),
            a => {
                let s = a.sort();
                u.length.insert(s);
                format!("(length{} {})", elem_suffix(s), term(a, u))
            }
        },
        Term::NewArray(elem, _) => format!("((as const {}) {})", sort_name(elem.array_of().unwrap_or(Sort::IntArray)), zero(*elem)),
        Term::ArrayLit(elem, items) => {
            let mut acc = format!("((as const {}) {})", sort_name(elem.array_of().unwrap_or(Sort::IntArray)), zero(*elem));
            for (k, it) in items.iter().enumerate() {
                acc = format!("(store {acc} {k} {})", term(it, u));
            }
            acc
        }
        Term::Forall(vs, body) => {
            let binders: Vec<String> = vs.iter().map(|v| format!("({} {})", symbol(v), sort_name(v.sort))).collect();
            format!("(forall ({}) {})", binders.join(" "), term(body, u))
        }
        Term::Permut { left, right, lo, hi, .. } => {
            let s = left.sort();
            u.permut.insert(s);
            format!("(Permut{} {} {} {} {})", elem_suffix(s), term(left, u), term(right, u), term(lo, u), term(hi, u))
        }
    }
}

fn zero(s: Sort) -> &'static str {
    match s {
        Sort::Int => "0",
        Sort::Bool => "false",
        _ => "0.0",
    }
}

fn permut_decls(s: Sort, out: &mut String) {
    let a = sort_name(s);
    let p = format!("Permut{}", elem_suffix(s));
    let _ = writeln!(out, "(declare-fun {p} ({a} {a} Int Int) Bool)");
    let _ = writeln!(out, "(assert (forall ((a {a}) (l Int) (h Int)) ({p} a a l h)))");
    let _ = writeln!(out, "(assert (forall ((a {a}) (b {a}) (l Int) (h Int)) (=> ({p} a b l h) ({p} b a l h))))");
    let _ = writeln!(
        out,
        "(assert (forall ((a {a}) (b {a}) (c {a}) (l Int) (h Int)) (=> (and ({p} a b l h) ({p} b c l h)) ({p} a c l h))))"
    );
    let _ = writeln!(
        out,
        "(assert (forall ((a {a}) (b {a}) (l Int) (h Int) (i Int) (j Int)) (=> (and ({p} a b l h) (<= l i) (<= i h) (<= l j) (<= j h)) ({p} a (store (store b i (select b j)) j (select b i)) l h))))"
    );
}

/// Renders one obligation as a standalone SMT-LIB 2 script whose
/// unsatisfiability means the obligation is valid.
pub fn export_smtlib(ob: &Obligation) -> String {
    let mut u = Uses { permut: BTreeSet::from([Sort::RealArray]), ..Uses::default() };
    let hyps: Vec<String> = ob.hypotheses.iter().map(|h| term(&h.formula, &mut u)).collect();
    let goal = term(&ob.goal, &mut u);
    let mut out = String::new();
    let _ = writeln!(out, "; obligation {}: {}", ob.id, ob.name);
    let _ = writeln!(
        out,
        "; origin: {} line {} column {} ({})",
        ob.origin.method,
        ob.origin.line,
        ob.origin.column,
        ob.origin.kind.as_str()
    );
    out.push_str("(set-logic AUFNIRA)\n");
    for s in &u.length {
        let _ = writeln!(out, "(declare-fun length{} ({}) Int)", elem_suffix(*s), sort_name(*s));
        let _ = writeln!(out, "(assert (forall ((a {})) (>= (length{} a) 0)))", sort_name(*s), elem_suffix(*s));
    }
    for s in &u.permut {
        permut_decls(*s, &mut out);
    }
    for v in ob.symbols() {
        let _ = writeln!(out, "(declare-const {} {})", symbol(&v), sort_name(v.sort));
    }
    for h in hyps {
        let _ = writeln!(out, "(assert {h})");
    }
    let _ = writeln!(out, "(assert (not {goal}))");
    out.push_str("(check-sat)\n");
    out
}

/// Checks that `text` is a well-formed script: balanced, known commands,
/// `set-logic` first, every symbol declared before use.
pub fn validate_smtlib(text: &str) -> Result<(), String> {
    let cmds = parse_all(text)?;
    let mut declared: BTreeSet<String> = BTreeSet::new();
    let mut saw_logic = false;
    let mut saw_check = false;
    for (k, c) in cmds.iter().enumerate() {
        let items = c.list().ok_or_else(|| format!("command {k}: expected a list"))?;
        let head = c.head().ok_or_else(|| format!("command {k}: missing command name"))?;
        match head {
            "set-logic" => {
                if k != 0 {
                    return Err("set-logic must come first".into());
                }
                saw_logic = true;
            }
            "declare-const" | "declare-fun" => {
                let name = items.get(1).and_then(Sx::atom).ok_or("declaration without a name")?;
                if !declared.insert(name.to_string()) {
                    return Err(format!("`{name}` declared twice"));
                }
            }
            "assert" => {
                if items.len() != 2 {
                    return Err("assert takes one formula".into());
                }
                check_symbols(&items[1], &declared, &mut Vec::new())?;
            }
            "check-sat" => saw_check = true,
            "exit" | "set-option" | "set-info" => {}
            other => return Err(format!("unknown command `{other}`")),
        }
    }
    if !saw_logic || !saw_check {
        return Err("script needs set-logic and check-sat".into());
    }
    Ok(())
}

fn check_symbols(e: &Sx, declared: &BTreeSet<String>, bound: &mut Vec<String>) -> Result<(), String> {
    match e {
        Sx::Atom(a) => {
            let numeric = a.chars().next().is_some_and(|c| c.is_ascii_digit());
            if numeric || BUILTINS.contains(&a.as_str()) || declared.contains(a) || bound.contains(a) {
                Ok(())
            } else {
                Err(format!("undeclared symbol `{a}`"))
            }
        }
        Sx::List(items) => {
            if let (Some("forall" | "exists"), Some(Sx::List(binders))) = (e.head(), items.get(1)) {
                let n = bound.len();
                for b in binders {
                    let name = b.list().and_then(|l| l.first()).and_then(Sx::atom).ok_or("malformed binder")?;
                    bound.push(name.to_string());
                }
                let r = items[2..].iter().try_for_each(|x| check_symbols(x, declared, bound));
                bound.truncate(n);
                return r;
            }
            if e.head() == Some("as") {
                return Ok(());
            }
            items.iter().try_for_each(|x| check_symbols(x, declared, bound))
        }
    }
}
