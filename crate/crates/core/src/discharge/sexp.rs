//! `defthm`-style s-expression export.

use std::collections::BTreeSet;

use super::sx::{parse_all, Sx};
use crate::logic::{ArithOp, CmpOp, Sort, Tag, Term, Var};
use crate::vcgen::Obligation;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SexpError {
    #[error("obligation {id}: quantifier in negative position has no defthm form")]
    Existential { id: String },
}

fn symbol(v: &Var) -> String {
    match v.tag {
        Tag::Result => "_result".to_string(),
        _ => v.symbol(),
    }
}

fn type_pred(s: Sort) -> &'static str {
    match s {
        Sort::Int => "integerp",
        Sort::Real => "realp",
        Sort::Bool => "booleanp",
        Sort::IntArray => "integer-listp",
        Sort::RealArray => "real-listp",
    }
}

struct R<'a> {
    id: &'a str,
}

impl R<'_> {
    /// `pos` is the polarity of `t` inside the theorem; `None` inside
    /// hypotheses, where quantifiers are rendered as written.
    fn term(&self, t: &Term, pos: Option<bool>) -> Result<String, SexpError> {
        let flip = pos.map(|p| !p);
        Ok(match t {
            Term::Int(i) => i.to_string(),
            Term::Real(q) if q.is_integer() => q.numer().to_string(),
            Term::Real(q) => format!("{}/{}", q.numer(), q.denom()),
            Term::Bool(true) => "t".into(),
            Term::Bool(false) => "nil".into(),
            Term::Var(v) => symbol(v),
            Term::Neg(a) => format!("(- {})", self.term(a, pos)?),
            Term::ToReal(a) => self.term(a, pos)?,
            Term::Not(a) => format!("(not {})", self.term(a, flip)?),
            Term::Arith(op, a, b) => {
                let o = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                    ArithOp::Div => "/",
                };
                format!("({o} {} {})", self.term(a, pos)?, self.term(b, pos)?)
            }
            Term::Cmp(op, a, b) => {
                let (a, b) = (self.term(a, pos)?, self.term(b, pos)?);
                match op {
                    CmpOp::Eq => format!("(equal {a} {b})"),
                    CmpOp::Ne => format!("(not (equal {a} {b}))"),
                    op => format!("({} {a} {b})", op.text()),
                }
            }
            Term::And(ps) if ps.is_empty() => "t".into(),
            Term::Or(ps) if ps.is_empty() => "nil".into(),
            Term::And(ps) | Term::Or(ps) => {
                let o = if matches!(t, Term::And(_)) { "and" } else { "or" };
                let parts = ps.iter().map(|p| self.term(p, pos)).collect::<Result<Vec<_>, _>>()?;
                format!("({o} {})", parts.join(" "))
            }
            Term::Implies(a, b) => format!("(implies {} {})", self.term(a, flip)?, self.term(b, pos)?),
            Term::Select(a, i) => format!("(nth {} {})", self.term(i, pos)?, self.term(a, pos)?),
            Term::Store(a, i, v) => {
                format!("(update-nth {} {} {})", self.term(i, pos)?, self.term(v, pos)?, self.term(a, pos)?)
            }
            Term::Length(a) => format!("(len {})", self.term(a, pos)?),
            Term::NewArray(e, n) => format!("(make-list {} :initial-element {})", self.term(n, pos)?, zero(*e)),
            Term::ArrayLit(_, items) => {
                let parts = items.iter().map(|p| self.term(p, pos)).collect::<Result<Vec<_>, _>>()?;
                if parts.is_empty() {
                    "nil".into()
                } else {
                    format!("(list {})", parts.join(" "))
                }
            }
            Term::Forall(vs, body) => {
                if pos == Some(false) {
                    return Err(SexpError::Existential { id: self.id.to_string() });
                }
                let names: Vec<String> = vs.iter().map(symbol).collect();
                let preds: Vec<String> = vs.iter().map(|v| format!("({} {})", type_pred(v.sort), symbol(v))).collect();
                format!("(forall ({}) (implies (and {}) {}))", names.join(" "), preds.join(" "), self.term(body, pos)?)
            }
            Term::Permut { left, right, lo, hi, .. } => format!(
                "(permut {} {} {} {})",
                self.term(left, pos)?,
                self.term(right, pos)?,
                self.term(lo, pos)?,
                self.term(hi, pos)?
            ),
        })
    }
}

fn zero(s: Sort) -> &'static str {
    match s {
        Sort::Bool => "nil",
        _ => "0",
    }
}

/// Renders `ob` as one `defthm`. Outer universal quantifiers of the goal
/// become free variables with type hypotheses, and the antecedent of the
/// quantified implication joins the hypotheses.
pub fn export_sexp(ob: &Obligation) -> Result<String, SexpError> {
    let r = R { id: &ob.id };
    let mut vars: Vec<Var> = ob.symbols().into_iter().collect();
    let mut taken: BTreeSet<String> = vars.iter().map(symbol).collect();
    let mut hyps: Vec<Term> = ob.hypotheses.iter().map(|h| h.formula.clone()).collect();
    let mut goal = ob.goal.clone();
    let mut stripped = false;
    loop {
        match goal {
            Term::Forall(vs, body) => {
                let mut body = *body;
                for v in vs {
                    let mut name = v.name.to_string();
                    let mut n = 1;
                    while taken.contains(&name) {
                        name = format!("{}_{n}", v.name);
                        n += 1;
                    }
                    taken.insert(name.clone());
                    let fresh = Var::new(&name, Tag::Cur, v.sort, u32::MAX);
                    body = body.subst_var(&v, &Term::Var(fresh.clone()));
                    vars.push(fresh);
                }
                goal = body;
                stripped = true;
            }
            Term::Implies(a, b) if stripped => {
                hyps.push(*a);
                goal = *b;
            }
            g => {
                goal = g;
                break;
            }
        }
    }
    let mut parts: Vec<String> = vars.iter().map(|v| format!("({} {})", type_pred(v.sort), symbol(v))).collect();
    for h in &hyps {
        parts.push(r.term(h, None)?);
    }
    let goal = r.term(&goal, Some(true))?;
    let and = if parts.is_empty() { "(and)".to_string() } else { format!("(and {})", parts.join(" ")) };
    Ok(format!("(defthm {}\n (implies {and}\n          {goal}))\n", ob.id))
}

/// Checks that `text` is a sequence of balanced `(defthm NAME BODY)` forms.
pub fn validate_sexp(text: &str) -> Result<(), String> {
    let forms = parse_all(text)?;
    if forms.is_empty() {
        return Err("no forms".into());
    }
    for f in &forms {
        let items = f.list().ok_or("top-level atom")?;
        if f.head() != Some("defthm") || items.len() != 3 || items[1].atom().is_none() {
            return Err("expected (defthm NAME BODY)".into());
        }
        if matches!(items[2], Sx::Atom(_)) && items[2].atom() != Some("t") {
            return Err("theorem body must be a formula".into());
        }
    }
    Ok(())
}
