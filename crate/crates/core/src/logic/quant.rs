//! Finite ranges of integer quantifiers, read off their guards.
//!
//! `\forall integer k; lo <= k <= hi ==> P` ranges over `[lo, hi]`; a
//! conjunction of guarded bodies ranges over the hull of the parts.

use super::term::{ArithOp, CmpOp, Sort, Tag, Term, Var};

#[derive(Clone, Debug, PartialEq)]
pub enum RangeBound {
    Term(Term),
    Max(Vec<RangeBound>),
    Min(Vec<RangeBound>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Range {
    pub lo: RangeBound,
    pub hi: RangeBound,
}

/// Ranges for each binder, in binder order. Bounds of a binder may mention
/// earlier binders only. `None` if some binder is not bounded on both sides
/// or is not an integer.
pub fn ranges(binders: &[Var], body: &Term) -> Option<Vec<Range>> {
    let mut out = Vec::new();
    for (i, b) in binders.iter().enumerate() {
        if b.sort != Sort::Int {
            return None;
        }
        let later: Vec<&Var> = binders[i..].iter().collect();
        out.push(range_of(b, &later, body)?);
    }
    Some(out)
}

fn range_of(b: &Var, excluded: &[&Var], body: &Term) -> Option<Range> {
    match body {
        Term::And(parts) if !parts.is_empty() => {
            let mut los = Vec::new();
            let mut his = Vec::new();
            for p in parts {
                let r = range_of(b, excluded, p)?;
                los.push(r.lo);
                his.push(r.hi);
            }
            Some(Range { lo: collapse(RangeBound::Min, los), hi: collapse(RangeBound::Max, his) })
        }
        Term::Implies(..) => {
            let mut los = Vec::new();
            let mut his = Vec::new();
            let mut cur = body;
            while let Term::Implies(g, rest) = cur {
                collect(b, excluded, g, &mut los, &mut his);
                if !los.is_empty() && !his.is_empty() {
                    break;
                }
                cur = rest;
            }
            if los.is_empty() || his.is_empty() {
                return None;
            }
            Some(Range { lo: collapse(RangeBound::Max, los), hi: collapse(RangeBound::Min, his) })
        }
        _ => None,
    }
}

fn collapse(f: fn(Vec<RangeBound>) -> RangeBound, mut v: Vec<RangeBound>) -> RangeBound {
    if v.len() == 1 {
        v.pop().unwrap()
    } else {
        f(v)
    }
}

fn mentions(t: &Term, vars: &[&Var]) -> bool {
    t.contains(&|x| matches!(x, Term::Var(v) if v.tag == Tag::Bound && vars.iter().any(|b| b.name == v.name)))
}

fn is_binder(t: &Term, b: &Var) -> bool {
    matches!(t, Term::Var(v) if v.tag == Tag::Bound && v.name == b.name)
}

fn collect(b: &Var, excluded: &[&Var], guard: &Term, los: &mut Vec<RangeBound>, his: &mut Vec<RangeBound>) {
    match guard {
        Term::And(parts) => {
            for p in parts {
                collect(b, excluded, p, los, his);
            }
        }
        Term::Cmp(op, x, y) => {
            let (op, other) = if is_binder(x, b) {
                (*op, y.as_ref())
            } else if is_binder(y, b) {
                (op.flip(), x.as_ref())
            } else {
                return;
            };
            if mentions(other, excluded) || other.sort() != Sort::Int {
                return;
            }
            let plus = |d: i64| Term::arith(ArithOp::Add, other.clone(), Term::int(d));
            match op {
                CmpOp::Le => his.push(RangeBound::Term(other.clone())),
                CmpOp::Lt => his.push(RangeBound::Term(plus(-1))),
                CmpOp::Ge => los.push(RangeBound::Term(other.clone())),
                CmpOp::Gt => los.push(RangeBound::Term(plus(1))),
                CmpOp::Eq => {
                    los.push(RangeBound::Term(other.clone()));
                    his.push(RangeBound::Term(other.clone()));
                }
                CmpOp::Ne => {}
            }
        }
        _ => {}
    }
}
