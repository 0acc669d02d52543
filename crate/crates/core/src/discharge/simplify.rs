//! Equivalence-preserving rewriting of formulas.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::poly::Poly;
use crate::logic::quant::{ranges, RangeBound};
use crate::logic::{ArithOp, CmpOp, Sort, Term, Var};

/// Quantifiers over literal ranges with at most this many points are
/// expanded into conjunctions.
pub const MAX_EXPANSION: usize = 64;

/// Simplifies `t` bottom-up: constant folding, boolean absorption,
/// comparison of normalized arithmetic, select/store reduction and
/// expansion of small literal quantifier ranges.
pub fn simplify(t: &Term) -> Term {
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || {
        let t = t.map_children(&mut |c| simplify(c));
        rewrite(t)
    })
}

fn literal(t: &Term) -> Option<BigRational> {
    match t {
        Term::Int(i) => Some(BigRational::from_integer(i.clone())),
        Term::Real(q) => Some(q.clone()),
        _ => None,
    }
}

fn lit_of(q: BigRational, sort: Sort) -> Term {
    match sort {
        Sort::Int => Term::Int(q.to_integer()),
        _ => Term::Real(q),
    }
}

/// Whether `i - j` is a known constant, and which.
fn difference(i: &Term, j: &Term) -> Option<BigRational> {
    if i == j {
        return Some(BigRational::zero());
    }
    Poly::of_term(i).sub(&Poly::of_term(j)).as_constant()
}

fn rewrite(t: Term) -> Term {
    match t {
        Term::Neg(a) => match *a {
            Term::Int(i) => Term::Int(-i),
            Term::Real(q) => Term::Real(-q),
            Term::Neg(b) => *b,
            a => Term::Neg(Box::new(a)),
        },
        Term::Not(a) => match *a {
            Term::Bool(b) => Term::Bool(!b),
            Term::Not(b) => *b,
            Term::Cmp(op, x, y) => rewrite(Term::Cmp(op.negate(), x, y)),
            a => Term::Not(Box::new(a)),
        },
        Term::Arith(op, a, b) => arith(op, *a, *b),
        Term::Cmp(op, a, b) => cmp(op, *a, *b),
        Term::And(parts) => {
            if parts.iter().any(Term::is_false) {
                return Term::ff();
            }
            let mut out: Vec<Term> = Vec::new();
            for p in parts {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
            if has_complement(&out) {
                return Term::ff();
            }
            Term::and(out)
        }
        Term::Or(parts) => {
            if parts.iter().any(Term::is_true) {
                return Term::tt();
            }
            let mut out: Vec<Term> = Vec::new();
            for p in parts {
                if !out.contains(&p) {
                    out.push(p);
                }
            }
            if has_complement(&out) {
                return Term::tt();
            }
            Term::or(out)
        }
        Term::Implies(a, b) => {
            if a.is_true() {
                *b
            } else if a.is_false() || b.is_true() || a == b {
                Term::tt()
            } else if b.is_false() {
                rewrite(Term::Not(a))
            } else if let Term::And(hs) = &*a {
                if hs.contains(&b) {
                    Term::tt()
                } else {
                    Term::Implies(a, b)
                }
            } else {
                Term::Implies(a, b)
            }
        }
        Term::ToReal(a) => Term::to_real(*a),
        Term::Select(a, i) => select(*a, *i),
        Term::Length(a) => match *a {
            Term::Store(b, _, _) => rewrite(Term::Length(b)),
            Term::ArrayLit(_, items) => Term::int(items.len() as i64),
            Term::NewArray(_, n) if matches!(&*n, Term::Int(k) if !k.is_negative()) => *n,
            a => Term::Length(Box::new(a)),
        },
        Term::Forall(vs, body) => forall(vs, *body),
        Term::Permut { labels, left, right, lo, hi } => {
            if left == right {
                Term::tt()
            } else {
                Term::Permut { labels, left, right, lo, hi }
            }
        }
        t => t,
    }
}

fn has_complement(parts: &[Term]) -> bool {
    parts.iter().any(|p| match p {
        Term::Not(n) => parts.contains(n),
        Term::Cmp(op, a, b) => parts.contains(&Term::Cmp(op.negate(), a.clone(), b.clone())),
        _ => false,
    })
}

fn arith(op: ArithOp, a: Term, b: Term) -> Term {
    let sort = a.sort();
    if let (Some(x), Some(y)) = (literal(&a), literal(&b)) {
        let r = match op {
            ArithOp::Add => Some(x + y),
            ArithOp::Sub => Some(x - y),
            ArithOp::Mul => Some(x * y),
            ArithOp::Div => (!y.is_zero() && sort == Sort::Real).then(|| x / y),
        };
        if let Some(r) = r {
            return lit_of(r, sort);
        }
    }
    let is = |t: &Term, k: i64| literal(t).is_some_and(|q| q == BigRational::from_integer(BigInt::from(k)));
    match op {
        ArithOp::Add if is(&a, 0) => b,
        ArithOp::Add | ArithOp::Sub if is(&b, 0) => a,
        ArithOp::Sub if a == b => lit_of(BigRational::zero(), sort),
        ArithOp::Mul if is(&a, 1) => b,
        ArithOp::Mul | ArithOp::Div if is(&b, 1) => a,
        ArithOp::Mul if is(&a, 0) || is(&b, 0) => lit_of(BigRational::zero(), sort),
        _ => Term::arith(op, a, b),
    }
}

fn cmp(op: CmpOp, a: Term, b: Term) -> Term {
    if a.sort().is_numeric() {
        if let Some(d) = difference(&a, &b) {
            return Term::Bool(op.holds(d.cmp(&BigRational::zero())));
        }
    } else if a == b {
        return Term::Bool(matches!(op, CmpOp::Eq | CmpOp::Le | CmpOp::Ge));
    } else if let (Term::Bool(x), Term::Bool(y)) = (&a, &b) {
        return Term::Bool(if op == CmpOp::Eq { x == y } else { x != y });
    }
    Term::cmp(op, a, b)
}

fn select(a: Term, i: Term) -> Term {
    match a {
        Term::Store(b, j, e) => match difference(&i, &j) {
            Some(d) if d.is_zero() => *e,
            Some(_) => select(*b, i),
            None => Term::select(Term::Store(b, j, e), i),
        },
        Term::ArrayLit(sort, items) => match &i {
            Term::Int(k) if !k.is_negative() && k.to_usize().is_some_and(|k| k < items.len()) => {
                items[k.to_usize().unwrap()].clone()
            }
            _ => Term::select(Term::ArrayLit(sort, items), i),
        },
        a => Term::select(a, i),
    }
}

fn literal_bound(b: &RangeBound) -> Option<BigInt> {
    match b {
        RangeBound::Term(Term::Int(i)) => Some(i.clone()),
        RangeBound::Term(_) => None,
        RangeBound::Max(bs) => bs.iter().map(literal_bound).collect::<Option<Vec<_>>>()?.into_iter().max(),
        RangeBound::Min(bs) => bs.iter().map(literal_bound).collect::<Option<Vec<_>>>()?.into_iter().min(),
    }
}

fn forall(vs: Vec<Var>, body: Term) -> Term {
    if body.is_true() {
        return Term::tt();
    }
    let used = body.free_vars();
    let vs: Vec<Var> = vs.into_iter().filter(|v| used.iter().any(|u| u.name == v.name && u.tag == v.tag)).collect();
    if vs.is_empty() {
        return body;
    }
    if let Some(rs) = ranges(&vs, &body) {
        let bounds: Option<Vec<(BigInt, BigInt)>> = rs.iter().map(|r| Some((literal_bound(&r.lo)?, literal_bound(&r.hi)?))).collect();
        if let Some(bounds) = bounds {
            let mut points = BigInt::one();
            for (lo, hi) in &bounds {
                let n = if hi < lo { BigInt::zero() } else { hi - lo + 1 };
                points *= n;
            }
            if points <= BigInt::from(MAX_EXPANSION) {
                let mut parts = Vec::new();
                expand(&vs, &bounds, &body, &mut parts);
                return simplify(&Term::and(parts));
            }
        }
    }
    Term::Forall(vs, Box::new(body))
}

fn expand(vs: &[Var], bounds: &[(BigInt, BigInt)], body: &Term, out: &mut Vec<Term>) {
    let Some((v, rest)) = vs.split_first() else {
        out.push(body.clone());
        return;
    };
    let (lo, hi) = &bounds[0];
    let mut k = lo.clone();
    while &k <= hi {
        let inst = body.subst_var(v, &Term::Int(k.clone()));
        expand(rest, &bounds[1..], &inst, out);
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_source;
    use crate::logic::{Tag, Var};

    fn real(n: &str) -> Term {
        Term::Var(Var::new(n, Tag::Cur, Sort::Real, 0))
    }

    #[test]
    fn translate_goal_is_true() {
        let (x, y, dx, dy) = (real("x"), real("y"), real("dx"), real("dy"));
        let sum = |a: &Term, b: &Term| Term::arith(ArithOp::Add, a.clone(), b.clone());
        let g = Term::and(vec![
            Term::cmp(CmpOp::Eq, sum(&x, &dx), sum(&x, &dx)),
            Term::cmp(CmpOp::Eq, sum(&y, &dy), sum(&y, &dy)),
        ]);
        assert!(simplify(&g).is_true());
    }

    #[test]
    fn select_of_store() {
        let buf = Term::Var(Var::new("buf", Tag::Cur, Sort::RealArray, 0));
        let i = Term::Var(Var::new("i", Tag::Cur, Sort::Int, 1));
        let g = Term::cmp(CmpOp::Le, Term::select(Term::store(buf, i.clone(), real("d")), i), real("m"));
        assert_eq!(simplify(&g).to_string(), "d <= m");
    }

    #[test]
    fn select_past_other_store() {
        let buf = Term::Var(Var::new("buf", Tag::Cur, Sort::RealArray, 0));
        let i = Term::Var(Var::new("i", Tag::Cur, Sort::Int, 1));
        let i1 = Term::arith(ArithOp::Add, i.clone(), Term::int(1));
        let t = Term::select(Term::store(buf, i, real("d")), i1);
        assert_eq!(simplify(&t).to_string(), "buf[i + 1]");
    }

    #[test]
    fn expands_literal_ranges() {
        let u = check_source("t", "/*@ requires \\forall integer k; 0 <= k <= 2 ==> a[k] >= 0.0; @*/ void f(real[] a) {}").unwrap();
        let f = &u.methods[0].requires[0].formula;
        assert_eq!(simplify(f).to_string(), "a[0] >= 0.0 && a[1] >= 0.0 && a[2] >= 0.0");
    }

    #[test]
    fn boolean_rules() {
        let a = Term::cmp(CmpOp::Lt, real("x"), real("y"));
        assert!(simplify(&Term::implies(a.clone(), a.clone())).is_true());
        assert!(simplify(&Term::and(vec![a.clone(), Term::Not(Box::new(a.clone()))])).is_false());
        assert_eq!(simplify(&Term::Not(Box::new(Term::Not(Box::new(a.clone()))))), a);
        assert_eq!(simplify(&Term::Not(Box::new(a))).to_string(), "x >= y");
    }
}
