use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use crate::syntax::ast::SemType as Sort;

/// Which state or symbol a variable occurrence refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    /// The current state (`Here`).
    Cur,
    /// The method pre-state (`Old` and `Pre`).
    Old,
    /// State at entry of the loop with this id.
    LoopEntry(u32),
    /// Arbitrary state at the head of the loop with this id.
    Havoc(u32),
    /// Value produced by the call site with this id; the name is `result`
    /// for the return value or a parameter name for its final value.
    CallResult(u32),
    /// Variant value at the start of an iteration of the loop with this id.
    Variant(u32),
    /// Quantifier or predicate binder.
    Bound,
    /// `\result`.
    Result,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub tag: Tag,
    pub sort: Sort,
    /// Index into the method's variable table for program variables.
    pub slot: u32,
}

impl Var {
    pub fn new(name: &str, tag: Tag, sort: Sort, slot: u32) -> Var {
        Var { name: Arc::from(name), tag, sort, slot }
    }

    pub fn bound(name: &str, sort: Sort) -> Var {
        Var::new(name, Tag::Bound, sort, 0)
    }

    pub fn with_tag(&self, tag: Tag) -> Var {
        Var { tag, ..self.clone() }
    }

    /// Symbol name used in reports and exports, e.g. `i@loop2`.
    pub fn symbol(&self) -> String {
        match self.tag {
            Tag::Cur | Tag::Bound => self.name.to_string(),
            Tag::Old => format!("{}@old", self.name),
            Tag::LoopEntry(k) => format!("{}@entry{k}", self.name),
            Tag::Havoc(k) => format!("{}@loop{k}", self.name),
            Tag::CallResult(k) => format!("{}@call{k}", self.name),
            Tag::Variant(k) => format!("variant@loop{k}"),
            Tag::Result => "\\result".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn text(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn text(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Ne,
            CmpOp::Ne => CmpOp::Eq,
            CmpOp::Lt => CmpOp::Ge,
            CmpOp::Le => CmpOp::Gt,
            CmpOp::Gt => CmpOp::Le,
            CmpOp::Ge => CmpOp::Lt,
        }
    }

    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            o => o,
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

/// Which snapshot a `Permut` side refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateLabel {
    Old,
    Here,
    LoopEntry,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StateLabel::Old => "Old",
            StateLabel::Here => "Here",
            StateLabel::LoopEntry => "LoopEntry",
        })
    }
}

/// A typed logic term. Program expressions, specification formulas and
/// proof obligations all use this representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Int(BigInt),
    Real(BigRational),
    Bool(bool),
    Var(Var),
    Neg(Box<Term>),
    Not(Box<Term>),
    Arith(ArithOp, Box<Term>, Box<Term>),
    Cmp(CmpOp, Box<Term>, Box<Term>),
    And(Vec<Term>),
    Or(Vec<Term>),
    Implies(Box<Term>, Box<Term>),
    ToReal(Box<Term>),
    Select(Box<Term>, Box<Term>),
    Store(Box<Term>, Box<Term>, Box<Term>),
    Length(Box<Term>),
    /// Fresh array of the given element sort, filled with zeros.
    NewArray(Sort, Box<Term>),
    ArrayLit(Sort, Vec<Term>),
    Forall(Vec<Var>, Box<Term>),
    /// Multiset equality of `left[lo..=hi]` and `right[lo..=hi]`; the labels
    /// only record how the formula was written.
    Permut {
        labels: (StateLabel, StateLabel),
        left: Box<Term>,
        right: Box<Term>,
        lo: Box<Term>,
        hi: Box<Term>,
    },
}

impl Term {
    pub fn int(i: i64) -> Term {
        Term::Int(BigInt::from(i))
    }

    pub fn real(q: BigRational) -> Term {
        Term::Real(q)
    }

    pub fn var(v: Var) -> Term {
        Term::Var(v)
    }

    pub fn zero(sort: Sort) -> Term {
        match sort {
            Sort::Real => Term::Real(BigRational::zero()),
            _ => Term::Int(BigInt::zero()),
        }
    }

    pub fn tt() -> Term {
        Term::Bool(true)
    }

    pub fn ff() -> Term {
        Term::Bool(false)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Term::Bool(true)) || matches!(self, Term::And(v) if v.is_empty())
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Term::Bool(false)) || matches!(self, Term::Or(v) if v.is_empty())
    }

    pub fn cmp(op: CmpOp, a: Term, b: Term) -> Term {
        Term::Cmp(op, Box::new(a), Box::new(b))
    }

    pub fn arith(op: ArithOp, a: Term, b: Term) -> Term {
        Term::Arith(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Term) -> Term {
        Term::Not(Box::new(a))
    }

    pub fn implies(a: Term, b: Term) -> Term {
        Term::Implies(Box::new(a), Box::new(b))
    }

    /// Conjunction, flattening nested conjunctions and dropping `true`.
    pub fn and(parts: Vec<Term>) -> Term {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Term::And(inner) => out.extend(inner),
                Term::Bool(true) => {}
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Term::And(out)
        }
    }

    pub fn or(parts: Vec<Term>) -> Term {
        let mut out = Vec::with_capacity(parts.len());
        for p in parts {
            match p {
                Term::Or(inner) => out.extend(inner),
                Term::Bool(false) => {}
                other => out.push(other),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Term::Or(out)
        }
    }

    pub fn select(a: Term, i: Term) -> Term {
        Term::Select(Box::new(a), Box::new(i))
    }

    pub fn store(a: Term, i: Term, v: Term) -> Term {
        Term::Store(Box::new(a), Box::new(i), Box::new(v))
    }

    pub fn length(a: Term) -> Term {
        Term::Length(Box::new(a))
    }

    pub fn to_real(a: Term) -> Term {
        match a {
            Term::Int(i) => Term::Real(BigRational::from_integer(i)),
            other => Term::ToReal(Box::new(other)),
        }
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Int(_) | Term::Length(_) => Sort::Int,
            Term::Real(_) | Term::ToReal(_) => Sort::Real,
            Term::Bool(_)
            | Term::Not(_)
            | Term::Cmp(..)
            | Term::And(_)
            | Term::Or(_)
            | Term::Implies(..)
            | Term::Forall(..)
            | Term::Permut { .. } => Sort::Bool,
            Term::Var(v) => v.sort,
            Term::Neg(a) => a.sort(),
            Term::Arith(_, a, _) => a.sort(),
            Term::Select(a, _) => a.sort().elem().unwrap_or(Sort::Int),
            Term::Store(a, _, _) => a.sort(),
            Term::NewArray(e, _) | Term::ArrayLit(e, _) => e.array_of().unwrap_or(Sort::IntArray),
        }
    }

    /// Immediate subterms, in evaluation order.
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Int(_) | Term::Real(_) | Term::Bool(_) | Term::Var(_) => vec![],
            Term::Neg(a) | Term::Not(a) | Term::ToReal(a) | Term::Length(a) | Term::NewArray(_, a) => vec![a],
            Term::Forall(_, a) => vec![a],
            Term::Arith(_, a, b) | Term::Cmp(_, a, b) | Term::Implies(a, b) | Term::Select(a, b) => vec![a, b],
            Term::Store(a, b, c) => vec![a, b, c],
            Term::And(v) | Term::Or(v) | Term::ArrayLit(_, v) => v.iter().collect(),
            Term::Permut { left, right, lo, hi, .. } => vec![left, right, lo, hi],
        }
    }

    /// Rebuilds the term with each immediate subterm replaced by `f(child)`.
    pub fn map_children(&self, f: &mut dyn FnMut(&Term) -> Term) -> Term {
        let b = |t: Term| Box::new(t);
        match self {
            Term::Int(_) | Term::Real(_) | Term::Bool(_) | Term::Var(_) => self.clone(),
            Term::Neg(a) => Term::Neg(b(f(a))),
            Term::Not(a) => Term::Not(b(f(a))),
            Term::ToReal(a) => Term::ToReal(b(f(a))),
            Term::Length(a) => Term::Length(b(f(a))),
            Term::NewArray(s, a) => Term::NewArray(*s, b(f(a))),
            Term::Forall(vs, a) => Term::Forall(vs.clone(), b(f(a))),
            Term::Arith(op, x, y) => {
                let x = f(x);
                Term::Arith(*op, b(x), b(f(y)))
            }
            Term::Cmp(op, x, y) => {
                let x = f(x);
                Term::Cmp(*op, b(x), b(f(y)))
            }
            Term::Implies(x, y) => {
                let x = f(x);
                Term::Implies(b(x), b(f(y)))
            }
            Term::Select(x, y) => {
                let x = f(x);
                Term::Select(b(x), b(f(y)))
            }
            Term::Store(x, y, z) => {
                let x = f(x);
                let y = f(y);
                Term::Store(b(x), b(y), b(f(z)))
            }
            Term::And(v) => Term::And(v.iter().map(&mut *f).collect()),
            Term::Or(v) => Term::Or(v.iter().map(&mut *f).collect()),
            Term::ArrayLit(s, v) => Term::ArrayLit(*s, v.iter().map(&mut *f).collect()),
            Term::Permut { labels, left, right, lo, hi } => {
                let left = f(left);
                let right = f(right);
                let lo = f(lo);
                Term::Permut { labels: *labels, left: b(left), right: b(right), lo: b(lo), hi: b(f(hi)) }
            }
        }
    }

    /// Replaces free variable occurrences for which `f` returns a term.
    /// Bound variables shadowed by an inner quantifier are left alone.
    pub fn subst(&self, f: &dyn Fn(&Var) -> Option<Term>) -> Term {
        let mut shadow = Vec::new();
        self.subst_inner(f, &mut shadow)
    }

    fn subst_inner(&self, f: &dyn Fn(&Var) -> Option<Term>, shadow: &mut Vec<Arc<str>>) -> Term {
        match self {
            Term::Var(v) => {
                if v.tag == Tag::Bound && shadow.contains(&v.name) {
                    return self.clone();
                }
                f(v).unwrap_or_else(|| self.clone())
            }
            Term::Int(_) | Term::Real(_) | Term::Bool(_) => self.clone(),
            Term::Forall(vs, body) => {
                let n = shadow.len();
                shadow.extend(vs.iter().map(|v| v.name.clone()));
                let body = body.subst_inner(f, shadow);
                shadow.truncate(n);
                Term::Forall(vs.clone(), Box::new(body))
            }
            _ => self.map_children(&mut |c| c.subst_inner(f, shadow)),
        }
    }

    /// Substitutes a single variable.
    pub fn subst_var(&self, var: &Var, by: &Term) -> Term {
        self.subst(&|v| (v == var).then(|| by.clone()))
    }

    pub fn retag(&self, from: Tag, to: Tag) -> Term {
        self.subst(&|v| (v.tag == from).then(|| Term::Var(v.with_tag(to))))
    }

    pub fn visit(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Free variables (quantifier-bound occurrences excluded).
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        let mut shadow = Vec::new();
        self.free_inner(&mut out, &mut shadow);
        out
    }

    fn free_inner(&self, out: &mut BTreeSet<Var>, shadow: &mut Vec<Arc<str>>) {
        match self {
            Term::Var(v) => {
                if !(v.tag == Tag::Bound && shadow.contains(&v.name)) {
                    out.insert(v.clone());
                }
            }
            Term::Forall(vs, body) => {
                let n = shadow.len();
                shadow.extend(vs.iter().map(|v| v.name.clone()));
                body.free_inner(out, shadow);
                shadow.truncate(n);
            }
            _ => {
                for c in self.children() {
                    c.free_inner(out, shadow);
                }
            }
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    pub fn contains(&self, pred: &dyn Fn(&Term) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        self.children().into_iter().any(|c| c.contains(pred))
    }
}

/// Formats a rational as an exact decimal when it has a terminating
/// expansion with few digits, and as `p/q` otherwise.
pub fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        return format!("{}.0", q.numer());
    }
    let mut d = q.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut digits = 0usize;
    while (&d % &two).is_zero() || (&d % &five).is_zero() {
        if (&d % &two).is_zero() {
            d /= &two;
        } else {
            d /= &five;
        }
        digits += 1;
    }
    if d.is_one() && digits <= 40 {
        let scale = BigInt::from(10).pow(digits as u32);
        let scaled = (q * BigRational::from_integer(scale.clone())).to_integer();
        let neg = scaled.is_negative();
        let s = scaled.abs().to_string();
        let s = format!("{s:0>width$}", width = digits + 1);
        let (int, frac) = s.split_at(s.len() - digits);
        let frac = frac.trim_end_matches('0');
        return format!("{}{int}.{frac}", if neg { "-" } else { "" });
    }
    format!("{}/{}", q.numer(), q.denom())
}

fn prec(t: &Term) -> u8 {
    match t {
        Term::Forall(..) => 0,
        Term::Implies(..) => 1,
        Term::Or(v) if v.len() > 1 => 2,
        Term::And(v) if v.len() > 1 => 3,
        Term::Cmp(CmpOp::Eq | CmpOp::Ne, ..) => 4,
        Term::Cmp(..) => 5,
        Term::Arith(ArithOp::Add | ArithOp::Sub, ..) => 6,
        Term::Arith(..) => 7,
        Term::Neg(_) | Term::Not(_) => 8,
        Term::Int(i) if i.is_negative() => 8,
        Term::Real(q) if q.is_negative() => 8,
        _ => 9,
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, ctx: u8) -> fmt::Result {
    let p = prec(t);
    if p < ctx {
        f.write_str("(")?;
    }
    match t {
        Term::Int(i) => write!(f, "{i}")?,
        Term::Real(q) => f.write_str(&fmt_rational(q))?,
        Term::Bool(b) => write!(f, "{b}")?,
        Term::Var(v) => f.write_str(&v.symbol())?,
        Term::Neg(a) => {
            f.write_str("-")?;
            write_term(f, a, 8)?;
        }
        Term::Not(a) => {
            f.write_str("!")?;
            write_term(f, a, 8)?;
        }
        Term::Arith(op, a, b) => {
            write_term(f, a, p)?;
            write!(f, " {} ", op.text())?;
            write_term(f, b, p + 1)?;
        }
        Term::Cmp(op, a, b) => {
            write_term(f, a, 6)?;
            write!(f, " {} ", op.text())?;
            write_term(f, b, 6)?;
        }
        Term::And(v) | Term::Or(v) => {
            if v.is_empty() {
                f.write_str(if matches!(t, Term::And(_)) { "true" } else { "false" })?;
            } else if v.len() == 1 {
                write_term(f, &v[0], ctx)?;
            } else {
                let sep = if matches!(t, Term::And(_)) { " && " } else { " || " };
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write_term(f, x, p + 1)?;
                }
            }
        }
        Term::Implies(a, b) => {
            write_term(f, a, 2)?;
            f.write_str(" ==> ")?;
            write_term(f, b, 1)?;
        }
        Term::ToReal(a) => write_term(f, a, ctx.max(9))?,
        Term::Select(a, i) => {
            write_term(f, a, 9)?;
            f.write_str("[")?;
            write_term(f, i, 0)?;
            f.write_str("]")?;
        }
        Term::Store(a, i, v) => {
            f.write_str("store(")?;
            write_term(f, a, 0)?;
            f.write_str(", ")?;
            write_term(f, i, 0)?;
            f.write_str(", ")?;
            write_term(f, v, 0)?;
            f.write_str(")")?;
        }
        Term::Length(a) => {
            write_term(f, a, 9)?;
            f.write_str(".length")?;
        }
        Term::NewArray(s, n) => {
            write!(f, "new {s}[")?;
            write_term(f, n, 0)?;
            f.write_str("]")?;
        }
        Term::ArrayLit(s, items) => {
            write!(f, "new {s}[]{{")?;
            for (i, x) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_term(f, x, 0)?;
            }
            f.write_str("}")?;
        }
        Term::Forall(vs, body) => {
            f.write_str("\\forall")?;
            for v in vs {
                let s = if v.sort == Sort::Int { "integer" } else { "real" };
                write!(f, " {s} {}", v.name)?;
                if vs.len() > 1 {
                    f.write_str(",")?;
                }
            }
            f.write_str("; ")?;
            write_term(f, body, 0)?;
        }
        Term::Permut { labels, left, right, lo, hi } => {
            write!(f, "Permut{{{},{}}}(", labels.0, labels.1)?;
            for (i, x) in [left, right, lo, hi].into_iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_term(f, x, 0)?;
            }
            f.write_str(")")?;
        }
    }
    if p < ctx {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_formatting() {
        assert_eq!(fmt_rational(&q(3, 25000000)), "0.00000012");
        assert_eq!(fmt_rational(&q(-5, 2)), "-2.5");
        assert_eq!(fmt_rational(&q(1, 3)), "1/3");
        assert_eq!(fmt_rational(&q(4, 1)), "4.0");
    }

    #[test]
    fn substitution_respects_shadowing() {
        let k = Var::bound("k", Sort::Int);
        let body = Term::cmp(CmpOp::Le, Term::Var(k.clone()), Term::int(3));
        let t = Term::and(vec![body.clone(), Term::Forall(vec![k.clone()], Box::new(body))]);
        let s = t.subst_var(&k, &Term::int(7));
        let Term::And(parts) = s else { panic!() };
        assert_eq!(parts[0], Term::cmp(CmpOp::Le, Term::int(7), Term::int(3)));
        assert!(matches!(&parts[1], Term::Forall(..)));
        assert_eq!(parts[1].free_vars().len(), 0);
    }

    #[test]
    fn display_precedence() {
        let x = Term::Var(Var::new("x", Tag::Cur, Sort::Int, 0));
        let t = Term::arith(ArithOp::Mul, Term::arith(ArithOp::Add, x.clone(), Term::int(1)), x.clone());
        assert_eq!(t.to_string(), "(x + 1) * x");
        let h = Term::Var(Var::new("i", Tag::Havoc(2), Sort::Int, 0));
        assert_eq!(h.to_string(), "i@loop2");
    }
}
