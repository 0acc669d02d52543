//! The internal prover: validity of `hypotheses ==> goal` in quantifier-free
//! linear arithmetic over the rationals, with nonlinear terms abstracted to
//! fresh symbols and two sign rules for division.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::fm::{self, Constraint, Rel};
use super::poly::{Monomial, Poly};
use super::simplify::simplify;
use crate::logic::{eval_bool, ArithOp, CmpOp, NumericMode, Sort, Tag, Term, Value, Var};
use crate::vcgen::{HypKind, Obligation};

/// Obligations larger than this (in term nodes) are not attempted.
pub const MAX_FORMULA_SIZE: usize = 200_000;
/// Case-split leaves explored before giving up.
pub const MAX_BRANCHES: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ProofStatus {
    ProvedInternal { rules: Vec<String> },
    Unknown { reason: String },
    Refuted {
        #[serde(skip)]
        counterexample: Vec<(String, Value)>,
    },
}

impl ProofStatus {
    pub fn is_proved(&self) -> bool {
        matches!(self, ProofStatus::ProvedInternal { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProofStatus::ProvedInternal { .. } => "proved-internal",
            ProofStatus::Unknown { .. } => "unknown",
            ProofStatus::Refuted { .. } => "refuted",
        }
    }
}

/// Negation normal form over literals.
#[derive(Clone, Debug)]
enum N {
    Const(bool),
    /// Opaque proposition with polarity.
    Atom(Term, bool),
    /// Numeric comparison.
    Cmp(CmpOp, Term, Term),
    And(Vec<N>),
    Or(Vec<N>),
}

fn nnf(t: &Term, pos: bool) -> N {
    match t {
        Term::Bool(b) => N::Const(*b == pos),
        Term::Not(a) => nnf(a, !pos),
        Term::And(ps) | Term::Or(ps) => {
            let parts = ps.iter().map(|p| nnf(p, pos)).collect();
            if matches!(t, Term::And(_)) == pos {
                N::And(parts)
            } else {
                N::Or(parts)
            }
        }
        Term::Implies(a, b) => {
            if pos {
                N::Or(vec![nnf(a, false), nnf(b, true)])
            } else {
                N::And(vec![nnf(a, true), nnf(b, false)])
            }
        }
        Term::Cmp(op, a, b) if a.sort().is_numeric() => N::Cmp(if pos { *op } else { op.negate() }, (**a).clone(), (**b).clone()),
        Term::Cmp(op, a, b) if a.sort() == Sort::Bool => {
            // a == b  is  (a && b) || (!a && !b)
            let eq = (*op == CmpOp::Eq) == pos;
            let both = |x: bool, y: bool| N::And(vec![nnf(a, x), nnf(b, y)]);
            if eq {
                N::Or(vec![both(true, true), both(false, false)])
            } else {
                N::Or(vec![both(true, false), both(false, true)])
            }
        }
        Term::Cmp(op, a, b) => {
            let atom = Term::cmp(CmpOp::Eq, (**a).clone(), (**b).clone());
            N::Atom(atom, pos == (*op == CmpOp::Eq))
        }
        t => N::Atom(t.clone(), pos),
    }
}

#[derive(Clone, Debug, Default)]
struct Branch {
    atoms: BTreeMap<Term, bool>,
    cmps: Vec<(CmpOp, Term, Term)>,
}

enum Search {
    Closed,
    Open(Box<Branch>, BTreeMap<Monomial, BigRational>),
    Limit(&'static str),
}

struct Prover {
    leaves: usize,
    used_division: bool,
    nonlinear: bool,
}

/// Indexes monomials as solver variables.
#[derive(Default)]
struct Table {
    index: BTreeMap<Monomial, usize>,
}

impl Table {
    fn constraint(&mut self, p: &Poly, rel: Rel) -> Constraint {
        let mut coeffs = BTreeMap::new();
        let mut constant = BigRational::zero();
        for (m, c) in &p.terms {
            if m.is_empty() {
                constant = c.clone();
            } else {
                let n = self.index.len();
                let k = *self.index.entry(m.clone()).or_insert(n);
                coeffs.insert(k, c.clone());
            }
        }
        Constraint { coeffs, constant, rel }
    }
}

fn is_int(t: &Term) -> bool {
    t.sort() == Sort::Int
}

/// Constraints for `p op 0`, or `None` for `!=`.
fn rel_constraints(op: CmpOp, p: &Poly, integral: bool) -> Option<Vec<(Poly, Rel)>> {
    let neg = p.scale(&-BigRational::one());
    let one = Poly::constant(BigRational::one());
    Some(match op {
        CmpOp::Eq => vec![(p.clone(), Rel::Eq)],
        CmpOp::Le => vec![(p.clone(), Rel::Le)],
        CmpOp::Ge => vec![(neg, Rel::Le)],
        CmpOp::Lt if integral => vec![(p.add(&one), Rel::Le)],
        CmpOp::Gt if integral => vec![(neg.add(&one), Rel::Le)],
        CmpOp::Lt => vec![(p.clone(), Rel::Lt)],
        CmpOp::Gt => vec![(neg, Rel::Lt)],
        CmpOp::Ne => return None,
    })
}

fn eval_poly(p: &Poly, model: &BTreeMap<Monomial, BigRational>) -> BigRational {
    let mut acc = BigRational::zero();
    for (m, c) in &p.terms {
        let v = if m.is_empty() { BigRational::one() } else { model.get(m).cloned().unwrap_or_else(BigRational::zero) };
        acc += c * v;
    }
    acc
}

fn divisions(m: &Monomial, out: &mut BTreeSet<Term>) {
    for t in m {
        t.visit(&mut |s| {
            if let Term::Arith(ArithOp::Div, _, _) = s {
                out.insert(s.clone());
            }
        });
    }
}

impl Prover {
    fn search(&mut self, mut todo: Vec<N>, mut br: Branch) -> Search {
        loop {
            let item = match todo.iter().position(|n| !matches!(n, N::Or(_))) {
                Some(i) => todo.swap_remove(i),
                None => match todo.pop() {
                    Some(N::Or(ds)) => return self.split(ds, todo, br),
                    Some(_) => unreachable!(),
                    None => return self.leaf(&br),
                },
            };
            match item {
                N::Const(true) => {}
                N::Const(false) => return Search::Closed,
                N::Atom(t, p) => match br.atoms.get(&t) {
                    Some(q) if *q != p => return Search::Closed,
                    _ => {
                        br.atoms.insert(t, p);
                    }
                },
                N::Cmp(op, a, b) => {
                    if br.cmps.iter().any(|(o, x, y)| *o == op.negate() && *x == a && *y == b) {
                        return Search::Closed;
                    }
                    br.cmps.push((op, a, b));
                }
                N::And(ps) => todo.extend(ps),
                N::Or(_) => unreachable!(),
            }
        }
    }

    fn split(&mut self, ds: Vec<N>, todo: Vec<N>, br: Branch) -> Search {
        let mut live = Vec::new();
        for d in ds {
            match &d {
                N::Const(true) => return self.search(todo, br),
                N::Const(false) => {}
                N::Atom(t, p) => match br.atoms.get(t) {
                    Some(q) if q == p => return self.search(todo, br),
                    Some(_) => {}
                    None => live.push(d),
                },
                _ => live.push(d),
            }
        }
        let mut limit = None;
        for d in live {
            if self.leaves >= MAX_BRANCHES {
                return Search::Limit("case split limit reached");
            }
            let mut next = todo.clone();
            next.push(d);
            match self.search(next, br.clone()) {
                Search::Closed => {}
                Search::Limit(r) => limit = Some(r),
                open => return open,
            }
        }
        match limit {
            Some(r) => Search::Limit(r),
            None => Search::Closed,
        }
    }

    fn leaf(&mut self, br: &Branch) -> Search {
        self.leaves += 1;
        let mut base: Vec<(Poly, Rel)> = Vec::new();
        let mut diseq: Vec<(Poly, bool)> = Vec::new();
        for (op, a, b) in &br.cmps {
            let p = Poly::of_term(a).sub(&Poly::of_term(b));
            if p.degree() > 1 || p.terms.keys().flatten().any(|t| !matches!(t, Term::Var(_))) {
                self.nonlinear = true;
            }
            let integral = is_int(a) && is_int(b) && p.integral();
            match rel_constraints(*op, &p, integral) {
                Some(cs) => base.extend(cs),
                None => diseq.push((p, integral)),
            }
        }
        self.arith(base, &diseq, br)
    }

    /// Decides the conjunction of `base` and the disequalities, splitting
    /// a disequality only when the current model violates it.
    fn arith(&mut self, base: Vec<(Poly, Rel)>, diseq: &[(Poly, bool)], br: &Branch) -> Search {
        let mut facts = base;
        let mut introduced: BTreeSet<(Term, u8)> = BTreeSet::new();
        loop {
            let model = match solve(&facts) {
                Ok(Some(m)) => m,
                Ok(None) => return Search::Closed,
                Err(r) => return Search::Limit(r),
            };
            // Division sign rules, added when their premises are entailed.
            let mut divs = BTreeSet::new();
            for m in model.keys() {
                divisions(m, &mut divs);
            }
            for (p, _) in &facts {
                for m in p.terms.keys() {
                    divisions(m, &mut divs);
                }
            }
            for (p, _) in diseq {
                for m in p.terms.keys() {
                    divisions(m, &mut divs);
                }
            }
            let added = match division_facts(&mut facts, divs, &mut introduced) {
                Ok(a) => a,
                Err(r) => return Search::Limit(r),
            };
            if added {
                self.used_division = true;
                continue;
            }
            let violated = diseq.iter().position(|(p, _)| eval_poly(p, &model).is_zero());
            let Some(k) = violated else {
                return Search::Open(Box::new(br.clone()), model);
            };
            let (p, integral) = &diseq[k];
            let rest: Vec<(Poly, bool)> = diseq.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, d)| d.clone()).collect();
            let mut limit = None;
            for op in [CmpOp::Lt, CmpOp::Gt] {
                if self.leaves >= MAX_BRANCHES {
                    return Search::Limit("case split limit reached");
                }
                self.leaves += 1;
                let mut f = facts.clone();
                f.extend(rel_constraints(op, p, *integral).unwrap());
                match self.arith(f, &rest, br) {
                    Search::Closed => {}
                    Search::Limit(r) => limit = Some(r),
                    open => return open,
                }
            }
            return match limit {
                Some(r) => Search::Limit(r),
                None => Search::Closed,
            };
        }
    }
}

/// Adds `x/y > 0` when `x > 0` and `y > 0` are entailed, and `x/y == 0`
/// when `x == 0` and `y != 0` are. Returns whether anything was added.
fn division_facts(facts: &mut Vec<(Poly, Rel)>, divs: BTreeSet<Term>, introduced: &mut BTreeSet<(Term, u8)>) -> Result<bool, &'static str> {
    let mut added = false;
    for d in divs {
        let Term::Arith(ArithOp::Div, x, y) = &d else { continue };
        let (px, py) = (Poly::of_term(x), Poly::of_term(y));
        let pd = Poly::atom(d.clone());
        if !introduced.contains(&(d.clone(), 0)) && entails(facts, &px, CmpOp::Gt)? && entails(facts, &py, CmpOp::Gt)? {
            facts.push((pd.scale(&-BigRational::one()), Rel::Lt));
            introduced.insert((d.clone(), 0));
            added = true;
        }
        if !introduced.contains(&(d.clone(), 1)) && entails(facts, &px, CmpOp::Eq)? && entails(facts, &py, CmpOp::Ne)? {
            facts.push((pd, Rel::Eq));
            introduced.insert((d.clone(), 1));
            added = true;
        }
    }
    Ok(added)
}

/// `Ok(None)` when unsatisfiable.
fn solve(facts: &[(Poly, Rel)]) -> Result<Option<BTreeMap<Monomial, BigRational>>, &'static str> {
    let mut table = Table::default();
    let cs: Vec<Constraint> = facts.iter().map(|(p, r)| table.constraint(p, *r)).collect();
    match fm::solve(cs) {
        fm::Outcome::Unsat => Ok(None),
        fm::Outcome::TooLarge => Err("linear constraint limit reached"),
        fm::Outcome::Sat(vals) => {
            let mut model = BTreeMap::new();
            for (m, k) in table.index {
                model.insert(m, vals.get(&k).cloned().unwrap_or_else(BigRational::zero));
            }
            Ok(Some(model))
        }
    }
}

/// Whether `facts` entail `p op 0` (for `op` in `>`, `==`, `!=`).
fn entails(facts: &[(Poly, Rel)], p: &Poly, op: CmpOp) -> Result<bool, &'static str> {
    let unsat_with = |extra: Vec<(Poly, Rel)>| -> Result<bool, &'static str> {
        let mut f = facts.to_vec();
        f.extend(extra);
        Ok(solve(&f)?.is_none())
    };
    let neg = p.scale(&-BigRational::one());
    match op {
        CmpOp::Gt => unsat_with(vec![(p.clone(), Rel::Le)]),
        CmpOp::Eq => Ok(unsat_with(vec![(p.clone(), Rel::Lt)])? && unsat_with(vec![(neg, Rel::Lt)])?),
        CmpOp::Ne => unsat_with(vec![(p.clone(), Rel::Eq)]),
        _ => Ok(false),
    }
}

/// Replaces the outer universal binders of `goal` by fresh constants and
/// moves implication antecedents into the hypotheses.
fn skolemize(goal: Term, hyps: &mut Vec<Term>, taken: &mut BTreeSet<String>) -> (Term, bool) {
    let mut goal = goal;
    let mut changed = false;
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
                    body = body.subst_var(&v, &Term::Var(Var::new(&name, Tag::Cur, v.sort, u32::MAX)));
                }
                goal = body;
                changed = true;
            }
            Term::Implies(a, b) if changed => {
                hyps.push(*a);
                goal = *b;
            }
            g => return (g, changed),
        }
    }
}

/// Tries to prove `ob` with the internal decision procedure.
pub fn prove_internal(ob: &Obligation) -> ProofStatus {
    let size = ob.goal.size() + ob.hypotheses.iter().map(|h| h.formula.size()).sum::<usize>();
    if size > MAX_FORMULA_SIZE {
        return ProofStatus::Unknown { reason: format!("formula too large ({size} nodes)") };
    }
    let mut rules = vec!["simplify".to_string()];
    let mut hyps: Vec<Term> = ob
        .hypotheses
        .iter()
        .filter(|h| h.kind != HypKind::Lemma)
        .map(|h| simplify(&h.formula))
        .filter(|h| !h.is_true())
        .collect();
    let goal = simplify(&ob.goal);
    if goal.is_true() || hyps.iter().any(Term::is_false) {
        return ProofStatus::ProvedInternal { rules };
    }
    let mut taken: BTreeSet<String> = ob.symbols().iter().map(|v| v.name.to_string()).collect();
    let (goal, skolemized) = skolemize(goal, &mut hyps, &mut taken);
    if skolemized {
        rules.push("skolemize".into());
    }
    let mut todo: Vec<N> = hyps.iter().map(|h| nnf(h, true)).collect();
    todo.push(nnf(&goal, false));
    let mut prover = Prover { leaves: 0, used_division: false, nonlinear: false };
    let outcome = stacker::maybe_grow(256 * 1024, 16 * 1024 * 1024, || prover.search(todo, Branch::default()));
    match outcome {
        Search::Closed => {
            rules.push(format!("case-split({})", prover.leaves));
            rules.push("fourier-motzkin".into());
            if prover.nonlinear {
                rules.push("nonlinear-abstraction".into());
            }
            if prover.used_division {
                rules.push("division-sign".into());
            }
            ProofStatus::ProvedInternal { rules }
        }
        Search::Limit(r) => ProofStatus::Unknown { reason: r.to_string() },
        Search::Open(br, model) => refute(&hyps, &goal, &br, &model, prover.nonlinear),
    }
}

fn refute(hyps: &[Term], goal: &Term, br: &Branch, model: &BTreeMap<Monomial, BigRational>, nonlinear: bool) -> ProofStatus {
    let unknown = |why: &str| {
        let base = if nonlinear {
            "no proof in the linear abstraction (nonlinear terms abstracted)"
        } else {
            "no proof in the linear fragment"
        };
        ProofStatus::Unknown { reason: format!("{base}; {why}") }
    };
    let mut symbols = goal.free_vars();
    for h in hyps {
        symbols.extend(h.free_vars());
    }
    if symbols.iter().any(|v| v.tag != Tag::Cur) {
        return unknown("no counterexample reported for obligations over loop or call symbols");
    }
    if symbols.iter().any(|v| v.sort.is_array()) {
        return unknown("no counterexample reported for obligations over arrays");
    }
    let mut assignment: Vec<(Var, Value)> = Vec::new();
    for v in &symbols {
        let value = match v.sort {
            Sort::Bool => Value::Bool(br.atoms.get(&Term::Var(v.clone())).copied().unwrap_or(false)),
            sort => {
                let q = model.get(&vec![Term::Var(v.clone())]).cloned().unwrap_or_else(BigRational::zero);
                if sort == Sort::Int {
                    Value::Int(q.floor().to_integer())
                } else {
                    Value::Rat(q)
                }
            }
        };
        assignment.push((v.clone(), value));
    }
    let env = |x: &Var| assignment.iter().find(|(v, _)| v.name == x.name && v.tag == x.tag).map(|(_, val)| val.clone());
    let hyps_hold = hyps.iter().all(|h| eval_bool(h, &env, NumericMode::Rational) == Ok(true));
    let goal_fails = eval_bool(goal, &env, NumericMode::Rational) == Ok(false);
    if hyps_hold && goal_fails {
        ProofStatus::Refuted { counterexample: assignment.into_iter().map(|(v, x)| (v.symbol(), x)).collect() }
    } else {
        unknown("candidate counterexample did not verify")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_source;
    use crate::vcgen::{generate_all, ObligationKind};

    fn prove_lemma(src: &str) -> ProofStatus {
        let u = check_source("t", src).unwrap();
        let set = generate_all(&u).unwrap();
        prove_internal(&set.obligations[0])
    }

    #[test]
    fn division_lemmas() {
        let pos = prove_lemma("/*@ lemma double_div_pos: \\forall real x y; x > 0 && y > 0 ==> x / y > 0; @*/");
        assert!(pos.is_proved(), "{pos:?}");
        let zero = prove_lemma("/*@ lemma double_div_zero: \\forall real x y; x == 0.0 && y > 0 ==> x / y == 0.0; @*/");
        assert!(zero.is_proved(), "{zero:?}");
    }

    #[test]
    fn linear_goal() {
        let s = prove_lemma("/*@ lemma l: \\forall real x y; x > 0 && y > 0 ==> x + y > 0; @*/");
        assert!(s.is_proved());
    }

    #[test]
    fn false_lemma_is_refuted() {
        let s = prove_lemma("/*@ lemma l: \\forall real x y; x > 0 ==> x + y > 0; @*/");
        let ProofStatus::Refuted { counterexample } = s else { panic!("{s:?}") };
        assert_eq!(counterexample.len(), 2);
    }

    #[test]
    fn nonlinear_lemma_is_unknown() {
        let s = prove_lemma("/*@ lemma l: \\forall real x; x * x >= 0.0; @*/");
        assert!(matches!(s, ProofStatus::Unknown { .. }), "{s:?}");
    }

    #[test]
    fn integer_strengthening() {
        let s = prove_lemma("/*@ lemma l: \\forall integer i n; i < n ==> i + 1 <= n; @*/");
        assert!(s.is_proved(), "{s:?}");
    }

    #[test]
    fn loop_obligations() {
        let u = check_source(
            "t",
            "/*@ requires n >= 0; ensures \\result == n; @*/
             int f(int n) {
                 int i = 0;
                 /*@ loop_invariant 0 <= i && i <= n;
                   @ loop_variant n - i; @*/
                 while (i < n) { i = i + 1; }
                 return i;
             }",
        )
        .unwrap();
        let set = generate_all(&u).unwrap();
        for ob in &set.obligations {
            assert!(prove_internal(ob).is_proved(), "{} {:?}", ob.id, ob.origin.kind);
        }
        assert!(set.obligations.iter().any(|o| o.origin.kind == ObligationKind::VariantDecrease));
    }
}
