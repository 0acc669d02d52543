//! Weakest-precondition generation.
//!
//! A method body is turned into a verification-condition tree whose leaves
//! are goals tagged with the rule that produced them. Splitting the tree
//! yields one [`Obligation`] per leaf, with the assumptions on its path as
//! hypotheses.

mod trace;

use std::cell::{Cell, RefCell};
use std::collections::BTreeSet;

use serde::Serialize;

use crate::check::{assigned_vars, IrKind, IrStmt, SpecClause, TypedMethod, TypedUnit};
use crate::logic::{ArithOp, CmpOp, Sort, Tag, Term, Var};
use crate::syntax::ast::Pos;

pub use trace::{instantiate_on_trace, InstanceVerdict, ObligationTraceResult, TraceError, TraceValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObligationKind {
    Ensures,
    Behaviour,
    InvariantInit,
    InvariantPreserve,
    VariantNonneg,
    VariantDecrease,
    Assert,
    CallRequires,
    DivisionGuard,
    BoundsGuard,
    Lemma,
}

impl ObligationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObligationKind::Ensures => "ensures",
            ObligationKind::Behaviour => "behaviour",
            ObligationKind::InvariantInit => "invariant-init",
            ObligationKind::InvariantPreserve => "invariant-preserve",
            ObligationKind::VariantNonneg => "variant-nonneg",
            ObligationKind::VariantDecrease => "variant-decrease",
            ObligationKind::Assert => "assert",
            ObligationKind::CallRequires => "call-requires",
            ObligationKind::DivisionGuard => "division-guard",
            ObligationKind::BoundsGuard => "bounds-guard",
            ObligationKind::Lemma => "lemma",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObligationStatus {
    Unknown,
    ProvedInternal,
    Exported,
    TraceValidated,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Origin {
    /// Method name, or the lemma name for lemma obligations.
    pub method: String,
    pub line: u32,
    pub column: u32,
    pub kind: ObligationKind,
    /// Behaviour name or callee, where relevant.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loop_id: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypKind {
    Requires,
    Assumes,
    /// Path conditions, loop invariants at havoc points, call postconditions
    /// and assertions already established.
    Context,
    Lemma,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypothesis {
    pub kind: HypKind,
    pub formula: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    pub id: String,
    pub name: String,
    pub origin: Origin,
    pub hypotheses: Vec<Hypothesis>,
    pub goal: Term,
    pub status: ObligationStatus,
    /// Renamings of the method's first-pass do-loop bodies.
    pub first_pass: Vec<FirstPass>,
}

/// Whether a renamed id names a loop or a call site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    Loop,
    Call,
}

/// The body of a do-loop appears twice in the verification condition: once
/// for the pass before the first head and once per iteration. Loops and
/// calls of the first copy get fresh ids, so `to` stands for site `from`
/// when it is reached before the first head of `do_loop`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstPass {
    pub do_loop: u32,
    pub kind: SiteKind,
    pub from: u32,
    pub to: u32,
}

impl Obligation {
    /// `hyp_1 && ... && hyp_n ==> goal`.
    pub fn formula(&self) -> Term {
        let hyps: Vec<Term> = self.hypotheses.iter().map(|h| h.formula.clone()).collect();
        if hyps.is_empty() {
            self.goal.clone()
        } else {
            Term::implies(Term::and(hyps), self.goal.clone())
        }
    }

    /// Free symbols of hypotheses and goal, in a fixed order.
    pub fn symbols(&self) -> BTreeSet<Var> {
        let mut out = self.goal.free_vars();
        for h in &self.hypotheses {
            out.extend(h.formula.free_vars());
        }
        out
    }

    /// Ids of the loops whose head state the obligation quantifies over.
    pub fn havoc_loops(&self) -> BTreeSet<u32> {
        self.symbols().iter().filter_map(|v| if let Tag::Havoc(k) = v.tag { Some(k) } else { None }).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObligationSet {
    pub unit: String,
    pub unit_digest: String,
    /// The method the set was generated for; `None` for a whole unit.
    pub method: Option<String>,
    pub obligations: Vec<Obligation>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum VcError {
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("recursive call from `{caller}` to `{callee}` has no modular contract semantics")]
    RecursiveCall { caller: String, callee: String },
}

#[derive(Clone, Debug)]
struct GoalInfo {
    kind: ObligationKind,
    pos: Pos,
    label: Option<String>,
    loop_id: Option<u32>,
}

/// Verification-condition tree.
#[derive(Clone, Debug)]
enum Vc {
    Goal(Term, GoalInfo),
    And(Vec<Vc>),
    Assume(Term, HypKind, Box<Vc>),
    /// Universally quantified havoc symbols; obligations are closed over
    /// their free symbols, so splitting drops the binder.
    Forall(Vec<Var>, Box<Vc>),
}

impl Vc {
    fn tt() -> Vc {
        Vc::And(Vec::new())
    }

    fn and(parts: Vec<Vc>) -> Vc {
        let mut out = Vec::new();
        for p in parts {
            match p {
                Vc::And(inner) => out.extend(inner),
                p => out.push(p),
            }
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Vc::And(out)
        }
    }

    fn assume(h: Term, kind: HypKind, body: Vc) -> Vc {
        if h.is_true() {
            return body;
        }
        match body {
            Vc::And(ref parts) if parts.is_empty() => body,
            body => Vc::Assume(h, kind, Box::new(body)),
        }
    }

    fn subst(&self, f: &dyn Fn(&Var) -> Option<Term>) -> Vc {
        match self {
            Vc::Goal(t, info) => Vc::Goal(t.subst(f), info.clone()),
            Vc::And(parts) => Vc::And(parts.iter().map(|p| p.subst(f)).collect()),
            Vc::Assume(h, k, body) => Vc::Assume(h.subst(f), *k, Box::new(body.subst(f))),
            Vc::Forall(vs, body) => Vc::Forall(vs.clone(), Box::new(body.subst(f))),
        }
    }

    fn subst_var(&self, var: &Var, by: &Term) -> Vc {
        self.subst(&|v| (v == var).then(|| by.clone()))
    }

    fn to_formula(&self) -> Term {
        match self {
            Vc::Goal(t, _) => t.clone(),
            Vc::And(parts) => Term::and(parts.iter().map(Vc::to_formula).collect()),
            Vc::Assume(h, _, body) => Term::implies(h.clone(), body.to_formula()),
            Vc::Forall(vs, body) => Term::Forall(vs.clone(), Box::new(body.to_formula())),
        }
    }
}

fn goal(t: Term, kind: ObligationKind, pos: Pos) -> Vc {
    Vc::Goal(t, GoalInfo { kind, pos, label: None, loop_id: None })
}

fn is_nonzero_literal(t: &Term) -> bool {
    match t {
        Term::Int(i) => i.sign() != num_bigint::Sign::NoSign,
        Term::Real(q) => q.numer().sign() != num_bigint::Sign::NoSign,
        Term::ToReal(a) | Term::Neg(a) => is_nonzero_literal(a),
        _ => false,
    }
}

/// Guard obligations for the partial operations of a program expression,
/// respecting short-circuit evaluation of `&&`, `||` and `==>`.
fn guards(t: &Term, pos: Pos) -> Vc {
    let mut out = Vec::new();
    guards_into(t, pos, &mut out);
    Vc::and(out)
}

fn guards_into(t: &Term, pos: Pos, out: &mut Vec<Vc>) {
    match t {
        Term::Arith(ArithOp::Div, a, b) => {
            guards_into(a, pos, out);
            guards_into(b, pos, out);
            if !is_nonzero_literal(b) {
                let zero = Term::zero(b.sort());
                out.push(goal(Term::cmp(CmpOp::Ne, (**b).clone(), zero), ObligationKind::DivisionGuard, pos));
            }
        }
        Term::Select(a, i) => {
            guards_into(a, pos, out);
            guards_into(i, pos, out);
            let static_ok = match (&**a, &**i) {
                (Term::ArrayLit(_, items), Term::Int(k)) => k.sign() != num_bigint::Sign::Minus && *k < items.len().into(),
                _ => false,
            };
            if !static_ok {
                out.push(goal(bounds((**a).clone(), (**i).clone()), ObligationKind::BoundsGuard, pos));
            }
        }
        Term::And(parts) | Term::Or(parts) => {
            let is_and = matches!(t, Term::And(_));
            for (k, p) in parts.iter().enumerate() {
                let g = guards(p, pos);
                let before: Vec<Term> = parts[..k]
                    .iter()
                    .map(|q| if is_and { q.clone() } else { Term::not(q.clone()) })
                    .collect();
                out.push(Vc::assume(Term::and(before), HypKind::Context, g));
            }
        }
        Term::Implies(a, b) => {
            guards_into(a, pos, out);
            out.push(Vc::assume((**a).clone(), HypKind::Context, guards(b, pos)));
        }
        Term::Forall(..) => {}
        _ => {
            for c in t.children() {
                guards_into(c, pos, out);
            }
        }
    }
    out.retain(|v| !matches!(v, Vc::And(p) if p.is_empty()));
}

fn bounds(a: Term, i: Term) -> Term {
    Term::and(vec![Term::cmp(CmpOp::Le, Term::int(0), i.clone()), Term::cmp(CmpOp::Lt, i, Term::length(a))])
}

struct Wp<'a> {
    unit: &'a TypedUnit,
    method: &'a TypedMethod,
    next_id: Cell<u32>,
    first_pass: RefCell<Vec<FirstPass>>,
}

impl<'a> Wp<'a> {
    fn new(unit: &'a TypedUnit, method: &'a TypedMethod) -> Self {
        fn max_id(stmts: &[IrStmt]) -> u32 {
            stmts
                .iter()
                .map(|s| match &s.kind {
                    IrKind::Loop { id, body, .. } => (*id).max(max_id(body)),
                    IrKind::Call { id, .. } => *id,
                    IrKind::If { then_b, else_b, .. } => max_id(then_b).max(max_id(else_b)),
                    _ => 0,
                })
                .max()
                .unwrap_or(0)
        }
        Wp { unit, method, next_id: Cell::new(max_id(&method.body) + 1), first_pass: RefCell::new(Vec::new()) }
    }

    /// A copy of the body of do-loop `do_loop` with fresh loop and call ids.
    fn first_pass_copy(&self, do_loop: u32, stmts: &[IrStmt]) -> Vec<IrStmt> {
        let fresh = |kind: SiteKind, from: u32| -> u32 {
            let to = self.next_id.get();
            self.next_id.set(to + 1);
            self.first_pass.borrow_mut().push(FirstPass { do_loop, kind, from, to });
            to
        };
        stmts
            .iter()
            .map(|s| {
                let kind = match &s.kind {
                    IrKind::Loop { id, do_while, cond, invariant, variant, body } => IrKind::Loop {
                        id: fresh(SiteKind::Loop, *id),
                        do_while: *do_while,
                        cond: cond.clone(),
                        invariant: invariant.clone(),
                        variant: variant.clone(),
                        body: self.first_pass_copy(do_loop, body),
                    },
                    IrKind::Call { target, method, args, id } => IrKind::Call {
                        target: target.clone(),
                        method: method.clone(),
                        args: args.clone(),
                        id: fresh(SiteKind::Call, *id),
                    },
                    IrKind::If { cond, then_b, else_b } => IrKind::If {
                        cond: cond.clone(),
                        then_b: self.first_pass_copy(do_loop, then_b),
                        else_b: self.first_pass_copy(do_loop, else_b),
                    },
                    k => k.clone(),
                };
                IrStmt { kind, pos: s.pos }
            })
            .collect()
    }

    /// `wp(stmts, normal)` where `ret` is the condition a `return` must
    /// establish (with `\result` free).
    fn block(&self, stmts: &[IrStmt], normal: Vc, ret: &Vc) -> Vc {
        let mut post = normal;
        for s in stmts.iter().rev() {
            post = self.stmt(s, post, ret);
        }
        post
    }

    fn stmt(&self, s: &IrStmt, post: Vc, ret: &Vc) -> Vc {
        let pos = s.pos;
        match &s.kind {
            IrKind::Assign { var, value, .. } => Vc::and(vec![guards(value, pos), post.subst_var(var, value)]),
            IrKind::Store { var, index, value, .. } => {
                let stored = Term::store(Term::Var(var.clone()), index.clone(), value.clone());
                Vc::and(vec![
                    guards(index, pos),
                    guards(value, pos),
                    goal(bounds(Term::Var(var.clone()), index.clone()), ObligationKind::BoundsGuard, pos),
                    post.subst_var(var, &stored),
                ])
            }
            IrKind::If { cond, then_b, else_b } => {
                let t = self.block(then_b, post.clone(), ret);
                let e = self.block(else_b, post, ret);
                Vc::and(vec![
                    guards(cond, pos),
                    Vc::assume(cond.clone(), HypKind::Context, t),
                    Vc::assume(Term::not(cond.clone()), HypKind::Context, e),
                ])
            }
            IrKind::Return(e) => match (e, self.method.result_var()) {
                (Some(e), Some(r)) => Vc::and(vec![guards(e, pos), ret.subst_var(&r, e)]),
                _ => ret.clone(),
            },
            IrKind::Assert(c) => Vc::and(vec![
                goal(c.formula.clone(), ObligationKind::Assert, c.pos),
                Vc::assume(c.formula.clone(), HypKind::Context, post),
            ]),
            IrKind::Call { target, method, args, id } => self.call(*id, target.as_ref(), method, args, pos, post),
            IrKind::Loop { id, do_while, cond, invariant, variant, body } => {
                let lp = self.while_loop(*id, cond, invariant, variant.as_ref(), body, post, ret, pos);
                if *do_while {
                    self.block(&self.first_pass_copy(*id, body), lp, ret)
                } else {
                    lp
                }
            }
        }
    }

    fn call(&self, id: u32, target: Option<&Var>, callee: &str, args: &[Term], pos: Pos, post: Vc) -> Vc {
        let m = self.unit.method(callee).expect("typechecked call");
        // Pre-state: parameters are the actual arguments. Post-state:
        // parameters are fresh final-value symbols.
        let pre = |v: &Var| -> Option<Term> {
            if v.tag == Tag::Cur || v.tag == Tag::Old {
                m.params.iter().position(|p| p.slot == v.slot).map(|k| args[k].clone())
            } else {
                None
            }
        };
        let after = |v: &Var| -> Option<Term> {
            match v.tag {
                Tag::Old => m.params.iter().position(|p| p.slot == v.slot).map(|k| args[k].clone()),
                Tag::Cur => Some(Term::Var(v.with_tag(Tag::CallResult(id)))),
                Tag::Result => Some(Term::Var(Var::new("result", Tag::CallResult(id), v.sort, 0))),
                _ => None,
            }
        };
        let mut facts: Vec<Term> = m.ensures.iter().map(|c| c.formula.subst(&after)).collect();
        for b in &m.behaviours {
            if let Some(e) = &b.ensures {
                let e = e.formula.subst(&after);
                match &b.assumes {
                    Some(a) => facts.push(Term::implies(a.formula.subst(&pre), e)),
                    None => facts.push(e),
                }
            }
        }
        let requires = Term::and(m.requires.iter().map(|c| c.formula.subst(&pre)).collect());
        let mut cont = post;
        if let (Some(t), Some(sort)) = (target, m.ret) {
            cont = cont.subst_var(t, &Term::Var(Var::new("result", Tag::CallResult(id), sort, 0)));
        }
        let mut req = goal(requires, ObligationKind::CallRequires, pos);
        if let Vc::Goal(_, info) = &mut req {
            info.label = Some(callee.to_string());
        }
        let mut parts: Vec<Vc> = args.iter().map(|a| guards(a, pos)).collect();
        parts.push(req);
        parts.push(Vc::assume(Term::and(facts), HypKind::Context, cont));
        Vc::and(parts)
    }

    #[allow(clippy::too_many_arguments)]
    fn while_loop(&self, id: u32, cond: &Term, inv: &SpecClause, variant: Option<&SpecClause>, body: &[IrStmt], post: Vc, ret: &Vc, pos: Pos) -> Vc {
        let info = |kind, p: Pos| GoalInfo { kind, pos: p, label: None, loop_id: Some(id) };
        let assigned = assigned_vars(body);
        let havoc: Vec<Var> = assigned.iter().map(|(v, _)| v.with_tag(Tag::Havoc(id))).collect();
        let sigma = |v: &Var| -> Option<Term> {
            if v.tag == Tag::Cur && assigned.iter().any(|(a, _)| a.slot == v.slot) {
                Some(Term::Var(v.with_tag(Tag::Havoc(id))))
            } else {
                None
            }
        };
        // Arrays that are only stored into keep their length.
        let lengths: Vec<Term> = assigned
            .iter()
            .filter(|(v, whole)| !whole && v.sort.is_array())
            .map(|(v, _)| {
                Term::cmp(CmpOp::Eq, Term::length(Term::Var(v.with_tag(Tag::Havoc(id)))), Term::length(Term::Var(v.clone())))
            })
            .collect();

        let mut iteration = vec![Vc::Goal(inv.formula.clone(), info(ObligationKind::InvariantPreserve, inv.pos))];
        let mut nonneg = None;
        if let Some(v) = variant {
            let snap = Var::new("variant", Tag::Variant(id), Sort::Int, 0);
            let decrease = Term::cmp(CmpOp::Lt, v.formula.clone(), Term::Var(snap.clone()));
            iteration.push(Vc::Goal(decrease, info(ObligationKind::VariantDecrease, v.pos)));
            nonneg = Some(Vc::Goal(Term::cmp(CmpOp::Ge, v.formula.clone(), Term::int(0)), info(ObligationKind::VariantNonneg, v.pos)));
        }
        let mut step = self.block(body, Vc::and(iteration), ret);
        if let Some(v) = variant {
            let snap = Var::new("variant", Tag::Variant(id), Sort::Int, 0);
            step = step.subst_var(&snap, &v.formula);
        }
        let mut in_loop = Vec::new();
        in_loop.extend(nonneg);
        in_loop.push(step);
        let head = Vc::and(vec![
            guards(cond, pos),
            Vc::assume(cond.clone(), HypKind::Context, Vc::and(in_loop)),
            Vc::assume(Term::not(cond.clone()), HypKind::Context, post),
        ]);
        let head = Vc::assume(
            Term::and(lengths),
            HypKind::Context,
            Vc::assume(inv.formula.clone(), HypKind::Context, head).subst(&sigma),
        );
        let whole = Vc::and(vec![
            Vc::Goal(inv.formula.clone(), info(ObligationKind::InvariantInit, inv.pos)),
            Vc::Forall(havoc, Box::new(head)),
        ]);
        // At loop entry the entry snapshot is the current state.
        whole.subst(&|v: &Var| (v.tag == Tag::LoopEntry(id)).then(|| Term::Var(v.with_tag(Tag::Cur))))
    }

    /// VC tree of the whole method under its precondition.
    fn method_vc(&self) -> Vc {
        let m = self.method;
        let mut posts = Vec::new();
        for c in &m.ensures {
            posts.push(goal(c.formula.clone(), ObligationKind::Ensures, c.pos));
        }
        for b in &m.behaviours {
            if let Some(e) = &b.ensures {
                let g = Vc::Goal(e.formula.clone(), GoalInfo { kind: ObligationKind::Behaviour, pos: e.pos, label: Some(b.name.clone()), loop_id: None });
                let assumes = b.assumes.as_ref().map(|a| a.formula.retag(Tag::Cur, Tag::Old)).unwrap_or_else(Term::tt);
                posts.push(Vc::assume(assumes, HypKind::Assumes, g));
            }
        }
        let ret = Vc::and(posts);
        let normal = if m.ret.is_none() { ret.clone() } else { Vc::tt() };
        let body = self.block(&m.body, normal, &ret);
        Vc::assume(m.requires_formula(), HypKind::Requires, body)
    }
}

fn check_recursion(unit: &TypedUnit, method: &TypedMethod) -> Result<(), VcError> {
    fn visit<'u>(unit: &'u TypedUnit, m: &'u TypedMethod, stack: &mut Vec<&'u str>) -> Result<(), VcError> {
        for c in &m.calls {
            if stack.contains(&c.callee.as_str()) {
                return Err(VcError::RecursiveCall { caller: m.name.clone(), callee: c.callee.clone() });
            }
            if let Some(callee) = unit.method(&c.callee) {
                stack.push(&callee.name);
                visit(unit, callee, stack)?;
                stack.pop();
            }
        }
        Ok(())
    }
    visit(unit, method, &mut vec![method.name.as_str()])
}

fn obligation_name(kind: ObligationKind, label: Option<&str>) -> String {
    match kind {
        ObligationKind::Ensures => "postcondition holds".into(),
        ObligationKind::Behaviour => format!("behaviour {} postcondition holds", label.unwrap_or("")),
        ObligationKind::InvariantInit => "loop invariant initially holds".into(),
        ObligationKind::InvariantPreserve => "loop invariant preserved".into(),
        ObligationKind::VariantNonneg => "loop variant non-negative".into(),
        ObligationKind::VariantDecrease => "loop variant decreases".into(),
        ObligationKind::Assert => "assertion holds".into(),
        ObligationKind::CallRequires => format!("precondition of {} holds", label.unwrap_or("callee")),
        ObligationKind::DivisionGuard => "divisor is nonzero".into(),
        ObligationKind::BoundsGuard => "array index in bounds".into(),
        ObligationKind::Lemma => format!("lemma {}", label.unwrap_or("")),
    }
}

fn split(vc: &Vc, hyps: &mut Vec<Hypothesis>, out: &mut Vec<(Vec<Hypothesis>, Term, GoalInfo)>) {
    match vc {
        Vc::Goal(t, info) => out.push((hyps.clone(), t.clone(), info.clone())),
        Vc::And(parts) => parts.iter().for_each(|p| split(p, hyps, out)),
        Vc::Assume(h, kind, body) => {
            let n = hyps.len();
            match h {
                Term::And(parts) => hyps.extend(parts.iter().map(|p| Hypothesis { kind: *kind, formula: p.clone() })),
                h => hyps.push(Hypothesis { kind: *kind, formula: h.clone() }),
            }
            split(body, hyps, out);
            hyps.truncate(n);
        }
        Vc::Forall(_, body) => split(body, hyps, out),
    }
}

fn lemma_obligations(unit: &TypedUnit) -> Vec<Obligation> {
    unit.lemmas
        .iter()
        .map(|l| Obligation {
            id: l.name.clone(),
            name: obligation_name(ObligationKind::Lemma, Some(&l.name)),
            origin: Origin {
                method: l.name.clone(),
                line: l.pos.line,
                column: l.pos.col,
                kind: ObligationKind::Lemma,
                label: None,
                loop_id: None,
            },
            hypotheses: Vec::new(),
            goal: l.statement.clone(),
            status: ObligationStatus::Unknown,
            first_pass: Vec::new(),
        })
        .collect()
}

fn method_obligations(unit: &TypedUnit, m: &TypedMethod) -> Result<Vec<Obligation>, VcError> {
    check_recursion(unit, m)?;
    let wp = Wp::new(unit, m);
    let vc = wp.method_vc();
    let first_pass = wp.first_pass.into_inner();
    let original = |id: u32| -> u32 {
        let mut id = id;
        while let Some(e) = first_pass.iter().find(|e| e.kind == SiteKind::Loop && e.to == id) {
            id = e.from;
        }
        id
    };
    let mut leaves = Vec::new();
    split(&vc, &mut Vec::new(), &mut leaves);
    let lemmas: Vec<Hypothesis> = unit.lemmas.iter().map(|l| Hypothesis { kind: HypKind::Lemma, formula: l.statement.clone() }).collect();
    let bind_old = |t: &Term| t.retag(Tag::Old, Tag::Cur);
    Ok(leaves
        .into_iter()
        .enumerate()
        .map(|(k, (hyps, g, info))| {
            let mut hypotheses: Vec<Hypothesis> = hyps
                .into_iter()
                .map(|h| Hypothesis { kind: h.kind, formula: bind_old(&h.formula) })
                .filter(|h| !h.formula.is_true())
                .collect();
            hypotheses.sort_by_key(|h| h.kind);
            hypotheses.extend(lemmas.iter().cloned());
            Obligation {
                id: format!("{}_po{}", m.name, k + 1),
                name: obligation_name(info.kind, info.label.as_deref()),
                origin: Origin {
                    method: m.name.clone(),
                    line: info.pos.line,
                    column: info.pos.col,
                    kind: info.kind,
                    label: info.label,
                    loop_id: info.loop_id.map(original),
                },
                hypotheses,
                goal: bind_old(&g),
                status: ObligationStatus::Unknown,
                first_pass: first_pass.clone(),
            }
        })
        .collect())
}

/// Obligations of one method followed by one obligation per unit lemma.
pub fn generate_obligations(unit: &TypedUnit, method: &str) -> Result<ObligationSet, VcError> {
    let m = unit.method(method).ok_or_else(|| VcError::UnknownMethod(method.to_string()))?;
    let mut obligations = method_obligations(unit, m)?;
    obligations.extend(lemma_obligations(unit));
    Ok(ObligationSet { unit: unit.name.clone(), unit_digest: unit.digest.clone(), method: Some(method.to_string()), obligations })
}

/// Lemma obligations followed by the obligations of every method in
/// declaration order.
pub fn generate_all(unit: &TypedUnit) -> Result<ObligationSet, VcError> {
    let mut obligations = lemma_obligations(unit);
    for m in &unit.methods {
        obligations.extend(method_obligations(unit, m)?);
    }
    Ok(ObligationSet { unit: unit.name.clone(), unit_digest: unit.digest.clone(), method: None, obligations })
}

/// The weakest precondition of `stmts` (statements of `method`) with respect
/// to `post`, as a single formula over the state before `stmts`. Guard
/// conditions are conjoined, so the result is false in states where the
/// statements would fault. Loops contribute universally quantified havoc
/// symbols, making the formula unevaluable; it is meant for loop-free code.
pub fn wp(unit: &TypedUnit, method: &TypedMethod, stmts: &[IrStmt], post: &Term) -> Term {
    let wp = Wp::new(unit, method);
    let q = goal(post.clone(), ObligationKind::Ensures, Pos::default());
    wp.block(stmts, q.clone(), &q).to_formula()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_source;

    fn kinds(set: &ObligationSet) -> Vec<ObligationKind> {
        set.obligations.iter().map(|o| o.origin.kind).collect()
    }

    #[test]
    fn translate_has_one_obligation() {
        let u = check_source(
            "t",
            "/*@ ensures \\result[0] == \\old(x) + dx && \\result[1] == \\old(y) + dy; @*/
             real[] translate(real x, real y, real dx, real dy) {
                 x = x + dx; y = y + dy; return new real[]{x, y};
             }",
        )
        .unwrap();
        let set = generate_obligations(&u, "translate").unwrap();
        assert_eq!(kinds(&set), vec![ObligationKind::Ensures]);
        assert_eq!(set.obligations[0].id, "translate_po1");
    }

    #[test]
    fn newton_step_has_division_guard() {
        let u = check_source(
            "t",
            "/*@ requires c >= 0.0 && t > 0.0 && t * t > c;
               @ ensures \\result * \\result > c; @*/
             real f(real c, real t) { t = (c / t + t) / 2.0; return t; }",
        )
        .unwrap();
        let set = generate_obligations(&u, "f").unwrap();
        assert_eq!(kinds(&set), vec![ObligationKind::DivisionGuard, ObligationKind::Ensures]);
        assert_eq!(set.obligations[0].goal.to_string(), "t != 0.0");
    }

    #[test]
    fn conditional_rule() {
        let u = check_source("t", "/*@ ensures l >= 0; @*/ void f(int j, int n, int l, int i) { if (j < n) l = i; }").unwrap();
        let set = generate_obligations(&u, "f").unwrap();
        assert_eq!(set.obligations.len(), 2);
        assert_eq!(set.obligations[0].hypotheses[0].formula.to_string(), "j < n");
        assert_eq!(set.obligations[0].goal.to_string(), "i >= 0");
        assert_eq!(set.obligations[1].hypotheses[0].formula.to_string(), "!(j < n)");
        assert_eq!(set.obligations[1].goal.to_string(), "l >= 0");
    }

    #[test]
    fn loop_obligations_use_havoc_symbols() {
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
        let set = generate_obligations(&u, "f").unwrap();
        assert_eq!(
            kinds(&set),
            vec![
                ObligationKind::InvariantInit,
                ObligationKind::VariantNonneg,
                ObligationKind::InvariantPreserve,
                ObligationKind::VariantDecrease,
                ObligationKind::Ensures,
            ]
        );
        let dec = &set.obligations[3];
        assert_eq!(dec.goal.to_string(), "n - (i@loop1 + 1) < n - i@loop1");
        assert_eq!(dec.havoc_loops().into_iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn recursion_is_rejected() {
        let u = check_source("t", "int f(int n) { int r = f(n); return r; }").unwrap();
        assert!(matches!(generate_obligations(&u, "f"), Err(VcError::RecursiveCall { .. })));
    }

    #[test]
    fn lemmas_are_obligations_and_hypotheses() {
        let u = check_source(
            "t",
            "/*@ lemma pos: \\forall real x y; x > 0.0 && y > 0.0 ==> x / y > 0.0; @*/
             /*@ ensures \\result > 0.0; @*/ real f() { return 1.0; }",
        )
        .unwrap();
        let set = generate_obligations(&u, "f").unwrap();
        assert_eq!(kinds(&set), vec![ObligationKind::Ensures, ObligationKind::Lemma]);
        assert_eq!(set.obligations[0].hypotheses.last().unwrap().kind, HypKind::Lemma);
        assert!(set.obligations[1].hypotheses.is_empty());
    }
}
