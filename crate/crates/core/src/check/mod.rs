//! Typechecking and lowering of MiniJML to the typed intermediate form.

mod ir;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

pub use ir::*;

use crate::logic::{ArithOp, CmpOp, Sort, StateLabel, Tag, Term, Var};
use crate::syntax::ast::*;
use crate::syntax::{self, ParseError};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct TypeError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Clone, Debug, thiserror::Error)]
pub enum CheckError {
    #[error("parse error at {0}")]
    Parse(ParseError),
    #[error("{} type error(s); first: {}", .0.len(), .0[0])]
    Type(Vec<TypeError>),
}

/// Parses and typechecks `text` as a unit called `name`.
pub fn check_source(name: &str, text: &str) -> Result<TypedUnit, CheckError> {
    let unit = syntax::parse_named(name, text).map_err(CheckError::Parse)?;
    typecheck(&unit).map_err(CheckError::Type)
}

pub fn unit_digest(unit: &SourceUnit) -> String {
    let text = syntax::pretty_print(unit);
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses a decimal or scientific literal exactly.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = exp - frac.len() as i64;
    let ten = BigInt::from(10);
    let mut q = BigRational::from_integer(digits);
    if scale >= 0 {
        q *= BigRational::from_integer(ten.pow(scale as u32));
    } else {
        q /= BigRational::from_integer(ten.pow((-scale) as u32));
    }
    Some(if neg { -q } else { q })
}

type Res<T> = Result<T, TypeError>;

fn err<T>(pos: Pos, message: impl Into<String>) -> Res<T> {
    Err(TypeError { line: pos.line, col: pos.col, message: message.into() })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Ordinary program code: no ghosts, no specification constructs.
    Program,
    /// Right-hand sides of ghost statements.
    Ghost,
    /// Annotations.
    Spec,
}

#[derive(Clone, Copy)]
struct Ctx {
    mode: Mode,
    in_old: bool,
    allow_old: bool,
    allow_result: bool,
    loop_entry: Option<u32>,
}

impl Ctx {
    fn program() -> Ctx {
        Ctx { mode: Mode::Program, in_old: false, allow_old: false, allow_result: false, loop_entry: None }
    }

    fn ghost() -> Ctx {
        Ctx { mode: Mode::Ghost, ..Ctx::program() }
    }

    fn spec() -> Ctx {
        Ctx { mode: Mode::Spec, ..Ctx::program() }
    }
}

struct Checker<'u> {
    unit: &'u SourceUnit,
    predicates: Vec<TypedPredicate>,
    errors: Vec<TypeError>,
}

struct MethodScope {
    vars: Vec<VarInfo>,
    scopes: Vec<HashMap<String, u32>>,
    binders: Vec<Var>,
    ret: Option<Sort>,
    loops: Vec<LoopInfo>,
    loop_stack: Vec<u32>,
    calls: Vec<CallInfo>,
    temps: u32,
    /// False for lemma and predicate bodies, which see no program state.
    has_state: bool,
}

impl MethodScope {
    fn empty() -> MethodScope {
        MethodScope {
            vars: Vec::new(),
            scopes: vec![HashMap::new()],
            binders: Vec::new(),
            ret: None,
            loops: Vec::new(),
            loop_stack: Vec::new(),
            calls: Vec::new(),
            temps: 0,
            has_state: false,
        }
    }

    fn lookup(&self, name: &str) -> Option<u32> {
        self.scopes.iter().rev().find_map(|s| s.get(name).copied())
    }

    fn declare(&mut self, name: &str, sort: Sort, kind: VarKind, pos: Pos) -> Res<Var> {
        if self.vars.iter().any(|v| v.name == name) {
            return err(pos, format!("variable `{name}` is already declared in this method"));
        }
        let slot = self.vars.len() as u32;
        self.vars.push(VarInfo { name: name.to_string(), sort, kind });
        self.scopes.last_mut().unwrap().insert(name.to_string(), slot);
        Ok(Var::new(name, Tag::Cur, sort, slot))
    }

    fn var(&self, slot: u32, tag: Tag) -> Var {
        let info = &self.vars[slot as usize];
        Var::new(&info.name, tag, info.sort, slot)
    }
}

/// Typechecks a parsed unit, collecting every error found.
pub fn typecheck(unit: &SourceUnit) -> Result<TypedUnit, Vec<TypeError>> {
    let mut c = Checker { unit, predicates: Vec::new(), errors: Vec::new() };
    c.check_names();
    for p in &unit.predicates {
        match c.predicate(p) {
            Ok(tp) => c.predicates.push(tp),
            Err(e) => c.errors.push(e),
        }
    }
    let mut lemmas = Vec::new();
    for l in &unit.lemmas {
        let mut scope = MethodScope::empty();
        match c.formula(&mut scope, &l.statement, Ctx::spec(), l.pos) {
            Ok(statement) => lemmas.push(TypedLemma { name: l.name.clone(), statement, pos: l.pos }),
            Err(e) => c.errors.push(e),
        }
    }
    let mut methods = Vec::new();
    for m in &unit.methods {
        if let Some(tm) = c.method(m) {
            methods.push(tm);
        }
    }
    if !c.errors.is_empty() {
        return Err(c.errors);
    }
    Ok(TypedUnit {
        name: unit.name.clone(),
        source: unit.clone(),
        digest: unit_digest(unit),
        predicates: c.predicates,
        lemmas,
        methods,
    })
}

fn widen(t: Term, from: Sort, to: Sort, pos: Pos, what: &str) -> Res<Term> {
    match (from, to) {
        (a, b) if a == b => Ok(t),
        (Sort::Int, Sort::Real) => Ok(Term::to_real(t)),
        (Sort::Real, Sort::Int) => err(pos, format!("{what}: cannot narrow real to int")),
        (a, b) => err(pos, format!("{what}: expected {b}, found {a}")),
    }
}

fn default_term(sort: Sort) -> Term {
    match sort {
        Sort::Int => Term::int(0),
        Sort::Real => Term::Real(BigRational::zero()),
        Sort::Bool => Term::ff(),
        Sort::IntArray => Term::ArrayLit(Sort::Int, vec![]),
        Sort::RealArray => Term::ArrayLit(Sort::Real, vec![]),
    }
}

impl Checker<'_> {
    fn check_names(&mut self) {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        let items = self
            .unit
            .predicates
            .iter()
            .map(|p| (&p.name, p.pos, "predicate"))
            .chain(self.unit.lemmas.iter().map(|l| (&l.name, l.pos, "lemma")))
            .chain(self.unit.methods.iter().map(|m| (&m.name, m.pos, "method")));
        for (name, pos, kind) in items {
            if let Some(prev) = seen.insert(name, kind) {
                self.errors.push(TypeError {
                    line: pos.line,
                    col: pos.col,
                    message: format!("{kind} `{name}` clashes with an earlier {prev} of the same name"),
                });
            }
        }
    }

    fn predicate(&mut self, p: &PredicateDecl) -> Res<TypedPredicate> {
        let mut scope = MethodScope::empty();
        let params: Vec<Var> = p.params.iter().map(|x| Var::bound(&x.name, x.ty)).collect();
        scope.binders.extend(params.iter().cloned());
        let body = self.formula(&mut scope, &p.body, Ctx::spec(), p.pos)?;
        Ok(TypedPredicate { name: p.name.clone(), params, body, pos: p.pos })
    }

    fn method(&mut self, m: &MethodDecl) -> Option<TypedMethod> {
        let mut scope = MethodScope::empty();
        scope.has_state = true;
        scope.ret = m.ret;
        let mut params = Vec::new();
        for p in &m.params {
            match scope.declare(&p.name, p.ty, VarKind::Param, m.pos) {
                Ok(v) => params.push(v),
                Err(e) => self.errors.push(e),
            }
        }
        let before = self.errors.len();
        let pre = Ctx::spec();
        let post = Ctx { allow_old: true, allow_result: m.ret.is_some(), ..Ctx::spec() };
        let mut clause = |c: &mut Self, cl: &Clause, ctx: Ctx| match c.formula(&mut scope, &cl.formula, ctx, cl.pos) {
            Ok(f) => Some(SpecClause { formula: f, pos: cl.pos }),
            Err(e) => {
                c.errors.push(e);
                None
            }
        };
        let requires: Vec<SpecClause> = m.spec.requires.iter().filter_map(|cl| clause(self, cl, pre)).collect();
        let ensures: Vec<SpecClause> = m.spec.ensures.iter().filter_map(|cl| clause(self, cl, post)).collect();
        let mut behaviours = Vec::new();
        for b in &m.spec.behaviours {
            let assumes = b.assumes.as_ref().and_then(|cl| clause(self, cl, pre));
            let ensures = b.ensures.as_ref().and_then(|cl| clause(self, cl, post));
            behaviours.push(TypedBehaviour { name: b.name.clone(), assumes, ensures, pos: b.pos });
        }
        let body = self.block(&mut scope, &m.body.stmts);
        if m.ret.is_some() && !always_returns(&body) {
            self.errors.push(TypeError {
                line: m.pos.line,
                col: m.pos.col,
                message: format!("method `{}` can finish without returning a value", m.name),
            });
        }
        if self.errors.len() > before {
            return None;
        }
        Some(TypedMethod {
            name: m.name.clone(),
            params,
            ret: m.ret,
            requires,
            ensures,
            behaviours,
            body,
            vars: scope.vars,
            loops: scope.loops,
            calls: scope.calls,
            pos: m.pos,
        })
    }

    fn block(&mut self, scope: &mut MethodScope, stmts: &[Stmt]) -> Vec<IrStmt> {
        scope.scopes.push(HashMap::new());
        let mut out = Vec::new();
        for s in stmts {
            if let Err(e) = self.stmt(scope, s, &mut out) {
                self.errors.push(e);
            }
        }
        scope.scopes.pop();
        out
    }

    fn sub_block(&mut self, scope: &mut MethodScope, s: &Stmt) -> Vec<IrStmt> {
        match &s.kind {
            StmtKind::Block(b) => self.block(scope, &b.stmts),
            _ => self.block(scope, std::slice::from_ref(s)),
        }
    }

    fn method_call(&mut self, scope: &mut MethodScope, name: &str, args: &[Expr], pos: Pos) -> Res<(u32, Vec<Term>, Option<Sort>)> {
        let Some(callee) = self.unit.method(name) else {
            return err(pos, format!("unknown method `{name}`"));
        };
        if callee.params.len() != args.len() {
            return err(pos, format!("`{name}` takes {} argument(s), {} given", callee.params.len(), args.len()));
        }
        let mut targs = Vec::new();
        for (a, p) in args.iter().zip(&callee.params) {
            let (t, s) = self.expr(scope, a, Ctx::program(), pos)?;
            targs.push(widen(t, s, p.ty, pos, &format!("argument `{}` of `{name}`", p.name))?);
        }
        let id = scope.calls.len() as u32 + 1;
        scope.calls.push(CallInfo { id, callee: name.to_string(), pos });
        Ok((id, targs, callee.ret))
    }

    fn is_method_call<'e>(&self, e: &'e Expr) -> Option<(&'e str, &'e [Expr])> {
        match e {
            Expr::Call(name, args) if self.unit.method(name).is_some() => Some((name, args)),
            _ => None,
        }
    }

    fn assign_value(&mut self, scope: &mut MethodScope, target: &Var, value: &Expr, pos: Pos, ctx: Ctx, out: &mut Vec<IrStmt>) -> Res<()> {
        if let Some((name, args)) = self.is_method_call(value) {
            if ctx.mode == Mode::Ghost {
                return err(pos, "ghost code cannot call methods");
            }
            let (id, args, ret) = self.method_call(scope, name, args, pos)?;
            let Some(ret) = ret else {
                return err(pos, format!("`{name}` returns no value"));
            };
            if ret != target.sort {
                let (from, to) = (ret, target.sort);
                return err(pos, format!("cannot assign the {from} result of `{name}` to `{}` of type {to}", target.name));
            }
            out.push(IrStmt { kind: IrKind::Call { target: Some(target.clone()), method: name.to_string(), args, id }, pos });
            return Ok(());
        }
        let (t, s) = self.expr(scope, value, ctx, pos)?;
        let t = widen(t, s, target.sort, pos, &format!("assignment to `{}`", target.name))?;
        out.push(IrStmt { kind: IrKind::Assign { var: target.clone(), value: t, ghost: ctx.mode == Mode::Ghost }, pos });
        Ok(())
    }

    fn target(&self, scope: &MethodScope, name: &str, ghost: bool, pos: Pos) -> Res<Var> {
        let Some(slot) = scope.lookup(name) else {
            return err(pos, format!("unknown variable `{name}`"));
        };
        let info = &scope.vars[slot as usize];
        let is_ghost = info.kind == VarKind::Ghost;
        if is_ghost && !ghost {
            return err(pos, format!("ghost variable `{name}` can only be assigned in ghost code"));
        }
        if !is_ghost && ghost {
            return err(pos, format!("ghost code cannot assign program variable `{name}`"));
        }
        Ok(scope.var(slot, Tag::Cur))
    }

    fn stmt(&mut self, scope: &mut MethodScope, s: &Stmt, out: &mut Vec<IrStmt>) -> Res<()> {
        let pos = s.pos;
        match &s.kind {
            StmtKind::Decl { ty, vars } => {
                for (name, init) in vars {
                    match init {
                        Some(e) => {
                            let v = Var::new(name, Tag::Cur, *ty, scope.vars.len() as u32);
                            // Type the initializer before the name is in scope.
                            let mut tmp = Vec::new();
                            self.assign_value(scope, &v, e, pos, Ctx::program(), &mut tmp)?;
                            let declared = scope.declare(name, *ty, VarKind::Local, pos)?;
                            for st in &mut tmp {
                                match &mut st.kind {
                                    IrKind::Assign { var, .. } => *var = declared.clone(),
                                    IrKind::Call { target, .. } => *target = Some(declared.clone()),
                                    _ => {}
                                }
                            }
                            out.extend(tmp);
                        }
                        None => {
                            let v = scope.declare(name, *ty, VarKind::Local, pos)?;
                            out.push(IrStmt { kind: IrKind::Assign { var: v, value: default_term(*ty), ghost: false }, pos });
                        }
                    }
                }
            }
            StmtKind::Assign { target, value } => {
                let v = self.target(scope, target, false, pos)?;
                self.assign_value(scope, &v, value, pos, Ctx::program(), out)?;
            }
            StmtKind::ArrayAssign { target, index, value } => {
                let v = self.target(scope, target, false, pos)?;
                self.store(scope, v, index, value, pos, Ctx::program(), out)?;
            }
            StmtKind::Call { method, args } => {
                if self.unit.method(method).is_none() {
                    return err(pos, format!("unknown method `{method}`"));
                }
                let (id, args, _) = self.method_call(scope, method, args, pos)?;
                out.push(IrStmt { kind: IrKind::Call { target: None, method: method.clone(), args, id }, pos });
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let cond = self.condition(scope, cond, pos)?;
                let then_b = self.sub_block(scope, then_branch);
                let else_b = else_branch.as_ref().map(|e| self.sub_block(scope, e)).unwrap_or_default();
                out.push(IrStmt { kind: IrKind::If { cond, then_b, else_b }, pos });
            }
            StmtKind::While { annot, cond, body } => self.lower_loop(scope, annot, cond, body, false, pos, out)?,
            StmtKind::DoWhile { annot, body, cond } => self.lower_loop(scope, annot, cond, body, true, pos, out)?,
            StmtKind::Return(value) => match (value, scope.ret) {
                (None, None) => out.push(IrStmt { kind: IrKind::Return(None), pos }),
                (None, Some(_)) => return err(pos, "missing return value"),
                (Some(_), None) => return err(pos, "void method cannot return a value"),
                (Some(e), Some(ret)) => {
                    if let Some((name, args)) = self.is_method_call(e) {
                        scope.temps += 1;
                        let tmp = scope.declare(&format!("ret${}", scope.temps), ret, VarKind::Temp, pos)?;
                        let (id, args, cret) = self.method_call(scope, name, args, pos)?;
                        let Some(cret) = cret else {
                            return err(pos, format!("`{name}` returns no value"));
                        };
                        let tmp = Var { sort: cret, ..tmp };
                        scope.vars[tmp.slot as usize].sort = cret;
                        out.push(IrStmt { kind: IrKind::Call { target: Some(tmp.clone()), method: name.to_string(), args, id }, pos });
                        let value = widen(Term::Var(tmp), cret, ret, pos, "return value")?;
                        out.push(IrStmt { kind: IrKind::Return(Some(value)), pos });
                    } else {
                        let (t, s) = self.expr(scope, e, Ctx::program(), pos)?;
                        let t = widen(t, s, ret, pos, "return value")?;
                        out.push(IrStmt { kind: IrKind::Return(Some(t)), pos });
                    }
                }
            },
            StmtKind::Assert(f) => {
                let ctx = Ctx { allow_old: true, ..Ctx::spec() };
                let formula = self.formula(scope, f, ctx, pos)?;
                out.push(IrStmt { kind: IrKind::Assert(SpecClause { formula, pos }), pos });
            }
            StmtKind::GhostDecl { ty, name, init } => {
                let value = match init {
                    Some(e) => {
                        let (t, s) = self.expr(scope, e, Ctx::ghost(), pos)?;
                        widen(t, s, *ty, pos, &format!("ghost `{name}`"))?
                    }
                    None => default_term(*ty),
                };
                let v = scope.declare(name, *ty, VarKind::Ghost, pos)?;
                out.push(IrStmt { kind: IrKind::Assign { var: v, value, ghost: true }, pos });
            }
            StmtKind::GhostAssign { target, index, value } => {
                let v = self.target(scope, target, true, pos)?;
                match index {
                    None => self.assign_value(scope, &v, value, pos, Ctx::ghost(), out)?,
                    Some(i) => self.store(scope, v, i, value, pos, Ctx::ghost(), out)?,
                }
            }
            StmtKind::Block(b) => {
                let inner = self.block(scope, &b.stmts);
                out.extend(inner);
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn store(&mut self, scope: &mut MethodScope, v: Var, index: &Expr, value: &Expr, pos: Pos, ctx: Ctx, out: &mut Vec<IrStmt>) -> Res<()> {
        let Some(elem) = v.sort.elem() else {
            return err(pos, format!("`{}` is not an array", v.name));
        };
        let (i, is) = self.expr(scope, index, ctx, pos)?;
        if is != Sort::Int {
            return err(pos, "array index must be an int");
        }
        let (t, s) = self.expr(scope, value, ctx, pos)?;
        let t = widen(t, s, elem, pos, &format!("element of `{}`", v.name))?;
        out.push(IrStmt { kind: IrKind::Store { var: v, index: i, value: t, ghost: ctx.mode == Mode::Ghost }, pos });
        Ok(())
    }

    fn condition(&mut self, scope: &mut MethodScope, e: &Expr, pos: Pos) -> Res<Term> {
        let (t, s) = self.expr(scope, e, Ctx::program(), pos)?;
        if s != Sort::Bool {
            return err(pos, format!("condition must be bool, found {s}"));
        }
        Ok(t)
    }

    #[allow(clippy::too_many_arguments)]
    fn lower_loop(&mut self, scope: &mut MethodScope, annot: &LoopAnnot, cond: &Expr, body: &Stmt, do_while: bool, pos: Pos, out: &mut Vec<IrStmt>) -> Res<()> {
        let id = scope.loops.len() as u32 + 1;
        scope.loops.push(LoopInfo { id, parent: scope.loop_stack.last().copied(), pos });
        let cond_t = self.condition(scope, cond, pos)?;
        let inv_ctx = Ctx { allow_old: true, loop_entry: Some(id), ..Ctx::spec() };
        let invariant = self.formula(scope, &annot.invariant, inv_ctx, annot.pos)?;
        let variant = match &annot.variant {
            Some(v) => {
                let (t, s) = self.expr(scope, v, Ctx::spec(), annot.pos)?;
                if s != Sort::Int {
                    return err(annot.pos, format!("loop variant must be an int, found {s}"));
                }
                Some(SpecClause { formula: t, pos: annot.pos })
            }
            None => None,
        };
        scope.loop_stack.push(id);
        let body = self.sub_block(scope, body);
        scope.loop_stack.pop();
        out.push(IrStmt {
            kind: IrKind::Loop {
                id,
                do_while,
                cond: cond_t,
                invariant: SpecClause { formula: invariant, pos: annot.pos },
                variant,
                body,
            },
            pos,
        });
        Ok(())
    }

    fn formula(&mut self, scope: &mut MethodScope, e: &Expr, ctx: Ctx, pos: Pos) -> Res<Term> {
        let (t, s) = self.expr(scope, e, ctx, pos)?;
        if s != Sort::Bool {
            return err(pos, format!("specification formula must be bool, found {s}"));
        }
        Ok(t)
    }

    fn spec_only(&self, ctx: Ctx, pos: Pos, what: &str) -> Res<()> {
        if ctx.mode == Mode::Spec {
            Ok(())
        } else {
            err(pos, format!("{what} may only appear in annotations"))
        }
    }

    fn expr(&mut self, scope: &mut MethodScope, e: &Expr, ctx: Ctx, pos: Pos) -> Res<(Term, Sort)> {
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.expr_inner(scope, e, ctx, pos))
    }

    fn numeric(&mut self, scope: &mut MethodScope, a: &Expr, b: &Expr, ctx: Ctx, pos: Pos, op: &str) -> Res<(Term, Term, Sort)> {
        let (x, xs) = self.expr(scope, a, ctx, pos)?;
        let (y, ys) = self.expr(scope, b, ctx, pos)?;
        if !xs.is_numeric() || !ys.is_numeric() {
            return err(pos, format!("`{op}` needs numeric operands, found {xs} and {ys}"));
        }
        if xs == Sort::Real || ys == Sort::Real {
            Ok((widen(x, xs, Sort::Real, pos, op)?, widen(y, ys, Sort::Real, pos, op)?, Sort::Real))
        } else {
            Ok((x, y, Sort::Int))
        }
    }

    fn comparison(&mut self, scope: &mut MethodScope, op: BinOp, x: (Term, Sort), y: (Term, Sort), pos: Pos) -> Res<Term> {
        let cop = match op {
            BinOp::Eq => CmpOp::Eq,
            BinOp::Ne => CmpOp::Ne,
            BinOp::Lt => CmpOp::Lt,
            BinOp::Le => CmpOp::Le,
            BinOp::Gt => CmpOp::Gt,
            _ => CmpOp::Ge,
        };
        let _ = scope;
        let ((x, xs), (y, ys)) = (x, y);
        if xs.is_numeric() && ys.is_numeric() {
            let s = if xs == Sort::Real || ys == Sort::Real { Sort::Real } else { Sort::Int };
            let x = widen(x, xs, s, pos, op.text())?;
            let y = widen(y, ys, s, pos, op.text())?;
            return Ok(Term::cmp(cop, x, y));
        }
        if xs == Sort::Bool && ys == Sort::Bool && matches!(cop, CmpOp::Eq | CmpOp::Ne) {
            return Ok(Term::cmp(cop, x, y));
        }
        err(pos, format!("cannot compare {xs} with {ys} using `{}`", op.text()))
    }

    fn expr_inner(&mut self, scope: &mut MethodScope, e: &Expr, ctx: Ctx, pos: Pos) -> Res<(Term, Sort)> {
        match e {
            Expr::Int(i) => Ok((Term::Int(i.clone()), Sort::Int)),
            Expr::Real(text) => match parse_decimal(text) {
                Some(q) => Ok((Term::Real(q), Sort::Real)),
                None => err(pos, format!("malformed number `{text}`")),
            },
            Expr::Bool(b) => Ok((Term::Bool(*b), Sort::Bool)),
            Expr::Var(name) => {
                if let Some(b) = scope.binders.iter().rev().find(|b| &*b.name == name) {
                    return Ok((Term::Var(b.clone()), b.sort));
                }
                let found = if scope.has_state { scope.lookup(name) } else { None };
                let Some(slot) = found else {
                    return err(pos, format!("unknown identifier `{name}`"));
                };
                let info = &scope.vars[slot as usize];
                if info.kind == VarKind::Ghost && ctx.mode == Mode::Program {
                    return err(pos, format!("program code cannot read ghost variable `{name}`"));
                }
                if ctx.in_old && info.kind != VarKind::Param {
                    return err(pos, format!("`{name}` does not exist in the pre-state (only parameters do)"));
                }
                let tag = if ctx.in_old { Tag::Old } else { Tag::Cur };
                Ok((Term::Var(scope.var(slot, tag)), info.sort))
            }
            Expr::Result => {
                self.spec_only(ctx, pos, "`\\result`")?;
                match (ctx.allow_result, scope.ret) {
                    (true, Some(s)) if !ctx.in_old => Ok((Term::Var(Var::new("result", Tag::Result, s, 0)), s)),
                    (_, None) if scope.has_state && ctx.allow_result => err(pos, "`\\result` used in a void method"),
                    _ => {
                        if scope.has_state && scope.ret.is_none() {
                            err(pos, "`\\result` used in a void method")
                        } else {
                            err(pos, "`\\result` is only allowed in ensures clauses")
                        }
                    }
                }
            }
            Expr::Unary(UnOp::Neg, a) => {
                let (t, s) = self.expr(scope, a, ctx, pos)?;
                if !s.is_numeric() {
                    return err(pos, format!("cannot negate {s}"));
                }
                Ok((
                    match t {
                        Term::Int(i) => Term::Int(-i),
                        Term::Real(q) => Term::Real(-q),
                        t => Term::Neg(Box::new(t)),
                    },
                    s,
                ))
            }
            Expr::Unary(UnOp::Not, a) => {
                let (t, s) = self.expr(scope, a, ctx, pos)?;
                if s != Sort::Bool {
                    return err(pos, format!("`!` needs a bool operand, found {s}"));
                }
                Ok((Term::not(t), Sort::Bool))
            }
            Expr::Binary(op, a, b) => match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                    let (x, y, s) = self.numeric(scope, a, b, ctx, pos, op.text())?;
                    let aop = match op {
                        BinOp::Add => ArithOp::Add,
                        BinOp::Sub => ArithOp::Sub,
                        BinOp::Mul => ArithOp::Mul,
                        _ => ArithOp::Div,
                    };
                    if aop == ArithOp::Div && s == Sort::Int {
                        return err(pos, "integer division is not supported; divide reals instead");
                    }
                    Ok((Term::arith(aop, x, y), s))
                }
                BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                    let x = self.expr(scope, a, ctx, pos)?;
                    let y = self.expr(scope, b, ctx, pos)?;
                    Ok((self.comparison(scope, *op, x, y, pos)?, Sort::Bool))
                }
                BinOp::And | BinOp::Or | BinOp::Implies => {
                    if *op == BinOp::Implies {
                        self.spec_only(ctx, pos, "`==>`")?;
                    }
                    let (x, xs) = self.expr(scope, a, ctx, pos)?;
                    let (y, ys) = self.expr(scope, b, ctx, pos)?;
                    if xs != Sort::Bool || ys != Sort::Bool {
                        return err(pos, format!("`{}` needs bool operands, found {xs} and {ys}", op.text()));
                    }
                    Ok((
                        match op {
                            BinOp::And => Term::And(vec![x, y]),
                            BinOp::Or => Term::Or(vec![x, y]),
                            _ => Term::implies(x, y),
                        },
                        Sort::Bool,
                    ))
                }
            },
            Expr::Chain(operands, ops) => {
                let mut typed = Vec::new();
                for o in operands {
                    typed.push(self.expr(scope, o, ctx, pos)?);
                }
                let mut parts = Vec::new();
                for (i, op) in ops.iter().enumerate() {
                    parts.push(self.comparison(scope, *op, typed[i].clone(), typed[i + 1].clone(), pos)?);
                }
                Ok((Term::And(parts), Sort::Bool))
            }
            Expr::Index(a, i) => {
                let (at, asort) = self.expr(scope, a, ctx, pos)?;
                let Some(elem) = asort.elem() else {
                    return err(pos, format!("cannot index a value of type {asort}"));
                };
                let (it, is) = self.expr(scope, i, ctx, pos)?;
                if is != Sort::Int {
                    return err(pos, format!("array index must be an int, found {is}"));
                }
                Ok((Term::select(at, it), elem))
            }
            Expr::Length(a) => {
                let (at, asort) = self.expr(scope, a, ctx, pos)?;
                if !asort.is_array() {
                    return err(pos, format!("`.length` applied to {asort}"));
                }
                Ok((Term::length(at), Sort::Int))
            }
            Expr::Call(name, args) => {
                if self.unit.method(name).is_some() {
                    return err(pos, format!("call to `{name}` must be the entire right-hand side of an assignment or return"));
                }
                let Some(p) = self.predicates.iter().find(|p| &p.name == name).cloned() else {
                    return err(pos, format!("unknown method or predicate `{name}`"));
                };
                self.spec_only(ctx, pos, "predicate applications")?;
                if p.params.len() != args.len() {
                    return err(pos, format!("predicate `{name}` takes {} argument(s), {} given", p.params.len(), args.len()));
                }
                let mut actuals = Vec::new();
                for (a, param) in args.iter().zip(&p.params) {
                    let (t, s) = self.expr(scope, a, ctx, pos)?;
                    actuals.push((param.clone(), widen(t, s, param.sort, pos, &format!("argument of `{name}`"))?));
                }
                let body = p.body.subst(&|v| actuals.iter().find(|(p, _)| p == v).map(|(_, t)| t.clone()));
                Ok((body, Sort::Bool))
            }
            Expr::Old(a) => {
                self.spec_only(ctx, pos, "`\\old`")?;
                if !ctx.allow_old {
                    return err(pos, "`\\old` is only allowed in ensures clauses, loop invariants and assertions");
                }
                self.expr(scope, a, Ctx { in_old: true, ..ctx }, pos)
            }
            Expr::Forall(ty, names, body) => {
                self.spec_only(ctx, pos, "quantifiers")?;
                let vars: Vec<Var> = names.iter().map(|n| Var::bound(n, *ty)).collect();
                let n = scope.binders.len();
                scope.binders.extend(vars.iter().cloned());
                let r = self.formula(scope, body, ctx, pos);
                scope.binders.truncate(n);
                Ok((Term::Forall(vars, Box::new(r?)), Sort::Bool))
            }
            Expr::Permut { from, to, args } => {
                self.spec_only(ctx, pos, "`Permut`")?;
                let [a, lo, hi] = &**args;
                let Expr::Var(name) = a else {
                    return err(pos, "`Permut` must be applied to an array variable");
                };
                let (_, asort) = self.expr(scope, a, Ctx { in_old: false, ..ctx }, pos)?;
                if !asort.is_array() {
                    return err(pos, format!("`Permut` applied to non-array `{name}` of type {asort}"));
                }
                let slot = scope.lookup(name).expect("resolved above");
                let side = |l: Label| -> Res<(Tag, StateLabel)> {
                    match l {
                        Label::Old | Label::Pre => {
                            if scope.vars[slot as usize].kind != VarKind::Param {
                                return err(pos, format!("`{name}` does not exist in the pre-state"));
                            }
                            Ok((Tag::Old, StateLabel::Old))
                        }
                        Label::Here => Ok((if ctx.in_old { Tag::Old } else { Tag::Cur }, StateLabel::Here)),
                        Label::LoopEntry => match ctx.loop_entry {
                            Some(k) => Ok((Tag::LoopEntry(k), StateLabel::LoopEntry)),
                            None => err(pos, "label `LoopEntry` is only valid inside a loop invariant"),
                        },
                    }
                };
                let (t1, l1) = side(*from)?;
                let (t2, l2) = side(*to)?;
                let (lo, los) = self.expr(scope, lo, ctx, pos)?;
                let (hi, his) = self.expr(scope, hi, ctx, pos)?;
                if los != Sort::Int || his != Sort::Int {
                    return err(pos, "`Permut` bounds must be ints");
                }
                Ok((
                    Term::Permut {
                        labels: (l1, l2),
                        left: Box::new(Term::Var(scope.var(slot, t1))),
                        right: Box::new(Term::Var(scope.var(slot, t2))),
                        lo: Box::new(lo),
                        hi: Box::new(hi),
                    },
                    Sort::Bool,
                ))
            }
            Expr::NewArray(elem, n) => {
                let (t, s) = self.expr(scope, n, ctx, pos)?;
                if s != Sort::Int {
                    return err(pos, format!("array size must be an int, found {s}"));
                }
                let arr = elem.array_of().expect("parser only builds int/real arrays");
                Ok((Term::NewArray(*elem, Box::new(t)), arr))
            }
            Expr::ArrayLit(elem, items) => {
                let mut out = Vec::new();
                for it in items {
                    let (t, s) = self.expr(scope, it, ctx, pos)?;
                    out.push(widen(t, s, *elem, pos, "array element")?);
                }
                let arr = elem.array_of().expect("parser only builds int/real arrays");
                Ok((Term::ArrayLit(*elem, out), arr))
            }
        }
    }
}

fn always_returns(stmts: &[IrStmt]) -> bool {
    stmts.iter().any(|s| match &s.kind {
        IrKind::Return(_) => true,
        IrKind::If { then_b, else_b, .. } => always_returns(then_b) && always_returns(else_b),
        _ => false,
    })
}

/// `1` as a term of the given numeric sort.
pub fn one(sort: Sort) -> Term {
    match sort {
        Sort::Real => Term::Real(BigRational::one()),
        _ => Term::int(1),
    }
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn is<T: Send + Sync>() {}
    is::<TypedUnit>();
    is::<Arc<str>>();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn errors(src: &str) -> Vec<String> {
        match check_source("t", src) {
            Ok(_) => vec![],
            Err(CheckError::Type(es)) => es.into_iter().map(|e| e.message).collect(),
            Err(CheckError::Parse(e)) => vec![format!("parse: {e}")],
        }
    }

    #[test]
    fn narrowing_forbidden() {
        let es = errors("void f() { int x; x = 1.5; }");
        assert_eq!(es.len(), 1);
        assert!(es[0].contains("narrow"), "{es:?}");
    }

    #[test]
    fn unknown_identifier_in_ensures() {
        let es = errors("/*@ ensures z > 0; @*/ void f(int x) { }");
        assert!(es[0].contains("unknown identifier `z`"), "{es:?}");
    }

    #[test]
    fn result_in_void_method() {
        let es = errors("/*@ ensures \\result > 0; @*/ void f(int x) { }");
        assert!(es[0].contains("void"), "{es:?}");
    }

    #[test]
    fn permut_on_scalar() {
        let es = errors("/*@ ensures Permut{Old,Here}(x, 0, 1); @*/ void f(int x) { }");
        assert!(es[0].contains("non-array"), "{es:?}");
    }

    #[test]
    fn ghost_read_in_program_code() {
        let es = errors("int f(int x) { /*@ ghost int g = x; @*/ int y = g; return y; }");
        assert!(es[0].contains("ghost"), "{es:?}");
        assert!(errors("int f(int x) { /*@ ghost int g = x; @*/ /*@ ghost g = g + 1; @*/ return x; }").is_empty());
    }

    #[test]
    fn widening_is_explicit() {
        let u = check_source("t", "real f(int n) { real r = n + 0.5; return r; }").unwrap();
        let IrKind::Assign { value, .. } = &u.methods[0].body[0].kind else { panic!() };
        assert!(matches!(value, Term::Arith(ArithOp::Add, a, _) if matches!(**a, Term::ToReal(_))));
    }

    #[test]
    fn calls_only_as_whole_rhs() {
        let src = "real g(real x) { return x; } real f(real x) { real y = g(x) + 1.0; return y; }";
        assert!(errors(src)[0].contains("entire right-hand side"));
        let ok = "real g(real x) { return x; } real f(real x) { real y = g(x); return g(y); }";
        assert!(errors(ok).is_empty());
    }

    #[test]
    fn integer_division_rejected() {
        assert!(errors("int f(int x) { return x / 2; }")[0].contains("integer division"));
    }

    #[test]
    fn missing_return() {
        assert!(errors("int f(int x) { if (x > 0) return 1; }")[0].contains("without returning"));
    }

    #[test]
    fn old_of_local_rejected() {
        let src = "/*@ ensures \\result == 1; @*/ int f(int x) { int y = 1; /*@ assert \\old(y) == 1; @*/ return y; }";
        assert!(errors(src)[0].contains("pre-state"));
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("1.2E-7"), Some(BigRational::new(12.into(), 100_000_000.into())));
        assert_eq!(parse_decimal("2.0"), Some(BigRational::from_integer(2.into())));
        assert_eq!(parse_decimal("1.1"), Some(BigRational::new(11.into(), 10.into())));
    }
}
