use crate::logic::{Sort, Tag, Term, Var};
use crate::syntax::ast::{Pos, SourceUnit};

/// A typechecked unit. Expressions are typed logic terms with explicit
/// int-to-real widening, and every variable is resolved to a slot of its
/// method's variable table.
#[derive(Clone, Debug)]
pub struct TypedUnit {
    pub name: String,
    pub source: SourceUnit,
    /// SHA-256 of the canonical pretty-printed source.
    pub digest: String,
    pub predicates: Vec<TypedPredicate>,
    pub lemmas: Vec<TypedLemma>,
    pub methods: Vec<TypedMethod>,
}

impl TypedUnit {
    pub fn method(&self, name: &str) -> Option<&TypedMethod> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Debug)]
pub struct TypedPredicate {
    pub name: String,
    pub params: Vec<Var>,
    pub body: Term,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct TypedLemma {
    pub name: String,
    pub statement: Term,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Param,
    Local,
    Ghost,
    /// Holds a call result consumed by `return`.
    Temp,
}

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub name: String,
    pub sort: Sort,
    pub kind: VarKind,
}

#[derive(Clone, Debug)]
pub struct SpecClause {
    pub formula: Term,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct TypedBehaviour {
    pub name: String,
    /// Pre-state formula over parameters (current-state symbols).
    pub assumes: Option<SpecClause>,
    pub ensures: Option<SpecClause>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct LoopInfo {
    pub id: u32,
    pub parent: Option<u32>,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct CallInfo {
    pub id: u32,
    pub callee: String,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub struct TypedMethod {
    pub name: String,
    pub params: Vec<Var>,
    pub ret: Option<Sort>,
    pub requires: Vec<SpecClause>,
    pub ensures: Vec<SpecClause>,
    pub behaviours: Vec<TypedBehaviour>,
    pub body: Vec<IrStmt>,
    pub vars: Vec<VarInfo>,
    pub loops: Vec<LoopInfo>,
    pub calls: Vec<CallInfo>,
    pub pos: Pos,
}

impl TypedMethod {
    pub fn var(&self, slot: u32, tag: Tag) -> Var {
        let info = &self.vars[slot as usize];
        Var::new(&info.name, tag, info.sort, slot)
    }

    pub fn result_var(&self) -> Option<Var> {
        self.ret.map(|s| Var::new("result", Tag::Result, s, 0))
    }

    pub fn loop_info(&self, id: u32) -> Option<&LoopInfo> {
        self.loops.iter().find(|l| l.id == id)
    }

    /// Loop ids from the outermost enclosing loop down to `id`.
    pub fn loop_chain(&self, id: u32) -> Vec<u32> {
        let mut chain = vec![id];
        let mut cur = id;
        while let Some(p) = self.loop_info(cur).and_then(|l| l.parent) {
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        chain
    }

    pub fn requires_formula(&self) -> Term {
        Term::and(self.requires.iter().map(|c| c.formula.clone()).collect())
    }
}

#[derive(Clone, Debug)]
pub struct IrStmt {
    pub kind: IrKind,
    pub pos: Pos,
}

#[derive(Clone, Debug)]
pub enum IrKind {
    Assign { var: Var, value: Term, ghost: bool },
    Store { var: Var, index: Term, value: Term, ghost: bool },
    Call { target: Option<Var>, method: String, args: Vec<Term>, id: u32 },
    If { cond: Term, then_b: Vec<IrStmt>, else_b: Vec<IrStmt> },
    Loop {
        id: u32,
        do_while: bool,
        cond: Term,
        invariant: SpecClause,
        variant: Option<SpecClause>,
        body: Vec<IrStmt>,
    },
    Return(Option<Term>),
    Assert(SpecClause),
}

/// Variables assigned anywhere in `stmts`, including nested loops and call
/// targets, in first-assignment order.
pub fn assigned_vars(stmts: &[IrStmt]) -> Vec<(Var, bool)> {
    fn walk(stmts: &[IrStmt], out: &mut Vec<(Var, bool)>) {
        let add = |v: &Var, whole: bool, out: &mut Vec<(Var, bool)>| {
            if let Some(e) = out.iter_mut().find(|(x, _)| x.slot == v.slot) {
                e.1 |= whole;
            } else {
                out.push((v.clone(), whole));
            }
        };
        for s in stmts {
            match &s.kind {
                IrKind::Assign { var, .. } => add(var, true, out),
                IrKind::Store { var, .. } => add(var, false, out),
                IrKind::Call { target: Some(t), .. } => add(t, true, out),
                IrKind::If { then_b, else_b, .. } => {
                    walk(then_b, out);
                    walk(else_b, out);
                }
                IrKind::Loop { body, .. } => walk(body, out),
                _ => {}
            }
        }
    }
    let mut out = Vec::new();
    walk(stmts, &mut out);
    out
}
