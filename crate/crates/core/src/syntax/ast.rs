use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

/// A 1-based source position.
///
/// Positions are metadata: two positions always compare equal, so that ASTs
/// built from differently formatted text compare structurally.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SemType {
    Int,
    Real,
    Bool,
    IntArray,
    RealArray,
}

impl SemType {
    pub fn is_numeric(self) -> bool {
        matches!(self, SemType::Int | SemType::Real)
    }

    pub fn is_array(self) -> bool {
        matches!(self, SemType::IntArray | SemType::RealArray)
    }

    pub fn elem(self) -> Option<SemType> {
        match self {
            SemType::IntArray => Some(SemType::Int),
            SemType::RealArray => Some(SemType::Real),
            _ => None,
        }
    }

    pub fn array_of(self) -> Option<SemType> {
        match self {
            SemType::Int => Some(SemType::IntArray),
            SemType::Real => Some(SemType::RealArray),
            _ => None,
        }
    }
}

impl fmt::Display for SemType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SemType::Int => "int",
            SemType::Real => "real",
            SemType::Bool => "bool",
            SemType::IntArray => "int[]",
            SemType::RealArray => "real[]",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SourceUnit {
    pub name: String,
    pub predicates: Vec<PredicateDecl>,
    pub lemmas: Vec<LemmaDecl>,
    pub methods: Vec<MethodDecl>,
}

impl SourceUnit {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaDecl {
    pub name: String,
    pub statement: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: SemType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Option<SemType>,
    pub spec: MethodSpec,
    pub body: Block,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MethodSpec {
    pub requires: Vec<Clause>,
    pub ensures: Vec<Clause>,
    pub behaviours: Vec<Behaviour>,
}

impl MethodSpec {
    pub fn is_empty(&self) -> bool {
        self.requires.is_empty() && self.ensures.is_empty() && self.behaviours.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub formula: Expr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Behaviour {
    pub name: String,
    pub assumes: Option<Clause>,
    pub ensures: Option<Clause>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopAnnot {
    pub invariant: Expr,
    pub variant: Option<Expr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Decl { ty: SemType, vars: Vec<(String, Option<Expr>)> },
    Assign { target: String, value: Expr },
    ArrayAssign { target: String, index: Expr, value: Expr },
    Call { method: String, args: Vec<Expr> },
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    While { annot: LoopAnnot, cond: Expr, body: Box<Stmt> },
    DoWhile { annot: LoopAnnot, body: Box<Stmt>, cond: Expr },
    Return(Option<Expr>),
    Assert(Expr),
    GhostDecl { ty: SemType, name: String, init: Option<Expr> },
    GhostAssign { target: String, index: Option<Expr>, value: Expr },
    Block(Block),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Old,
    Pre,
    Here,
    LoopEntry,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Old => "Old",
            Label::Pre => "Pre",
            Label::Here => "Here",
            Label::LoopEntry => "LoopEntry",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Implies,
}

impl BinOp {
    pub fn text(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::Implies => "==>",
        }
    }

    pub fn is_relational(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    /// Decimal literal in its canonical textual form.
    Real(String),
    Bool(bool),
    Var(String),
    Result,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `a < b <= c`: every adjacent pair is compared.
    Chain(Vec<Expr>, Vec<BinOp>),
    Index(Box<Expr>, Box<Expr>),
    Length(Box<Expr>),
    Call(String, Vec<Expr>),
    Old(Box<Expr>),
    Forall(SemType, Vec<String>, Box<Expr>),
    Permut { from: Label, to: Label, args: Box<[Expr; 3]> },
    NewArray(SemType, Box<Expr>),
    ArrayLit(SemType, Vec<Expr>),
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }
}
