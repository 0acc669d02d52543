use super::ast::*;
use super::lexer::{tokenize, Bs, Kw, Tok, Token};
use super::ParseError;

/// Parses a unit named `unit`.
pub fn parse(text: &str) -> Result<SourceUnit, ParseError> {
    parse_named("unit", text)
}

pub fn parse_named(name: &str, text: &str) -> Result<SourceUnit, ParseError> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, i: 0 };
    let mut unit = SourceUnit { name: name.to_string(), ..Default::default() };
    stacker::maybe_grow(64 * 1024, 4 * 1024 * 1024, || p.unit(&mut unit))?;
    Ok(unit)
}

/// Parses a standalone formula, as written inside an annotation.
pub fn parse_formula(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(&format!("/*@{text}@*/"))?;
    let mut p = Parser { toks, i: 1 };
    let e = p.formula()?;
    p.expect(Tok::AnnotClose)?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

const MAX_NESTING: usize = 256;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let found = self.peek();
        let message = match found {
            Tok::Reserved(w) => format!("`{w}` is a reserved Java word that MiniJML does not support"),
            _ => {
                if expected.is_empty() {
                    format!("unexpected {found}")
                } else {
                    format!("expected {}, found {found}", expected.join(" or "))
                }
            }
        };
        ParseError::new(self.pos(), message, expected.iter().map(|s| s.to_string()).collect())
    }

    fn expect(&mut self, t: Tok) -> Result<Token, ParseError> {
        if *self.peek() == t {
            Ok(self.bump())
        } else {
            let desc = match &t {
                Tok::Kw(k) => format!("`{}`", k.text()),
                other => format!("`{}`", super::lexer::punct_text(other)),
            };
            Err(self.error(&[desc.as_str()]))
        }
    }

    fn kw(&mut self, k: Kw) -> Result<Token, ParseError> {
        self.expect(Tok::Kw(k))
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn unit(&mut self, unit: &mut SourceUnit) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Tok::Eof => return Ok(()),
                Tok::AnnotOpen => match self.peek_at(1) {
                    Tok::Kw(Kw::Lemma) => {
                        self.bump();
                        let pos = self.kw(Kw::Lemma)?.pos;
                        let name = self.ident()?;
                        self.expect(Tok::Colon)?;
                        let statement = self.formula()?;
                        self.expect(Tok::Semi)?;
                        self.expect(Tok::AnnotClose)?;
                        unit.lemmas.push(LemmaDecl { name, statement, pos });
                    }
                    Tok::Kw(Kw::Predicate) => {
                        self.bump();
                        let pos = self.kw(Kw::Predicate)?.pos;
                        let name = self.ident()?;
                        let params = self.params()?;
                        self.expect(Tok::Assign)?;
                        let body = self.formula()?;
                        self.expect(Tok::Semi)?;
                        self.expect(Tok::AnnotClose)?;
                        unit.predicates.push(PredicateDecl { name, params, body, pos });
                    }
                    _ => {
                        self.bump();
                        let spec = self.method_spec()?;
                        let m = self.method(spec)?;
                        unit.methods.push(m);
                    }
                },
                _ => {
                    let m = self.method(MethodSpec::default())?;
                    unit.methods.push(m);
                }
            }
        }
    }

    fn method_spec(&mut self) -> Result<MethodSpec, ParseError> {
        let mut spec = MethodSpec::default();
        loop {
            match self.peek() {
                Tok::Kw(Kw::Requires) if spec.behaviours.is_empty() => {
                    let pos = self.bump().pos;
                    let formula = self.formula()?;
                    self.expect(Tok::Semi)?;
                    spec.requires.push(Clause { formula, pos });
                }
                Tok::Kw(Kw::Ensures) if spec.behaviours.is_empty() => {
                    let pos = self.bump().pos;
                    let formula = self.formula()?;
                    self.expect(Tok::Semi)?;
                    spec.ensures.push(Clause { formula, pos });
                }
                Tok::Kw(Kw::Behaviour) => {
                    let pos = self.bump().pos;
                    let name = self.ident()?;
                    self.expect(Tok::Colon)?;
                    let mut b = Behaviour { name, assumes: None, ensures: None, pos };
                    if let Tok::Kw(Kw::Assumes) = self.peek() {
                        let pos = self.bump().pos;
                        let formula = self.formula()?;
                        self.expect(Tok::Semi)?;
                        b.assumes = Some(Clause { formula, pos });
                    }
                    if let Tok::Kw(Kw::Ensures) = self.peek() {
                        let pos = self.bump().pos;
                        let formula = self.formula()?;
                        self.expect(Tok::Semi)?;
                        b.ensures = Some(Clause { formula, pos });
                    }
                    spec.behaviours.push(b);
                }
                Tok::AnnotClose => {
                    self.bump();
                    return Ok(spec);
                }
                Tok::Kw(Kw::LoopInvariant) | Tok::Kw(Kw::LoopVariant) => {
                    return Err(ParseError::new(
                        self.pos(),
                        "loop annotations must immediately precede a while or do-while loop",
                        vec!["requires".into(), "ensures".into(), "behaviour".into()],
                    ));
                }
                _ if spec.behaviours.is_empty() => {
                    return Err(self.error(&["`requires`", "`ensures`", "`behaviour`", "`@*/`"]));
                }
                _ => return Err(self.error(&["`behaviour`", "`@*/`"])),
            }
        }
    }

    fn method(&mut self, spec: MethodSpec) -> Result<MethodDecl, ParseError> {
        let pos = self.pos();
        let ret = if self.eat(&Tok::Kw(Kw::Void)) {
            None
        } else {
            match self.opt_type()? {
                Some(t) => Some(t),
                None => return Err(self.error(&["type", "`void`"])),
            }
        };
        let name = self.ident()?;
        let params = self.params()?;
        let body = self.block()?;
        Ok(MethodDecl { name, params, ret, spec, body, pos })
    }

    fn params(&mut self) -> Result<Vec<Param>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let Some(ty) = self.opt_type()? else {
                    return Err(self.error(&["type"]));
                };
                let name = self.ident()?;
                params.push(Param { name, ty });
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        Ok(params)
    }

    fn opt_type(&mut self) -> Result<Option<SemType>, ParseError> {
        let base = match self.peek() {
            Tok::Kw(Kw::Int) => SemType::Int,
            Tok::Kw(Kw::Real) => SemType::Real,
            Tok::Kw(Kw::Bool) => SemType::Bool,
            _ => return Ok(None),
        };
        self.bump();
        if *self.peek() == Tok::LBrack && *self.peek_at(1) == Tok::RBrack {
            self.bump();
            self.bump();
            match base.array_of() {
                Some(t) => return Ok(Some(t)),
                None => return Err(ParseError::new(self.pos(), "arrays of bool are not supported", vec![])),
            }
        }
        Ok(Some(base))
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if *self.peek() == Tok::Eof {
                return Err(self.error(&["`}`"]));
            }
            stmts.push(self.stmt(0)?);
        }
        Ok(Block { stmts })
    }

    fn stmt(&mut self, depth: usize) -> Result<Stmt, ParseError> {
        if depth > MAX_NESTING {
            return Err(ParseError::new(self.pos(), "statements nested too deeply", vec![]));
        }
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Kw(Kw::Int) | Tok::Kw(Kw::Real) | Tok::Kw(Kw::Bool) => {
                let ty = self.opt_type()?.expect("type keyword");
                let mut vars = Vec::new();
                loop {
                    let name = self.ident()?;
                    let init = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
                    vars.push((name, init));
                    if self.eat(&Tok::Semi) {
                        break;
                    }
                    if !self.eat(&Tok::Comma) {
                        return Err(self.error(&["`,`", "`;`", "`=`"]));
                    }
                }
                StmtKind::Decl { ty, vars }
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::Assign => {
                        self.bump();
                        let value = self.expr()?;
                        self.expect(Tok::Semi)?;
                        StmtKind::Assign { target: name, value }
                    }
                    Tok::LBrack => {
                        self.bump();
                        let index = self.expr()?;
                        self.expect(Tok::RBrack)?;
                        self.expect(Tok::Assign)?;
                        let value = self.expr()?;
                        self.expect(Tok::Semi)?;
                        StmtKind::ArrayAssign { target: name, index, value }
                    }
                    Tok::LParen => {
                        let args = self.args()?;
                        self.expect(Tok::Semi)?;
                        StmtKind::Call { method: name, args }
                    }
                    _ => return Err(self.error(&["`=`", "`[`", "`(`"])),
                }
            }
            Tok::Kw(Kw::If) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_branch = Box::new(self.stmt(depth + 1)?);
                let else_branch =
                    if self.eat(&Tok::Kw(Kw::Else)) { Some(Box::new(self.stmt(depth + 1)?)) } else { None };
                StmtKind::If { cond, then_branch, else_branch }
            }
            Tok::Kw(Kw::Return) => {
                self.bump();
                if self.eat(&Tok::Semi) {
                    StmtKind::Return(None)
                } else {
                    let e = self.expr()?;
                    self.expect(Tok::Semi)?;
                    StmtKind::Return(Some(e))
                }
            }
            Tok::LBrace => StmtKind::Block(self.block()?),
            Tok::Kw(Kw::While) | Tok::Kw(Kw::Do) => {
                return Err(ParseError::new(
                    pos,
                    "every loop needs a `/*@ loop_invariant ...; @*/` annotation",
                    vec!["/*@".into()],
                ));
            }
            Tok::AnnotOpen => {
                self.bump();
                match self.peek() {
                    Tok::Kw(Kw::LoopInvariant) => return self.loop_stmt(depth),
                    Tok::Kw(Kw::Assert) => {
                        self.bump();
                        let f = self.formula()?;
                        self.expect(Tok::Semi)?;
                        self.expect(Tok::AnnotClose)?;
                        StmtKind::Assert(f)
                    }
                    Tok::Kw(Kw::Ghost) => {
                        self.bump();
                        let kind = if let Some(ty) = self.opt_type()? {
                            let name = self.ident()?;
                            let init = if self.eat(&Tok::Assign) { Some(self.expr()?) } else { None };
                            StmtKind::GhostDecl { ty, name, init }
                        } else {
                            let target = self.ident()?;
                            let index = if self.eat(&Tok::LBrack) {
                                let e = self.expr()?;
                                self.expect(Tok::RBrack)?;
                                Some(e)
                            } else {
                                None
                            };
                            self.expect(Tok::Assign)?;
                            let value = self.expr()?;
                            StmtKind::GhostAssign { target, index, value }
                        };
                        self.expect(Tok::Semi)?;
                        self.expect(Tok::AnnotClose)?;
                        kind
                    }
                    _ => return Err(self.error(&["`loop_invariant`", "`assert`", "`ghost`"])),
                }
            }
            _ => return Err(self.error(&["statement"])),
        };
        Ok(Stmt { kind, pos })
    }

    fn loop_stmt(&mut self, depth: usize) -> Result<Stmt, ParseError> {
        let kw_pos = self.kw(Kw::LoopInvariant)?.pos;
        let invariant = self.formula()?;
        self.expect(Tok::Semi)?;
        let variant = if self.eat(&Tok::Kw(Kw::LoopVariant)) {
            let v = self.expr()?;
            self.expect(Tok::Semi)?;
            Some(v)
        } else {
            None
        };
        self.expect(Tok::AnnotClose)?;
        let annot = LoopAnnot { invariant, variant, pos: kw_pos };
        let pos = self.pos();
        let kind = match self.peek() {
            Tok::Kw(Kw::While) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = Box::new(self.stmt(depth + 1)?);
                StmtKind::While { annot, cond, body }
            }
            Tok::Kw(Kw::Do) => {
                self.bump();
                let body = Box::new(self.stmt(depth + 1)?);
                self.kw(Kw::While)?;
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::DoWhile { annot, body, cond }
            }
            _ => {
                return Err(ParseError::new(
                    kw_pos,
                    "`loop_invariant` must annotate a while or do-while loop",
                    vec!["while".into(), "do".into()],
                ));
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.formula()?);
            if self.eat(&Tok::RParen) {
                return Ok(args);
            }
            if !self.eat(&Tok::Comma) {
                return Err(self.error(&["`,`", "`)`"]));
            }
        }
    }

    /// Program expressions share the formula grammar; the typechecker
    /// rejects specification-only constructs outside annotations.
    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.formula()
    }

    fn formula(&mut self) -> Result<Expr, ParseError> {
        self.implies(0)
    }

    fn implies(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if depth > MAX_NESTING {
            return Err(ParseError::new(self.pos(), "expression nested too deeply", vec![]));
        }
        let lhs = self.or(depth)?;
        if self.eat(&Tok::Implies) {
            let rhs = self.implies(depth + 1)?;
            return Ok(Expr::bin(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut e = self.and(depth)?;
        while self.eat(&Tok::OrOr) {
            let r = self.and(depth)?;
            e = Expr::bin(BinOp::Or, e, r);
        }
        Ok(e)
    }

    fn and(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut e = self.equality(depth)?;
        while self.eat(&Tok::AndAnd) {
            let r = self.equality(depth)?;
            e = Expr::bin(BinOp::And, e, r);
        }
        Ok(e)
    }

    fn equality(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut e = self.relational(depth)?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::NotEq => BinOp::Ne,
                _ => return Ok(e),
            };
            self.bump();
            let r = self.relational(depth)?;
            e = Expr::bin(op, e, r);
        }
    }

    fn relational(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let first = self.additive(depth)?;
        let mut operands = vec![first];
        let mut ops = Vec::new();
        loop {
            let op = match self.peek() {
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            self.bump();
            ops.push(op);
            operands.push(self.additive(depth)?);
        }
        Ok(match ops.len() {
            0 => operands.pop().unwrap(),
            1 => {
                let b = operands.pop().unwrap();
                let a = operands.pop().unwrap();
                Expr::bin(ops[0], a, b)
            }
            _ => Expr::Chain(operands, ops),
        })
    }

    fn additive(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut e = self.multiplicative(depth)?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(e),
            };
            self.bump();
            let r = self.multiplicative(depth)?;
            e = Expr::bin(op, e, r);
        }
    }

    fn multiplicative(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut e = self.unary(depth)?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(e),
            };
            self.bump();
            let r = self.unary(depth)?;
            e = Expr::bin(op, e, r);
        }
    }

    fn unary(&mut self, depth: usize) -> Result<Expr, ParseError> {
        if depth > MAX_NESTING {
            return Err(ParseError::new(self.pos(), "expression nested too deeply", vec![]));
        }
        match self.peek() {
            Tok::Minus => {
                self.bump();
                let e = self.unary(depth + 1)?;
                Ok(Expr::Unary(UnOp::Neg, Box::new(e)))
            }
            Tok::Not => {
                self.bump();
                let e = self.unary(depth + 1)?;
                Ok(Expr::Unary(UnOp::Not, Box::new(e)))
            }
            Tok::Backslash(Bs::Forall) => {
                self.bump();
                let ty = match self.peek() {
                    Tok::Kw(Kw::Int) | Tok::Kw(Kw::Integer) => SemType::Int,
                    Tok::Kw(Kw::Real) => SemType::Real,
                    _ => return Err(self.error(&["`integer`", "`int`", "`real`"])),
                };
                self.bump();
                let mut names = vec![self.ident()?];
                while let Tok::Ident(_) = self.peek() {
                    names.push(self.ident()?);
                }
                self.expect(Tok::Semi)?;
                let body = self.implies(depth + 1)?;
                Ok(Expr::Forall(ty, names, Box::new(body)))
            }
            _ => self.postfix(depth),
        }
    }

    fn postfix(&mut self, depth: usize) -> Result<Expr, ParseError> {
        let mut e = self.primary(depth)?;
        loop {
            match self.peek() {
                Tok::LBrack => {
                    self.bump();
                    let i = self.implies(depth + 1)?;
                    self.expect(Tok::RBrack)?;
                    e = Expr::Index(Box::new(e), Box::new(i));
                }
                Tok::Dot => {
                    self.bump();
                    self.kw(Kw::Length)?;
                    e = Expr::Length(Box::new(e));
                }
                _ => return Ok(e),
            }
        }
    }

    fn primary(&mut self, depth: usize) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::Real(r) => {
                self.bump();
                Ok(Expr::Real(r))
            }
            Tok::Kw(Kw::True) => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::Kw(Kw::False) => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let args = self.args()?;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.implies(depth + 1)?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Backslash(Bs::Result) => {
                self.bump();
                Ok(Expr::Result)
            }
            Tok::Backslash(Bs::Old) => {
                self.bump();
                self.expect(Tok::LParen)?;
                let e = self.implies(depth + 1)?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Old(Box::new(e)))
            }
            Tok::Kw(Kw::Permut) => {
                self.bump();
                self.expect(Tok::LBrace)?;
                let from = self.label()?;
                self.expect(Tok::Comma)?;
                let to = self.label()?;
                self.expect(Tok::RBrace)?;
                let args = self.args()?;
                let Ok(args) = <[Expr; 3]>::try_from(args) else {
                    return Err(ParseError::new(self.pos(), "Permut takes exactly three arguments", vec![]));
                };
                Ok(Expr::Permut { from, to, args: Box::new(args) })
            }
            Tok::Kw(Kw::New) => {
                self.bump();
                let elem = match self.peek() {
                    Tok::Kw(Kw::Int) => SemType::Int,
                    Tok::Kw(Kw::Real) => SemType::Real,
                    _ => return Err(self.error(&["`int`", "`real`"])),
                };
                self.bump();
                self.expect(Tok::LBrack)?;
                if self.eat(&Tok::RBrack) {
                    self.expect(Tok::LBrace)?;
                    let mut items = Vec::new();
                    if !self.eat(&Tok::RBrace) {
                        loop {
                            items.push(self.implies(depth + 1)?);
                            if self.eat(&Tok::RBrace) {
                                break;
                            }
                            if !self.eat(&Tok::Comma) {
                                return Err(self.error(&["`,`", "`}`"]));
                            }
                        }
                    }
                    Ok(Expr::ArrayLit(elem, items))
                } else {
                    let n = self.implies(depth + 1)?;
                    self.expect(Tok::RBrack)?;
                    Ok(Expr::NewArray(elem, Box::new(n)))
                }
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    fn label(&mut self) -> Result<Label, ParseError> {
        let pos = self.pos();
        let name = self.ident()?;
        match name.as_str() {
            "Old" => Ok(Label::Old),
            "Pre" => Ok(Label::Pre),
            "Here" => Ok(Label::Here),
            "LoopEntry" => Ok(Label::LoopEntry),
            _ => Err(ParseError::new(
                pos,
                format!("unknown state label `{name}`"),
                vec!["Old".into(), "Pre".into(), "Here".into(), "LoopEntry".into()],
            )),
        }
    }
}
