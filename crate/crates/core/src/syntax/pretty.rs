use std::fmt::Write;

use super::ast::*;

/// Renders a unit as canonical MiniJML text: predicates, then lemmas, then
/// methods, each separated by a blank line.
pub fn pretty_print(unit: &SourceUnit) -> String {
    let mut out = String::new();
    let mut first = true;
    let mut sep = |out: &mut String| {
        if !std::mem::take(&mut first) {
            out.push('\n');
        }
    };
    for p in &unit.predicates {
        sep(&mut out);
        let params: Vec<String> = p.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
        let _ = writeln!(out, "/*@ predicate {}({}) = {}; @*/", p.name, params.join(", "), expr(&p.body));
    }
    for l in &unit.lemmas {
        sep(&mut out);
        let _ = writeln!(out, "/*@ lemma {}: {}; @*/", l.name, expr(&l.statement));
    }
    for m in &unit.methods {
        sep(&mut out);
        method(&mut out, m);
    }
    out
}

fn method(out: &mut String, m: &MethodDecl) {
    if !m.spec.is_empty() {
        let mut lines = Vec::new();
        for c in &m.spec.requires {
            lines.push(format!("requires {};", expr(&c.formula)));
        }
        for c in &m.spec.ensures {
            lines.push(format!("ensures {};", expr(&c.formula)));
        }
        for b in &m.spec.behaviours {
            lines.push(format!("behaviour {}:", b.name));
            if let Some(a) = &b.assumes {
                lines.push(format!("  assumes {};", expr(&a.formula)));
            }
            if let Some(e) = &b.ensures {
                lines.push(format!("  ensures {};", expr(&e.formula)));
            }
        }
        annotation(out, 0, &lines);
    }
    let ret = m.ret.map_or("void".to_string(), |t| t.to_string());
    let params: Vec<String> = m.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
    let _ = write!(out, "{ret} {}({}) ", m.name, params.join(", "));
    block(out, 0, &m.body);
    out.push('\n');
}

fn annotation(out: &mut String, indent: usize, lines: &[String]) {
    let pad = " ".repeat(indent);
    for (i, l) in lines.iter().enumerate() {
        if i == 0 {
            let _ = writeln!(out, "{pad}/*@ {l}");
        } else {
            let _ = writeln!(out, "{pad}  @ {l}");
        }
    }
    let _ = writeln!(out, "{pad}  @*/");
}

fn block(out: &mut String, indent: usize, b: &Block) {
    out.push_str("{\n");
    for s in &b.stmts {
        stmt(out, indent + 4, s);
    }
    let _ = write!(out, "{}}}", " ".repeat(indent));
}

/// Writes a nested statement after a header such as `while (c)`: blocks stay
/// on the header line, anything else goes on its own indented line.
fn body(out: &mut String, indent: usize, s: &Stmt) {
    if let StmtKind::Block(b) = &s.kind {
        out.push(' ');
        block(out, indent, b);
        out.push('\n');
    } else {
        out.push('\n');
        stmt(out, indent + 4, s);
    }
}

fn stmt(out: &mut String, indent: usize, s: &Stmt) {
    let pad = " ".repeat(indent);
    match &s.kind {
        StmtKind::Decl { ty, vars } => {
            let vs: Vec<String> = vars
                .iter()
                .map(|(n, init)| match init {
                    Some(e) => format!("{n} = {}", expr(e)),
                    None => n.clone(),
                })
                .collect();
            let _ = writeln!(out, "{pad}{ty} {};", vs.join(", "));
        }
        StmtKind::Assign { target, value } => {
            let _ = writeln!(out, "{pad}{target} = {};", expr(value));
        }
        StmtKind::ArrayAssign { target, index, value } => {
            let _ = writeln!(out, "{pad}{target}[{}] = {};", expr(index), expr(value));
        }
        StmtKind::Call { method, args } => {
            let _ = writeln!(out, "{pad}{method}({});", args.iter().map(expr).collect::<Vec<_>>().join(", "));
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            let _ = write!(out, "{pad}if ({})", expr(cond));
            body(out, indent, then_branch);
            if let Some(e) = else_branch {
                let _ = write!(out, "{pad}else");
                body(out, indent, e);
            }
        }
        StmtKind::While { annot, cond, body: b } => {
            loop_annot(out, indent, annot);
            let _ = write!(out, "{pad}while ({})", expr(cond));
            body(out, indent, b);
        }
        StmtKind::DoWhile { annot, body: b, cond } => {
            loop_annot(out, indent, annot);
            let _ = write!(out, "{pad}do");
            if let StmtKind::Block(blk) = &b.kind {
                out.push(' ');
                block(out, indent, blk);
                let _ = writeln!(out, " while ({});", expr(cond));
            } else {
                out.push('\n');
                stmt(out, indent + 4, b);
                let _ = writeln!(out, "{pad}while ({});", expr(cond));
            }
        }
        StmtKind::Return(None) => {
            let _ = writeln!(out, "{pad}return;");
        }
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "{pad}return {};", expr(e));
        }
        StmtKind::Assert(f) => {
            let _ = writeln!(out, "{pad}/*@ assert {}; @*/", expr(f));
        }
        StmtKind::GhostDecl { ty, name, init } => match init {
            Some(e) => {
                let _ = writeln!(out, "{pad}/*@ ghost {ty} {name} = {}; @*/", expr(e));
            }
            None => {
                let _ = writeln!(out, "{pad}/*@ ghost {ty} {name}; @*/");
            }
        },
        StmtKind::GhostAssign { target, index, value } => match index {
            Some(i) => {
                let _ = writeln!(out, "{pad}/*@ ghost {target}[{}] = {}; @*/", expr(i), expr(value));
            }
            None => {
                let _ = writeln!(out, "{pad}/*@ ghost {target} = {}; @*/", expr(value));
            }
        },
        StmtKind::Block(b) => {
            out.push_str(&pad);
            block(out, indent, b);
            out.push('\n');
        }
    }
}

fn loop_annot(out: &mut String, indent: usize, a: &LoopAnnot) {
    let mut lines = vec![format!("loop_invariant {};", expr(&a.invariant))];
    if let Some(v) = &a.variant {
        lines.push(format!("loop_variant {};", expr(v)));
    }
    annotation(out, indent, &lines);
}

/// Renders an expression with the minimum parentheses needed to reparse to
/// the same tree.
pub fn expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, 0);
    s
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Forall(..) => 0,
        Expr::Binary(op, ..) => binop_prec(*op),
        Expr::Chain(..) => 5,
        Expr::Unary(..) => 8,
        _ => 9,
    }
}

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::Implies => 1,
        BinOp::Or => 2,
        BinOp::And => 3,
        BinOp::Eq | BinOp::Ne => 4,
        BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 5,
        BinOp::Add | BinOp::Sub => 6,
        BinOp::Mul | BinOp::Div => 7,
    }
}

fn write_expr(out: &mut String, e: &Expr, ctx: u8) {
    let p = prec(e);
    let paren = p < ctx;
    if paren {
        out.push('(');
    }
    match e {
        Expr::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Expr::Real(r) => out.push_str(r),
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(v) => out.push_str(v),
        Expr::Result => out.push_str("\\result"),
        Expr::Unary(op, a) => {
            out.push(if *op == UnOp::Neg { '-' } else { '!' });
            write_expr(out, a, 8);
        }
        Expr::Binary(op, a, b) => {
            let (lc, rc) = match op {
                BinOp::Implies => (p + 1, p),
                o if o.is_relational() => (p + 1, p + 1),
                _ => (p, p + 1),
            };
            write_expr(out, a, lc);
            let _ = write!(out, " {} ", op.text());
            write_expr(out, b, rc);
        }
        Expr::Chain(operands, ops) => {
            for (i, o) in operands.iter().enumerate() {
                if i > 0 {
                    let _ = write!(out, " {} ", ops[i - 1].text());
                }
                write_expr(out, o, 6);
            }
        }
        Expr::Index(a, i) => {
            write_expr(out, a, 9);
            out.push('[');
            write_expr(out, i, 0);
            out.push(']');
        }
        Expr::Length(a) => {
            write_expr(out, a, 9);
            out.push_str(".length");
        }
        Expr::Call(f, args) => {
            out.push_str(f);
            args_list(out, args);
        }
        Expr::Old(a) => {
            out.push_str("\\old(");
            write_expr(out, a, 0);
            out.push(')');
        }
        Expr::Forall(ty, names, body) => {
            let t = match ty {
                SemType::Int => "integer",
                _ => "real",
            };
            let _ = write!(out, "\\forall {t} {}; ", names.join(" "));
            write_expr(out, body, 0);
        }
        Expr::Permut { from, to, args } => {
            let _ = write!(out, "Permut{{{from},{to}}}");
            args_list(out, &args[..]);
        }
        Expr::NewArray(t, n) => {
            let _ = write!(out, "new {t}[");
            write_expr(out, n, 0);
            out.push(']');
        }
        Expr::ArrayLit(t, items) => {
            let _ = write!(out, "new {t}[]{{");
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, it, 0);
            }
            out.push('}');
        }
    }
    if paren {
        out.push(')');
    }
}

fn args_list(out: &mut String, args: &[Expr]) {
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a, 0);
    }
    out.push(')');
}
