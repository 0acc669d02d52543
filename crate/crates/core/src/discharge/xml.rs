//! XML exchange format for obligation sets (schema: `schemas/xll.xsd`).

use crate::logic::{fmt_rational, ArithOp, CmpOp, Sort, Tag, Term};
use crate::vcgen::ObligationSet;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn type_name(s: Sort) -> &'static str {
    match s {
        Sort::Int => "int",
        Sort::Real => "real",
        Sort::Bool => "bool",
        Sort::IntArray => "int-array",
        Sort::RealArray => "real-array",
    }
}

fn state(tag: Tag) -> String {
    match tag {
        Tag::Cur => "here".into(),
        Tag::Old => "old".into(),
        Tag::LoopEntry(k) => format!("entry{k}"),
        Tag::Havoc(k) => format!("loop{k}"),
        Tag::CallResult(k) => format!("call{k}"),
        Tag::Variant(k) => format!("variant{k}"),
        Tag::Bound => "bound".into(),
        Tag::Result => "result".into(),
    }
}

fn cmp_name(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "eq",
        CmpOp::Ne => "ne",
        CmpOp::Lt => "lt",
        CmpOp::Le => "le",
        CmpOp::Gt => "gt",
        CmpOp::Ge => "ge",
    }
}

fn arith_name(op: ArithOp) -> &'static str {
    match op {
        ArithOp::Add => "add",
        ArithOp::Sub => "sub",
        ArithOp::Mul => "mul",
        ArithOp::Div => "div",
    }
}

struct W {
    out: String,
}

impl W {
    fn line(&mut self, depth: usize, s: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn elem(&mut self, depth: usize, open: &str, close: &str, children: &[&Term]) {
        self.line(depth, &format!("<{open}>"));
        for c in children {
            self.term(depth + 1, c);
        }
        self.line(depth, &format!("</{close}>"));
    }

    fn term(&mut self, d: usize, t: &Term) {
        match t {
            Term::Int(i) => self.line(d, &format!("<const type=\"int\" value=\"{i}\"/>")),
            Term::Real(q) => self.line(d, &format!("<const type=\"real\" value=\"{}\"/>", fmt_rational(q))),
            Term::Bool(b) => self.line(d, &format!("<const type=\"bool\" value=\"{b}\"/>")),
            Term::Var(v) => self.line(
                d,
                &format!("<var name=\"{}\" state=\"{}\" type=\"{}\"/>", escape(&v.name), state(v.tag), type_name(v.sort)),
            ),
            Term::Neg(a) => self.elem(d, "arith op=\"neg\"", "arith", &[a]),
            Term::ToReal(a) => self.elem(d, "arith op=\"to-real\"", "arith", &[a]),
            Term::Not(a) => self.elem(d, "not", "not", &[a]),
            Term::Arith(op, a, b) => self.elem(d, &format!("arith op=\"{}\"", arith_name(*op)), "arith", &[a, b]),
            Term::Cmp(op, a, b) => self.elem(d, &format!("cmp op=\"{}\"", cmp_name(*op)), "cmp", &[a, b]),
            Term::And(ps) | Term::Or(ps) => {
                let n = if matches!(t, Term::And(_)) { "and" } else { "or" };
                let refs: Vec<&Term> = ps.iter().collect();
                self.elem(d, n, n, &refs);
            }
            Term::Implies(a, b) => self.elem(d, "implies", "implies", &[a, b]),
            Term::Select(a, i) => self.elem(d, "select", "select", &[a, i]),
            Term::Store(a, i, v) => self.elem(d, "store", "store", &[a, i, v]),
            Term::Length(a) => self.elem(d, "length", "length", &[a]),
            Term::NewArray(s, n) => self.elem(d, &format!("new-array type=\"{}\"", type_name(*s)), "new-array", &[n]),
            Term::ArrayLit(s, items) => {
                let refs: Vec<&Term> = items.iter().collect();
                self.elem(d, &format!("array type=\"{}\"", type_name(*s)), "array", &refs);
            }
            Term::Forall(vs, body) => {
                for (k, v) in vs.iter().enumerate() {
                    self.line(d + k, &format!("<forall var=\"{}\" type=\"{}\">", escape(&v.name), type_name(v.sort)));
                }
                self.term(d + vs.len(), body);
                for k in (0..vs.len()).rev() {
                    self.line(d + k, "</forall>");
                }
            }
            Term::Permut { labels, left, right, lo, hi } => self.elem(
                d,
                &format!("permut lo-label=\"{}\" hi-label=\"{}\"", labels.0, labels.1),
                "permut",
                &[left, right, lo, hi],
            ),
        }
    }
}

/// Renders an obligation set as one XML document.
pub fn export_xml(set: &ObligationSet) -> String {
    let mut w = W { out: String::new() };
    w.line(0, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    w.line(0, &format!("<obligations unit=\"{}\" digest=\"{}\">", escape(&set.unit), set.unit_digest));
    for ob in &set.obligations {
        w.line(
            1,
            &format!("<obligation id=\"{}\" name=\"{}\" kind=\"{}\">", escape(&ob.id), escape(&ob.name), ob.origin.kind.as_str()),
        );
        let o = &ob.origin;
        w.line(2, &format!("<origin method=\"{}\" line=\"{}\" column=\"{}\"/>", escape(&o.method), o.line, o.column));
        if ob.hypotheses.is_empty() {
            w.line(2, "<hypotheses/>");
        } else {
            w.line(2, "<hypotheses>");
            for h in &ob.hypotheses {
                w.term(3, &h.formula);
            }
            w.line(2, "</hypotheses>");
        }
        w.line(2, "<goal>");
        w.term(3, &ob.goal);
        w.line(2, "</goal>");
        w.line(1, "</obligation>");
    }
    w.line(0, "</obligations>");
    w.out
}

const FORMULAS: &[&str] =
    &["forall", "implies", "and", "or", "not", "cmp", "arith", "var", "const", "select", "store", "length", "new-array", "array", "permut"];

/// Checks a document against the rules of `schemas/xll.xsd`.
pub fn validate_xml(text: &str) -> Result<(), String> {
    let doc = roxmltree::Document::parse(text).map_err(|e| e.to_string())?;
    let root = doc.root_element();
    if root.tag_name().name() != "obligations" {
        return Err("root element must be <obligations>".into());
    }
    require(&root, &["unit"])?;
    for ob in elements(&root) {
        if ob.tag_name().name() != "obligation" {
            return Err(format!("unexpected <{}> in <obligations>", ob.tag_name().name()));
        }
        require(&ob, &["id", "name", "kind"])?;
        let kind = ob.attribute("kind").unwrap();
        let kinds = [
            "ensures", "behaviour", "invariant-init", "invariant-preserve", "variant-nonneg", "variant-decrease", "assert",
            "call-requires", "division-guard", "bounds-guard", "lemma",
        ];
        if !kinds.contains(&kind) {
            return Err(format!("unknown obligation kind `{kind}`"));
        }
        let kids: Vec<_> = elements(&ob).collect();
        let names: Vec<&str> = kids.iter().map(|k| k.tag_name().name()).collect();
        if names != ["origin", "hypotheses", "goal"] {
            return Err(format!("<obligation> children must be origin, hypotheses, goal; got {names:?}"));
        }
        require(&kids[0], &["method", "line", "column"])?;
        for h in elements(&kids[1]) {
            formula(&h)?;
        }
        let goal: Vec<_> = elements(&kids[2]).collect();
        if goal.len() != 1 {
            return Err("<goal> must contain exactly one formula".into());
        }
        formula(&goal[0])?;
    }
    Ok(())
}

fn elements<'a, 'i>(n: &roxmltree::Node<'a, 'i>) -> impl Iterator<Item = roxmltree::Node<'a, 'i>> {
    n.children().filter(|c| c.is_element())
}

fn require(n: &roxmltree::Node, attrs: &[&str]) -> Result<(), String> {
    for a in attrs {
        if n.attribute(*a).is_none() {
            return Err(format!("<{}> lacks attribute `{a}`", n.tag_name().name()));
        }
    }
    Ok(())
}

fn one_of(n: &roxmltree::Node, attr: &str, allowed: &[&str]) -> Result<(), String> {
    let v = n.attribute(attr).ok_or_else(|| format!("<{}> lacks attribute `{attr}`", n.tag_name().name()))?;
    if allowed.contains(&v) {
        Ok(())
    } else {
        Err(format!("<{}> has invalid {attr}=\"{v}\"", n.tag_name().name()))
    }
}

fn formula(n: &roxmltree::Node) -> Result<(), String> {
    let name = n.tag_name().name();
    if !FORMULAS.contains(&name) {
        return Err(format!("unexpected element <{name}>"));
    }
    let kids: Vec<_> = elements(n).collect();
    let arity = |lo: usize, hi: usize| {
        if kids.len() < lo || kids.len() > hi {
            Err(format!("<{name}> has {} children", kids.len()))
        } else {
            Ok(())
        }
    };
    let types = ["int", "real", "bool", "int-array", "real-array"];
    match name {
        "forall" => {
            require(n, &["var"])?;
            one_of(n, "type", &types)?;
            arity(1, 1)?;
        }
        "implies" => arity(2, 2)?,
        "and" | "or" => arity(0, usize::MAX)?,
        "not" | "length" => arity(1, 1)?,
        "cmp" => {
            one_of(n, "op", &["eq", "ne", "lt", "le", "gt", "ge"])?;
            arity(2, 2)?;
        }
        "arith" => {
            one_of(n, "op", &["add", "sub", "mul", "div", "neg", "to-real"])?;
            match n.attribute("op") {
                Some("neg" | "to-real") => arity(1, 1)?,
                _ => arity(2, 2)?,
            }
        }
        "var" => {
            require(n, &["name", "state"])?;
            one_of(n, "type", &types)?;
            arity(0, 0)?;
        }
        "const" => {
            one_of(n, "type", &["int", "real", "bool"])?;
            require(n, &["value"])?;
            arity(0, 0)?;
        }
        "select" => arity(2, 2)?,
        "store" => arity(3, 3)?,
        "new-array" => {
            one_of(n, "type", &types)?;
            arity(1, 1)?;
        }
        "array" => {
            one_of(n, "type", &types)?;
        }
        "permut" => {
            let labels = ["Old", "Here", "LoopEntry"];
            one_of(n, "lo-label", &labels)?;
            one_of(n, "hi-label", &labels)?;
            arity(4, 4)?;
        }
        _ => unreachable!(),
    }
    kids.iter().try_for_each(formula)
}
