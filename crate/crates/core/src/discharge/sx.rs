//! Minimal s-expression reader used to check exported documents.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

impl Sx {
    pub fn atom(&self) -> Option<&str> {
        match self {
            Sx::Atom(a) => Some(a),
            Sx::List(_) => None,
        }
    }

    pub fn list(&self) -> Option<&[Sx]> {
        match self {
            Sx::List(l) => Some(l),
            Sx::Atom(_) => None,
        }
    }

    /// Head symbol of a list.
    pub fn head(&self) -> Option<&str> {
        self.list()?.first()?.atom()
    }
}

/// Reads every top-level expression. `;` starts a comment; `|...|` and
/// `"..."` are single atoms.
pub fn parse_all(text: &str) -> Result<Vec<Sx>, String> {
    let mut stack: Vec<Vec<Sx>> = vec![Vec::new()];
    let mut chars = text.char_indices().peekable();
    let mut line = 1;
    while let Some((i, c)) = chars.next() {
        match c {
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            ';' => {
                while let Some((_, d)) = chars.peek() {
                    if *d == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => stack.push(Vec::new()),
            ')' => {
                if stack.len() == 1 {
                    return Err(format!("line {line}: unbalanced `)`"));
                }
                let done = stack.pop().unwrap();
                stack.last_mut().unwrap().push(Sx::List(done));
            }
            '|' | '"' => {
                let mut end = None;
                for (j, d) in chars.by_ref() {
                    if d == '\n' {
                        line += 1;
                    }
                    if d == c {
                        end = Some(j);
                        break;
                    }
                }
                let Some(j) = end else {
                    return Err(format!("line {line}: unterminated `{c}`"));
                };
                stack.last_mut().unwrap().push(Sx::Atom(text[i..=j].to_string()));
            }
            _ => {
                let mut j = i + c.len_utf8();
                while let Some((k, d)) = chars.peek() {
                    if d.is_whitespace() || matches!(d, '(' | ')' | ';' | '"' | '|') {
                        break;
                    }
                    j = *k + d.len_utf8();
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sx::Atom(text[i..j].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return Err(format!("{} unclosed `(`", stack.len() - 1));
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists() {
        let v = parse_all("(a (b |c d|) \"e)\") ; (ignored\n x").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].head(), Some("a"));
        assert_eq!(v[0].list().unwrap()[1].list().unwrap()[1], Sx::Atom("|c d|".into()));
        assert_eq!(v[1], Sx::Atom("x".into()));
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(parse_all("(a (b)").is_err());
        assert!(parse_all("a)").is_err());
    }
}
