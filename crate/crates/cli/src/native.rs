//! Line-oriented debug format.
//!
//! ```text
//! # comment
//! pred P Int Int
//! P(x, y) <- [Q(x)] ; (= y (+ x 1))
//! false <- [P(x, y)] ; (< y x) ; real: r
//! ```
//!
//! Variables take the sorts of the predicate parameters they are passed to.
//! Variables only occurring in the constraint are Bool in formula position
//! and Int otherwise, unless listed after `real:`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use cdd_chc_core::{Formula, Head, PredApp, Sort, System, SystemBuilder};

use crate::error::ParseError;
use crate::sexp::{parse_all, Pos, Sexp, SyntaxError};
use crate::term::{Elab, Unbound};

fn invalid<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Invalid { pos: Pos { line, col }, msg: msg.into() })
}

fn shift(e: ParseError, line: usize, col: usize) -> ParseError {
    let fix = |p: Pos| Pos { line: line + p.line - 1, col: if p.line == 1 { col + p.col - 1 } else { p.col } };
    match e {
        ParseError::Syntax(SyntaxError { pos, msg }) => ParseError::Syntax(SyntaxError { pos: fix(pos), msg }),
        ParseError::Unsupported { pos, what } => ParseError::Unsupported { pos: fix(pos), what },
        ParseError::Invalid { pos, msg } => ParseError::Invalid { pos: fix(pos), msg },
        e => e,
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('|').and_then(|t| t.strip_suffix('|')).unwrap_or(s)
}

/// `P(a, b)` or `P` as an s-expression application.
fn app_sexp(text: &str, line: usize, col: usize) -> Result<Sexp, ParseError> {
    let pos = Pos { line, col };
    let text = text.trim();
    let (name, args) = match text.split_once('(') {
        None => (text, Vec::new()),
        Some((name, rest)) => {
            let Some(inner) = rest.trim_end().strip_suffix(')') else {
                return invalid(line, col, format!("malformed application `{}`", text));
            };
            let args: Vec<&str> = inner.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
            (name.trim(), args)
        }
    };
    if name.is_empty() {
        return invalid(line, col, "missing predicate name");
    }
    let mut items = vec![Sexp::Symbol(unquote(name).to_string(), pos)];
    items.extend(args.into_iter().map(|a| Sexp::Symbol(unquote(a).to_string(), pos)));
    Ok(Sexp::List(items, pos))
}

fn split_apps(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((start, &text[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    if !text[start..].trim().is_empty() {
        out.push((start, &text[start..]));
    }
    out
}

/// Parses the native format into a normalized system.
pub fn parse_native(text: &str) -> Result<System, ParseError> {
    let mut sigs: BTreeMap<String, Vec<Sort>> = BTreeMap::new();
    let mut builder = SystemBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(decl) = trimmed.strip_prefix("pred ") {
            let mut words = decl.split_whitespace();
            let name = unquote(words.next().unwrap_or("")).to_string();
            let mut sorts = Vec::new();
            for w in words {
                sorts.push(match w {
                    "Int" => Sort::Int,
                    "Real" => Sort::Real,
                    "Bool" => Sort::Bool,
                    other => {
                        return Err(ParseError::Unsupported { pos: Pos { line, col: 1 }, what: format!("sort `{}`", other) })
                    }
                });
            }
            builder.declare(&name, &sorts).map_err(|e| ParseError::Invalid { pos: Pos { line, col: 1 }, msg: e.to_string() })?;
            sigs.insert(name, sorts);
            continue;
        }
        let Some((head_text, rest)) = raw.split_once("<-") else {
            return invalid(line, 1, "expected `head <- [body] ; constraint`");
        };
        let open = head_text.len() + 2 + rest.find('[').ok_or(ParseError::Invalid {
            pos: Pos { line, col: head_text.len() + 3 },
            msg: "expected `[`".into(),
        })?;
        let close = raw[open..].find(']').map(|j| open + j).ok_or(ParseError::Invalid {
            pos: Pos { line, col: open + 1 },
            msg: "unclosed `[`".into(),
        })?;
        let tail = &raw[close + 1..];
        let (constraint_text, reals) = match tail.split_once("; real:") {
            Some((c, r)) => (c, r.split_whitespace().map(|s| unquote(s).to_string()).collect()),
            None => (tail, BTreeSet::new()),
        };
        let mut elab = Elab::new(&sigs, Unbound::Infer { reals });
        let head = match head_text.trim() {
            "false" => None,
            h => {
                let e = app_sexp(h, line, 1)?;
                Some(elab.app(&e)?)
            }
        };
        let mut body: Vec<PredApp> = Vec::new();
        for (off, a) in split_apps(&raw[open + 1..close]) {
            let e = app_sexp(a, line, open + 2 + off)?;
            body.push(elab.app(&e)?);
        }
        let ctext = constraint_text.trim_start();
        let constraint = match ctext.strip_prefix(';') {
            None if ctext.trim().is_empty() => Formula::True,
            None => return invalid(line, close + 2, "expected `;` before the constraint"),
            Some(c) => {
                let col = raw.len() - tail.len() + (constraint_text.len() - ctext.len()) + 2;
                let es = parse_all(c).map_err(|e| shift(e.into(), line, col))?;
                match es.as_slice() {
                    [] => Formula::True,
                    [e] => elab.formula(e).map_err(|e| shift(e, line, col))?,
                    _ => return invalid(line, col, "expected a single constraint term"),
                }
            }
        };
        let constraint = Formula::and(std::iter::once(constraint).chain(elab.extra));
        builder.clause(head, body, constraint);
    }
    Ok(builder.build()?)
}

/// Prints `s` in the native format.
pub fn print_native(s: &System) -> String {
    let mut out = String::new();
    for p in s.preds() {
        out.push_str("pred ");
        out.push_str(&p.name);
        for sort in p.sorts() {
            write!(out, " {}", sort).unwrap();
        }
        out.push('\n');
    }
    for c in s.clauses() {
        match &c.head {
            Head::False => out.push_str("false"),
            Head::App(a) => write!(out, "{}", a).unwrap(),
        }
        out.push_str(" <- [");
        let apps: Vec<String> = c.body.iter().map(ToString::to_string).collect();
        out.push_str(&apps.join(", "));
        write!(out, "] ; {}", c.constraint).unwrap();
        let in_args: BTreeSet<_> = c.head_app().into_iter().chain(&c.body).flat_map(|a| a.args.iter()).collect();
        let reals: Vec<String> = c
            .constraint
            .vocab()
            .into_iter()
            .filter(|v| v.sort == Sort::Real && !in_args.contains(v))
            .map(|v| v.to_string())
            .collect();
        if !reals.is_empty() {
            write!(out, " ; real: {}", reals.join(" ")).unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdd_chc_core::fixtures;

    #[test]
    fn reads_debug_lines() {
        let s = parse_native(
            "# diamond\npred A Int\npred B Int\nA(x) <- [] ; (= x 0)\nB(x) <- [A(x), A(y)] ; (and (< y x) p)\nfalse <- [B(x)] ; (< x r) ; real: r\n",
        )
        .unwrap();
        assert_eq!(s.clauses().len(), 3);
        let b = s.clause(2).unwrap();
        assert_eq!(b.body.len(), 2);
        let sorts: Vec<Sort> = b.constraint.vocab().iter().map(|v| v.sort).collect();
        assert!(sorts.contains(&Sort::Bool));
        let q = s.query();
        assert!(q.constraint.vocab().iter().any(|v| v.sort == Sort::Real));
    }

    #[test]
    fn print_then_parse_is_identity() {
        for s in [fixtures::doubled_abs(), fixtures::diamond(), fixtures::counter_safe(), fixtures::nested_diamond(2)] {
            let text = print_native(&s);
            assert_eq!(parse_native(&text).unwrap(), s, "{}", text);
        }
    }

    #[test]
    fn errors_point_into_the_line() {
        let e = parse_native("pred P Int\nP(x) <- [] ; (= x (* x x))\n").unwrap_err();
        assert!(matches!(e, ParseError::Unsupported { pos, .. } if pos.line == 2 && pos.col == 19), "{:?}", e);
        let e = parse_native("pred P Int\nP(x) <- [Q(x)] ; true\n").unwrap_err();
        assert!(matches!(e, ParseError::Invalid { pos, .. } if pos.line == 2), "{:?}", e);
        assert_eq!(parse_native("pred P Int\nP(x) <- [] ; true\n").unwrap_err(), ParseError::NoQuery);
    }
}
