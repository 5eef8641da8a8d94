//! Solutions as `define-fun` blocks over canonical predicate parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use cdd_chc_core::solver::Solution;
use cdd_chc_core::{Sort, System};

use crate::error::ParseError;
use crate::horn::Sym;
use crate::sexp::{parse_all, Sexp};
use crate::term::{parse_sort, Elab, Unbound};

/// One `define-fun` per interpreted predicate of `s`.
pub fn print_solution(s: &System, sigma: &Solution) -> String {
    let mut out = String::new();
    for (name, f) in sigma {
        let Ok(pred) = s.pred(name) else { continue };
        let params: Vec<String> = pred.params.iter().map(|p| format!("({} {})", p, p.sort)).collect();
        writeln!(out, "(define-fun {} ({}) Bool {})", Sym(name), params.join(" "), f).unwrap();
    }
    out
}

fn collect<'a>(e: &'a Sexp, out: &mut Vec<&'a Sexp>) -> Result<(), ParseError> {
    match e {
        Sexp::Symbol(s, _) if s == "sat" => Ok(()),
        Sexp::List(items, _) => match e.head() {
            Some("define-fun") => {
                out.push(e);
                Ok(())
            }
            Some("model") => items[1..].iter().try_for_each(|i| collect(i, out)),
            None => items.iter().try_for_each(|i| collect(i, out)),
            Some(other) => Err(ParseError::Unsupported { pos: e.pos(), what: format!("`{}` in a solution", other) }),
        },
        _ => Err(ParseError::Invalid { pos: e.pos(), msg: "expected `define-fun`".into() }),
    }
}

/// Reads `define-fun` entries (optionally after `sat` or inside `(model ...)`)
/// as interpretations of the predicates of `s`. Parameter names are free;
/// they are mapped positionally onto the canonical parameters.
pub fn parse_solution(s: &System, text: &str) -> Result<Solution, ParseError> {
    let exprs = parse_all(text)?;
    let mut defs = Vec::new();
    for e in &exprs {
        collect(e, &mut defs)?;
    }
    let sigs: BTreeMap<String, Vec<Sort>> = BTreeMap::new();
    let mut sigma = Solution::new();
    for d in defs {
        let items = d.list().unwrap();
        let [_, name, params, range, body] = items else {
            return Err(ParseError::Invalid { pos: d.pos(), msg: "malformed define-fun".into() });
        };
        let Some(name) = name.symbol() else {
            return Err(ParseError::Invalid { pos: items[1].pos(), msg: "expected a predicate name".into() });
        };
        let pred = s.pred(name).map_err(|_| ParseError::Invalid { pos: d.pos(), msg: format!("unknown predicate `{}`", name) })?;
        if parse_sort(range)? != Sort::Bool {
            return Err(ParseError::Invalid { pos: range.pos(), msg: "interpretation must be Bool".into() });
        }
        let ps = params.list().unwrap_or(&[]);
        if ps.len() != pred.arity() {
            return Err(ParseError::Invalid {
                pos: params.pos(),
                msg: format!("`{}` has {} parameters, got {}", name, pred.arity(), ps.len()),
            });
        }
        let mut elab = Elab::new(&sigs, Unbound::Reject);
        for (p, canon) in ps.iter().zip(&pred.params) {
            match p.list() {
                Some([Sexp::Symbol(n, _), sort]) if parse_sort(sort)? == canon.sort => elab.bind_as(n, canon.clone()),
                _ => return Err(ParseError::Invalid { pos: p.pos(), msg: format!("parameter must have sort {}", canon.sort) }),
            }
        }
        let f = elab.formula(body)?;
        sigma.insert(name.to_string(), f);
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdd_chc_core::fixtures;
    use cdd_chc_core::interpolate::Builtin;
    use cdd_chc_core::solver::{is_valid, solve_recursion_free};

    #[test]
    fn empty_solution_prints_nothing() {
        assert_eq!(print_solution(&fixtures::doubled_abs(), &Solution::new()), "");
    }

    #[test]
    fn round_trips_a_computed_solution() {
        let s = fixtures::doubled_abs();
        let sigma = solve_recursion_free(&s, &mut Builtin::default()).unwrap().unwrap();
        let text = print_solution(&s, &sigma);
        assert_eq!(text.lines().count(), 6);
        let back = parse_solution(&s, &format!("sat\n(model\n{})", text)).unwrap();
        assert_eq!(back, sigma);
        assert!(is_valid(&s, &back).unwrap());
    }

    #[test]
    fn parameter_names_are_positional() {
        let s = fixtures::doubled_abs();
        let sigma = parse_solution(&s, "(define-fun L9 ((n Int) (abs1 Int)) Bool (>= abs1 0))").unwrap();
        let f = &sigma["L9"];
        let names: Vec<String> = f.vocab().into_iter().map(|v| v.name).collect();
        assert_eq!(names, vec!["L9!1".to_string()]);
        assert!(parse_solution(&s, "(define-fun L9 ((n Int)) Bool true)").is_err());
        assert!(parse_solution(&s, "(define-fun nope () Bool true)").is_err());
    }
}
