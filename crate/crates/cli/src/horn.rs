//! SMT-LIB2 HORN scripts: `declare-fun` for predicates and one `assert` per
//! clause.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use cdd_chc_core::formula::write_symbol;
use cdd_chc_core::{Formula, Head, PredApp, Sort, System, SystemBuilder, Var};

use crate::error::ParseError;
use crate::sexp::{parse_all, Sexp};
use crate::term::{parse_sort, Elab, Unbound};

enum HeadKind {
    Unset,
    Query,
    App(PredApp),
    /// `true` head: the clause is trivially valid.
    Valid,
}

struct Parts {
    head: HeadKind,
    body: Vec<PredApp>,
    cons: Vec<Formula>,
}

fn unsupported<T>(e: &Sexp, what: &str) -> Result<T, ParseError> {
    Err(ParseError::Unsupported { pos: e.pos(), what: what.to_string() })
}

fn invalid<T>(e: &Sexp, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Invalid { pos: e.pos(), msg: msg.into() })
}

fn args(e: &Sexp) -> &[Sexp] {
    e.list().map(|l| &l[1..]).unwrap_or(&[])
}

fn bind_sorted_vars(elab: &mut Elab<'_>, binders: &Sexp) -> Result<(), ParseError> {
    let Some(items) = binders.list() else { return invalid(binders, "malformed binder list") };
    for b in items {
        match b.list() {
            Some([Sexp::Symbol(name, _), sort]) => elab.bind_var(Var::new(name.clone(), parse_sort(sort)?)),
            _ => return invalid(b, "malformed binder"),
        }
    }
    Ok(())
}

impl Parts {
    fn set_head(&mut self, e: &Sexp, head: HeadKind) -> Result<(), ParseError> {
        if !matches!(self.head, HeadKind::Unset) {
            return unsupported(e, "more than one positive predicate literal");
        }
        self.head = head;
        Ok(())
    }

    fn clause(&mut self, elab: &mut Elab<'_>, e: &Sexp) -> Result<(), ParseError> {
        let a = args(e);
        match e.head() {
            Some("forall") if a.len() == 2 => {
                bind_sorted_vars(elab, &a[0])?;
                self.clause(elab, &a[1])
            }
            Some("let") if a.len() == 2 => {
                elab.push_let(&a[0])?;
                self.clause(elab, &a[1])
            }
            Some("=>") if a.len() >= 2 => {
                for b in &a[..a.len() - 1] {
                    self.body(elab, b)?;
                }
                self.head(elab, &a[a.len() - 1])
            }
            Some("not") if a.len() == 1 => {
                self.body(elab, &a[0])?;
                self.set_head(e, HeadKind::Query)
            }
            Some("or") => {
                for lit in a {
                    let negated = (lit.head() == Some("not")).then(|| args(lit)).filter(|x| x.len() == 1);
                    match negated {
                        Some([inner]) if elab.is_app(inner)? => {
                            let app = elab.app(inner)?;
                            self.body.push(app);
                        }
                        _ if elab.is_app(lit)? => {
                            let app = elab.app(lit)?;
                            self.set_head(lit, HeadKind::App(app))?;
                        }
                        _ => {
                            let f = elab.formula(lit)?;
                            self.cons.push(Formula::not(f));
                        }
                    }
                }
                if matches!(self.head, HeadKind::Unset) {
                    self.head = HeadKind::Query;
                }
                Ok(())
            }
            Some("exists") => unsupported(e, "existential quantifier in a clause head"),
            _ => self.head(elab, e),
        }
    }

    fn head(&mut self, elab: &mut Elab<'_>, e: &Sexp) -> Result<(), ParseError> {
        let a = args(e);
        match (e.symbol(), e.head()) {
            (Some("false"), _) => self.set_head(e, HeadKind::Query),
            (Some("true"), _) => self.set_head(e, HeadKind::Valid),
            (_, Some("forall")) if a.len() == 2 => {
                bind_sorted_vars(elab, &a[0])?;
                self.head(elab, &a[1])
            }
            (_, Some("let")) if a.len() == 2 => {
                elab.push_let(&a[0])?;
                self.head(elab, &a[1])
            }
            (_, Some("=>")) if a.len() >= 2 => {
                for b in &a[..a.len() - 1] {
                    self.body(elab, b)?;
                }
                self.head(elab, &a[a.len() - 1])
            }
            (_, Some("exists")) => unsupported(e, "existential quantifier in a clause head"),
            _ if elab.is_app(e)? => {
                let app = elab.app(e)?;
                self.set_head(e, HeadKind::App(app))
            }
            _ => {
                let f = elab.formula(e)?;
                self.cons.push(Formula::not(f));
                self.set_head(e, HeadKind::Query)
            }
        }
    }

    fn body(&mut self, elab: &mut Elab<'_>, e: &Sexp) -> Result<(), ParseError> {
        let a = args(e);
        match (e.symbol(), e.head()) {
            (Some("true"), _) => Ok(()),
            (_, Some("and")) => a.iter().try_for_each(|b| self.body(elab, b)),
            (_, Some("let")) if a.len() == 2 => {
                elab.push_let(&a[0])?;
                self.body(elab, &a[1])
            }
            (_, Some("exists")) if a.len() == 2 => {
                bind_sorted_vars(elab, &a[0])?;
                self.body(elab, &a[1])
            }
            (_, Some("forall")) => unsupported(e, "universal quantifier in a clause body"),
            _ if elab.is_app(e)? => {
                let app = elab.app(e)?;
                self.body.push(app);
                Ok(())
            }
            _ => {
                let f = elab.formula(e)?;
                self.cons.push(f);
                Ok(())
            }
        }
    }
}

/// Parses an SMT-LIB2 HORN script into a normalized system.
pub fn parse_horn(text: &str) -> Result<System, ParseError> {
    let mut sigs: BTreeMap<String, Vec<Sort>> = BTreeMap::new();
    let mut builder = SystemBuilder::new();
    for cmd in parse_all(text)? {
        let a = args(&cmd);
        match cmd.head() {
            Some("set-logic") => match a.first().and_then(Sexp::symbol) {
                Some("HORN") => {}
                _ => return unsupported(&cmd, "logic other than HORN"),
            },
            Some("set-info" | "set-option" | "check-sat" | "get-model" | "exit" | "get-info") => {}
            Some("declare-fun") if a.len() == 3 => {
                let Some(name) = a[0].symbol() else { return invalid(&a[0], "expected a predicate name") };
                let Some(arg_sorts) = a[1].list() else { return invalid(&a[1], "expected a sort list") };
                if parse_sort(&a[2])? != Sort::Bool {
                    return unsupported(&a[2], "uninterpreted function with a non-Bool range");
                }
                let sorts = arg_sorts.iter().map(parse_sort).collect::<Result<Vec<_>, _>>()?;
                declare(&mut builder, &mut sigs, &cmd, name, sorts)?;
            }
            Some("declare-const") if a.len() == 2 => {
                let Some(name) = a[0].symbol() else { return invalid(&a[0], "expected a predicate name") };
                if parse_sort(&a[1])? != Sort::Bool {
                    return unsupported(&a[1], "free constant with a non-Bool sort");
                }
                declare(&mut builder, &mut sigs, &cmd, name, Vec::new())?;
            }
            Some("assert") if a.len() == 1 => {
                let mut elab = Elab::new(&sigs, Unbound::Reject);
                let mut parts = Parts { head: HeadKind::Unset, body: Vec::new(), cons: Vec::new() };
                parts.clause(&mut elab, &a[0])?;
                let constraint = Formula::and(parts.cons.into_iter().chain(elab.extra));
                match parts.head {
                    HeadKind::Valid => {}
                    HeadKind::Query | HeadKind::Unset => {
                        builder.clause(None, parts.body, constraint);
                    }
                    HeadKind::App(h) => {
                        builder.clause(Some(h), parts.body, constraint);
                    }
                }
            }
            Some(other) => return unsupported(&cmd, &format!("command `{}`", other)),
            None => return invalid(&cmd, "expected a command"),
        }
    }
    Ok(builder.build()?)
}

fn declare(
    builder: &mut SystemBuilder,
    sigs: &mut BTreeMap<String, Vec<Sort>>,
    at: &Sexp,
    name: &str,
    sorts: Vec<Sort>,
) -> Result<(), ParseError> {
    builder.declare(name, &sorts).map_err(|e| ParseError::Invalid { pos: at.pos(), msg: e.to_string() })?;
    sigs.insert(name.to_string(), sorts);
    Ok(())
}

pub(crate) struct Sym<'a>(pub &'a str);

impl fmt::Display for Sym<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbol(f, self.0)
    }
}

pub(crate) struct App<'a>(pub &'a PredApp);

impl fmt::Display for App<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.args.is_empty() {
            return write!(f, "{}", Sym(&self.0.pred));
        }
        write!(f, "({}", Sym(&self.0.pred))?;
        for a in &self.0.args {
            write!(f, " {}", a)?;
        }
        f.write_str(")")
    }
}

/// Prints `s` as an SMT-LIB2 HORN script that [`parse_horn`] reads back
/// to the same system.
pub fn print_horn(s: &System) -> String {
    let mut out = String::from("(set-logic HORN)\n");
    for p in s.preds() {
        let sorts: Vec<String> = p.sorts().iter().map(ToString::to_string).collect();
        writeln!(out, "(declare-fun {} ({}) Bool)", Sym(&p.name), sorts.join(" ")).unwrap();
    }
    for c in s.clauses() {
        let mut parts: Vec<String> = c.body.iter().map(|a| App(a).to_string()).collect();
        match &c.constraint {
            Formula::True => {}
            Formula::And(fs) => parts.extend(fs.iter().map(ToString::to_string)),
            f => parts.push(f.to_string()),
        }
        let head = match &c.head {
            Head::False => "false".to_string(),
            Head::App(a) => App(a).to_string(),
        };
        let matrix = match parts.len() {
            0 => head,
            1 => format!("(=> {} {})", parts[0], head),
            _ => format!("(=> (and {}) {})", parts.join(" "), head),
        };
        let vars = c.vars();
        if vars.is_empty() {
            writeln!(out, "(assert {})", matrix).unwrap();
        } else {
            let binders: Vec<String> = vars.iter().map(|v| format!("({} {})", v, v.sort)).collect();
            writeln!(out, "(assert (forall ({}) {}))", binders.join(" "), matrix).unwrap();
        }
    }
    out.push_str("(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdd_chc_core::fixtures;
    use cdd_chc_core::sat::{check_sat, Limits};

    pub(crate) const DOUBLED_ABS: &str = include_str!("../fixtures/doubled_abs.smt2");

    #[test]
    fn golden_fixture_matches_builder_system() {
        let s = parse_horn(DOUBLED_ABS).unwrap();
        assert_eq!(s.num_preds(), 6);
        assert_eq!(s.clauses().len(), 8);
        assert_eq!(s.query().id, 8);
        let expected = fixtures::doubled_abs();
        assert_eq!(s.classify(), expected.classify());
        for (a, b) in s.clauses().iter().zip(expected.clauses()) {
            assert_eq!(a.head_pred(), b.head_pred());
            let pa: Vec<&str> = a.body.iter().map(|x| x.pred.as_str()).collect();
            let pb: Vec<&str> = b.body.iter().map(|x| x.pred.as_str()).collect();
            assert_eq!(pa, pb);
        }
    }

    #[test]
    fn query_only_system() {
        let s = parse_horn("(set-logic HORN)\n(assert (forall ((x Int)) (=> (> x 0) false)))").unwrap();
        assert_eq!(s.num_preds(), 0);
        let q = s.query();
        assert!(q.body.is_empty());
        assert_eq!(q.constraint.to_string(), "(> c1!x 0)");
    }

    #[test]
    fn alternative_clause_shapes() {
        let text = "(set-logic HORN)
            (declare-fun P (Int) Bool)
            (declare-fun Q (Int Bool) Bool)
            (assert (forall ((x Int)) (P 0)))
            (assert (forall ((x Int) (b Bool)) (or (not (P x)) (not b) (Q (+ x 1) b))))
            (assert (forall ((x Int)) (=> (P x) (>= x 0))))
            (assert (forall ((x Int) (b Bool)) (not (and (Q x b) (< x 0)))))
            (assert (forall ((x Int)) (=> (let ((y (* 2 x))) (and (P x) (= y 4))) true)))";
        let s = parse_horn(text).unwrap();
        // two queries merged through the 0-ary predicate
        assert!(s.has_pred(cdd_chc_core::chc::MERGED_QUERY_PRED));
        assert_eq!(s.clauses().len(), 5);
        let step = s.clause(2).unwrap();
        assert_eq!(step.head_pred(), Some("Q"));
        assert_eq!(step.body.len(), 1);
        let fact = s.clause(1).unwrap();
        assert!(check_sat(&fact.constraint, &Limits::default()).unwrap().is_sat());
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_horn("(set-logic HORN)\n(declare-fun P (Int) Bool)\n(assert (forall ((x Int)) (=> (P x x) false)))")
            .unwrap_err();
        assert!(matches!(e, ParseError::Invalid { pos, .. } if pos.line == 3 && pos.col == 31), "{:?}", e);
        let e = parse_horn("(set-logic QF_LIA)").unwrap_err();
        assert!(matches!(e, ParseError::Unsupported { .. }));
        let e = parse_horn("(declare-fun P (Int) Bool)\n(assert (forall ((x Int)) (P x)))").unwrap_err();
        assert_eq!(e, ParseError::NoQuery);
        let e = parse_horn("(declare-fun P (Int) Bool)\n(assert (forall ((x Int)) (=> (forall ((y Int)) (P y)) false)))")
            .unwrap_err();
        assert!(matches!(e, ParseError::Unsupported { .. }));
        let e = parse_horn("(assert (forall ((x (Array Int Int))) false))").unwrap_err();
        assert!(matches!(e, ParseError::Unsupported { .. }));
        let e = parse_horn("(assert (forall ((x Int)) (=> (> x 0) false))").unwrap_err();
        assert!(matches!(e, ParseError::Syntax(_)));
    }

    #[test]
    fn print_then_parse_is_identity() {
        for s in [fixtures::doubled_abs(), fixtures::diamond(), fixtures::counter(), fixtures::duplicate_occurrence()] {
            let text = print_horn(&s);
            assert_eq!(parse_horn(&text).unwrap(), s, "{}", text);
        }
    }
}
