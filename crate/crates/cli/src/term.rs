//! Elaboration of SMT-LIB2 terms into formulas and linear expressions.
//!
//! Arithmetic terms elaborate to guarded cases so that `ite` can be lifted
//! out of atoms without fresh variables.

use std::collections::{BTreeMap, BTreeSet};

use cdd_chc_core::rational::from_i64;
use cdd_chc_core::{Formula, LinExpr, PredApp, Rational, Rel, Sort, Var};
use num_traits::{One, Zero};

use crate::error::ParseError;
use crate::sexp::{Pos, Sexp};

/// `guard → lin + k`
type Case = (Formula, LinExpr, Rational);

#[derive(Clone, Debug)]
pub(crate) enum Binding {
    Var(Var),
    Bool(Formula),
    Arith(Vec<Case>),
    App(PredApp),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Bool,
    Arith,
    App,
}

/// How unbound symbols are treated.
#[derive(Clone, Debug)]
pub(crate) enum Unbound {
    Reject,
    /// Declare on first use: Bool in formula position, otherwise Int unless
    /// listed as Real.
    Infer { reals: BTreeSet<String> },
}

pub(crate) struct Elab<'a> {
    scope: Vec<(String, Binding)>,
    preds: &'a BTreeMap<String, Vec<Sort>>,
    unbound: Unbound,
    pub inferred: BTreeMap<String, Var>,
    /// Defining constraints of fresh argument variables.
    pub extra: Vec<Formula>,
    fresh: usize,
}

fn unsupported<T>(pos: Pos, what: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Unsupported { pos, what: what.into() })
}

fn invalid<T>(pos: Pos, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError::Invalid { pos, msg: msg.into() })
}

pub(crate) fn parse_sort(e: &Sexp) -> Result<Sort, ParseError> {
    match e.symbol() {
        Some("Int") => Ok(Sort::Int),
        Some("Real") => Ok(Sort::Real),
        Some("Bool") => Ok(Sort::Bool),
        _ => unsupported(e.pos(), format!("sort `{}`", e)),
    }
}

fn iff(a: Formula, b: Formula) -> Formula {
    Formula::or([Formula::and([a.clone(), b.clone()]), Formula::and([Formula::not(a), Formula::not(b)])])
}

fn add(a: &Case, b: &Case, sign: i64) -> Case {
    let mut lin = a.1.clone();
    lin.add_scaled(&b.1, &from_i64(sign));
    (Formula::and([a.0.clone(), b.0.clone()]), lin, &a.2 + &b.2 * from_i64(sign))
}

fn scale(c: &Case, f: &Rational) -> Case {
    let mut lin = c.1.clone();
    lin.scale(f);
    (c.0.clone(), lin, &c.2 * f)
}

fn live(cases: Vec<Case>) -> Vec<Case> {
    cases.into_iter().filter(|c| c.0 != Formula::False).collect()
}

pub(crate) fn parse_rational(e: &Sexp) -> Option<Rational> {
    match e {
        Sexp::Numeral(s, _) => s.parse::<num_bigint::BigInt>().ok().map(Rational::from_integer),
        Sexp::Decimal(s, _) => {
            let (a, b) = s.split_once('.')?;
            let num: num_bigint::BigInt = format!("{}{}", a, b).parse().ok()?;
            let den = num_traits::pow(num_bigint::BigInt::from(10), b.len());
            Some(Rational::new(num, den))
        }
        _ => None,
    }
}

impl<'a> Elab<'a> {
    pub fn new(preds: &'a BTreeMap<String, Vec<Sort>>, unbound: Unbound) -> Self {
        Elab { scope: Vec::new(), preds, unbound, inferred: BTreeMap::new(), extra: Vec::new(), fresh: 0 }
    }

    pub fn bind_var(&mut self, v: Var) {
        self.scope.push((v.name.clone(), Binding::Var(v)));
    }

    /// Binds `name` to a variable named differently.
    pub fn bind_as(&mut self, name: &str, v: Var) {
        self.scope.push((name.to_string(), Binding::Var(v)));
    }

    pub fn mark(&self) -> usize {
        self.scope.len()
    }

    pub fn restore(&mut self, mark: usize) {
        self.scope.truncate(mark);
    }

    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scope.iter().rev().find(|(n, _)| n == name).map(|(_, b)| b)
    }

    fn infer_var(&mut self, name: &str, sort: Sort) -> Option<Var> {
        let Unbound::Infer { reals } = &self.unbound else { return None };
        let sort = if sort.is_arith() && reals.contains(name) { Sort::Real } else { sort };
        Some(self.inferred.entry(name.to_string()).or_insert_with(|| Var::new(name, sort)).clone())
    }

    pub fn is_pred(&self, name: &str) -> bool {
        self.preds.contains_key(name)
    }

    fn kind(&mut self, e: &Sexp) -> Result<Option<Kind>, ParseError> {
        Ok(Some(match e {
            Sexp::Numeral(..) | Sexp::Decimal(..) => Kind::Arith,
            Sexp::Str(..) => return invalid(e.pos(), "string literal in a term"),
            Sexp::Symbol(s, _) => match self.lookup(s) {
                Some(Binding::Var(v)) if v.sort == Sort::Bool => Kind::Bool,
                Some(Binding::Var(_)) | Some(Binding::Arith(_)) => Kind::Arith,
                Some(Binding::Bool(_)) => Kind::Bool,
                Some(Binding::App(_)) => Kind::App,
                None if s == "true" || s == "false" => Kind::Bool,
                None if self.is_pred(s) => Kind::App,
                None => match self.inferred.get(s.as_str()) {
                    Some(v) if v.sort == Sort::Bool => Kind::Bool,
                    Some(_) => Kind::Arith,
                    None => return Ok(None),
                },
            },
            Sexp::List(items, pos) => {
                let Some(head) = e.head() else { return invalid(*pos, "expected a term") };
                match head {
                    "+" | "-" | "*" | "/" | "to_real" | "abs" => Kind::Arith,
                    "ite" if items.len() == 4 => return self.kind(&items[2]),
                    "!" if items.len() >= 2 => return self.kind(&items[1]),
                    "let" if items.len() == 3 => {
                        let mark = self.mark();
                        self.push_let(&items[1])?;
                        let k = self.kind(&items[2]);
                        self.restore(mark);
                        return k;
                    }
                    h if self.is_pred(h) && self.lookup(h).is_none() => Kind::App,
                    _ => Kind::Bool,
                }
            }
        }))
    }

    /// Elaborates the parallel bindings of a `let` and pushes them.
    pub fn push_let(&mut self, bindings: &Sexp) -> Result<(), ParseError> {
        let Some(items) = bindings.list() else { return invalid(bindings.pos(), "malformed let bindings") };
        let mut new = Vec::with_capacity(items.len());
        for b in items {
            let (name, term) = match b.list() {
                Some([Sexp::Symbol(n, _), t]) => (n.clone(), t),
                _ => return invalid(b.pos(), "malformed let binding"),
            };
            let binding = match self.kind(term)? {
                Some(Kind::Bool) => Binding::Bool(self.formula(term)?),
                Some(Kind::App) => Binding::App(self.app(term)?),
                Some(Kind::Arith) | None => Binding::Arith(self.arith(term)?),
            };
            new.push((name, binding));
        }
        self.scope.extend(new);
        Ok(())
    }

    pub fn arith(&mut self, e: &Sexp) -> Result<Vec<Case>, ParseError> {
        if let Some(k) = parse_rational(e) {
            return Ok(vec![(Formula::True, LinExpr::new(), k)]);
        }
        match e {
            Sexp::Symbol(s, pos) => match self.lookup(s).cloned() {
                Some(Binding::Var(v)) if v.sort.is_arith() => Ok(vec![(Formula::True, LinExpr::var(v), Rational::zero())]),
                Some(Binding::Arith(c)) => Ok(c),
                Some(_) => invalid(*pos, format!("`{}` is not arithmetic", s)),
                None => match self.infer_var(s, Sort::Int) {
                    Some(v) if v.sort.is_arith() => Ok(vec![(Formula::True, LinExpr::var(v), Rational::zero())]),
                    Some(_) => invalid(*pos, format!("`{}` is not arithmetic", s)),
                    None => invalid(*pos, format!("unknown symbol `{}`", s)),
                },
            },
            Sexp::List(items, pos) => {
                let head = e.head().unwrap_or("");
                let args = &items[1.min(items.len())..];
                match head {
                    "+" | "-" if !args.is_empty() => {
                        let mut acc = self.arith(&args[0])?;
                        if head == "-" && args.len() == 1 {
                            return Ok(acc.iter().map(|c| scale(c, &from_i64(-1))).collect());
                        }
                        let sign = if head == "-" { -1 } else { 1 };
                        for a in &args[1..] {
                            let rhs = self.arith(a)?;
                            acc = live(acc.iter().flat_map(|x| rhs.iter().map(move |y| add(x, y, sign))).collect());
                        }
                        Ok(acc)
                    }
                    "*" if !args.is_empty() => {
                        let mut acc = self.arith(&args[0])?;
                        for a in &args[1..] {
                            let rhs = self.arith(a)?;
                            let mut next = Vec::new();
                            for x in &acc {
                                for y in &rhs {
                                    let g = Formula::and([x.0.clone(), y.0.clone()]);
                                    let c = if x.1.is_empty() {
                                        scale(&(g, y.1.clone(), y.2.clone()), &x.2)
                                    } else if y.1.is_empty() {
                                        scale(&(g, x.1.clone(), x.2.clone()), &y.2)
                                    } else {
                                        return unsupported(*pos, "nonlinear multiplication");
                                    };
                                    next.push(c);
                                }
                            }
                            acc = live(next);
                        }
                        Ok(acc)
                    }
                    "/" if args.len() >= 2 => {
                        let mut acc = self.arith(&args[0])?;
                        for a in &args[1..] {
                            let d = match self.arith(a)?.as_slice() {
                                [(Formula::True, l, k)] if l.is_empty() && !k.is_zero() => k.clone(),
                                _ => return unsupported(a.pos(), "division by a non-constant"),
                            };
                            let inv = Rational::one() / d;
                            acc = acc.iter().map(|c| scale(c, &inv)).collect();
                        }
                        Ok(acc)
                    }
                    "to_real" | "!" if !args.is_empty() => self.arith(&args[0]),
                    "abs" if args.len() == 1 => {
                        let mut out = Vec::new();
                        for (g, l, k) in self.arith(&args[0])? {
                            let nonneg = Formula::atom(l.clone(), Rel::Ge, -k.clone());
                            out.push((Formula::and([g.clone(), nonneg.clone()]), l.clone(), k.clone()));
                            out.push(scale(&(Formula::and([g, Formula::not(nonneg)]), l, k), &from_i64(-1)));
                        }
                        Ok(live(out))
                    }
                    "ite" if args.len() == 3 => {
                        let c = self.formula(&args[0])?;
                        let mut out = Vec::new();
                        for (guard, branch) in [(c.clone(), &args[1]), (Formula::not(c), &args[2])] {
                            for (g, l, k) in self.arith(branch)? {
                                out.push((Formula::and([guard.clone(), g]), l, k));
                            }
                        }
                        Ok(live(out))
                    }
                    "let" if args.len() == 2 => {
                        let mark = self.mark();
                        self.push_let(&args[0])?;
                        let r = self.arith(&args[1]);
                        self.restore(mark);
                        r
                    }
                    "div" | "mod" | "to_int" | "is_int" => unsupported(*pos, format!("integer operator `{}`", head)),
                    "" => invalid(*pos, "expected a term"),
                    h => unsupported(*pos, format!("arithmetic function `{}`", h)),
                }
            }
            _ => invalid(e.pos(), "expected an arithmetic term"),
        }
    }

    fn compare(&mut self, rel: Rel, a: &Sexp, b: &Sexp) -> Result<Formula, ParseError> {
        let xs = self.arith(a)?;
        let ys = self.arith(b)?;
        let mut out = Vec::new();
        for (g1, l1, k1) in &xs {
            for (g2, l2, k2) in &ys {
                let mut lhs = l1.clone();
                lhs.add_scaled(l2, &from_i64(-1));
                out.push(Formula::and([g1.clone(), g2.clone(), Formula::atom(lhs, rel, k2 - k1)]));
            }
        }
        Ok(Formula::or(out))
    }

    fn symbol_formula(&mut self, s: &str, pos: Pos) -> Result<Formula, ParseError> {
        match self.lookup(s).cloned() {
            Some(Binding::Var(v)) if v.sort == Sort::Bool => Ok(Formula::var(v)),
            Some(Binding::Bool(f)) => Ok(f),
            Some(Binding::App(_)) => unsupported(pos, "predicate application under a connective"),
            Some(_) => invalid(pos, format!("`{}` is not Boolean", s)),
            None if s == "true" => Ok(Formula::True),
            None if s == "false" => Ok(Formula::False),
            None if self.is_pred(s) => unsupported(pos, "predicate application under a connective"),
            None => match self.infer_var(s, Sort::Bool) {
                Some(v) if v.sort == Sort::Bool => Ok(Formula::var(v)),
                Some(_) => invalid(pos, format!("`{}` is not Boolean", s)),
                None => invalid(pos, format!("unknown symbol `{}`", s)),
            },
        }
    }

    pub fn formula(&mut self, e: &Sexp) -> Result<Formula, ParseError> {
        let (items, pos) = match e {
            Sexp::Symbol(s, pos) => return self.symbol_formula(s, *pos),
            Sexp::List(items, pos) if !items.is_empty() => (items, *pos),
            _ => return invalid(e.pos(), "expected a Boolean term"),
        };
        let Some(head) = items[0].symbol() else { return invalid(pos, "expected a Boolean term") };
        let args = &items[1..];
        let chain = |this: &mut Self, rel: Rel| -> Result<Formula, ParseError> {
            let mut parts = Vec::new();
            for w in args.windows(2) {
                parts.push(this.compare(rel, &w[0], &w[1])?);
            }
            Ok(Formula::and(parts))
        };
        let bools = |this: &mut Self| args.iter().map(|a| this.formula(a)).collect::<Result<Vec<_>, _>>();
        match head {
            "not" if args.len() == 1 => Ok(Formula::not(self.formula(&args[0])?)),
            "and" => Ok(Formula::and(bools(self)?)),
            "or" => Ok(Formula::or(bools(self)?)),
            "=>" if args.len() >= 2 => {
                let fs = bools(self)?;
                let mut it = fs.into_iter().rev();
                let mut acc = it.next().unwrap();
                for a in it {
                    acc = Formula::implies(a, acc);
                }
                Ok(acc)
            }
            "xor" if !args.is_empty() => {
                let fs = bools(self)?;
                let mut it = fs.into_iter();
                let mut acc = it.next().unwrap();
                for b in it {
                    acc = Formula::not(iff(acc, b));
                }
                Ok(acc)
            }
            "=" | "distinct" if args.len() >= 2 => {
                let is_bool = match self.kind(&args[0])? {
                    Some(Kind::Bool) => true,
                    Some(Kind::App) => return unsupported(pos, "predicate application under a connective"),
                    Some(Kind::Arith) => false,
                    None => matches!(self.kind(&args[1])?, Some(Kind::Bool)),
                };
                let mut parts = Vec::new();
                let pairs: Vec<(usize, usize)> = if head == "=" {
                    (1..args.len()).map(|i| (i - 1, i)).collect()
                } else {
                    (0..args.len()).flat_map(|i| (i + 1..args.len()).map(move |j| (i, j))).collect()
                };
                for (i, j) in pairs {
                    let f = if is_bool {
                        iff(self.formula(&args[i])?, self.formula(&args[j])?)
                    } else {
                        self.compare(Rel::Eq, &args[i], &args[j])?
                    };
                    parts.push(if head == "=" { f } else { Formula::not(f) });
                }
                Ok(Formula::and(parts))
            }
            "<=" if args.len() >= 2 => chain(self, Rel::Le),
            "<" if args.len() >= 2 => chain(self, Rel::Lt),
            ">=" if args.len() >= 2 => chain(self, Rel::Ge),
            ">" if args.len() >= 2 => chain(self, Rel::Gt),
            "ite" if args.len() == 3 => {
                let c = self.formula(&args[0])?;
                let t = self.formula(&args[1])?;
                let f = self.formula(&args[2])?;
                Ok(Formula::or([Formula::and([c.clone(), t]), Formula::and([Formula::not(c), f])]))
            }
            "!" if !args.is_empty() => self.formula(&args[0]),
            "let" if args.len() == 2 => {
                let mark = self.mark();
                self.push_let(&args[0])?;
                let r = self.formula(&args[1]);
                self.restore(mark);
                r
            }
            "forall" | "exists" => unsupported(pos, "nested quantifier"),
            h if self.is_pred(h) && self.lookup(h).is_none() => {
                unsupported(pos, "predicate application under a connective")
            }
            h => unsupported(pos, format!("function `{}`", h)),
        }
    }

    /// Is `e` a predicate application (possibly through a `let` name)?
    pub fn is_app(&mut self, e: &Sexp) -> Result<bool, ParseError> {
        Ok(self.kind(e)? == Some(Kind::App))
    }

    /// Elaborates a predicate application; non-variable arguments become
    /// fresh variables defined in [`Elab::extra`].
    pub fn app(&mut self, e: &Sexp) -> Result<PredApp, ParseError> {
        let (name, args, pos) = match e {
            Sexp::Symbol(s, pos) => {
                if let Some(Binding::App(a)) = self.lookup(s) {
                    return Ok(a.clone());
                }
                (s.as_str(), &[][..], *pos)
            }
            Sexp::List(items, pos) => (e.head().unwrap_or(""), &items[1..], *pos),
            _ => return invalid(e.pos(), "expected a predicate application"),
        };
        let Some(sorts) = self.preds.get(name).cloned() else {
            return invalid(pos, format!("unknown predicate `{}`", name));
        };
        if sorts.len() != args.len() {
            return invalid(pos, format!("`{}` expects {} arguments, got {}", name, sorts.len(), args.len()));
        }
        let mut out = Vec::with_capacity(args.len());
        for (arg, sort) in args.iter().zip(sorts) {
            if let Sexp::Symbol(s, p) = arg {
                let bound = match self.lookup(s) {
                    Some(Binding::Var(v)) => Some(v.clone()),
                    Some(_) => None,
                    None if s == "true" || s == "false" => None,
                    None => self.infer_var(s, sort),
                };
                if let Some(v) = bound {
                    if v.sort != sort {
                        return invalid(*p, format!("`{}` has sort {}, expected {}", s, v.sort, sort));
                    }
                    out.push(v);
                    continue;
                }
            }
            let fresh = self.fresh_var(sort);
            let def = if sort == Sort::Bool {
                iff(Formula::var(fresh.clone()), self.formula(arg)?)
            } else {
                let cases = self.arith(arg)?;
                Formula::or(cases.into_iter().map(|(g, mut l, k)| {
                    l.add_term(from_i64(-1), fresh.clone());
                    Formula::and([g, Formula::atom(l, Rel::Eq, -k)])
                }))
            };
            self.extra.push(def);
            out.push(fresh);
        }
        Ok(PredApp::new(name, out))
    }

    fn fresh_var(&mut self, sort: Sort) -> Var {
        loop {
            let name = format!("@a{}", self.fresh);
            self.fresh += 1;
            if self.lookup(&name).is_none() && !self.inferred.contains_key(&name) {
                return Var::new(name, sort);
            }
        }
    }
}
