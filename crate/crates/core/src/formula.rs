//! Quantifier-free formulas over linear arithmetic with boolean atoms.
//!
//! Formulas are immutable values. Conjunctions and disjunctions are kept flat
//! with sorted, deduplicated children so that structurally equal formulas
//! compare equal and print identically. Linear atoms are stored in a
//! canonical integral form (coprime integer coefficients, positive leading
//! coefficient).

use alloc::boxed::Box;
use alloc::collections::btree_map::Entry;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::rational::{self, Rational};

/// Value sort of a variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Int,
    Real,
    Bool,
}

impl Sort {
    pub fn is_arith(self) -> bool {
        !matches!(self, Sort::Bool)
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Int => "Int",
            Sort::Real => "Real",
            Sort::Bool => "Bool",
        })
    }
}

/// Prefix reserved for predicate indicator variables.
pub const INDICATOR_PREFIX: &str = "b!";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: String,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: impl Into<String>, sort: Sort) -> Self {
        Var { name: name.into(), sort }
    }

    pub fn int(name: impl Into<String>) -> Self {
        Var::new(name, Sort::Int)
    }

    pub fn real(name: impl Into<String>) -> Self {
        Var::new(name, Sort::Real)
    }

    pub fn boolean(name: impl Into<String>) -> Self {
        Var::new(name, Sort::Bool)
    }

    /// The boolean indicator `b!P` of predicate `P`.
    pub fn indicator(pred: &str) -> Self {
        let mut name = String::from(INDICATOR_PREFIX);
        name.push_str(pred);
        Var::new(name, Sort::Bool)
    }

    pub fn is_indicator(&self) -> bool {
        self.sort == Sort::Bool && self.name.starts_with(INDICATOR_PREFIX)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbol(f, &self.name)
    }
}

/// Writes `name` as an SMT-LIB2 symbol, quoting it with `|...|` when needed.
pub fn write_symbol(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    if is_simple_symbol(name) {
        f.write_str(name)
    } else {
        write!(f, "|{}|", name)
    }
}

pub fn is_simple_symbol(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        None => return false,
        Some(c) if c.is_ascii_digit() => return false,
        _ => {}
    }
    name.chars()
        .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c))
}

/// Linear combination `Σ cᵢ·xᵢ` with no zero coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    terms: BTreeMap<Var, Rational>,
}

impl LinExpr {
    pub fn new() -> Self {
        LinExpr::default()
    }

    pub fn var(v: Var) -> Self {
        LinExpr::term(Rational::one(), v)
    }

    pub fn term(c: Rational, v: Var) -> Self {
        let mut e = LinExpr::new();
        e.add_term(c, v);
        e
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Rational, Var)>) -> Self {
        let mut e = LinExpr::new();
        for (c, v) in terms {
            e.add_term(c, v);
        }
        e
    }

    pub fn add_term(&mut self, c: Rational, v: Var) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(v) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, factor: &Rational) {
        for (v, c) in &other.terms {
            self.add_term(c * factor, v.clone());
        }
    }

    pub fn scale(&mut self, factor: &Rational) {
        if factor.is_zero() {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c *= factor;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, v: &Var) -> Rational {
        self.terms.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn remove(&mut self, v: &Var) -> Option<Rational> {
        self.terms.remove(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Rational)> {
        self.terms.iter()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms.keys()
    }

    pub fn eval(&self, model: &Model) -> Rational {
        self.terms
            .iter()
            .map(|(v, c)| c * model.num(v))
            .fold(Rational::zero(), |a, b| a + b)
    }

    fn rename(&self, map: &BTreeMap<Var, Var>) -> LinExpr {
        LinExpr::from_terms(
            self.terms
                .iter()
                .map(|(v, c)| (c.clone(), map.get(v).cloned().unwrap_or_else(|| v.clone()))),
        )
    }
}

/// Comparison relation of a linear atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn flip(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Eq => Rel::Eq,
            Rel::Ge => Rel::Le,
            Rel::Gt => Rel::Lt,
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }
}

/// Linear atom `lhs ⋈ rhs`, always in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    lhs: LinExpr,
    rel: Rel,
    rhs: Rational,
}

impl Atom {
    /// Builds `lhs ⋈ rhs`. Returns `Err(b)` when the atom is constant with truth value `b`.
    pub fn new(lhs: LinExpr, rel: Rel, rhs: Rational) -> Result<Atom, bool> {
        if lhs.is_empty() {
            return Err(rel.holds(&Rational::zero(), &rhs));
        }
        let mut lhs = lhs;
        let mut rhs = rhs;
        let mut rel = rel;
        // clear denominators
        let mut den = rhs.denom().clone();
        for (_, c) in lhs.iter() {
            den = den.lcm(c.denom());
        }
        let mut factor = Rational::from_integer(den);
        // divide by gcd of numerators
        let mut g = rational::numer_abs(&(&rhs * &factor));
        for (_, c) in lhs.iter() {
            g = g.gcd(&rational::numer_abs(&(c * &factor)));
        }
        if !g.is_zero() {
            factor /= Rational::from_integer(g);
        }
        let lead_negative = lhs.iter().next().map(|(_, c)| c.is_negative()).unwrap_or(false);
        if lead_negative {
            factor = -factor;
            rel = rel.flip();
        }
        lhs.scale(&factor);
        rhs *= &factor;
        Ok(Atom { lhs, rel, rhs })
    }

    pub fn lhs(&self) -> &LinExpr {
        &self.lhs
    }

    pub fn rel(&self) -> Rel {
        self.rel
    }

    pub fn rhs(&self) -> &Rational {
        &self.rhs
    }

    pub fn eval(&self, model: &Model) -> bool {
        self.rel.holds(&self.lhs.eval(model), &self.rhs)
    }

    /// Negation as a disjunction of atoms (one atom except for `=`).
    pub fn negate(&self) -> Vec<Atom> {
        let mk = |rel| Atom { lhs: self.lhs.clone(), rel, rhs: self.rhs.clone() };
        match self.rel {
            Rel::Lt => alloc::vec![mk(Rel::Ge)],
            Rel::Le => alloc::vec![mk(Rel::Gt)],
            Rel::Ge => alloc::vec![mk(Rel::Lt)],
            Rel::Gt => alloc::vec![mk(Rel::Le)],
            Rel::Eq => alloc::vec![mk(Rel::Lt), mk(Rel::Gt)],
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.lhs.vars()
    }

    fn rename(&self, map: &BTreeMap<Var, Var>) -> Formula {
        Formula::atom(self.lhs.rename(map), self.rel, self.rhs.clone())
    }
}

/// Quantifier-free formula.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Bool(Var),
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("sort mismatch: cannot map {from} ({from_sort}) to {to} ({to_sort})")]
pub struct SortError {
    pub from: String,
    pub from_sort: Sort,
    pub to: String,
    pub to_sort: Sort,
}

impl Formula {
    pub fn var(v: Var) -> Formula {
        debug_assert_eq!(v.sort, Sort::Bool);
        Formula::Bool(v)
    }

    pub fn constant(b: bool) -> Formula {
        if b {
            Formula::True
        } else {
            Formula::False
        }
    }

    pub fn atom(lhs: LinExpr, rel: Rel, rhs: Rational) -> Formula {
        match Atom::new(lhs, rel, rhs) {
            Ok(a) => Formula::Atom(a),
            Err(b) => Formula::constant(b),
        }
    }

    /// `lhs ⋈ rhs` for two linear expressions with constants folded in.
    pub fn compare(lhs: LinExpr, lc: Rational, rel: Rel, rhs: LinExpr, rc: Rational) -> Formula {
        let mut e = lhs;
        e.add_scaled(&rhs, &-Rational::one());
        Formula::atom(e, rel, rc - lc)
    }

    /// `a = b` for two variables of the same sort.
    pub fn var_eq(a: &Var, b: &Var) -> Formula {
        if a == b {
            return Formula::True;
        }
        if a.sort == Sort::Bool {
            let (x, y) = (Formula::Bool(a.clone()), Formula::Bool(b.clone()));
            return Formula::or([
                Formula::and([x.clone(), y.clone()]),
                Formula::and([Formula::not(x), Formula::not(y)]),
            ]);
        }
        let mut e = LinExpr::var(a.clone());
        e.add_term(-Rational::one(), b.clone());
        Formula::atom(e, Rel::Eq, Rational::zero())
    }

    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn and(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(children) => out.extend(children),
                other => out.push(other),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out = Vec::new();
        for f in items {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(children) => out.extend(children),
                other => out.push(other),
            }
        }
        out.sort();
        out.dedup();
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or([Formula::not(a), b])
    }

    /// Free variables of the formula.
    pub fn vocab(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Bool(v) => {
                out.insert(v.clone());
            }
            Formula::Atom(a) => out.extend(a.vars().cloned()),
            Formula::Not(f) => f.collect_vars(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_vars(out)),
        }
    }

    /// Number of nodes (connectives, atoms and atom terms).
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Bool(_) => 1,
            Formula::Atom(a) => 1 + a.lhs.len(),
            Formula::Not(f) => 1 + f.size(),
            Formula::And(fs) | Formula::Or(fs) => 1 + fs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    /// Renames variables. The map must be sort preserving.
    pub fn substitute(&self, map: &BTreeMap<Var, Var>) -> Result<Formula, SortError> {
        for (from, to) in map {
            if from.sort != to.sort {
                return Err(SortError {
                    from: from.name.clone(),
                    from_sort: from.sort,
                    to: to.name.clone(),
                    to_sort: to.sort,
                });
            }
        }
        Ok(self.rename(map))
    }

    pub(crate) fn rename(&self, map: &BTreeMap<Var, Var>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Bool(v) => Formula::Bool(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Formula::Atom(a) => a.rename(map),
            Formula::Not(f) => Formula::not(f.rename(map)),
            Formula::And(fs) => Formula::and(fs.iter().map(|f| f.rename(map))),
            Formula::Or(fs) => Formula::or(fs.iter().map(|f| f.rename(map))),
        }
    }

    /// Replaces boolean variables by constants and simplifies.
    pub fn assign(&self, values: &BTreeMap<Var, bool>) -> Formula {
        if values.is_empty() {
            return self.clone();
        }
        match self {
            Formula::Bool(v) => match values.get(v) {
                Some(b) => Formula::constant(*b),
                None => self.clone(),
            },
            Formula::True | Formula::False | Formula::Atom(_) => self.clone(),
            Formula::Not(f) => Formula::not(f.assign(values)),
            Formula::And(fs) => Formula::and(fs.iter().map(|f| f.assign(values))),
            Formula::Or(fs) => Formula::or(fs.iter().map(|f| f.assign(values))),
        }
    }

    /// Structurally removes every occurrence of boolean variable `v` from
    /// conjunctions and disjunctions, treating it as true.
    pub fn delete_bool(&self, v: &Var) -> Formula {
        let mut m = BTreeMap::new();
        m.insert(v.clone(), true);
        self.assign(&m)
    }

    pub fn eval(&self, model: &Model) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Bool(v) => model.boolean(v),
            Formula::Atom(a) => a.eval(model),
            Formula::Not(f) => !f.eval(model),
            Formula::And(fs) => fs.iter().all(|f| f.eval(model)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(model)),
        }
    }

    /// Negation normal form: negations only on boolean variables; negated
    /// atoms are replaced by their complement over the total order.
    pub fn nnf(&self) -> Formula {
        self.nnf_polarity(true)
    }

    fn nnf_polarity(&self, positive: bool) -> Formula {
        match (self, positive) {
            (Formula::True, p) => Formula::constant(p),
            (Formula::False, p) => Formula::constant(!p),
            (Formula::Bool(_), true) => self.clone(),
            (Formula::Bool(_), false) => Formula::Not(Box::new(self.clone())),
            (Formula::Atom(_), true) => self.clone(),
            (Formula::Atom(a), false) => Formula::or(a.negate().into_iter().map(Formula::Atom)),
            (Formula::Not(f), p) => f.nnf_polarity(!p),
            (Formula::And(fs), true) | (Formula::Or(fs), false) => {
                Formula::and(fs.iter().map(|f| f.nnf_polarity(positive)))
            }
            (Formula::And(fs), false) | (Formula::Or(fs), true) => {
                Formula::or(fs.iter().map(|f| f.nnf_polarity(positive)))
            }
        }
    }

    /// Disjunctive normal form with boolean-inconsistent cubes pruned.
    pub fn nnf_dnf(&self) -> Vec<Cube> {
        self.nnf_dnf_bounded(usize::MAX).expect("unbounded")
    }

    /// As [`Formula::nnf_dnf`], giving up with `None` past `limit` cubes.
    pub fn nnf_dnf_bounded(&self, limit: usize) -> Option<Vec<Cube>> {
        let mut cubes = dnf(&self.nnf(), limit)?;
        cubes.sort();
        cubes.dedup();
        Some(cubes)
    }

    pub fn is_literal(&self) -> bool {
        match self {
            Formula::Bool(_) | Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Bool(_)),
            _ => false,
        }
    }
}

fn dnf(f: &Formula, limit: usize) -> Option<Vec<Cube>> {
    match f {
        Formula::True => Some(alloc::vec![Cube::default()]),
        Formula::False => Some(Vec::new()),
        Formula::Bool(v) => Some(alloc::vec![Cube::literal(v.clone(), true)]),
        Formula::Not(inner) => match &**inner {
            Formula::Bool(v) => Some(alloc::vec![Cube::literal(v.clone(), false)]),
            _ => dnf(&inner.nnf_polarity(false), limit),
        },
        Formula::Atom(a) => Some(alloc::vec![Cube::from_atom(a.clone())]),
        Formula::Or(fs) => {
            let mut out = Vec::new();
            for g in fs {
                out.extend(dnf(g, limit)?);
                if out.len() > limit {
                    return None;
                }
            }
            Some(out)
        }
        Formula::And(fs) => {
            let mut acc = alloc::vec![Cube::default()];
            for g in fs {
                let part = dnf(g, limit)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &part {
                        if let Some(c) = a.conjoin(b) {
                            next.push(c);
                            if next.len() > limit {
                                return None;
                            }
                        }
                    }
                }
                acc = next;
                if acc.is_empty() {
                    break;
                }
            }
            Some(acc)
        }
    }
}

/// Conjunction of boolean literals and linear atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cube {
    pub bools: BTreeMap<Var, bool>,
    pub atoms: BTreeSet<Atom>,
}

impl Cube {
    pub fn literal(v: Var, value: bool) -> Cube {
        let mut c = Cube::default();
        c.bools.insert(v, value);
        c
    }

    pub fn from_atom(a: Atom) -> Cube {
        let mut c = Cube::default();
        c.atoms.insert(a);
        c
    }

    /// Conjunction of two cubes, `None` when their boolean parts clash.
    pub fn conjoin(&self, other: &Cube) -> Option<Cube> {
        let mut out = self.clone();
        for (v, b) in &other.bools {
            match out.bools.get(v) {
                Some(prev) if prev != b => return None,
                _ => {
                    out.bools.insert(v.clone(), *b);
                }
            }
        }
        out.atoms.extend(other.atoms.iter().cloned());
        Some(out)
    }

    pub fn to_formula(&self) -> Formula {
        Formula::and(
            self.bools
                .iter()
                .map(|(v, b)| {
                    let lit = Formula::Bool(v.clone());
                    if *b {
                        lit
                    } else {
                        Formula::not(lit)
                    }
                })
                .chain(self.atoms.iter().cloned().map(Formula::Atom)),
        )
    }
}

/// Value assigned to a variable by a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Num(Rational),
    Bool(bool),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(r) => write_rational(f, r),
            Value::Bool(b) => write!(f, "{}", b),
        }
    }
}

/// Assignment of values to variables; absent variables read as 0 / false.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Model {
    values: BTreeMap<Var, Value>,
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn set(&mut self, v: Var, value: Value) {
        self.values.insert(v, value);
    }

    pub fn get(&self, v: &Var) -> Option<&Value> {
        self.values.get(v)
    }

    pub fn num(&self, v: &Var) -> Rational {
        match self.values.get(v) {
            Some(Value::Num(r)) => r.clone(),
            _ => Rational::zero(),
        }
    }

    pub fn boolean(&self, v: &Var) -> bool {
        matches!(self.values.get(v), Some(Value::Bool(true)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.values.iter()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn restrict(&self, vars: &BTreeSet<Var>) -> Model {
        Model {
            values: self
                .values
                .iter()
                .filter(|(v, _)| vars.contains(*v))
                .map(|(v, x)| (v.clone(), x.clone()))
                .collect(),
        }
    }
}

/// Writes a rational as an SMT-LIB2 literal: `3`, `(- 3)`, `(/ 1 2)`, `(- (/ 1 2))`.
pub fn write_rational(f: &mut fmt::Formatter<'_>, r: &Rational) -> fmt::Result {
    let neg = r.is_negative();
    let abs = r.abs();
    if neg {
        f.write_str("(- ")?;
    }
    if abs.is_integer() {
        write!(f, "{}", abs.numer())?;
    } else {
        write!(f, "(/ {} {})", abs.numer(), abs.denom())?;
    }
    if neg {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let write_term = |f: &mut fmt::Formatter<'_>, v: &Var, c: &Rational| -> fmt::Result {
            if c.is_one() {
                write!(f, "{}", v)
            } else if *c == -Rational::one() {
                write!(f, "(- {})", v)
            } else {
                f.write_str("(* ")?;
                write_rational(f, c)?;
                write!(f, " {})", v)
            }
        };
        match self.terms.len() {
            0 => f.write_str("0"),
            1 => {
                let (v, c) = self.terms.iter().next().unwrap();
                write_term(f, v, c)
            }
            _ => {
                f.write_str("(+")?;
                for (v, c) in &self.terms {
                    f.write_str(" ")?;
                    write_term(f, v, c)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} ", self.rel.token(), self.lhs)?;
        write_rational(f, &self.rhs)?;
        f.write_str(")")
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Bool(v) => write!(f, "{}", v),
            Formula::Atom(a) => write!(f, "{}", a),
            Formula::Not(g) => write!(f, "(not {})", g),
            Formula::And(fs) | Formula::Or(fs) => {
                f.write_str(if matches!(self, Formula::And(_)) { "(and" } else { "(or" })?;
                for g in fs {
                    write!(f, " {}", g)?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn int(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn ge(v: &Var, c: i64) -> Formula {
        Formula::atom(LinExpr::var(v.clone()), Rel::Ge, int(c))
    }

    fn eq2(a: &Var, ca: i64, b: &Var, cb: i64) -> Formula {
        Formula::atom(LinExpr::from_terms([(int(ca), a.clone()), (int(cb), b.clone())]), Rel::Eq, int(0))
    }

    #[test]
    fn vocab_of_constraint_with_indicator() {
        let abs1 = Var::int("abs'");
        let n = Var::int("n");
        let b = Var::indicator("L6");
        let f = Formula::and([eq2(&abs1, 1, &n, -1), Formula::var(b.clone())]);
        let expected: BTreeSet<Var> = [abs1, n, b].into_iter().collect();
        assert_eq!(f.vocab(), expected);
        assert!(Formula::True.vocab().is_empty());
        let x = Var::int("x");
        let f = Formula::or([ge(&x, 0), ge(&x, 0)]);
        assert_eq!(f.vocab().len(), 1);
        assert_eq!(f, ge(&x, 0));
    }

    #[test]
    fn substitute_renames_and_checks_sorts() {
        let (d, x, abs1, res) = (Var::int("d"), Var::int("x"), Var::int("abs'"), Var::int("res"));
        let f = eq2(&d, 1, &x, -2);
        let m: BTreeMap<_, _> = [(x.clone(), abs1.clone()), (d.clone(), res.clone())].into_iter().collect();
        assert_eq!(f.substitute(&m).unwrap(), eq2(&res, 1, &abs1, -2));
        assert_eq!(f.substitute(&BTreeMap::new()).unwrap(), f);
        let bad: BTreeMap<_, _> = [(x.clone(), Var::boolean("p"))].into_iter().collect();
        assert!(f.substitute(&bad).is_err());
    }

    #[test]
    fn atoms_are_canonical() {
        let x = Var::int("x");
        let y = Var::int("y");
        // -2x <= -4  ==  x >= 2
        let a = Formula::atom(LinExpr::term(int(-2), x.clone()), Rel::Le, int(-4));
        assert_eq!(a, ge(&x, 2));
        assert_eq!(a.to_string(), "(>= x 2)");
        let half = Rational::new(1.into(), 2.into());
        let b = Formula::atom(LinExpr::from_terms([(half.clone(), x.clone()), (half, y.clone())]), Rel::Lt, int(1));
        assert_eq!(b.to_string(), "(< (+ x y) 2)");
        assert_eq!(Formula::atom(LinExpr::new(), Rel::Le, int(1)), Formula::True);
    }

    #[test]
    fn nnf_of_negated_atom() {
        let x = Var::int("x");
        let lt = Formula::atom(LinExpr::var(x.clone()), Rel::Lt, int(0));
        let cubes = Formula::not(lt).nnf_dnf();
        assert_eq!(cubes.len(), 1);
        assert_eq!(cubes[0].to_formula(), ge(&x, 0));
        let eq = Formula::atom(LinExpr::var(x.clone()), Rel::Eq, int(0));
        assert_eq!(Formula::not(eq).nnf_dnf().len(), 2);
    }

    #[test]
    fn dnf_already_in_dnf() {
        let (a, b) = (Var::boolean("a"), Var::boolean("b"));
        let (p, q) = (Var::int("p"), Var::int("q"));
        let f = Formula::or([
            Formula::and([Formula::var(a.clone()), ge(&p, 0)]),
            Formula::and([Formula::var(b.clone()), ge(&q, 0)]),
        ]);
        let cubes = f.nnf_dnf();
        assert_eq!(cubes.len(), 2);
        let back = Formula::or(cubes.iter().map(Cube::to_formula));
        assert_eq!(back, f);
    }

    #[test]
    fn boolean_pruning() {
        let a = Var::boolean("a");
        let f = Formula::and([Formula::var(a.clone()), Formula::not(Formula::var(a))]);
        assert!(f.nnf_dnf().is_empty());
    }

    #[test]
    fn printing_tokens() {
        let x = Var::real("x");
        let third = Rational::new(1.into(), 3.into());
        let f = Formula::atom(LinExpr::var(x.clone()), Rel::Le, -third);
        assert_eq!(f.to_string(), "(<= (* 3 x) (- 1))");
        let mut out = String::new();
        struct W<'a>(&'a Rational);
        impl fmt::Display for W<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_rational(f, self.0)
            }
        }
        use core::fmt::Write;
        write!(out, "{}", W(&Rational::new((-1).into(), 2.into()))).unwrap();
        assert_eq!(out, "(- (/ 1 2))");
        let g = Formula::not(Formula::var(Var::indicator("L9")));
        assert_eq!(g.to_string(), "(not b!L9)");
        assert_eq!(Var::int("a b").to_string(), "|a b|");
        let _ = vec![0];
    }
}
