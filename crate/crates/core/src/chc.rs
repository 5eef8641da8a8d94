//! Constrained Horn clause systems and their dependency structure.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::formula::{Formula, Sort, Var};

pub type ClauseId = usize;

/// Name of the 0-ary predicate that collects several input queries.
pub const MERGED_QUERY_PRED: &str = "bad!";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChcError {
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),
    #[error("predicate `{pred}` applied to {found} arguments, declared with {expected}")]
    ArityMismatch { pred: String, expected: usize, found: usize },
    #[error("argument {index} of `{pred}` has sort {found}, expected {expected}")]
    ArgumentSort { pred: String, index: usize, expected: Sort, found: Sort },
    #[error("predicate `{0}` declared twice with different signatures")]
    Redeclared(String),
    #[error("system has no query clause")]
    NoQuery,
    #[error("system has {0} query clauses, expected exactly one")]
    MultipleQueries(usize),
    #[error("system is not recursion-free")]
    NotRecursionFree,
    #[error("duplicate clause id {0}")]
    DuplicateClauseId(ClauseId),
}

/// Uninterpreted predicate with canonical parameters `name!0 .. name!(n-1)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Predicate {
    pub name: String,
    pub params: Vec<Var>,
}

impl Predicate {
    pub fn new(name: impl Into<String>, sorts: &[Sort]) -> Self {
        let name = name.into();
        let params = sorts
            .iter()
            .enumerate()
            .map(|(i, s)| Var::new(format!("{}!{}", name, i), *s))
            .collect();
        Predicate { name, params }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn sorts(&self) -> Vec<Sort> {
        self.params.iter().map(|v| v.sort).collect()
    }

    /// Renaming from the canonical parameters to `args`.
    pub fn bind(&self, args: &[Var]) -> BTreeMap<Var, Var> {
        self.params.iter().cloned().zip(args.iter().cloned()).collect()
    }
}

/// Predicate applied to variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredApp {
    pub pred: String,
    pub args: Vec<Var>,
}

impl PredApp {
    pub fn new(pred: impl Into<String>, args: Vec<Var>) -> Self {
        PredApp { pred: pred.into(), args }
    }
}

impl fmt::Display for PredApp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", a.name)?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Head {
    False,
    App(PredApp),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    pub id: ClauseId,
    pub head: Head,
    pub body: Vec<PredApp>,
    pub constraint: Formula,
}

impl Clause {
    pub fn is_query(&self) -> bool {
        matches!(self.head, Head::False)
    }

    pub fn head_pred(&self) -> Option<&str> {
        match &self.head {
            Head::False => None,
            Head::App(a) => Some(&a.pred),
        }
    }

    pub fn head_app(&self) -> Option<&PredApp> {
        match &self.head {
            Head::False => None,
            Head::App(a) => Some(a),
        }
    }

    /// All variables of the clause.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = self.constraint.vocab();
        if let Head::App(a) = &self.head {
            out.extend(a.args.iter().cloned());
        }
        for app in &self.body {
            out.extend(app.args.iter().cloned());
        }
        out
    }

    /// Applies `rename` to variables and `pred_map` to predicate names.
    pub fn map(&self, id: ClauseId, rename: &BTreeMap<Var, Var>, pred_map: &dyn Fn(&str) -> String) -> Clause {
        let map_app = |a: &PredApp| PredApp {
            pred: pred_map(&a.pred),
            args: a.args.iter().map(|v| rename.get(v).cloned().unwrap_or_else(|| v.clone())).collect(),
        };
        Clause {
            id,
            head: match &self.head {
                Head::False => Head::False,
                Head::App(a) => Head::App(map_app(a)),
            },
            body: self.body.iter().map(map_app).collect(),
            constraint: self.constraint.rename(rename),
        }
    }

    /// Copy of the clause under a new id, with clause-local variables
    /// retagged for the new id and predicates renamed by `pred_map`.
    pub fn retag(&self, id: ClauseId, pred_map: &dyn Fn(&str) -> String) -> Clause {
        let rename: BTreeMap<Var, Var> = self
            .vars()
            .into_iter()
            .map(|v| {
                let local = Var::new(local_name(id, base_name(&v.name)), v.sort);
                (v, local)
            })
            .collect();
        self.map(id, &rename, pred_map)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.head {
            Head::False => f.write_str("false")?,
            Head::App(a) => write!(f, "{}", a)?,
        }
        f.write_str(" <- [")?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", a)?;
        }
        write!(f, "] ; {}", self.constraint)
    }
}

/// Clause-local name `c<id>!<base>`.
pub fn local_name(id: ClauseId, base: &str) -> String {
    format!("c{}!{}", id, base)
}

/// Strips a `c<digits>!` clause tag, if present.
pub fn base_name(name: &str) -> &str {
    if let Some(rest) = name.strip_prefix('c') {
        let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 && rest[digits..].starts_with('!') {
            return &rest[digits + 1..];
        }
    }
    name
}

/// Membership of a system in the recursion-free classes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Classes {
    pub recursion_free: bool,
    pub linear: bool,
    pub body_disjoint: bool,
    pub cdd: bool,
}

impl Classes {
    pub fn labels(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.recursion_free {
            out.push("recursion-free");
        }
        if self.linear {
            out.push("linear");
        }
        if self.body_disjoint {
            out.push("body-disjoint");
        }
        if self.cdd {
            out.push("cdd");
        }
        out
    }
}

impl fmt::Display for Classes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = self.labels();
        if labels.is_empty() {
            return f.write_str("recursive");
        }
        f.write_str(&labels.join(" "))
    }
}

/// Immutable CHC system with exactly one query and precomputed dependency
/// indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    preds: BTreeMap<String, Predicate>,
    clauses: Vec<Clause>,
    query: usize,
    heads: BTreeMap<String, Vec<usize>>,
    deps: BTreeMap<String, BTreeSet<String>>,
    dependents: BTreeMap<String, BTreeSet<String>>,
    tdeps: BTreeMap<String, BTreeSet<String>>,
}

impl System {
    /// Builds a system from clauses that are already normalized: distinct
    /// arguments within each application, clause-local variables apart.
    pub fn from_normalized(
        preds: impl IntoIterator<Item = Predicate>,
        clauses: Vec<Clause>,
    ) -> Result<System, ChcError> {
        let preds: BTreeMap<String, Predicate> = preds.into_iter().map(|p| (p.name.clone(), p)).collect();
        let mut ids = BTreeSet::new();
        let mut query = None;
        let mut queries = 0;
        for (i, c) in clauses.iter().enumerate() {
            if !ids.insert(c.id) {
                return Err(ChcError::DuplicateClauseId(c.id));
            }
            if c.is_query() {
                queries += 1;
                query = Some(i);
            }
            for app in c.head_app().into_iter().chain(c.body.iter()) {
                check_app(&preds, app)?;
            }
        }
        let query = match queries {
            0 => return Err(ChcError::NoQuery),
            1 => query.unwrap(),
            n => return Err(ChcError::MultipleQueries(n)),
        };
        let mut heads: BTreeMap<String, Vec<usize>> = preds.keys().map(|p| (p.clone(), Vec::new())).collect();
        let mut deps: BTreeMap<String, BTreeSet<String>> =
            preds.keys().map(|p| (p.clone(), BTreeSet::new())).collect();
        let mut dependents = deps.clone();
        for (i, c) in clauses.iter().enumerate() {
            if let Some(h) = c.head_pred() {
                heads.get_mut(h).unwrap().push(i);
                for b in &c.body {
                    deps.get_mut(h).unwrap().insert(b.pred.clone());
                    dependents.get_mut(&b.pred).unwrap().insert(h.to_string());
                }
            }
        }
        let tdeps = closure(&deps);
        Ok(System { preds, clauses, query, heads, deps, dependents, tdeps })
    }

    pub fn preds(&self) -> impl Iterator<Item = &Predicate> {
        self.preds.values()
    }

    pub fn pred_names(&self) -> impl Iterator<Item = &str> {
        self.preds.keys().map(String::as_str)
    }

    pub fn num_preds(&self) -> usize {
        self.preds.len()
    }

    pub fn pred(&self, name: &str) -> Result<&Predicate, ChcError> {
        self.preds.get(name).ok_or_else(|| ChcError::UnknownPredicate(name.to_string()))
    }

    pub fn has_pred(&self, name: &str) -> bool {
        self.preds.contains_key(name)
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn clause(&self, id: ClauseId) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn query(&self) -> &Clause {
        &self.clauses[self.query]
    }

    pub fn max_clause_id(&self) -> ClauseId {
        self.clauses.iter().map(|c| c.id).max().unwrap_or(0)
    }

    /// Clauses whose head is `pred`, in clause order.
    pub fn defining(&self, pred: &str) -> impl Iterator<Item = &Clause> {
        self.heads.get(pred).into_iter().flatten().map(move |i| &self.clauses[*i])
    }

    pub fn deps(&self, pred: &str) -> Result<&BTreeSet<String>, ChcError> {
        self.deps.get(pred).ok_or_else(|| ChcError::UnknownPredicate(pred.to_string()))
    }

    pub fn tdeps(&self, pred: &str) -> Result<&BTreeSet<String>, ChcError> {
        self.tdeps.get(pred).ok_or_else(|| ChcError::UnknownPredicate(pred.to_string()))
    }

    /// Predicates that have `pred` among their direct dependencies.
    pub fn dependents(&self, pred: &str) -> Result<&BTreeSet<String>, ChcError> {
        self.dependents.get(pred).ok_or_else(|| ChcError::UnknownPredicate(pred.to_string()))
    }

    /// Predicates that have `pred` as a transitive dependency.
    pub fn transitive_dependents(&self, pred: &str) -> Result<BTreeSet<String>, ChcError> {
        self.pred(pred)?;
        Ok(self
            .tdeps
            .iter()
            .filter(|(_, t)| t.contains(pred))
            .map(|(p, _)| p.clone())
            .collect())
    }

    /// `{pred} ∪ tdeps(pred)`.
    pub fn cone(&self, pred: &str) -> Result<BTreeSet<String>, ChcError> {
        let mut out = self.tdeps(pred)?.clone();
        out.insert(pred.to_string());
        Ok(out)
    }

    pub fn siblings(&self, pred: &str) -> Result<BTreeSet<String>, ChcError> {
        self.pred(pred)?;
        let mut out = BTreeSet::new();
        for c in &self.clauses {
            let count = c.body.iter().filter(|a| a.pred == pred).count();
            if count == 0 {
                continue;
            }
            for a in &c.body {
                if a.pred != pred || count > 1 {
                    out.insert(a.pred.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn is_recursion_free(&self) -> bool {
        self.tdeps.iter().all(|(p, t)| !t.contains(p))
    }

    /// Whether some clause body has two occurrences whose inclusive
    /// dependency cones intersect (including repeated predicates).
    pub fn has_sibling_sharing(&self) -> bool {
        self.clauses.iter().any(|c| {
            let cones: Vec<BTreeSet<String>> = c.body.iter().map(|a| self.cone(&a.pred).unwrap()).collect();
            (0..cones.len()).any(|i| (i + 1..cones.len()).any(|j| !cones[i].is_disjoint(&cones[j])))
        })
    }

    pub fn classify(&self) -> Classes {
        let recursion_free = self.is_recursion_free();
        if !recursion_free {
            return Classes::default();
        }
        let linear = self.clauses.iter().all(|c| c.body.len() <= 1);
        let mut body_uses: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &self.clauses {
            for a in &c.body {
                *body_uses.entry(&a.pred).or_default() += 1;
            }
        }
        let body_disjoint = body_uses.values().all(|n| *n <= 1);
        Classes { recursion_free, linear, body_disjoint, cdd: !self.has_sibling_sharing() }
    }

    /// Dependencies before dependents; ties broken by predicate name.
    pub fn topo_order(&self) -> Result<Vec<String>, ChcError> {
        let mut remaining: BTreeMap<&str, usize> =
            self.deps.iter().map(|(p, d)| (p.as_str(), d.len())).collect();
        let mut ready: BTreeSet<&str> = remaining.iter().filter(|(_, n)| **n == 0).map(|(p, _)| *p).collect();
        let mut order = Vec::with_capacity(self.preds.len());
        while let Some(p) = ready.pop_first() {
            remaining.remove(p);
            order.push(p.to_string());
            for d in &self.dependents[p] {
                if let Some(n) = remaining.get_mut(d.as_str()) {
                    *n -= 1;
                    if *n == 0 {
                        ready.insert(d.as_str());
                    }
                }
            }
        }
        if order.len() != self.preds.len() {
            return Err(ChcError::NotRecursionFree);
        }
        Ok(order)
    }

    /// Size measure: constraint nodes plus one per application and argument.
    pub fn size(&self) -> usize {
        self.clauses
            .iter()
            .map(|c| {
                c.constraint.size()
                    + c.head_app().map_or(1, |a| 1 + a.args.len())
                    + c.body.iter().map(|a| 1 + a.args.len()).sum::<usize>()
            })
            .sum()
    }

    /// Sub-system of the predicates the query transitively depends on.
    pub fn reachable_from_query(&self) -> System {
        let mut keep: BTreeSet<String> = BTreeSet::new();
        for a in &self.query().body {
            keep.extend(self.cone(&a.pred).unwrap());
        }
        let preds = self.preds.values().filter(|p| keep.contains(&p.name)).cloned();
        let clauses = self
            .clauses
            .iter()
            .filter(|c| c.head_pred().map_or(true, |h| keep.contains(h)))
            .cloned()
            .collect();
        System::from_normalized(preds, clauses).expect("sub-system of a valid system")
    }

    /// Dependency hypergraph in DOT syntax: one node per predicate plus ⊥,
    /// one point node per clause joining its body to its head.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph chc {\n  rankdir=TB;\n  \"⊥\" [shape=box];\n");
        for p in self.preds.keys() {
            out.push_str(&format!("  \"{}\" [shape=circle];\n", p));
        }
        for c in &self.clauses {
            let node = format!("clause{}", c.id);
            out.push_str(&format!("  \"{}\" [shape=point, xlabel=\"({})\"];\n", node, c.id));
            for a in &c.body {
                out.push_str(&format!("  \"{}\" -> \"{}\" [arrowhead=none];\n", a.pred, node));
            }
            let head = c.head_pred().unwrap_or("⊥");
            out.push_str(&format!("  \"{}\" -> \"{}\";\n", node, head));
        }
        out.push_str("}\n");
        out
    }
}

fn check_app(preds: &BTreeMap<String, Predicate>, app: &PredApp) -> Result<(), ChcError> {
    let p = preds.get(&app.pred).ok_or_else(|| ChcError::UnknownPredicate(app.pred.clone()))?;
    if p.arity() != app.args.len() {
        return Err(ChcError::ArityMismatch { pred: app.pred.clone(), expected: p.arity(), found: app.args.len() });
    }
    for (i, (param, arg)) in p.params.iter().zip(&app.args).enumerate() {
        if param.sort != arg.sort {
            return Err(ChcError::ArgumentSort {
                pred: app.pred.clone(),
                index: i,
                expected: param.sort,
                found: arg.sort,
            });
        }
    }
    Ok(())
}

fn closure(deps: &BTreeMap<String, BTreeSet<String>>) -> BTreeMap<String, BTreeSet<String>> {
    deps.keys()
        .map(|p| {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&String> = deps[p].iter().collect();
            while let Some(q) = stack.pop() {
                if seen.insert(q.clone()) {
                    stack.extend(deps[q].iter());
                }
            }
            (p.clone(), seen)
        })
        .collect()
}

/// Raw clause as written in an input file.
#[derive(Clone, Debug)]
pub struct RawClause {
    pub head: Option<PredApp>,
    pub body: Vec<PredApp>,
    pub constraint: Formula,
}

/// Normalizing constructor for systems given as raw clauses.
///
/// Normalization numbers clauses from 1 in insertion order, rewrites
/// repeated arguments of one application into fresh variables tied by
/// equalities, tags every clause-local variable with its clause id, and
/// merges several queries through the 0-ary predicate [`MERGED_QUERY_PRED`].
#[derive(Clone, Debug, Default)]
pub struct SystemBuilder {
    preds: BTreeMap<String, Predicate>,
    clauses: Vec<RawClause>,
}

impl SystemBuilder {
    pub fn new() -> Self {
        SystemBuilder::default()
    }

    pub fn declare(&mut self, name: &str, sorts: &[Sort]) -> Result<&mut Self, ChcError> {
        let p = Predicate::new(name, sorts);
        match self.preds.get(name) {
            Some(prev) if *prev != p => return Err(ChcError::Redeclared(name.to_string())),
            _ => {
                self.preds.insert(name.to_string(), p);
            }
        }
        Ok(self)
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.preds.contains_key(name)
    }

    pub fn signature(&self, name: &str) -> Option<Vec<Sort>> {
        self.preds.get(name).map(Predicate::sorts)
    }

    pub fn clause(&mut self, head: Option<PredApp>, body: Vec<PredApp>, constraint: Formula) -> &mut Self {
        self.clauses.push(RawClause { head, body, constraint });
        self
    }

    pub fn build(&self) -> Result<System, ChcError> {
        let mut preds = self.preds.clone();
        let queries = self.clauses.iter().filter(|c| c.head.is_none()).count();
        if queries == 0 {
            return Err(ChcError::NoQuery);
        }
        let merge = queries > 1;
        if merge {
            preds.insert(MERGED_QUERY_PRED.to_string(), Predicate::new(MERGED_QUERY_PRED, &[]));
        }
        let mut clauses = Vec::with_capacity(self.clauses.len() + 1);
        for (i, raw) in self.clauses.iter().enumerate() {
            let id = i + 1;
            let mut raw = raw.clone();
            if merge && raw.head.is_none() {
                raw.head = Some(PredApp::new(MERGED_QUERY_PRED, Vec::new()));
            }
            for app in raw.head.iter().chain(raw.body.iter()) {
                check_app(&preds, app)?;
            }
            clauses.push(normalize_clause(id, raw));
        }
        if merge {
            clauses.push(Clause {
                id: self.clauses.len() + 1,
                head: Head::False,
                body: alloc::vec![PredApp::new(MERGED_QUERY_PRED, Vec::new())],
                constraint: Formula::True,
            });
        }
        System::from_normalized(preds.into_values(), clauses)
    }
}

fn normalize_clause(id: ClauseId, raw: RawClause) -> Clause {
    let mut all = raw.constraint.vocab();
    for app in raw.head.iter().chain(raw.body.iter()) {
        all.extend(app.args.iter().cloned());
    }
    // names whose tag-stripped base clashes with another variable keep
    // their full name as base
    let mut base_count: BTreeMap<&str, usize> = BTreeMap::new();
    for v in &all {
        *base_count.entry(base_name(&v.name)).or_default() += 1;
    }
    let base_of = |v: &Var| -> String {
        let b = base_name(&v.name);
        if base_count.get(b).map_or(false, |n| *n > 1) && b != v.name { v.name.clone() } else { b.to_string() }
    };
    let mut used: BTreeSet<String> = all.iter().map(base_of).collect();
    let mut fresh_counter = 0usize;
    let mut extra = Vec::new();
    let mut flatten = |app: &PredApp, used: &mut BTreeSet<String>| -> PredApp {
        let mut seen = BTreeSet::new();
        let args = app
            .args
            .iter()
            .map(|a| {
                if seen.insert(a.clone()) {
                    return a.clone();
                }
                let name = loop {
                    let candidate = format!("@{}", fresh_counter);
                    fresh_counter += 1;
                    if used.insert(candidate.clone()) {
                        break candidate;
                    }
                };
                let fresh = Var::new(name, a.sort);
                extra.push(Formula::var_eq(&fresh, a));
                fresh
            })
            .collect();
        PredApp { pred: app.pred.clone(), args }
    };
    let head = raw.head.as_ref().map(|h| flatten(h, &mut used));
    let body: Vec<PredApp> = raw.body.iter().map(|a| flatten(a, &mut used)).collect();
    let constraint = Formula::and(core::iter::once(raw.constraint).chain(extra));
    let clause = Clause {
        id,
        head: match head {
            None => Head::False,
            Some(h) => Head::App(h),
        },
        body,
        constraint,
    };
    let rename: BTreeMap<Var, Var> =
        clause.vars().into_iter().map(|v| (v.clone(), Var::new(local_name(id, &base_of(&v)), v.sort))).collect();
    clause.map(id, &rename, &|p| p.to_string())
}
