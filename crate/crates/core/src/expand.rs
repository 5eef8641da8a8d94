//! Expansion of recursion-free systems into clause-dependence-disjoint
//! form by copying shared predicates, with a checkable correspondence
//! back to the original.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::chc::{base_name, local_name, ChcError, Clause, ClauseId, Predicate, System};
use crate::formula::Var;

pub const DEFAULT_COPY_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpandError {
    #[error("system is not recursion-free")]
    NotRecursionFree,
    #[error("expansion needs more than {0} predicate copies")]
    ExpansionBudget(usize),
    #[error("`{pred}` is not shared between two occurrences in clause {clause}")]
    NotShared { clause: ClauseId, pred: String },
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error(transparent)]
    Chc(#[from] ChcError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrespondenceError {
    #[error("`{0}` has no image")]
    Unmapped(String),
    #[error("`{copy}` and its image `{orig}` have different signatures")]
    Signature { copy: String, orig: String },
    #[error("image of clause {0} is not a clause of the original system")]
    ClauseImage(ClauseId),
    #[error("original predicate `{0}` has no preimage")]
    NotSurjective(String),
}

/// Map from the predicates of an expanded system to the predicates of the
/// system it was expanded from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Correspondence {
    map: BTreeMap<String, String>,
}

impl Correspondence {
    pub fn identity(s: &System) -> Self {
        Correspondence { map: s.pred_names().map(|p| (p.to_string(), p.to_string())).collect() }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        Correspondence { map: pairs.into_iter().collect() }
    }

    pub fn get(&self, pred: &str) -> Option<&str> {
        self.map.get(pred).map(String::as_str)
    }

    pub fn insert(&mut self, copy: String, orig: String) {
        self.map.insert(copy, orig);
    }

    pub fn preimages<'a>(&'a self, orig: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.map.iter().filter(move |(_, o)| *o == orig).map(|(c, _)| c.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }

    /// `g ∘ self`: maps through `self` first, then through `g`.
    pub fn then(&self, g: &Correspondence) -> Correspondence {
        Correspondence {
            map: self
                .map
                .iter()
                .filter_map(|(a, b)| g.get(b).map(|c| (a.clone(), c.to_string())))
                .collect(),
        }
    }
}

impl fmt::Display for Correspondence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in &self.map {
            writeln!(f, "{} -> {}", a, b)?;
        }
        Ok(())
    }
}

/// An expanded system together with its correspondence to `origin`.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub system: System,
    pub corr: Correspondence,
    pub origin: System,
    /// Number of predicate copies made.
    pub copies: usize,
}

/// Checks that `corr` maps `expanded` onto `origin`: signatures agree
/// position by position, every clause maps to a clause of `origin` up to
/// renaming its clause-local variables, and every original predicate has a
/// preimage.
pub fn check_correspondence(origin: &System, expanded: &System, corr: &Correspondence) -> Result<(), CorrespondenceError> {
    for p in expanded.preds() {
        let image = corr.get(&p.name).ok_or_else(|| CorrespondenceError::Unmapped(p.name.clone()))?;
        let orig = origin.pred(image).map_err(|_| CorrespondenceError::Unmapped(p.name.clone()))?;
        if orig.sorts() != p.sorts() {
            return Err(CorrespondenceError::Signature { copy: p.name.clone(), orig: orig.name.clone() });
        }
    }
    let image = |p: &str| corr.get(p).unwrap_or(p).to_string();
    for c in expanded.clauses() {
        let candidates: Vec<&Clause> = match c.head_pred() {
            None => alloc::vec![origin.query()],
            Some(h) => origin.defining(&image(h)).collect(),
        };
        let matched = candidates.into_iter().any(|d| {
            let rename: BTreeMap<Var, Var> = c
                .vars()
                .into_iter()
                .map(|v| {
                    let target = Var::new(local_name(d.id, base_name(&v.name)), v.sort);
                    (v, target)
                })
                .collect();
            c.map(d.id, &rename, &image) == *d
        });
        if !matched {
            return Err(CorrespondenceError::ClauseImage(c.id));
        }
    }
    for p in origin.pred_names() {
        if corr.preimages(p).next().is_none() {
            return Err(CorrespondenceError::NotSurjective(p.to_string()));
        }
    }
    Ok(())
}

/// A clause and a predicate reachable from two distinct body occurrences
/// of that clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SharedRel {
    pub clause: ClauseId,
    pub pred: String,
}

/// Finds a sibling-shared dependency, or `None` if the system is CDD.
/// Prefers the shared predicate with the fewest transitive dependencies,
/// then the lowest clause id, then the predicate name.
pub fn shared_rel(s: &System) -> Result<Option<SharedRel>, ExpandError> {
    if !s.is_recursion_free() {
        return Err(ExpandError::NotRecursionFree);
    }
    let mut best: Option<(usize, ClauseId, String)> = None;
    for c in s.clauses() {
        let cones: Vec<BTreeSet<String>> = c.body.iter().map(|a| s.cone(&a.pred)).collect::<Result<_, _>>()?;
        for i in 0..cones.len() {
            for j in i + 1..cones.len() {
                for p in cones[i].intersection(&cones[j]) {
                    let key = (s.tdeps(p)?.len(), c.id, p.clone());
                    if best.as_ref().map_or(true, |b| key < *b) {
                        best = Some(key);
                    }
                }
            }
        }
    }
    Ok(best.map(|(_, clause, pred)| SharedRel { clause, pred }))
}

/// Issues fresh predicate names `P!k`, counting per original predicate.
#[derive(Clone, Debug, Default)]
pub struct FreshNames {
    counters: BTreeMap<String, usize>,
}

impl FreshNames {
    pub fn next(&mut self, orig: &str, taken: &dyn Fn(&str) -> bool) -> String {
        let k = self.counters.entry(orig.to_string()).or_insert(0);
        loop {
            *k += 1;
            let name = format!("{}!{}", orig, k);
            if !taken(&name) {
                return name;
            }
        }
    }
}

/// One copying step. Of the body occurrences of `clause` whose cones
/// contain `pred`, the first keeps its dependencies; for the second, every
/// predicate on a path down to `pred` that the first also reaches is
/// replaced by a fresh copy with copies of its defining clauses. Returns
/// the new system and the map from each copy to the predicate it copies.
pub fn copy_rel(
    s: &System,
    shared: &SharedRel,
    names: &mut FreshNames,
) -> Result<(System, BTreeMap<String, String>), ExpandError> {
    let not_shared = || ExpandError::NotShared { clause: shared.clause, pred: shared.pred.clone() };
    let p = shared.pred.as_str();
    let c = s.clause(shared.clause).ok_or_else(not_shared)?;
    let mut hits = Vec::new();
    for (i, a) in c.body.iter().enumerate() {
        if s.cone(&a.pred)?.contains(p) {
            hits.push(i);
        }
    }
    if hits.len() < 2 {
        return Err(not_shared());
    }
    let (first, second) = (hits[0], hits[1]);
    let q1_cone = s.cone(&c.body[first].pred)?;
    let q2 = c.body[second].pred.clone();
    let mut path = BTreeSet::new();
    for x in s.cone(&q2)? {
        if s.cone(&x)?.contains(p) {
            path.insert(x);
        }
    }
    let mut copies: BTreeMap<String, String> = BTreeMap::new();
    for x in path.iter().filter(|x| q1_cone.contains(*x)) {
        let fresh = names.next(base_pred(x), &|n| s.has_pred(n) || copies.values().any(|v| v == n));
        copies.insert(x.clone(), fresh);
    }
    let to_copy = |q: &str| copies.get(q).cloned().unwrap_or_else(|| q.to_string());
    let mut next_id = s.max_clause_id();
    let mut clauses = Vec::with_capacity(s.clauses().len());
    let mut added = Vec::new();
    for d in s.clauses() {
        let mut d2 = d.clone();
        if d.id == c.id {
            d2.body[second].pred = to_copy(&q2);
        } else if d.head_pred().map_or(false, |h| path.contains(h) && !copies.contains_key(h)) {
            for a in &mut d2.body {
                a.pred = to_copy(&a.pred);
            }
        }
        clauses.push(d2);
        if d.head_pred().map_or(false, |h| copies.contains_key(h)) {
            next_id += 1;
            added.push(d.retag(next_id, &to_copy));
        }
    }
    clauses.extend(added);
    let mut preds: Vec<Predicate> = s.preds().cloned().collect();
    for (orig, fresh) in &copies {
        preds.push(Predicate::new(fresh.clone(), &s.pred(orig)?.sorts()));
    }
    let system = System::from_normalized(preds, clauses)?;
    Ok((system, copies.into_iter().map(|(o, f)| (f, o)).collect()))
}

/// Name a copy was derived from: `P!k` gives `P`.
fn base_pred(name: &str) -> &str {
    match name.rfind('!') {
        Some(i) if i > 0 && name[i + 1..].bytes().all(|b| b.is_ascii_digit()) && i + 1 < name.len() => &name[..i],
        _ => name,
    }
}

/// Expands `s` into a CDD system with the default copy budget.
pub fn expand(s: &System) -> Result<Expansion, ExpandError> {
    expand_with(s, DEFAULT_COPY_BUDGET, cfg!(debug_assertions))
}

/// Expands `s`, failing once more than `budget` copies were made. With
/// `check_steps` the correspondence is verified after every step, not
/// only at the end.
pub fn expand_with(s: &System, budget: usize, check_steps: bool) -> Result<Expansion, ExpandError> {
    if !s.is_recursion_free() {
        return Err(ExpandError::NotRecursionFree);
    }
    let mut current = s.clone();
    let mut corr = Correspondence::identity(s);
    let mut names = FreshNames::default();
    let mut copies = 0usize;
    while let Some(shared) = shared_rel(&current)? {
        let (next, made) = copy_rel(&current, &shared, &mut names)?;
        copies += made.len();
        if copies > budget {
            return Err(ExpandError::ExpansionBudget(budget));
        }
        for (copy, orig) in made {
            let root = corr.get(&orig).unwrap_or(&orig).to_string();
            corr.insert(copy, root);
        }
        current = next;
        if check_steps {
            check_correspondence(s, &current, &corr)?;
        }
    }
    check_correspondence(s, &current, &corr)?;
    Ok(Expansion { system: current, corr, origin: s.clone(), copies })
}
