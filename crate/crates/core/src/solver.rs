//! Solving by one interpolation query per predicate.
//!
//! In a clause-dependence-disjoint system every derivation uses each
//! predicate at most once, so each predicate gets a single copy of its
//! canonical parameters and a boolean indicator `b!P` that marks whether
//! its constraints are in use. Pre-formulas describe how a predicate can
//! be derived, post-formulas how it can reach the query; interpolating the
//! two yields the predicate's interpretation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::chc::{ChcError, Clause, ClauseId, Head, PredApp, Predicate, System};
use crate::expand::{self, Correspondence, CorrespondenceError, ExpandError};
use crate::formula::{Formula, Model, Var, INDICATOR_PREFIX};
use crate::interpolate::{Interpolator, ItpError, ItpQuery, ItpResult};
use crate::sat::{self, Limits, SatError, SatResult};

/// Interpretation of each predicate over its canonical parameters.
pub type Solution = BTreeMap<String, Formula>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("system is not clause-dependence disjoint")]
    NotCdd,
    #[error("system is not recursion-free")]
    NotRecursionFree,
    #[error("no interpretation for `{0}`")]
    IncompleteSolution(String),
    #[error("interpretation of `{pred}` mentions {var}, which is not one of its parameters")]
    SolutionVocabulary { pred: String, var: String },
    #[error("interpolation for `{pred}` returned unknown: {reason}")]
    SolverUnknown { pred: String, reason: String },
    #[error("validity of clause {clause} undecided: {reason}")]
    ValidationUnknown { clause: ClauseId, reason: String },
    #[error("partial solution fails on clause {0}")]
    PartialSolutionInvalid(ClauseId),
    #[error(transparent)]
    Itp(#[from] ItpError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Correspondence(#[from] CorrespondenceError),
    #[error(transparent)]
    Chc(#[from] ChcError),
    #[error(transparent)]
    Sat(#[from] SatError),
}

fn indicator(pred: &str) -> Formula {
    Formula::var(Var::indicator(pred))
}

fn indicator_pred(v: &Var) -> Option<&str> {
    v.name.strip_prefix(INDICATOR_PREFIX)
}

/// Constraint of `c` over canonical parameters: head arguments become the
/// head predicate's parameters, each body argument the parameter of its
/// occurrence, and an argument bound twice yields an equality between the
/// two parameters. Body predicates contribute their indicators.
fn encode_clause(s: &System, c: &Clause) -> Result<Formula, ChcError> {
    let mut map: BTreeMap<Var, Var> = BTreeMap::new();
    let mut parts = Vec::new();
    let mut bind = |app: &PredApp, parts: &mut Vec<Formula>| -> Result<(), ChcError> {
        let pred = s.pred(&app.pred)?;
        for (a, p) in app.args.iter().zip(&pred.params) {
            match map.get(a) {
                Some(m) => parts.push(Formula::var_eq(m, p)),
                None => {
                    map.insert(a.clone(), p.clone());
                }
            }
        }
        Ok(())
    };
    if let Some(h) = c.head_app() {
        bind(h, &mut parts)?;
    }
    for app in &c.body {
        bind(app, &mut parts)?;
        parts.push(indicator(&app.pred));
    }
    parts.push(c.constraint.rename(&map));
    Ok(Formula::and(parts))
}

/// `σ(P)` if interpreted, otherwise the disjunction of the encoded
/// clauses defining `P`.
pub fn ctr(s: &System, pred: &str, sigma: &Solution) -> Result<Formula, SolveError> {
    s.pred(pred)?;
    if let Some(f) = sigma.get(pred) {
        return Ok(f.clone());
    }
    let mut out = Vec::new();
    for c in s.defining(pred) {
        out.push(encode_clause(s, c)?);
    }
    Ok(Formula::or(out))
}

/// `¬b!P ∨ ctr(P)`.
pub fn vc(s: &System, pred: &str, sigma: &Solution) -> Result<Formula, SolveError> {
    Ok(Formula::or([Formula::not(indicator(pred)), ctr(s, pred, sigma)?]))
}

/// Encoded query clause.
pub fn query_formula(s: &System) -> Result<Formula, SolveError> {
    Ok(encode_clause(s, s.query())?)
}

/// Clauses defining `pred` conjoined with the interpretations of its direct
/// dependencies, each guarded by the dependency's indicator.
pub fn pre_formula(s: &System, pred: &str, sigma: &Solution) -> Result<Formula, SolveError> {
    let mut without = sigma.clone();
    without.remove(pred);
    let mut parts = alloc::vec![ctr(s, pred, &without)?];
    for q in s.deps(pred)? {
        let f = sigma.get(q).ok_or_else(|| SolveError::IncompleteSolution(q.clone()))?;
        parts.push(Formula::or([Formula::not(indicator(q)), f.clone()]));
    }
    Ok(Formula::and(parts))
}

/// Predicates whose clauses make up the post-formula of `pred`: its
/// transitive dependents, their siblings and the siblings' dependencies.
pub fn post_context(s: &System, pred: &str) -> Result<BTreeSet<String>, SolveError> {
    let d0 = s.transitive_dependents(pred)?;
    let mut d1 = BTreeSet::new();
    for q in d0.iter().map(String::as_str).chain([pred]) {
        d1.extend(s.siblings(q)?);
    }
    let mut d = d0;
    for q in &d1 {
        d.extend(s.tdeps(q)?.iter().cloned());
    }
    d.extend(d1);
    d.remove(pred);
    Ok(d)
}

/// Query and the counterexample characterizations of the post context,
/// with `b!P` removed. Indicators of predicates outside the context are
/// fixed to false, so derivations that bypass `pred` are excluded.
pub fn post_formula(s: &System, pred: &str, sigma: &Solution) -> Result<Formula, SolveError> {
    let d = post_context(s, pred)?;
    let mut parts = alloc::vec![query_formula(s)?];
    for q in &d {
        parts.push(vc(s, q, sigma)?);
    }
    let f = Formula::and(parts).delete_bool(&Var::indicator(pred));
    let outside: BTreeMap<Var, bool> = f
        .vocab()
        .into_iter()
        .filter(|v| indicator_pred(v).map_or(false, |p| p != pred && !d.contains(p)))
        .map(|v| (v, false))
        .collect();
    Ok(f.assign(&outside))
}

/// The interpolation query that solves `pred`.
pub fn itp_query(s: &System, pred: &str, sigma: &Solution) -> Result<ItpQuery, SolveError> {
    let pre = pre_formula(s, pred, sigma)?;
    let post = post_formula(s, pred, sigma)?;
    let params = &s.pred(pred)?.params;
    let post_vocab = post.vocab();
    let shared = pre
        .vocab()
        .into_iter()
        .filter(|v| params.contains(v) || (v.is_indicator() && post_vocab.contains(v)))
        .collect();
    Ok(ItpQuery { label: pred.to_string(), pre, post, shared })
}

fn check_vocabulary(p: &Predicate, f: &Formula) -> Result<(), SolveError> {
    match f.vocab().into_iter().find(|v| !p.params.contains(v)) {
        Some(v) => Err(SolveError::SolutionVocabulary { pred: p.name.clone(), var: v.name }),
        None => Ok(()),
    }
}

/// Options of [`solve_cdd_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct CddOptions {
    /// Validate every clause whose predicates are all interpreted after each
    /// query, failing with [`SolveError::PartialSolutionInvalid`].
    pub check_partial: bool,
}

/// Solves a CDD system: `Ok(None)` when some query is mutually
/// satisfiable, i.e. the system has no solution.
pub fn solve_cdd(s: &System, itp: &mut dyn Interpolator) -> Result<Option<Solution>, SolveError> {
    solve_cdd_with(s, itp, CddOptions::default())
}

pub fn solve_cdd_with(
    s: &System,
    itp: &mut dyn Interpolator,
    opts: CddOptions,
) -> Result<Option<Solution>, SolveError> {
    if !s.classify().cdd {
        return Err(SolveError::NotCdd);
    }
    let mut sigma = Solution::new();
    for pred in s.topo_order()? {
        let q = itp_query(s, &pred, &sigma)?;
        match itp.interpolate(&q)? {
            ItpResult::Interpolant(f) => {
                check_vocabulary(s.pred(&pred)?, &f)?;
                sigma.insert(pred, f);
            }
            ItpResult::MutuallySat(_) => return Ok(None),
            ItpResult::Unknown(reason) => return Err(SolveError::SolverUnknown { pred, reason }),
        }
        if opts.check_partial {
            for c in s.clauses() {
                let covered = c.head_pred().map_or(false, |h| sigma.contains_key(h))
                    && c.body.iter().all(|a| sigma.contains_key(&a.pred));
                if covered && clause_failure(s, c, &sigma, &Limits::default())?.is_some() {
                    return Err(SolveError::PartialSolutionInvalid(c.id));
                }
            }
        }
    }
    Ok(Some(sigma))
}

/// Interpretation of each original predicate as the conjunction of the
/// interpretations of its copies.
pub fn collapse(origin: &System, corr: &Correspondence, sigma: &Solution) -> Result<Solution, SolveError> {
    let mut out = Solution::new();
    for p in origin.preds() {
        let mut parts = Vec::new();
        for copy in corr.preimages(&p.name) {
            let f = sigma.get(copy).ok_or_else(|| SolveError::IncompleteSolution(copy.to_string()))?;
            let cp = origin_copy_params(corr, copy, p)?;
            let rename: BTreeMap<Var, Var> = cp.into_iter().zip(p.params.iter().cloned()).collect();
            parts.push(f.rename(&rename));
        }
        if parts.is_empty() {
            return Err(CorrespondenceError::NotSurjective(p.name.clone()).into());
        }
        out.insert(p.name.clone(), Formula::and(parts));
    }
    Ok(out)
}

fn origin_copy_params(corr: &Correspondence, copy: &str, orig: &Predicate) -> Result<Vec<Var>, SolveError> {
    if corr.get(copy).is_none() {
        return Err(CorrespondenceError::Unmapped(copy.to_string()).into());
    }
    Ok(Predicate::new(copy, &orig.sorts()).params)
}

/// Solves a recursion-free system by expanding it to CDD form, solving the
/// expansion and collapsing the result.
pub fn solve_recursion_free(s: &System, itp: &mut dyn Interpolator) -> Result<Option<Solution>, SolveError> {
    if !s.is_recursion_free() {
        return Err(SolveError::NotRecursionFree);
    }
    let e = expand::expand(s)?;
    match solve_cdd(&e.system, itp)? {
        None => Ok(None),
        Some(sigma) => Ok(Some(collapse(s, &e.corr, &sigma)?)),
    }
}

/// A clause that a candidate solution does not satisfy, with a model of
/// the clause body that violates its head.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseFailure {
    pub clause: ClauseId,
    pub model: Model,
}

fn instantiate(s: &System, app: &PredApp, sigma: &Solution) -> Result<Formula, SolveError> {
    let p = s.pred(&app.pred)?;
    let f = sigma.get(&app.pred).ok_or_else(|| SolveError::IncompleteSolution(app.pred.clone()))?;
    check_vocabulary(p, f)?;
    Ok(f.rename(&p.bind(&app.args)))
}

fn clause_failure(s: &System, c: &Clause, sigma: &Solution, limits: &Limits) -> Result<Option<ClauseFailure>, SolveError> {
    let mut parts = alloc::vec![c.constraint.clone()];
    for app in &c.body {
        parts.push(instantiate(s, app, sigma)?);
    }
    if let Head::App(h) = &c.head {
        parts.push(Formula::not(instantiate(s, h, sigma)?));
    }
    match sat::check_sat(&Formula::and(parts), limits)? {
        SatResult::Unsat => Ok(None),
        SatResult::Sat(model) => Ok(Some(ClauseFailure { clause: c.id, model })),
        SatResult::Unknown(reason) => Err(SolveError::ValidationUnknown { clause: c.id, reason }),
    }
}

/// First clause that `sigma` fails to satisfy, if any.
pub fn validate(s: &System, sigma: &Solution, limits: &Limits) -> Result<Option<ClauseFailure>, SolveError> {
    for c in s.clauses() {
        if let Some(f) = clause_failure(s, c, sigma, limits)? {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

pub fn is_valid(s: &System, sigma: &Solution) -> Result<bool, SolveError> {
    Ok(validate(s, sigma, &Limits::default())?.is_none())
}

/// Level-indexed unrolling of a system together with maps back to it.
#[derive(Clone, Debug)]
pub struct Unwinding {
    pub system: System,
    pub depth: usize,
    /// `P@i` to `(P, i)`.
    pub pred_origin: BTreeMap<String, (String, usize)>,
    pub clause_origin: BTreeMap<ClauseId, ClauseId>,
}

pub fn level_name(pred: &str, level: usize) -> String {
    format!("{}@{}", pred, level)
}

/// Dependency edges `(head, body)` that close a cycle, found by a
/// depth-first search over predicates in name order: an edge is a back
/// edge unless the body predicate finished before the head.
fn back_edges(s: &System) -> BTreeSet<(String, String)> {
    let mut finish: BTreeMap<&str, usize> = BTreeMap::new();
    let mut visited: BTreeSet<&str> = BTreeSet::new();
    let mut counter = 0usize;
    for root in s.pred_names() {
        if !visited.insert(root) {
            continue;
        }
        let mut stack: Vec<(&str, Vec<&str>)> =
            alloc::vec![(root, s.deps(root).unwrap().iter().rev().map(String::as_str).collect())];
        while let Some((node, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(next) => {
                    if visited.insert(next) {
                        let children = s.deps(next).unwrap().iter().rev().map(String::as_str).collect();
                        stack.push((next, children));
                    }
                }
                None => {
                    finish.insert(node, counter);
                    counter += 1;
                    stack.pop();
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    for c in s.clauses() {
        if let Some(h) = c.head_pred() {
            for a in &c.body {
                if finish[a.pred.as_str()] >= finish[h] {
                    out.insert((h.to_string(), a.pred.clone()));
                }
            }
        }
    }
    out
}

/// Unrolls `s` into levels `0..=k`. A clause instance at level `i` reads
/// level `i` along forward edges and level `i - 1` along back edges;
/// instances that would need level `-1` are dropped. The query reads
/// level `k`. Predicates unreachable from the query are removed.
pub fn unwind(s: &System, k: usize) -> Unwinding {
    let back = back_edges(s);
    let mut preds = Vec::new();
    let mut pred_origin = BTreeMap::new();
    for level in 0..=k {
        for p in s.preds() {
            let name = level_name(&p.name, level);
            preds.push(Predicate::new(name.clone(), &p.sorts()));
            pred_origin.insert(name, (p.name.clone(), level));
        }
    }
    let mut clauses = Vec::new();
    let mut clause_origin = BTreeMap::new();
    let mut next_id = 0;
    for level in 0..=k {
        for c in s.clauses().iter().filter(|c| !c.is_query()) {
            let h = c.head_pred().unwrap();
            let uses_back = c.body.iter().any(|a| back.contains(&(h.to_string(), a.pred.clone())));
            if uses_back && level == 0 {
                continue;
            }
            next_id += 1;
            let mut copy = c.retag(next_id, &|p| p.to_string());
            if let Head::App(a) = &mut copy.head {
                a.pred = level_name(h, level);
            }
            for a in &mut copy.body {
                let l = if back.contains(&(h.to_string(), a.pred.clone())) { level - 1 } else { level };
                a.pred = level_name(&a.pred, l);
            }
            clause_origin.insert(next_id, c.id);
            clauses.push(copy);
        }
    }
    next_id += 1;
    let mut q = s.query().retag(next_id, &|p| level_name(p, k));
    q.id = next_id;
    clause_origin.insert(next_id, s.query().id);
    clauses.push(q);
    let full = System::from_normalized(preds, clauses).expect("unwinding of a valid system");
    let system = full.reachable_from_query();
    pred_origin.retain(|p, _| system.has_pred(p));
    clause_origin.retain(|id, _| system.clause(*id).is_some());
    Unwinding { system, depth: k, pred_origin, clause_origin }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecursiveOutcome {
    Solved(Solution),
    /// The unwinding of this depth has no solution.
    Refuted(usize),
    Unknown(String),
}

/// Candidate interpretation of each original predicate: the disjunction of
/// its level interpretations. Predicates absent from every level get true.
pub fn combine_levels(s: &System, u: &Unwinding, sigma: &Solution) -> Solution {
    let mut out = Solution::new();
    for p in s.preds() {
        let mut parts = Vec::new();
        let mut present = false;
        for level in 0..=u.depth {
            let name = level_name(&p.name, level);
            if let Some(f) = sigma.get(&name) {
                present = true;
                let lp = Predicate::new(name, &p.sorts());
                let rename: BTreeMap<Var, Var> = lp.params.into_iter().zip(p.params.iter().cloned()).collect();
                parts.push(f.rename(&rename));
            }
        }
        out.insert(p.name.clone(), if present { Formula::or(parts) } else { Formula::True });
    }
    out
}

/// Solves unwindings of increasing depth up to `k_max`. A refuted unwinding
/// refutes `s`; a solved one yields a candidate that is returned only if it
/// validates against `s`.
pub fn solve_recursive(s: &System, k_max: usize, itp: &mut dyn Interpolator) -> Result<RecursiveOutcome, SolveError> {
    let mut last = String::from("no depth tried");
    for k in 0..=k_max {
        let u = unwind(s, k);
        match solve_recursion_free(&u.system, itp)? {
            None => return Ok(RecursiveOutcome::Refuted(k)),
            Some(sigma) => {
                let candidate = combine_levels(s, &u, &sigma);
                match validate(s, &candidate, &Limits::default()) {
                    Ok(None) => return Ok(RecursiveOutcome::Solved(candidate)),
                    Ok(Some(fail)) => last = format!("candidate at depth {} fails clause {}", k, fail.clause),
                    Err(SolveError::ValidationUnknown { clause, reason }) => {
                        last = format!("candidate at depth {} undecided on clause {}: {}", k, clause, reason)
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(RecursiveOutcome::Unknown(format!("no inductive candidate up to depth {} ({})", k_max, last)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, lin};
    use crate::formula::Rel;
    use crate::interpolate::{Builtin, Checked, CountingInterpolator};

    fn p(name: &str, i: usize) -> Var {
        Var::int(format!("{}!{}", name, i))
    }

    fn eq(a: &Var, b: &Var) -> Formula {
        Formula::var_eq(a, b)
    }

    #[test]
    fn ctr_of_join_point() {
        let s = fixtures::doubled_abs();
        let (n, abs1) = (p("L9", 0), p("L9", 1));
        let expected = Formula::or([
            Formula::and([lin(&[(1, &abs1), (-1, &n)], Rel::Eq, 0), eq(&n, &p("L6", 0)), indicator("L6")]),
            Formula::and([lin(&[(1, &abs1), (1, &n)], Rel::Eq, 0), eq(&n, &p("L8", 0)), indicator("L8")]),
        ]);
        assert_eq!(ctr(&s, "L9", &Solution::new()).unwrap(), expected);
    }

    #[test]
    fn ctr_of_fact_and_lookup() {
        let s = fixtures::doubled_abs();
        let expected = lin(&[(1, &p("dbl", 1)), (-2, &p("dbl", 0))], Rel::Eq, 0);
        assert_eq!(ctr(&s, "dbl", &Solution::new()).unwrap(), expected);
        let sigma = Solution::from([("dbl".to_string(), Formula::True)]);
        assert_eq!(ctr(&s, "dbl", &sigma).unwrap(), Formula::True);
    }

    #[test]
    fn vc_forms() {
        let s = fixtures::doubled_abs();
        let expected = Formula::or([
            Formula::not(indicator("dbl")),
            lin(&[(1, &p("dbl", 1)), (-2, &p("dbl", 0))], Rel::Eq, 0),
        ]);
        assert_eq!(vc(&s, "dbl", &Solution::new()).unwrap(), expected);
        let l9 = vc(&s, "L9", &Solution::new()).unwrap();
        assert_eq!(l9, Formula::or([Formula::not(indicator("L9")), ctr(&s, "L9", &Solution::new()).unwrap()]));
    }

    #[test]
    fn pre_of_join_point() {
        let s = fixtures::doubled_abs();
        let sigma = Solution::from([
            ("L6".to_string(), lin(&[(1, &p("L6", 0))], Rel::Ge, 0)),
            ("L8".to_string(), lin(&[(1, &p("L8", 0))], Rel::Lt, 0)),
        ]);
        let expected = Formula::and([
            ctr(&s, "L9", &Solution::new()).unwrap(),
            Formula::or([Formula::not(indicator("L6")), lin(&[(1, &p("L6", 0))], Rel::Ge, 0)]),
            Formula::or([Formula::not(indicator("L8")), lin(&[(1, &p("L8", 0))], Rel::Lt, 0)]),
        ]);
        assert_eq!(pre_formula(&s, "L9", &sigma).unwrap(), expected);
        assert!(matches!(
            pre_formula(&s, "L9", &Solution::new()),
            Err(SolveError::IncompleteSolution(_))
        ));
        assert_eq!(pre_formula(&s, "L4", &Solution::new()).unwrap(), lin(&[(1, &p("L4", 1))], Rel::Eq, 0));
    }

    #[test]
    fn post_of_join_point() {
        let s = fixtures::doubled_abs();
        assert_eq!(post_context(&s, "L9").unwrap(), BTreeSet::from(["main".to_string(), "dbl".to_string()]));
        let (m0, m1) = (p("main", 0), p("main", 1));
        let query = Formula::and([lin(&[(1, &m1)], Rel::Lt, 0), indicator("main")]);
        assert_eq!(query_formula(&s).unwrap(), query);
        let main_clause = Formula::and([
            indicator("dbl"),
            eq(&m0, &p("L9", 0)),
            lin(&[(1, &p("L9", 1)), (-1, &p("dbl", 0))], Rel::Eq, 0),
            lin(&[(1, &m1), (-1, &p("dbl", 1))], Rel::Eq, 0),
        ]);
        let expected = Formula::and([
            query,
            Formula::or([Formula::not(indicator("main")), main_clause]),
            Formula::or([
                Formula::not(indicator("dbl")),
                lin(&[(1, &p("dbl", 1)), (-2, &p("dbl", 0))], Rel::Eq, 0),
            ]),
        ]);
        assert_eq!(post_formula(&s, "L9", &Solution::new()).unwrap(), expected);
    }

    #[test]
    fn post_excludes_bypassing_branches() {
        // solving L6, the branch of L9 through L8 must not count as a context
        let s = fixtures::doubled_abs();
        let post = post_formula(&s, "L6", &Solution::new()).unwrap();
        assert!(!post.vocab().contains(&Var::indicator("L8")));
        assert!(!post.vocab().contains(&Var::indicator("L6")));
    }

    #[test]
    fn post_of_single_predicate() {
        let x = Var::int("x");
        let mut b = crate::SystemBuilder::new();
        b.declare("P", &[crate::Sort::Int]).unwrap();
        b.clause(Some(PredApp::new("P", alloc::vec![x.clone()])), alloc::vec![], lin(&[(1, &x)], Rel::Eq, 0));
        b.clause(None, alloc::vec![PredApp::new("P", alloc::vec![x.clone()])], lin(&[(1, &x)], Rel::Gt, 5));
        let s = b.build().unwrap();
        assert_eq!(post_formula(&s, "P", &Solution::new()).unwrap(), lin(&[(1, &p("P", 0))], Rel::Gt, 5));
    }

    #[test]
    fn solves_running_example() {
        let s = fixtures::doubled_abs();
        let mut itp = CountingInterpolator::new(Checked::new(Builtin::default()));
        let sigma = solve_cdd_with(&s, &mut itp, CddOptions { check_partial: true }).unwrap().unwrap();
        assert_eq!(itp.calls, s.num_preds());
        assert_eq!(validate(&s, &sigma, &Limits::default()).unwrap(), None);
        let neg = Formula::and([sigma["L9"].clone(), lin(&[(1, &p("L9", 1))], Rel::Lt, 0)]);
        assert!(sat::check_sat(&neg, &Limits::default()).unwrap().is_unsat());
    }

    #[test]
    fn unsafe_variant_has_no_solution() {
        let s = fixtures::doubled_abs_with_query(Rel::Eq, 2);
        assert_eq!(solve_cdd(&s, &mut Builtin::default()).unwrap(), None);
        assert_eq!(solve_recursion_free(&s, &mut Builtin::default()).unwrap(), None);
    }

    #[test]
    fn validation() {
        let s = fixtures::doubled_abs();
        let mut sigma: Solution = s.pred_names().map(|p| (p.to_string(), Formula::True)).collect();
        let fail = validate(&s, &sigma, &Limits::default()).unwrap().unwrap();
        assert_eq!(fail.clause, 8);
        sigma.insert("main".into(), lin(&[(1, &p("main", 1))], Rel::Ge, 0));
        assert_eq!(validate(&s, &sigma, &Limits::default()).unwrap().map(|f| f.clause), Some(7));
        sigma.insert("x".into(), Formula::True);
        sigma.insert("dbl".into(), lin(&[(1, &p("L9", 0))], Rel::Ge, 0));
        assert!(matches!(
            validate(&s, &sigma, &Limits::default()),
            Err(SolveError::SolutionVocabulary { .. })
        ));
    }

    #[test]
    fn figure_solution_validates() {
        let s = fixtures::doubled_abs();
        let sigma = Solution::from([
            ("dbl".to_string(), lin(&[(1, &p("dbl", 1)), (-2, &p("dbl", 0))], Rel::Eq, 0)),
            ("L4".to_string(), Formula::True),
            ("L6".to_string(), lin(&[(1, &p("L6", 0))], Rel::Ge, 0)),
            ("L8".to_string(), lin(&[(1, &p("L8", 0))], Rel::Lt, 0)),
            ("L9".to_string(), lin(&[(1, &p("L9", 1))], Rel::Ge, 0)),
            ("main".to_string(), lin(&[(1, &p("main", 1))], Rel::Ge, 0)),
        ]);
        assert!(is_valid(&s, &sigma).unwrap());
    }

    #[test]
    fn non_cdd_rejected() {
        assert_eq!(solve_cdd(&fixtures::diamond(), &mut Builtin::default()), Err(SolveError::NotCdd));
    }

    #[test]
    fn diamond_via_expansion() {
        let s = fixtures::diamond();
        let e = expand::expand(&s).unwrap();
        let sigma1 = solve_cdd(&e.system, &mut Builtin::default()).unwrap().unwrap();
        let sigma = collapse(&s, &e.corr, &sigma1).unwrap();
        let a_copy = sigma1["A!1"].rename(&Predicate::new("A!1", &[crate::Sort::Int]).bind(&[p("A", 0)]));
        assert_eq!(sigma["A"], Formula::and([sigma1["A"].clone(), a_copy]));
        assert!(is_valid(&s, &sigma).unwrap());
        let direct = solve_recursion_free(&s, &mut Builtin::default()).unwrap().unwrap();
        assert!(is_valid(&s, &direct).unwrap());
    }

    #[test]
    fn collapse_identity() {
        let s = fixtures::doubled_abs();
        let sigma = solve_cdd(&s, &mut Builtin::default()).unwrap().unwrap();
        assert_eq!(collapse(&s, &Correspondence::identity(&s), &sigma).unwrap(), sigma);
    }

    #[test]
    fn unsolvable_trivial_system() {
        let x = Var::int("x");
        let mut b = crate::SystemBuilder::new();
        b.declare("P", &[crate::Sort::Int]).unwrap();
        b.clause(Some(PredApp::new("P", alloc::vec![x.clone()])), alloc::vec![], lin(&[(1, &x)], Rel::Eq, 0));
        b.clause(None, alloc::vec![PredApp::new("P", alloc::vec![x.clone()])], lin(&[(1, &x)], Rel::Eq, 0));
        assert_eq!(solve_cdd(&b.build().unwrap(), &mut Builtin::default()).unwrap(), None);
    }

    #[test]
    fn unwinding_levels() {
        let s = fixtures::counter();
        for k in 0..4 {
            let u = unwind(&s, k);
            assert!(u.system.is_recursion_free());
            assert_eq!(u.system.num_preds(), k + 1);
            assert_eq!(u.system.clauses().len(), 2 * k + 2);
        }
        let rf = fixtures::doubled_abs();
        let u = unwind(&rf, 3);
        assert_eq!(u.system.clauses().len(), rf.clauses().len());
        assert!(u.system.pred_names().all(|p| p.ends_with("@3")));
    }

    #[test]
    fn counter_depths() {
        let s = fixtures::counter();
        let mut itp = Builtin::default();
        assert!(solve_recursion_free(&unwind(&s, 2).system, &mut itp).unwrap().is_some());
        assert_eq!(solve_recursion_free(&unwind(&s, 3).system, &mut itp).unwrap(), None);
        assert_eq!(solve_recursive(&s, 5, &mut itp).unwrap(), RecursiveOutcome::Refuted(3));
    }

    #[test]
    fn safe_counter_is_certified() {
        let s = fixtures::counter_safe();
        match solve_recursive(&s, 8, &mut Builtin::default()).unwrap() {
            RecursiveOutcome::Solved(sigma) => assert!(is_valid(&s, &sigma).unwrap()),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn recursion_free_input_solved_at_depth_zero() {
        let s = fixtures::doubled_abs();
        match solve_recursive(&s, 3, &mut Builtin::default()).unwrap() {
            RecursiveOutcome::Solved(sigma) => assert!(is_valid(&s, &sigma).unwrap()),
            other => panic!("{:?}", other),
        }
    }
}
