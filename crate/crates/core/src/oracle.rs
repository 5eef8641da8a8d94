//! Ground truth for small recursion-free systems by enumerating derivation
//! trees, random system generators, and size measures of the different
//! ways to make a system tree-shaped.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chc::{ClauseId, Head, PredApp, System, SystemBuilder};
use crate::expand::{self, ExpandError};
use crate::formula::{Formula, LinExpr, Model, Rel, Sort, Var};
use crate::rational::from_i64;
use crate::sat::{self, Limits, SatError, SatResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("system too large for the oracle: {preds} predicates, {clauses} clauses")]
    OracleTooLarge { preds: usize, clauses: usize },
    #[error("more than {0} derivation trees")]
    TooManyTrees(usize),
    #[error("system is not recursion-free")]
    NotRecursionFree,
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Expand(#[from] ExpandError),
}

/// Size limits of the enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_preds: usize,
    pub max_clauses: usize,
    pub max_trees: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_preds: 8, max_clauses: 14, max_trees: 50_000 }
    }
}

impl OracleLimits {
    /// Looser limits for extracting counterexamples from larger systems.
    pub fn relaxed() -> Self {
        OracleLimits { max_preds: 256, max_clauses: 512, max_trees: 200_000 }
    }
}

/// Clause applied at the root, with one subtree per body occurrence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DerivationTree {
    pub clause: ClauseId,
    pub children: Vec<DerivationTree>,
}

impl DerivationTree {
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(DerivationTree::size).sum::<usize>()
    }

    /// Clause ids in pre-order.
    pub fn clause_ids(&self) -> Vec<ClauseId> {
        let mut out = vec![self.clause];
        for c in &self.children {
            out.extend(c.clause_ids());
        }
        out
    }

    /// Relabels every node through `f`.
    pub fn map_clauses(&self, f: &dyn Fn(ClauseId) -> ClauseId) -> DerivationTree {
        DerivationTree { clause: f(self.clause), children: self.children.iter().map(|c| c.map_clauses(f)).collect() }
    }

    fn write_indented(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        writeln!(f, "{:width$}({})", "", self.clause, width = 2 * depth)?;
        for c in &self.children {
            c.write_indented(f, depth + 1)?;
        }
        Ok(())
    }
}

impl fmt::Display for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_indented(f, 0)
    }
}

/// Conjunction of the clause constraints along `tree`, each node's
/// clause-local variables renamed apart with a `#k` suffix and linked to
/// the arguments of the occurrence it derives.
pub fn tree_constraint(s: &System, tree: &DerivationTree) -> Formula {
    let mut parts = Vec::new();
    let mut counter = 0usize;
    accumulate(s, tree, None, &mut counter, &mut parts);
    Formula::and(parts)
}

fn accumulate(s: &System, tree: &DerivationTree, head_args: Option<&[Var]>, counter: &mut usize, out: &mut Vec<Formula>) {
    let c = s.clause(tree.clause).expect("tree over clauses of the system");
    let k = *counter;
    *counter += 1;
    let mut map: BTreeMap<Var, Var> =
        c.vars().into_iter().map(|v| (v.clone(), Var::new(format!("{}#{}", v.name, k), v.sort))).collect();
    if let (Some(args), Head::App(h)) = (head_args, &c.head) {
        for (param, arg) in h.args.iter().zip(args) {
            map.insert(param.clone(), arg.clone());
        }
    }
    out.push(c.constraint.rename(&map));
    for (app, child) in c.body.iter().zip(&tree.children) {
        let args: Vec<Var> = app.args.iter().map(|a| map[a].clone()).collect();
        accumulate(s, child, Some(&args), counter, out);
    }
}

/// Outcome of the oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// No derivation of the query is satisfiable.
    Solvable,
    /// A satisfiable derivation of the query, smallest first.
    Refuted { tree: DerivationTree, model: Model },
    /// Some derivation could not be decided and none was satisfiable.
    Unknown(String),
}

impl Verdict {
    pub fn is_solvable(&self) -> bool {
        matches!(self, Verdict::Solvable)
    }
}

struct Enumerator<'s> {
    s: &'s System,
    limits: OracleLimits,
    sat: Limits,
    memo: BTreeMap<String, Vec<DerivationTree>>,
    total: usize,
    undecided: bool,
}

impl Enumerator<'_> {
    /// Derivation trees of `pred` whose own constraint is not refuted.
    fn trees(&mut self, pred: &str) -> Result<Vec<DerivationTree>, OracleError> {
        if let Some(t) = self.memo.get(pred) {
            return Ok(t.clone());
        }
        let clauses: Vec<_> = self.s.defining(pred).map(|c| (c.id, c.body.clone())).collect();
        let mut out = Vec::new();
        for (id, body) in clauses {
            for t in self.combine(id, &body)? {
                match sat::check_sat(&tree_constraint(self.s, &t), &self.sat)? {
                    SatResult::Unsat => {}
                    SatResult::Sat(_) => out.push(t),
                    SatResult::Unknown(_) => {
                        self.undecided = true;
                        out.push(t);
                    }
                }
            }
        }
        self.memo.insert(pred.to_string(), out.clone());
        Ok(out)
    }

    fn combine(&mut self, id: ClauseId, body: &[PredApp]) -> Result<Vec<DerivationTree>, OracleError> {
        let mut partial: Vec<Vec<DerivationTree>> = vec![Vec::new()];
        for app in body {
            let options = self.trees(&app.pred)?;
            let mut next = Vec::with_capacity(partial.len() * options.len());
            for p in &partial {
                for o in &options {
                    let mut q = p.clone();
                    q.push(o.clone());
                    next.push(q);
                }
            }
            self.total += next.len();
            if self.total > self.limits.max_trees {
                return Err(OracleError::TooManyTrees(self.limits.max_trees));
            }
            partial = next;
        }
        Ok(partial.into_iter().map(|children| DerivationTree { clause: id, children }).collect())
    }
}

/// Searches for a satisfiable derivation of the query within `limits`.
pub fn find_counterexample(s: &System, limits: OracleLimits) -> Result<Verdict, OracleError> {
    if !s.is_recursion_free() {
        return Err(OracleError::NotRecursionFree);
    }
    if s.num_preds() > limits.max_preds || s.clauses().len() > limits.max_clauses {
        return Err(OracleError::OracleTooLarge { preds: s.num_preds(), clauses: s.clauses().len() });
    }
    let sat_limits = Limits::default();
    let mut e = Enumerator { s, limits, sat: sat_limits, memo: BTreeMap::new(), total: 0, undecided: false };
    let q = s.query();
    let mut roots = e.combine(q.id, &q.body)?;
    roots.sort_by_key(|t| (t.size(), t.clone()));
    for t in roots {
        match sat::check_sat(&tree_constraint(s, &t), &sat_limits)? {
            SatResult::Sat(model) => return Ok(Verdict::Refuted { tree: t, model }),
            SatResult::Unsat => {}
            SatResult::Unknown(_) => e.undecided = true,
        }
    }
    Ok(if e.undecided {
        Verdict::Unknown(String::from("some derivation could not be decided"))
    } else {
        Verdict::Solvable
    })
}

/// Decides solvability of a small recursion-free system.
pub fn oracle_solvable(s: &System) -> Result<Verdict, OracleError> {
    find_counterexample(s, OracleLimits::default())
}

/// Shape constraints of generated systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Profile {
    Linear,
    BodyDisjoint,
    /// Any recursion-free system, sharing allowed.
    Dag,
    Cdd,
}

impl Profile {
    pub const ALL: [Profile; 4] = [Profile::Linear, Profile::BodyDisjoint, Profile::Dag, Profile::Cdd];

    pub fn name(self) -> &'static str {
        match self {
            Profile::Linear => "linear",
            Profile::BodyDisjoint => "body-disjoint",
            Profile::Dag => "dag",
            Profile::Cdd => "cdd",
        }
    }
}

impl core::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Profile::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown profile `{}`", s))
    }
}

struct Gen {
    rng: ChaCha8Rng,
    profile: Profile,
    sort: Sort,
    arity: Vec<usize>,
    cones: Vec<Vec<bool>>,
    used_in_body: Vec<bool>,
}

impl Gen {
    fn pick_body(&mut self, upto: usize, max_len: usize, mut out: Vec<usize>) -> Vec<usize> {
        let limit = match self.profile {
            Profile::Linear => 1,
            _ => max_len,
        };
        let len = out.len() + self.rng.gen_range(0..=limit.min(upto));
        let mut candidates: Vec<usize> = (0..upto).collect();
        candidates.shuffle(&mut self.rng);
        for q in candidates {
            if out.len() == len {
                break;
            }
            let ok = match self.profile {
                Profile::BodyDisjoint => !self.used_in_body[q],
                Profile::Cdd => out.iter().all(|r| (0..self.cones[q].len()).all(|i| !(self.cones[q][i] && self.cones[*r][i]))),
                _ => true,
            };
            if ok {
                out.push(q);
            }
        }
        if self.profile == Profile::Dag && out.len() == 1 && len >= 2 && self.rng.gen_bool(0.2) {
            out.push(out[0]);
        }
        for q in &out {
            self.used_in_body[*q] = true;
        }
        out
    }

    fn atom(&mut self, vars: &[Var]) -> Formula {
        let n = self.rng.gen_range(1..=vars.len().min(2));
        let mut chosen: Vec<&Var> = vars.iter().collect();
        chosen.shuffle(&mut self.rng);
        let mut e = LinExpr::new();
        for v in chosen.into_iter().take(n) {
            let c = loop {
                let c = self.rng.gen_range(-3i64..=3);
                if c != 0 {
                    break c;
                }
            };
            e.add_term(from_i64(c), v.clone());
        }
        let rel = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ge, Rel::Gt][self.rng.gen_range(0..5)];
        Formula::atom(e, rel, from_i64(self.rng.gen_range(-3i64..=3)))
    }

    fn constraint(&mut self, vars: &[Var], atoms: core::ops::RangeInclusive<usize>) -> Formula {
        if vars.is_empty() {
            return if self.rng.gen_bool(0.9) { Formula::True } else { Formula::False };
        }
        let n = self.rng.gen_range(atoms);
        let mut parts: Vec<Formula> = (0..n).map(|_| self.atom(vars)).collect();
        if self.rng.gen_bool(0.2) {
            let a = self.atom(vars);
            let b = self.atom(vars);
            parts.push(Formula::or([a, b]));
        }
        Formula::and(parts)
    }

    fn clause(&mut self, b: &mut SystemBuilder, head: Option<usize>, body: &[usize]) {
        let mut vars = Vec::new();
        let head_app = head.map(|h| {
            let args: Vec<Var> = (0..self.arity[h]).map(|i| Var::new(format!("h{}", i), self.sort)).collect();
            vars.extend(args.iter().cloned());
            PredApp::new(format!("P{}", h), args)
        });
        let mut apps = Vec::new();
        for (j, q) in body.iter().enumerate() {
            let mut args = Vec::new();
            for i in 0..self.arity[*q] {
                // occasionally pass a head argument straight through
                let reuse = head_app.as_ref().and_then(|h| h.args.get(i)).filter(|_| self.rng.gen_bool(0.3));
                let v = match reuse {
                    Some(v) if !args.contains(v) => v.clone(),
                    _ => Var::new(format!("a{}_{}", j, i), self.sort),
                };
                args.push(v);
            }
            vars.extend(args.iter().cloned());
            apps.push(PredApp::new(format!("P{}", q), args));
        }
        if self.rng.gen_bool(0.2) {
            vars.push(Var::new("t", self.sort));
        }
        vars.sort();
        vars.dedup();
        let atoms = if head.is_none() { 2..=3 } else { 1..=2 };
        let c = self.constraint(&vars, atoms);
        b.clause(head_app, apps, c);
    }
}

/// Random small recursion-free system. Deterministic in `seed`; the result
/// belongs to the class named by `profile`. Predicates `P0..` have arity 1
/// or 2 over real-valued arguments, coefficients range over `[-3, 3]`.
pub fn gen_system(seed: u64, profile: Profile) -> System {
    gen_system_sorted(seed, profile, Sort::Real)
}

/// [`gen_system`] with arguments of the given arithmetic sort.
pub fn gen_system_sorted(seed: u64, profile: Profile, sort: Sort) -> System {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=6usize);
    let arity: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=2)).collect();
    let mut g = Gen { rng, profile, sort, arity, cones: vec![vec![false; n]; n], used_in_body: vec![false; n] };
    let mut b = SystemBuilder::new();
    for p in 0..n {
        let sorts = vec![sort; g.arity[p]];
        b.declare(&format!("P{}", p), &sorts).unwrap();
    }
    let mut budget = 9usize;
    for p in 0..n {
        let max_defs = if budget > n - p { 2 } else { 1 };
        let defs = g.rng.gen_range(1..=max_defs);
        let mut cone = vec![false; n];
        cone[p] = true;
        for _ in 0..defs {
            let body = g.pick_body(p, 2, Vec::new());
            for q in &body {
                for i in 0..n {
                    cone[i] |= g.cones[*q][i];
                }
            }
            g.clause(&mut b, Some(p), &body);
            budget = budget.saturating_sub(1);
        }
        g.cones[p] = cone;
    }
    // the query reads the top predicate so that most of the system matters
    let mut body = vec![n - 1];
    if g.profile != Profile::Linear && n > 1 && g.rng.gen_bool(0.4) {
        body = g.pick_body(n - 1, 1, body);
    }
    g.used_in_body[n - 1] = true;
    g.clause(&mut b, None, &body);
    b.build().expect("generated system is well-formed")
}

/// Predicate and clause counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub preds: u128,
    pub clauses: u128,
}

/// Sizes of three ways of removing sharing from a system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExpansionSizes {
    /// Copies made by CDD expansion.
    pub cdd: Counts,
    /// Full duplication into a body-disjoint (tree-shaped) system: one
    /// predicate instance per occurrence path from the query.
    pub tree: Counts,
    /// Number of derivation trees of the query.
    pub derivations: u128,
    /// Inlining every body occurrence but the first of each non-linear
    /// clause by its derivations, leaving a linear system.
    pub linear_inline: Counts,
}

/// Computes [`ExpansionSizes`]; tree and inlining sizes are counted, not
/// built, and saturate at `u128::MAX`.
pub fn expansion_sizes(s: &System) -> Result<ExpansionSizes, OracleError> {
    if !s.is_recursion_free() {
        return Err(OracleError::NotRecursionFree);
    }
    let e = expand::expand(s)?;
    let cdd = Counts { preds: e.system.num_preds() as u128, clauses: e.system.clauses().len() as u128 };
    let order = s.topo_order().map_err(|_| OracleError::NotRecursionFree)?;

    let mut derivs: BTreeMap<&str, u128> = BTreeMap::new();
    for p in &order {
        let n = s
            .defining(p)
            .map(|c| c.body.iter().fold(1u128, |acc, a| acc.saturating_mul(derivs[a.pred.as_str()])))
            .fold(0u128, u128::saturating_add);
        derivs.insert(p, n);
    }
    let query = s.query();
    let derivations = query.body.iter().fold(1u128, |acc, a| acc.saturating_mul(derivs[a.pred.as_str()]));

    // occurrence paths from the query, dependents first
    let mut instances: BTreeMap<&str, u128> = order.iter().map(|p| (p.as_str(), 0)).collect();
    for a in &query.body {
        *instances.get_mut(a.pred.as_str()).unwrap() += 1;
    }
    for p in order.iter().rev() {
        let here = instances[p.as_str()];
        for c in s.defining(p) {
            for a in &c.body {
                let slot = instances.get_mut(a.pred.as_str()).unwrap();
                *slot = slot.saturating_add(here);
            }
        }
    }
    let tree_preds = instances.values().fold(0u128, |a, b| a.saturating_add(*b));
    let tree_clauses = order
        .iter()
        .map(|p| instances[p.as_str()].saturating_mul(s.defining(p).count() as u128))
        .fold(1u128, u128::saturating_add);

    let linear_clauses = s
        .clauses()
        .iter()
        .map(|c| c.body.iter().skip(1).fold(1u128, |acc, a| acc.saturating_mul(derivs[a.pred.as_str()])))
        .fold(0u128, u128::saturating_add);
    Ok(ExpansionSizes {
        cdd,
        tree: Counts { preds: tree_preds, clauses: tree_clauses },
        derivations,
        linear_inline: Counts { preds: s.num_preds() as u128, clauses: linear_clauses },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, lin};

    #[test]
    fn running_example_is_solvable() {
        assert_eq!(oracle_solvable(&fixtures::doubled_abs()).unwrap(), Verdict::Solvable);
    }

    #[test]
    fn unsafe_variant_has_witness() {
        let s = fixtures::doubled_abs_with_query(Rel::Eq, 2);
        match oracle_solvable(&s).unwrap() {
            Verdict::Refuted { tree, model } => {
                assert_eq!(tree.size(), 6);
                assert!(tree_constraint(&s, &tree).eval(&model));
                let n = model.iter().find(|(v, _)| v.name.starts_with("c8!n#")).unwrap().1.clone();
                assert_eq!(n, crate::Value::Num(from_i64(1)));
            }
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn unsat_query_is_solvable() {
        let x = Var::real("x");
        let mut b = SystemBuilder::new();
        b.clause(None, vec![], Formula::and([lin(&[(1, &x)], Rel::Lt, 0), lin(&[(1, &x)], Rel::Gt, 0)]));
        assert_eq!(oracle_solvable(&b.build().unwrap()).unwrap(), Verdict::Solvable);
    }

    #[test]
    fn guard() {
        let s = fixtures::nested_diamond(4);
        assert!(matches!(oracle_solvable(&s), Err(OracleError::OracleTooLarge { .. })));
        assert!(find_counterexample(&s, OracleLimits::relaxed()).unwrap().is_solvable());
        assert!(matches!(oracle_solvable(&fixtures::counter()), Err(OracleError::NotRecursionFree)));
    }

    #[test]
    fn generator_is_deterministic_and_classified() {
        for p in Profile::ALL {
            for seed in 0..40 {
                let s = gen_system(seed, p);
                assert_eq!(s, gen_system(seed, p));
                let c = s.classify();
                assert!(c.recursion_free);
                assert!(s.num_preds() <= 8 && s.clauses().len() <= 14);
                match p {
                    Profile::Linear => assert!(c.linear, "seed {}", seed),
                    Profile::BodyDisjoint => assert!(c.body_disjoint, "seed {}", seed),
                    Profile::Cdd => assert!(c.cdd, "seed {}", seed),
                    Profile::Dag => {}
                }
            }
        }
    }

    #[test]
    fn dag_profile_produces_sharing() {
        let non_cdd = (0..200).filter(|s| !gen_system(*s, Profile::Dag).classify().cdd).count();
        assert!(non_cdd > 10, "{}", non_cdd);
    }

    #[test]
    fn sizes_of_running_example() {
        let z = expansion_sizes(&fixtures::doubled_abs()).unwrap();
        assert_eq!(z.cdd, Counts { preds: 6, clauses: 8 });
        assert_eq!(z.tree, Counts { preds: 7, clauses: 9 });
        assert_eq!(z.derivations, 2);
    }

    #[test]
    fn sizes_of_query_only_system() {
        let mut b = SystemBuilder::new();
        b.clause(None, vec![], Formula::True);
        let z = expansion_sizes(&b.build().unwrap()).unwrap();
        assert_eq!(z.cdd, z.tree);
        assert_eq!(z.cdd, z.linear_inline);
    }

    #[test]
    fn diamond_family_counts() {
        for k in 1..=6usize {
            let z = expansion_sizes(&fixtures::nested_diamond(k)).unwrap();
            assert_eq!(z.derivations, 1 << k);
            assert_eq!(z.cdd.clauses, 4 * k as u128 + 2);
            assert_eq!(z.tree.clauses, 4 * ((1u128 << k) - 1) + (1u128 << k) + 1);
        }
    }

    #[test]
    fn tree_display() {
        let t = DerivationTree { clause: 8, children: vec![DerivationTree { clause: 7, children: vec![] }] };
        assert_eq!(t.to_string(), "(8)\n  (7)\n");
        assert_eq!(t.clause_ids(), [8, 7]);
    }
}
