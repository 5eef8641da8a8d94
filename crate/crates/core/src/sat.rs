//! Satisfiability for quantifier-free linear arithmetic with booleans.
//!
//! The search walks the negation normal form of a formula, assigning
//! boolean literals and collecting atoms, and branches only on
//! disjunctions that are still open. Branch points prune with a rational
//! feasibility check of the atoms gathered so far. When only deciding
//! satisfiability, pure boolean literals are assigned without branching.
//! Complete cubes are decided exactly: rational Fourier–Motzkin, plus
//! branch-and-bound when integer variables occur.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::arith::{self, IntFeasibility, LinCon};
use crate::formula::{Atom, Cube, Formula, Model, Sort, Value, Var};

/// Resource limits of the builtin decision procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of branches explored by one search.
    pub max_branches: usize,
    /// Maximum branch-and-bound nodes per integer cube.
    pub bb_nodes: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_branches: 200_000, bb_nodes: 400 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SatError {
    #[error("resource exhausted: more than {0} branches")]
    ResourceExhausted(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    Sat(Model),
    Unsat,
    /// Integer reasoning ran out of budget on some cube.
    Unknown(String),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SatResult::Unsat)
    }
}

/// Status of a complete cube.
#[derive(Clone, Debug)]
pub enum Leaf {
    Sat(Model),
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Decides a cube exactly.
pub fn check_cube(cube: &Cube, limits: &Limits) -> Option<Leaf> {
    let cons = arith::atoms_to_cons(cube.atoms.iter());
    let has_int = cube.atoms.iter().flat_map(Atom::vars).any(|v| v.sort == Sort::Int);
    let values = if has_int {
        match arith::int_feasible(&cons, &|v: &Var| v.sort == Sort::Int, limits.bb_nodes) {
            IntFeasibility::Sat(v) => v,
            IntFeasibility::Unsat => return None,
            IntFeasibility::Unknown => return Some(Leaf::Unknown),
        }
    } else {
        arith::feasible(&cons)?
    };
    let mut model = Model::new();
    for (v, b) in &cube.bools {
        model.set(v.clone(), Value::Bool(*b));
    }
    for (v, x) in values {
        model.set(v, Value::Num(x));
    }
    Some(Leaf::Sat(model))
}

#[derive(Clone)]
struct State<'f> {
    bools: BTreeMap<Var, bool>,
    atoms: Vec<&'f Atom>,
    pending: Vec<&'f Formula>,
    open: Vec<&'f [Formula]>,
    checked_atoms: usize,
}

enum Lit {
    True,
    False,
    Open,
}

fn literal_status(f: &Formula, bools: &BTreeMap<Var, bool>) -> Lit {
    let (v, positive) = match f {
        Formula::True => return Lit::True,
        Formula::False => return Lit::False,
        Formula::Bool(v) => (v, true),
        Formula::Not(inner) => match &**inner {
            Formula::Bool(v) => (v, false),
            _ => return Lit::Open,
        },
        _ => return Lit::Open,
    };
    match bools.get(v) {
        Some(b) if *b == positive => Lit::True,
        Some(_) => Lit::False,
        None => Lit::Open,
    }
}

fn polarities<'f>(f: &'f Formula, bools: &BTreeMap<Var, bool>, acc: &mut BTreeMap<&'f Var, (bool, bool)>) {
    match f {
        Formula::Bool(v) if !bools.contains_key(v) => acc.entry(v).or_default().0 = true,
        Formula::Not(inner) => {
            if let Formula::Bool(v) = &**inner {
                if !bools.contains_key(v) {
                    acc.entry(v).or_default().1 = true;
                }
            }
        }
        Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|g| polarities(g, bools, acc)),
        _ => {}
    }
}

struct Search<'l, 'v> {
    limits: &'l Limits,
    /// Assign pure boolean literals without branching. Preserves
    /// satisfiability but not the set of cubes.
    pure: bool,
    branches: usize,
    visit: &'v mut dyn FnMut(&Cube, Leaf) -> Flow,
}

impl Search<'_, '_> {
    fn run<'f>(&mut self, mut st: State<'f>) -> Result<Flow, SatError> {
        loop {
            while let Some(f) = st.pending.pop() {
                match f {
                    Formula::True => {}
                    Formula::False => return Ok(Flow::Continue),
                    Formula::Bool(v) => {
                        if st.bools.insert(v.clone(), true) == Some(false) {
                            return Ok(Flow::Continue);
                        }
                    }
                    Formula::Not(inner) => match &**inner {
                        Formula::Bool(v) => {
                            if st.bools.insert(v.clone(), false) == Some(true) {
                                return Ok(Flow::Continue);
                            }
                        }
                        _ => unreachable!("search runs on negation normal form"),
                    },
                    Formula::Atom(a) => st.atoms.push(a),
                    Formula::And(fs) => st.pending.extend(fs.iter()),
                    Formula::Or(fs) => st.open.push(fs),
                }
            }
            if self.pure {
                let mut acc = BTreeMap::new();
                for fs in &st.open {
                    fs.iter().for_each(|g| polarities(g, &st.bools, &mut acc));
                }
                let pure: Vec<(Var, bool)> =
                    acc.into_iter().filter(|(_, (p, n))| p != n).map(|(v, (p, _))| (v.clone(), p)).collect();
                if !pure.is_empty() {
                    st.bools.extend(pure);
                    continue;
                }
            }
            // pick the open disjunction with the fewest live alternatives,
            // preferring ones already narrowed by earlier choices
            let mut best: Option<(usize, Vec<&'f Formula>, bool)> = None;
            let mut satisfied = Vec::new();
            for (i, fs) in st.open.iter().enumerate() {
                let mut live = Vec::new();
                let mut done = false;
                for g in fs.iter() {
                    match literal_status(g, &st.bools) {
                        Lit::True => {
                            done = true;
                            break;
                        }
                        Lit::False => {}
                        Lit::Open => live.push(g),
                    }
                }
                if done {
                    satisfied.push(i);
                    continue;
                }
                if live.is_empty() {
                    return Ok(Flow::Continue);
                }
                let untouched = live.len() == fs.len();
                if best.as_ref().map_or(true, |(_, b, u)| (live.len(), untouched) < (b.len(), *u)) {
                    best = Some((i, live, untouched));
                }
            }
            let (idx, live) = match best {
                None => return self.leaf(&st),
                Some((i, live, _)) => (i, live),
            };
            // remove the chosen and satisfied disjunctions
            let mut drop = satisfied;
            drop.push(idx);
            drop.sort_unstable();
            for i in drop.into_iter().rev() {
                st.open.swap_remove(i);
            }
            if live.len() == 1 {
                st.pending.push(live[0]);
                continue;
            }
            if st.atoms.len() > st.checked_atoms {
                st.checked_atoms = st.atoms.len();
                let cons: Vec<LinCon> = st.atoms.iter().map(|a| LinCon::from_atom(a)).collect();
                if arith::feasible(&cons).is_none() {
                    return Ok(Flow::Continue);
                }
            }
            for g in live {
                self.branches += 1;
                if self.branches > self.limits.max_branches {
                    return Err(SatError::ResourceExhausted(self.limits.max_branches));
                }
                let mut child = st.clone();
                child.pending.push(g);
                if self.run(child)? == Flow::Stop {
                    return Ok(Flow::Stop);
                }
            }
            return Ok(Flow::Continue);
        }
    }

    fn leaf(&mut self, st: &State<'_>) -> Result<Flow, SatError> {
        let cube = Cube {
            bools: st.bools.clone(),
            atoms: st.atoms.iter().map(|a| (*a).clone()).collect(),
        };
        match check_cube(&cube, self.limits) {
            None => Ok(Flow::Continue),
            Some(leaf) => Ok((self.visit)(&cube, leaf)),
        }
    }
}

/// Visits every complete cube of `f` that is satisfiable or undecided.
/// Cubes are implicants of `f`; together the visited and pruned cubes cover `f`.
pub fn for_each_cube(
    f: &Formula,
    limits: &Limits,
    visit: &mut dyn FnMut(&Cube, Leaf) -> Flow,
) -> Result<(), SatError> {
    search(f, limits, false, visit)
}

fn search(f: &Formula, limits: &Limits, pure: bool, visit: &mut dyn FnMut(&Cube, Leaf) -> Flow) -> Result<(), SatError> {
    let nnf = f.nnf();
    let st = State {
        bools: BTreeMap::new(),
        atoms: Vec::new(),
        pending: alloc::vec![&nnf],
        open: Vec::new(),
        checked_atoms: 0,
    };
    let mut search = Search { limits, pure, branches: 0, visit };
    search.run(st)?;
    Ok(())
}

/// Decides `f`. Models assign every variable of `f`.
pub fn check_sat(f: &Formula, limits: &Limits) -> Result<SatResult, SatError> {
    let mut found = None;
    let mut unknown = false;
    search(f, limits, true, &mut |_, leaf| match leaf {
        Leaf::Sat(m) => {
            found = Some(m);
            Flow::Stop
        }
        Leaf::Unknown => {
            unknown = true;
            Flow::Continue
        }
    })?;
    Ok(match found {
        Some(mut m) => {
            complete_model(&mut m, &f.vocab());
            debug_assert!(f.eval(&m));
            SatResult::Sat(m)
        }
        None if unknown => SatResult::Unknown(String::from("integer branch-and-bound budget exhausted")),
        None => SatResult::Unsat,
    })
}

pub(crate) fn complete_model(m: &mut Model, vars: &BTreeSet<Var>) {
    for v in vars {
        if m.get(v).is_none() {
            let value = if v.sort == Sort::Bool {
                Value::Bool(false)
            } else {
                Value::Num(num_traits::Zero::zero())
            };
            m.set(v.clone(), value);
        }
    }
}

/// `a ⊨ b`, i.e. `a ∧ ¬b` unsatisfiable.
pub fn entails(a: &Formula, b: &Formula, limits: &Limits) -> Result<SatResult, SatError> {
    check_sat(&Formula::and([a.clone(), Formula::not(b.clone())]), limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{LinExpr, Rel};
    use crate::rational::from_i64;

    fn cmp(v: &Var, rel: Rel, c: i64) -> Formula {
        Formula::atom(LinExpr::var(v.clone()), rel, from_i64(c))
    }

    #[test]
    fn trivially_unsat() {
        let x = Var::int("x");
        let f = Formula::and([cmp(&x, Rel::Gt, 0), cmp(&x, Rel::Lt, 0)]);
        assert_eq!(check_sat(&f, &Limits::default()).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn boolean_structure() {
        let (a, b) = (Var::boolean("a"), Var::boolean("b"));
        let x = Var::real("x");
        let f = Formula::and([
            Formula::or([Formula::var(a.clone()), Formula::var(b.clone())]),
            Formula::or([Formula::not(Formula::var(a.clone())), cmp(&x, Rel::Gt, 3)]),
            Formula::or([Formula::not(Formula::var(b.clone())), cmp(&x, Rel::Lt, 1)]),
            cmp(&x, Rel::Ge, 2),
        ]);
        match check_sat(&f, &Limits::default()).unwrap() {
            SatResult::Sat(m) => {
                assert!(f.eval(&m));
                assert!(m.boolean(&a));
            }
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn integer_reasoning() {
        let x = Var::int("x");
        let f = Formula::and([cmp(&x, Rel::Gt, 0), cmp(&x, Rel::Lt, 1)]);
        assert_eq!(check_sat(&f, &Limits::default()).unwrap(), SatResult::Unsat);
        let xr = Var::real("x");
        let g = Formula::and([cmp(&xr, Rel::Gt, 0), cmp(&xr, Rel::Lt, 1)]);
        assert!(check_sat(&g, &Limits::default()).unwrap().is_sat());
    }

    #[test]
    fn branch_budget() {
        let mut parts = Vec::new();
        for i in 0..20 {
            let v = Var::real(alloc::format!("x{}", i));
            parts.push(Formula::or([cmp(&v, Rel::Lt, 0), cmp(&v, Rel::Gt, 0)]));
        }
        parts.push(Formula::False);
        let f = Formula::And(parts);
        let limits = Limits { max_branches: 50, bb_nodes: 10 };
        assert_eq!(check_sat(&f, &limits), Ok(SatResult::Unsat));
        let tight = Formula::and(
            (0..20).map(|i| {
                let v = Var::real(alloc::format!("x{}", i));
                Formula::or([cmp(&v, Rel::Lt, 0), cmp(&v, Rel::Gt, 0)])
            })
            .chain([cmp(&Var::int("y"), Rel::Lt, 1), cmp(&Var::int("y"), Rel::Gt, 0)]),
        );
        assert!(matches!(check_sat(&tight, &limits), Err(SatError::ResourceExhausted(50))));
    }

    #[test]
    fn indicator_chains_do_not_branch_exponentially() {
        use crate::solver::{itp_query, Solution};
        let s = crate::fixtures::nested_diamond(6);
        let q = itp_query(&s, "A0", &Solution::new()).unwrap();
        let f = Formula::and([q.pre, q.post]);
        let tight = Limits { max_branches: 500, ..Limits::default() };
        assert_eq!(check_sat(&f, &tight).unwrap(), SatResult::Unsat);
    }

    #[test]
    fn pure_literals_keep_models_sound() {
        let (a, b) = (Var::boolean("a"), Var::boolean("b"));
        let x = Var::int("x");
        let f = Formula::and([
            Formula::or([Formula::not(Formula::var(a.clone())), cmp(&x, Rel::Gt, 3)]),
            Formula::or([Formula::var(b.clone()), cmp(&x, Rel::Lt, 0)]),
            cmp(&x, Rel::Lt, 2),
        ]);
        match check_sat(&f, &Limits::default()).unwrap() {
            SatResult::Sat(m) => {
                assert!(f.eval(&m));
                assert!(!m.boolean(&a));
            }
            other => panic!("{:?}", other),
        }
    }
}
