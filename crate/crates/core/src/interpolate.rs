//! Binary interpolation: the [`Interpolator`] contract, a builtin backend
//! based on existential projection, and wrappers that count or verify
//! queries.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::arith::{self, LinCon};
use crate::formula::{Formula, Model, Sort, Var};
use crate::sat::{self, Flow, Limits, SatError, SatResult};

/// One interpolation problem. `label` names the predicate being solved and
/// only serves diagnostics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ItpQuery {
    pub label: String,
    pub pre: Formula,
    pub post: Formula,
    pub shared: BTreeSet<Var>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ItpResult {
    Interpolant(Formula),
    /// `pre ∧ post` is satisfiable; the model witnesses it.
    MutuallySat(Model),
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ItpError {
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error("more than {0} cubes in the pre-formula")]
    CubeBudget(usize),
    #[error("interpolation backend failed: {0}")]
    Backend(String),
    #[error("interpolant for `{label}` violates the contract: {violation}")]
    Contract { label: String, violation: Violation },
}

pub trait Interpolator {
    fn interpolate(&mut self, query: &ItpQuery) -> Result<ItpResult, ItpError>;
}

impl<T: Interpolator + ?Sized> Interpolator for &mut T {
    fn interpolate(&mut self, query: &ItpQuery) -> Result<ItpResult, ItpError> {
        (**self).interpolate(query)
    }
}

impl<T: Interpolator + ?Sized> Interpolator for Box<T> {
    fn interpolate(&mut self, query: &ItpQuery) -> Result<ItpResult, ItpError> {
        (**self).interpolate(query)
    }
}

/// Strongest interpolant by projection of the pre-formula's cubes.
///
/// Every satisfiable cube of `pre` is projected onto the shared variables
/// that `post` mentions; the interpolant is the disjunction of the
/// projections with subsumed cubes dropped. Integer variables are relaxed
/// to rationals during projection, so the result is re-checked against
/// `post` with integer reasoning and reported as `Unknown` if too weak.
#[derive(Clone, Debug)]
pub struct Builtin {
    pub limits: Limits,
    pub max_cubes: usize,
}

impl Default for Builtin {
    fn default() -> Self {
        Builtin { limits: Limits::default(), max_cubes: 20_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Projected {
    bools: Vec<(Var, bool)>,
    cons: Vec<LinCon>,
}

impl Projected {
    fn entails(&self, other: &Projected) -> bool {
        if !other.bools.iter().all(|b| self.bools.contains(b)) {
            return false;
        }
        other.cons.iter().all(|c| {
            c.negate().into_iter().all(|neg| {
                let mut trial = self.cons.clone();
                trial.push(neg);
                arith::feasible(&trial).is_none()
            })
        })
    }

    fn to_formula(&self) -> Formula {
        Formula::and(
            self.bools
                .iter()
                .map(|(v, b)| {
                    let f = Formula::var(v.clone());
                    if *b { f } else { Formula::not(f) }
                })
                .chain(self.cons.iter().map(LinCon::to_formula)),
        )
    }
}

impl Builtin {
    pub fn new(limits: Limits) -> Self {
        Builtin { limits, ..Builtin::default() }
    }

    fn project_pre(&self, query: &ItpQuery, keep: &BTreeSet<Var>) -> Result<Vec<Projected>, ItpError> {
        let is_int = |v: &Var| v.sort == Sort::Int;
        let mut out: Vec<Projected> = Vec::new();
        let mut seen = 0usize;
        let mut over_budget = false;
        sat::for_each_cube(&query.pre, &self.limits, &mut |cube, _leaf| {
            seen += 1;
            if seen > self.max_cubes {
                over_budget = true;
                return Flow::Stop;
            }
            let cons = arith::atoms_to_cons(cube.atoms.iter());
            let cons = match arith::tighten(cons, &is_int) {
                Ok(c) => c,
                Err(_) => return Flow::Continue,
            };
            let Some(cons) = arith::project(&cons, keep) else {
                return Flow::Continue;
            };
            let cons = match arith::tighten(cons, &is_int) {
                Ok(c) => c,
                Err(_) => return Flow::Continue,
            };
            let bools = cube.bools.iter().filter(|(v, _)| keep.contains(*v)).map(|(v, b)| (v.clone(), *b)).collect();
            let p = Projected { bools, cons };
            if !out.contains(&p) {
                out.push(p);
            }
            Flow::Continue
        })?;
        if over_budget {
            return Err(ItpError::CubeBudget(self.max_cubes));
        }
        Ok(out)
    }
}

fn drop_subsumed(cubes: Vec<Projected>) -> Vec<Projected> {
    let mut kept: Vec<Projected> = Vec::with_capacity(cubes.len());
    for (i, c) in cubes.iter().enumerate() {
        let subsumed = cubes.iter().enumerate().any(|(j, d)| {
            // of two mutually entailing cubes keep the first
            j != i && c.entails(d) && (j < i || !d.entails(c))
        });
        if !subsumed {
            kept.push(c.clone());
        }
    }
    kept
}

impl Interpolator for Builtin {
    fn interpolate(&mut self, query: &ItpQuery) -> Result<ItpResult, ItpError> {
        let both = Formula::and([query.pre.clone(), query.post.clone()]);
        match sat::check_sat(&both, &self.limits)? {
            SatResult::Sat(m) => return Ok(ItpResult::MutuallySat(m)),
            SatResult::Unknown(r) => return Ok(ItpResult::Unknown(r)),
            SatResult::Unsat => {}
        }
        let post_vocab = query.post.vocab();
        let keep: BTreeSet<Var> = query.shared.intersection(&post_vocab).cloned().collect();
        let cubes = drop_subsumed(self.project_pre(query, &keep)?);
        let itp = Formula::or(cubes.iter().map(Projected::to_formula));
        match sat::check_sat(&Formula::and([itp.clone(), query.post.clone()]), &self.limits)? {
            SatResult::Unsat => Ok(ItpResult::Interpolant(itp)),
            SatResult::Sat(_) => Ok(ItpResult::Unknown(format!(
                "rational projection for `{}` is too weak over the integers",
                query.label
            ))),
            SatResult::Unknown(r) => Ok(ItpResult::Unknown(r)),
        }
    }
}

/// Way in which a formula fails to be an interpolant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A model of `pre ∧ ¬I`.
    NotImplied(Model),
    /// A model of `I ∧ post`.
    ConsistentWithPost(Model),
    /// Variables of `I` outside the common vocabulary.
    Vocabulary(BTreeSet<Var>),
    Undecided(String),
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::NotImplied(_) => f.write_str("not implied by the pre-formula"),
            Violation::ConsistentWithPost(_) => f.write_str("consistent with the post-formula"),
            Violation::Vocabulary(vs) => {
                f.write_str("mentions non-shared variables")?;
                for v in vs {
                    write!(f, " {}", v)?;
                }
                Ok(())
            }
            Violation::Undecided(r) => write!(f, "could not be decided ({})", r),
        }
    }
}

/// Checks `pre ⊨ I`, `I ∧ post ⊨ false` and that `I` only mentions shared
/// variables common to both sides. Returns every violated condition.
pub fn check_interpolant(query: &ItpQuery, itp: &Formula, limits: &Limits) -> Result<Vec<Violation>, SatError> {
    let mut out = Vec::new();
    match sat::entails(&query.pre, itp, limits)? {
        SatResult::Unsat => {}
        SatResult::Sat(m) => out.push(Violation::NotImplied(m)),
        SatResult::Unknown(r) => out.push(Violation::Undecided(r)),
    }
    match sat::check_sat(&Formula::and([itp.clone(), query.post.clone()]), limits)? {
        SatResult::Unsat => {}
        SatResult::Sat(m) => out.push(Violation::ConsistentWithPost(m)),
        SatResult::Unknown(r) => out.push(Violation::Undecided(r)),
    }
    let pre = query.pre.vocab();
    let post = query.post.vocab();
    let stray: BTreeSet<Var> = itp
        .vocab()
        .into_iter()
        .filter(|v| !(pre.contains(v) && post.contains(v) && query.shared.contains(v)))
        .collect();
    if !stray.is_empty() {
        out.push(Violation::Vocabulary(stray));
    }
    Ok(out)
}

/// Counts queries and records formula sizes.
#[derive(Clone, Debug)]
pub struct CountingInterpolator<I> {
    pub inner: I,
    pub calls: usize,
    /// `(label, pre size, post size)` per query.
    pub sizes: Vec<(String, usize, usize)>,
}

impl<I> CountingInterpolator<I> {
    pub fn new(inner: I) -> Self {
        CountingInterpolator { inner, calls: 0, sizes: Vec::new() }
    }
}

impl<I: Interpolator> Interpolator for CountingInterpolator<I> {
    fn interpolate(&mut self, query: &ItpQuery) -> Result<ItpResult, ItpError> {
        self.calls += 1;
        self.sizes.push((query.label.clone(), query.pre.size(), query.post.size()));
        self.inner.interpolate(query)
    }
}

/// Verifies every interpolant of the inner backend and every
/// `MutuallySat` model; violations become [`ItpError::Contract`].
#[derive(Clone, Debug)]
pub struct Checked<I> {
    pub inner: I,
    pub limits: Limits,
    pub verified: usize,
}

impl<I> Checked<I> {
    pub fn new(inner: I) -> Self {
        Checked { inner, limits: Limits::default(), verified: 0 }
    }
}

impl<I: Interpolator> Interpolator for Checked<I> {
    fn interpolate(&mut self, query: &ItpQuery) -> Result<ItpResult, ItpError> {
        let res = self.inner.interpolate(query)?;
        match &res {
            ItpResult::Interpolant(itp) => {
                if let Some(v) = check_interpolant(query, itp, &self.limits)?.into_iter().next() {
                    return Err(ItpError::Contract { label: query.label.clone(), violation: v });
                }
                self.verified += 1;
            }
            ItpResult::MutuallySat(m) => {
                if !(query.pre.eval(m) && query.post.eval(m)) {
                    return Err(ItpError::Backend(format!("model for `{}` does not satisfy both sides", query.label)));
                }
            }
            ItpResult::Unknown(_) => {}
        }
        Ok(res)
    }
}

/// Tries `primary` and consults `fallback` only when it answers `Unknown`.
#[derive(Clone, Debug)]
pub struct Fallback<A, B> {
    pub primary: A,
    pub fallback: B,
}

impl<A: Interpolator, B: Interpolator> Interpolator for Fallback<A, B> {
    fn interpolate(&mut self, query: &ItpQuery) -> Result<ItpResult, ItpError> {
        match self.primary.interpolate(query)? {
            ItpResult::Unknown(_) => self.fallback.interpolate(query),
            res => Ok(res),
        }
    }
}
