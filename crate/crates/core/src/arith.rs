//! Conjunctions of linear constraints over exact rationals.
//!
//! Feasibility and projection both run Fourier–Motzkin elimination with
//! equalities substituted away first. Feasible systems get a model by
//! back-substitution through the recorded elimination steps. Integer
//! feasibility layers a bounded branch-and-bound on top.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::formula::{Atom, Formula, LinExpr, Rel, Var};
use crate::rational::{ceil, floor, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Eq,
    Le,
    Lt,
}

/// `expr kind rhs`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinCon {
    pub expr: LinExpr,
    pub kind: Kind,
    pub rhs: Rational,
}

impl LinCon {
    pub fn new(expr: LinExpr, kind: Kind, rhs: Rational) -> Self {
        LinCon { expr, kind, rhs }
    }

    pub fn from_atom(a: &Atom) -> LinCon {
        let (expr, rhs) = (a.lhs().clone(), a.rhs().clone());
        match a.rel() {
            Rel::Lt => LinCon::new(expr, Kind::Lt, rhs),
            Rel::Le => LinCon::new(expr, Kind::Le, rhs),
            Rel::Eq => LinCon::new(expr, Kind::Eq, rhs),
            Rel::Ge | Rel::Gt => {
                let mut e = expr;
                e.scale(&-Rational::one());
                let kind = if a.rel() == Rel::Ge { Kind::Le } else { Kind::Lt };
                LinCon::new(e, kind, -rhs)
            }
        }
    }

    pub fn to_formula(&self) -> Formula {
        let rel = match self.kind {
            Kind::Eq => Rel::Eq,
            Kind::Le => Rel::Le,
            Kind::Lt => Rel::Lt,
        };
        Formula::atom(self.expr.clone(), rel, self.rhs.clone())
    }

    /// Complement as a list of alternatives.
    pub fn negate(&self) -> Vec<LinCon> {
        let mut neg = self.expr.clone();
        neg.scale(&-Rational::one());
        match self.kind {
            // ¬(e <= c)  <=>  -e < -c
            Kind::Le => alloc::vec![LinCon::new(neg, Kind::Lt, -self.rhs.clone())],
            Kind::Lt => alloc::vec![LinCon::new(neg, Kind::Le, -self.rhs.clone())],
            Kind::Eq => alloc::vec![
                LinCon::new(self.expr.clone(), Kind::Lt, self.rhs.clone()),
                LinCon::new(neg, Kind::Lt, -self.rhs.clone()),
            ],
        }
    }

    pub fn holds(&self, values: &BTreeMap<Var, Rational>) -> bool {
        let lhs = self
            .expr
            .iter()
            .map(|(v, c)| c * values.get(v).cloned().unwrap_or_else(Rational::zero))
            .fold(Rational::zero(), |a, b| a + b);
        match self.kind {
            Kind::Eq => lhs == self.rhs,
            Kind::Le => lhs <= self.rhs,
            Kind::Lt => lhs < self.rhs,
        }
    }

    fn trivial(&self) -> Option<bool> {
        if !self.expr.is_empty() {
            return None;
        }
        let zero = Rational::zero();
        Some(match self.kind {
            Kind::Eq => zero == self.rhs,
            Kind::Le => zero <= self.rhs,
            Kind::Lt => zero < self.rhs,
        })
    }

    /// Scales so that the leading coefficient has magnitude one (and is
    /// positive for equalities).
    fn normalize(&mut self) {
        let lead = match self.expr.iter().next() {
            Some((_, c)) => c.clone(),
            None => return,
        };
        let factor = if self.kind == Kind::Eq { lead.recip() } else { lead.abs().recip() };
        self.expr.scale(&factor);
        self.rhs *= &factor;
    }

    /// Adds `factor · other` to this constraint.
    fn add_scaled(&mut self, other: &LinCon, factor: &Rational) {
        self.expr.add_scaled(&other.expr, factor);
        self.rhs += &other.rhs * factor;
    }
}

#[derive(Clone, Debug)]
enum Step {
    /// Variable defined by an equality.
    Subst { var: Var, def: LinCon },
    /// Variable eliminated by pairing lower with upper bounds.
    Bounds { var: Var, cons: Vec<LinCon> },
}

pub(crate) struct Infeasible;

/// Removes trivial constraints and keeps only the tightest inequality per
/// direction. Fails on a trivially false constraint.
fn simplify(cons: Vec<LinCon>) -> Result<Vec<LinCon>, Infeasible> {
    let mut eqs: BTreeMap<LinExpr, Rational> = BTreeMap::new();
    let mut ineqs: BTreeMap<LinExpr, (Rational, Kind)> = BTreeMap::new();
    for mut c in cons {
        match c.trivial() {
            Some(true) => continue,
            Some(false) => return Err(Infeasible),
            None => {}
        }
        c.normalize();
        match c.kind {
            Kind::Eq => match eqs.get(&c.expr) {
                Some(r) if *r != c.rhs => return Err(Infeasible),
                Some(_) => {}
                None => {
                    eqs.insert(c.expr, c.rhs);
                }
            },
            kind => {
                let tighter = match ineqs.get(&c.expr) {
                    None => true,
                    Some((r, k)) => c.rhs < *r || (c.rhs == *r && kind == Kind::Lt && *k == Kind::Le),
                };
                if tighter {
                    ineqs.insert(c.expr, (c.rhs, kind));
                }
            }
        }
    }
    // opposite inequalities that cross
    for (e, (r, k)) in &ineqs {
        let mut neg = e.clone();
        neg.scale(&-Rational::one());
        if let Some((r2, k2)) = ineqs.get(&neg) {
            // e <= r and -e <= r2  =>  -r2 <= e <= r
            let lo = -r2.clone();
            if lo > *r || (lo == *r && (*k == Kind::Lt || *k2 == Kind::Lt)) {
                return Err(Infeasible);
            }
        }
    }
    let mut out: Vec<LinCon> = eqs.into_iter().map(|(e, r)| LinCon::new(e, Kind::Eq, r)).collect();
    out.extend(ineqs.into_iter().map(|(e, (r, k))| LinCon::new(e, k, r)));
    Ok(out)
}

/// Eliminates every variable accepted by `eliminable`. Returns the residual
/// constraints over the remaining variables and the elimination trail.
fn eliminate(
    cons: Vec<LinCon>,
    eliminable: &dyn Fn(&Var) -> bool,
) -> Result<(Vec<LinCon>, Vec<Step>), Infeasible> {
    let mut cons = simplify(cons)?;
    let mut steps = Vec::new();
    loop {
        // equalities first
        let pick = cons.iter().enumerate().find_map(|(i, c)| {
            if c.kind != Kind::Eq {
                return None;
            }
            c.expr.vars().find(|v| eliminable(v)).map(|v| (i, v.clone()))
        });
        if let Some((i, var)) = pick {
            let def = cons.swap_remove(i);
            let a = def.expr.coeff(&var);
            for c in cons.iter_mut() {
                let k = c.expr.coeff(&var);
                if !k.is_zero() {
                    c.add_scaled(&def, &(-(&k / &a)));
                }
            }
            steps.push(Step::Subst { var, def });
            cons = simplify(cons)?;
            continue;
        }
        // Fourier–Motzkin on the cheapest variable
        let mut counts: BTreeMap<&Var, (usize, usize)> = BTreeMap::new();
        for c in &cons {
            for (v, k) in c.expr.iter() {
                if eliminable(v) {
                    let e = counts.entry(v).or_insert((0, 0));
                    if k.is_positive() {
                        e.0 += 1;
                    } else {
                        e.1 += 1;
                    }
                }
            }
        }
        let var = match counts
            .iter()
            .min_by_key(|(_, (p, n))| (p * n) as isize - (p + n) as isize)
            .map(|(v, _)| (*v).clone())
        {
            Some(v) => v,
            None => break,
        };
        let (with, without): (Vec<LinCon>, Vec<LinCon>) =
            cons.into_iter().partition(|c| !c.expr.coeff(&var).is_zero());
        let (upper, lower): (Vec<&LinCon>, Vec<&LinCon>) =
            with.iter().partition(|c| c.expr.coeff(&var).is_positive());
        let mut next = without;
        for u in &upper {
            let au = u.expr.coeff(&var);
            for l in &lower {
                let al = -l.expr.coeff(&var);
                // al·u + au·l cancels var
                let mut c = LinCon::new(LinExpr::new(), Kind::Le, Rational::zero());
                c.add_scaled(u, &al);
                c.add_scaled(l, &au);
                c.kind = if u.kind == Kind::Lt || l.kind == Kind::Lt { Kind::Lt } else { Kind::Le };
                next.push(c);
            }
        }
        steps.push(Step::Bounds { var, cons: with });
        cons = simplify(next)?;
    }
    Ok((cons, steps))
}

fn value_in(
    lo: Option<(Rational, bool)>,
    hi: Option<(Rational, bool)>,
) -> Rational {
    match (lo, hi) {
        (None, None) => Rational::zero(),
        (Some((l, strict)), None) => {
            let c = ceil(&l);
            if strict && c == l {
                c + Rational::one()
            } else {
                c
            }
        }
        (None, Some((h, strict))) => {
            let c = floor(&h);
            if strict && c == h {
                c - Rational::one()
            } else {
                c
            }
        }
        (Some((l, ls)), Some((h, hs))) => {
            let mut c = ceil(&l);
            if ls && c == l {
                c += Rational::one();
            }
            if c < h || (c == h && !hs) {
                c
            } else if l == h {
                l
            } else {
                (l + h) / Rational::from_integer(2.into())
            }
        }
    }
}

fn back_substitute(steps: &[Step]) -> BTreeMap<Var, Rational> {
    let mut values: BTreeMap<Var, Rational> = BTreeMap::new();
    let eval_rest = |c: &LinCon, skip: &Var, values: &BTreeMap<Var, Rational>| -> Rational {
        c.expr
            .iter()
            .filter(|(v, _)| *v != skip)
            .map(|(v, k)| k * values.get(v).cloned().unwrap_or_else(Rational::zero))
            .fold(Rational::zero(), |a, b| a + b)
    };
    for step in steps.iter().rev() {
        match step {
            Step::Subst { var, def } => {
                let a = def.expr.coeff(var);
                let v = (&def.rhs - eval_rest(def, var, &values)) / a;
                values.insert(var.clone(), v);
            }
            Step::Bounds { var, cons } => {
                let mut lo: Option<(Rational, bool)> = None;
                let mut hi: Option<(Rational, bool)> = None;
                for c in cons {
                    let a = c.expr.coeff(var);
                    let bound = (&c.rhs - eval_rest(c, var, &values)) / &a;
                    let strict = c.kind == Kind::Lt;
                    if a.is_positive() {
                        let tighter = match &hi {
                            None => true,
                            Some((h, hs)) => bound < *h || (bound == *h && strict && !hs),
                        };
                        if tighter {
                            hi = Some((bound, strict));
                        }
                    } else {
                        let tighter = match &lo {
                            None => true,
                            Some((l, ls)) => bound > *l || (bound == *l && strict && !ls),
                        };
                        if tighter {
                            lo = Some((bound, strict));
                        }
                    }
                }
                values.insert(var.clone(), value_in(lo, hi));
            }
        }
    }
    values
}

/// Rational feasibility; returns a model over the constrained variables.
pub fn feasible(cons: &[LinCon]) -> Option<BTreeMap<Var, Rational>> {
    let (rest, steps) = eliminate(cons.to_vec(), &|_| true).ok()?;
    debug_assert!(rest.is_empty());
    let values = back_substitute(&steps);
    debug_assert!(cons.iter().all(|c| c.holds(&values)));
    Some(values)
}

/// Existential projection onto `keep`: `None` when the conjunction is infeasible.
pub fn project(cons: &[LinCon], keep: &BTreeSet<Var>) -> Option<Vec<LinCon>> {
    let (rest, _) = eliminate(cons.to_vec(), &|v| !keep.contains(v)).ok()?;
    Some(remove_redundant(rest))
}

/// Drops constraints implied by the others. Quadratic in the number of
/// constraints, so only applied to small sets.
pub fn remove_redundant(cons: Vec<LinCon>) -> Vec<LinCon> {
    if cons.len() > 16 {
        return cons;
    }
    let mut kept = cons;
    let mut i = 0;
    while i < kept.len() {
        let others: Vec<LinCon> =
            kept.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.clone()).collect();
        let implied = kept[i].negate().into_iter().all(|neg| {
            let mut trial = others.clone();
            trial.push(neg);
            eliminate(trial, &|_| true).is_err()
        });
        if implied {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}

pub fn atoms_to_cons<'a>(atoms: impl IntoIterator<Item = &'a Atom>) -> Vec<LinCon> {
    atoms.into_iter().map(LinCon::from_atom).collect()
}

/// Outcome of an integer feasibility check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IntFeasibility {
    Sat(BTreeMap<Var, Rational>),
    Unsat,
    Unknown,
}

/// Strengthens constraints whose variables are all integral: integer
/// coefficients, strict bounds made non-strict, right-hand sides rounded.
/// Fails when an equality has no integer solution by the gcd test.
pub(crate) fn tighten(cons: Vec<LinCon>, is_int: &dyn Fn(&Var) -> bool) -> Result<Vec<LinCon>, Infeasible> {
    let mut out = Vec::with_capacity(cons.len());
    for mut c in cons {
        if c.expr.is_empty() || !c.expr.vars().all(|v| is_int(v)) {
            out.push(c);
            continue;
        }
        let mut den = num_bigint::BigInt::one();
        for (_, k) in c.expr.iter() {
            den = den.lcm(k.denom());
        }
        let scale = Rational::from_integer(den);
        c.expr.scale(&scale);
        c.rhs *= &scale;
        let mut g = num_bigint::BigInt::zero();
        for (_, k) in c.expr.iter() {
            g = g.gcd(k.numer());
        }
        let g = Rational::from_integer(g);
        match c.kind {
            Kind::Eq => {
                let r = &c.rhs / &g;
                if !r.is_integer() {
                    return Err(Infeasible);
                }
            }
            Kind::Lt | Kind::Le => {
                if c.kind == Kind::Lt {
                    c.rhs = if c.rhs.is_integer() { &c.rhs - Rational::one() } else { floor(&c.rhs) };
                    c.kind = Kind::Le;
                }
                c.expr.scale(&g.recip());
                c.rhs = floor(&(&c.rhs / &g));
            }
        }
        out.push(c);
    }
    Ok(out)
}

/// Integer feasibility for the variables accepted by `is_int`, the rest
/// ranging over rationals. Explores at most `node_budget` branch-and-bound
/// nodes before answering `Unknown`.
pub fn int_feasible(
    cons: &[LinCon],
    is_int: &dyn Fn(&Var) -> bool,
    node_budget: usize,
) -> IntFeasibility {
    let mut stack: Vec<Vec<LinCon>> = alloc::vec![cons.to_vec()];
    let mut nodes = 0usize;
    while let Some(node) = stack.pop() {
        nodes += 1;
        if nodes > node_budget {
            return IntFeasibility::Unknown;
        }
        let node = match tighten(node, is_int) {
            Ok(n) => n,
            Err(Infeasible) => continue,
        };
        let values = match feasible(&node) {
            Some(v) => v,
            None => continue,
        };
        let fractional = values.iter().find(|(v, x)| is_int(v) && !x.is_integer());
        match fractional {
            None => return IntFeasibility::Sat(values),
            Some((v, x)) => {
                let mut down = node.clone();
                down.push(LinCon::new(LinExpr::var(v.clone()), Kind::Le, floor(x)));
                let mut up = node;
                up.push(LinCon::new(LinExpr::term(-Rational::one(), v.clone()), Kind::Le, -ceil(x)));
                stack.push(up);
                stack.push(down);
            }
        }
    }
    IntFeasibility::Unsat
}
