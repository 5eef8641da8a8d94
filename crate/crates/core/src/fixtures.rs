//! Small reference systems used by tests, benchmarks and the CLI.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::chc::{PredApp, System, SystemBuilder};
use crate::formula::{Formula, LinExpr, Rel, Sort, Var};
use crate::rational::from_i64;

/// `Σ cᵢ·vᵢ rel k`.
pub fn lin(terms: &[(i64, &Var)], rel: Rel, k: i64) -> Formula {
    let e = LinExpr::from_terms(terms.iter().map(|(c, v)| (from_i64(*c), (*v).clone())));
    Formula::atom(e, rel, from_i64(k))
}

fn app(p: &str, args: &[&Var]) -> PredApp {
    PredApp::new(p, args.iter().map(|v| (*v).clone()).collect())
}

/// The doubled-absolute-value program as eight clauses; the query is
/// `false <- main(n, res) ∧ res <query_rel> query_rhs`.
pub fn doubled_abs_with_query(query_rel: Rel, query_rhs: i64) -> System {
    let [x, d, n, abs, abs1, res] = ["x", "d", "n", "abs", "abs'", "res"].map(Var::int);
    let mut b = SystemBuilder::new();
    for p in ["dbl", "L4", "L6", "L8", "L9", "main"] {
        b.declare(p, &[Sort::Int, Sort::Int]).unwrap();
    }
    b.clause(Some(app("dbl", &[&x, &d])), vec![], lin(&[(1, &d), (-2, &x)], Rel::Eq, 0));
    b.clause(Some(app("L4", &[&n, &abs])), vec![], lin(&[(1, &abs)], Rel::Eq, 0));
    b.clause(Some(app("L6", &[&n, &abs])), vec![app("L4", &[&n, &abs])], lin(&[(1, &n)], Rel::Ge, 0));
    b.clause(Some(app("L8", &[&n, &abs])), vec![app("L4", &[&n, &abs])], lin(&[(1, &n)], Rel::Lt, 0));
    b.clause(Some(app("L9", &[&n, &abs1])), vec![app("L6", &[&n, &abs])], lin(&[(1, &abs1), (-1, &n)], Rel::Eq, 0));
    b.clause(Some(app("L9", &[&n, &abs1])), vec![app("L8", &[&n, &abs])], lin(&[(1, &abs1), (1, &n)], Rel::Eq, 0));
    b.clause(
        Some(app("main", &[&n, &res])),
        vec![app("L9", &[&n, &abs1]), app("dbl", &[&x, &d])],
        Formula::and([lin(&[(1, &abs1), (-1, &x)], Rel::Eq, 0), lin(&[(1, &res), (-1, &d)], Rel::Eq, 0)]),
    );
    b.clause(None, vec![app("main", &[&n, &res])], lin(&[(1, &res)], query_rel, query_rhs));
    b.build().unwrap()
}

/// The doubled-absolute-value system with the safe query `res < 0`.
pub fn doubled_abs() -> System {
    doubled_abs_with_query(Rel::Lt, 0)
}

/// Diamond: `A` reaches `D` through both `B` and `C`.
pub fn diamond() -> System {
    let x = Var::int("x");
    let mut b = SystemBuilder::new();
    for p in ["A", "B", "C", "D"] {
        b.declare(p, &[Sort::Int]).unwrap();
    }
    b.clause(Some(app("A", &[&x])), vec![], lin(&[(1, &x)], Rel::Eq, 0));
    b.clause(Some(app("B", &[&x])), vec![app("A", &[&x])], Formula::True);
    b.clause(Some(app("C", &[&x])), vec![app("A", &[&x])], Formula::True);
    b.clause(Some(app("D", &[&x])), vec![app("B", &[&x]), app("C", &[&x])], Formula::True);
    b.clause(None, vec![app("D", &[&x])], lin(&[(1, &x)], Rel::Lt, 0));
    b.build().unwrap()
}

/// `P(x) <- x = 0` and the query `false <- P(x) ∧ P(y) ∧ x < y`.
pub fn duplicate_occurrence() -> System {
    let [x, y] = ["x", "y"].map(Var::int);
    let mut b = SystemBuilder::new();
    b.declare("P", &[Sort::Int]).unwrap();
    b.clause(None, vec![app("P", &[&x]), app("P", &[&y])], lin(&[(1, &x), (-1, &y)], Rel::Lt, 0));
    b.clause(Some(app("P", &[&x])), vec![], lin(&[(1, &x)], Rel::Eq, 0));
    b.build().unwrap()
}

/// Unbounded counter from 0 with the query `x > 2`; unsafe, shortest
/// counterexample uses the step clause three times.
pub fn counter() -> System {
    let [x, x1] = ["x", "x'"].map(Var::int);
    let mut b = SystemBuilder::new();
    b.declare("P", &[Sort::Int]).unwrap();
    b.clause(Some(app("P", &[&x])), vec![], lin(&[(1, &x)], Rel::Eq, 0));
    b.clause(Some(app("P", &[&x1])), vec![app("P", &[&x])], lin(&[(1, &x1), (-1, &x)], Rel::Eq, 1));
    b.clause(None, vec![app("P", &[&x])], lin(&[(1, &x)], Rel::Gt, 2));
    b.build().unwrap()
}

/// Counter that stops at 5, with the query `x > 10`; safe.
pub fn counter_safe() -> System {
    let [x, x1] = ["x", "x'"].map(Var::int);
    let mut b = SystemBuilder::new();
    b.declare("P", &[Sort::Int]).unwrap();
    b.clause(Some(app("P", &[&x])), vec![], lin(&[(1, &x)], Rel::Eq, 0));
    b.clause(
        Some(app("P", &[&x1])),
        vec![app("P", &[&x])],
        Formula::and([lin(&[(1, &x)], Rel::Lt, 5), lin(&[(1, &x1), (-1, &x)], Rel::Eq, 1)]),
    );
    b.clause(None, vec![app("P", &[&x])], lin(&[(1, &x)], Rel::Gt, 10));
    b.build().unwrap()
}

/// Chain of `k` diamonds: `A0(x) <- x = 0`, and for each level `i`
/// `Bi(x') <- A(i-1)(x) ∧ x' = x + 1`, `Ci(x') <- A(i-1)(x) ∧ x' = x + 2`,
/// `Ai(x) <- Bi(x)`, `Ai(x) <- Ci(x)`, with the query `false <- Ak(x) ∧ x < 0`.
/// Every derivation picks one side per level, so there are `2^k` of them.
pub fn nested_diamond(k: usize) -> System {
    let [x, x1] = ["x", "x'"].map(Var::int);
    let a = |i: usize| format!("A{}", i);
    let mut b = SystemBuilder::new();
    let mut names: Vec<String> = vec![a(0)];
    for i in 1..=k {
        names.extend([a(i), format!("B{}", i), format!("C{}", i)]);
    }
    for p in &names {
        b.declare(p, &[Sort::Int]).unwrap();
    }
    b.clause(Some(app(&a(0), &[&x])), vec![], lin(&[(1, &x)], Rel::Eq, 0));
    for i in 1..=k {
        let (bi, ci) = (format!("B{}", i), format!("C{}", i));
        b.clause(Some(app(&bi, &[&x1])), vec![app(&a(i - 1), &[&x])], lin(&[(1, &x1), (-1, &x)], Rel::Eq, 1));
        b.clause(Some(app(&ci, &[&x1])), vec![app(&a(i - 1), &[&x])], lin(&[(1, &x1), (-1, &x)], Rel::Eq, 2));
        b.clause(Some(app(&a(i), &[&x])), vec![app(&bi, &[&x])], Formula::True);
        b.clause(Some(app(&a(i), &[&x])), vec![app(&ci, &[&x])], Formula::True);
    }
    b.clause(None, vec![app(&a(k), &[&x])], lin(&[(1, &x)], Rel::Lt, 0));
    b.build().unwrap()
}
