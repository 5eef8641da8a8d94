use std::collections::{BTreeMap, BTreeSet};

use cdd_chc_core::expand::{check_correspondence, expand};
use cdd_chc_core::interpolate::{check_interpolant, Builtin, CountingInterpolator, Interpolator, ItpError, ItpQuery, ItpResult};
use cdd_chc_core::oracle::{gen_system, Profile};
use cdd_chc_core::rational::from_i64;
use cdd_chc_core::sat::{check_sat, Limits, SatResult};
use cdd_chc_core::solver::{collapse, is_valid, solve_cdd};
use cdd_chc_core::{Formula, LinExpr, Model, Rel, Value, Var};
use proptest::prelude::*;

fn vars() -> Vec<Var> {
    vec![Var::int("x"), Var::int("y"), Var::int("z")]
}

fn arb_atom() -> impl Strategy<Value = Formula> {
    (prop::collection::vec(-2i64..=2, 3), 0usize..5, -3i64..=3).prop_map(|(cs, r, k)| {
        let vs = vars();
        let e = LinExpr::from_terms(cs.iter().zip(&vs).map(|(c, v)| (from_i64(*c), v.clone())));
        let rel = [Rel::Le, Rel::Lt, Rel::Ge, Rel::Gt, Rel::Eq][r];
        Formula::atom(e, rel, from_i64(k))
    })
}

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![arb_atom(), any::<bool>().prop_map(|b| Formula::var(Var::boolean(if b { "p" } else { "q" })))];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::or),
            inner.prop_map(Formula::not),
        ]
    })
}

fn grid() -> impl Iterator<Item = Model> {
    let r = -3i64..=3;
    r.clone().flat_map(move |x| {
        let r = -3i64..=3;
        r.clone().flat_map(move |y| {
            (-3i64..=3).flat_map(move |z| {
                [false, true].into_iter().flat_map(move |p| {
                    [false, true].into_iter().map(move |q| {
                        let mut m = Model::new();
                        m.set(Var::int("x"), Value::Num(from_i64(x)));
                        m.set(Var::int("y"), Value::Num(from_i64(y)));
                        m.set(Var::int("z"), Value::Num(from_i64(z)));
                        m.set(Var::boolean("p"), Value::Bool(p));
                        m.set(Var::boolean("q"), Value::Bool(q));
                        m
                    })
                })
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nnf_and_dnf_preserve_meaning(f in arb_formula()) {
        let nnf = f.nnf();
        let dnf = Formula::or(f.nnf_dnf().iter().map(|c| c.to_formula()));
        for m in grid() {
            prop_assert_eq!(f.eval(&m), nnf.eval(&m));
            prop_assert_eq!(f.eval(&m), dnf.eval(&m));
        }
    }

    #[test]
    fn check_sat_agrees_with_grid(f in arb_formula()) {
        let grid_sat = grid().any(|m| f.eval(&m));
        match check_sat(&f, &Limits::default()).unwrap() {
            SatResult::Sat(m) => prop_assert!(f.eval(&m)),
            SatResult::Unsat => prop_assert!(!grid_sat),
            SatResult::Unknown(_) => {}
        }
    }

    #[test]
    fn substitute_composes(f in arb_formula()) {
        let ab: BTreeMap<Var, Var> = [(Var::int("x"), Var::int("u")), (Var::int("y"), Var::int("v"))].into_iter().collect();
        let bc: BTreeMap<Var, Var> = [(Var::int("u"), Var::int("w"))].into_iter().collect();
        let mut ac = ab.clone();
        ac.insert(Var::int("x"), Var::int("w"));
        let two_step = f.substitute(&ab).unwrap().substitute(&bc).unwrap();
        prop_assert_eq!(two_step, f.substitute(&ac).unwrap());
    }

    #[test]
    fn builtin_interpolants_meet_contract(a in arb_formula(), b in arb_formula()) {
        let pre = Formula::and([a, Formula::atom(LinExpr::var(Var::int("z")), Rel::Ge, from_i64(0))]);
        let post = b.substitute(&[(Var::int("x"), Var::int("w"))].into_iter().collect()).unwrap();
        let shared: BTreeSet<Var> = [Var::int("y"), Var::int("z"), Var::boolean("p")].into_iter().collect();
        let q = ItpQuery { label: "t".into(), pre, post, shared };
        if let Ok(ItpResult::Interpolant(i)) = Builtin::default().interpolate(&q) {
            prop_assert!(check_interpolant(&q, &i, &Limits::default()).unwrap().is_empty());
        }
    }
}

struct SharedInPre(Builtin);

impl Interpolator for SharedInPre {
    fn interpolate(&mut self, q: &ItpQuery) -> Result<ItpResult, ItpError> {
        assert!(q.shared.is_subset(&q.pre.vocab()), "{}", q.label);
        self.0.interpolate(q)
    }
}

fn sample_seeds() -> impl Strategy<Value = (u64, usize)> {
    (0u64..5000, 0usize..Profile::ALL.len())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dependency_relations_are_consistent((seed, p) in sample_seeds()) {
        let s = gen_system(seed, Profile::ALL[p]);
        let order = s.topo_order().unwrap();
        let pos: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        for name in s.pred_names() {
            let deps = s.deps(name).unwrap();
            let tdeps = s.tdeps(name).unwrap();
            prop_assert!(deps.is_subset(tdeps));
            prop_assert!(!tdeps.contains(name));
            for q in tdeps {
                prop_assert!(s.tdeps(q).unwrap().is_subset(tdeps));
                prop_assert!(pos[q.as_str()] < pos[name]);
            }
            for sib in s.siblings(name).unwrap() {
                prop_assert!(s.siblings(&sib).unwrap().contains(name));
            }
        }
    }

    #[test]
    fn expansion_postconditions((seed, p) in sample_seeds()) {
        let s = gen_system(seed, Profile::ALL[p]);
        let e = expand(&s).unwrap();
        prop_assert!(e.system.classify().cdd);
        prop_assert!(check_correspondence(&s, &e.system, &e.corr).is_ok());
        if s.classify().cdd {
            prop_assert!(e.corr.is_identity());
            prop_assert_eq!(e.system.clauses(), s.clauses());
        }
    }

    #[test]
    fn solve_cdd_structure((seed, p) in sample_seeds()) {
        let s = expand(&gen_system(seed, Profile::ALL[p])).unwrap().system;
        let mut itp = CountingInterpolator::new(SharedInPre(Builtin::default()));
        let sol = solve_cdd(&s, &mut itp);
        if let Ok(Some(sigma)) = &sol {
            prop_assert_eq!(itp.calls, s.num_preds());
            for pred in s.preds() {
                let params: BTreeSet<Var> = pred.params.iter().cloned().collect();
                prop_assert!(sigma[&pred.name].vocab().is_subset(&params));
            }
            prop_assert!(is_valid(&s, sigma).unwrap());
        }
    }

    #[test]
    fn collapse_preserves_validity((seed, p) in sample_seeds()) {
        let s = gen_system(seed, Profile::ALL[p]);
        let e = expand(&s).unwrap();
        if let Ok(Some(sigma)) = solve_cdd(&e.system, &mut Builtin::default()) {
            let back = collapse(&s, &e.corr, &sigma).unwrap();
            prop_assert!(is_valid(&s, &back).unwrap());
        }
    }
}
