use cdd_chc_core::interpolate::{Builtin, Checked};
use cdd_chc_core::oracle::{gen_system, oracle_solvable, tree_constraint, Profile, Verdict};
use cdd_chc_core::sat::{check_sat, Limits};
use cdd_chc_core::solver::{is_valid, solve_cdd, solve_recursion_free, SolveError};

fn run(profile: Profile, seeds: std::ops::Range<u64>, cdd_only: bool) -> (usize, usize, usize) {
    let (mut agree, mut unknown, mut refuted) = (0, 0, 0);
    for seed in seeds {
        let s = gen_system(seed, profile);
        let mut itp = Checked::new(Builtin::default());
        let got = if cdd_only { solve_cdd(&s, &mut itp) } else { solve_recursion_free(&s, &mut itp) };
        let verdict = oracle_solvable(&s).unwrap();
        match (got, &verdict) {
            (Err(SolveError::SolverUnknown { .. }), _) | (_, Verdict::Unknown(_)) => unknown += 1,
            (Ok(Some(sigma)), Verdict::Solvable) => {
                assert!(is_valid(&s, &sigma).unwrap(), "seed {}", seed);
                agree += 1;
            }
            (Ok(None), Verdict::Refuted { tree, model }) => {
                assert!(tree_constraint(&s, tree).eval(model));
                assert!(check_sat(&tree_constraint(&s, tree), &Limits::default()).unwrap().is_sat());
                agree += 1;
                refuted += 1;
            }
            (got, v) => panic!("seed {} {:?}: solver {:?}, oracle {:?}", seed, profile, got, v),
        }
    }
    (agree, unknown, refuted)
}

#[test]
fn recursion_free_solver_agrees_with_oracle() {
    let (agree, unknown, refuted) = run(Profile::Dag, 0..200, false);
    assert_eq!(agree + unknown, 200);
    assert!(unknown <= 10, "{} unknown", unknown);
    assert!(refuted > 20 && refuted < 180, "{} refuted", refuted);
}

#[test]
fn cdd_solver_agrees_with_oracle() {
    let (agree, unknown, _) = run(Profile::Cdd, 1000..1200, true);
    assert_eq!(agree + unknown, 200);
    assert!(unknown <= 10, "{} unknown", unknown);
}

#[test]
fn integer_systems_never_disagree() {
    use cdd_chc_core::oracle::gen_system_sorted;
    use cdd_chc_core::Sort;
    let mut unknown = 0;
    for seed in 0..40 {
        let s = gen_system_sorted(seed, Profile::Dag, Sort::Int);
        let got = solve_recursion_free(&s, &mut Checked::new(Builtin::default()));
        match (got, oracle_solvable(&s).unwrap()) {
            (Err(SolveError::SolverUnknown { .. }), _) | (_, Verdict::Unknown(_)) => unknown += 1,
            (Ok(Some(sigma)), Verdict::Solvable) => assert!(is_valid(&s, &sigma).unwrap()),
            (Ok(None), Verdict::Refuted { .. }) => {}
            (got, v) => panic!("seed {}: solver {:?}, oracle {:?}", seed, got, v),
        }
    }
    assert!(unknown <= 4, "{} unknown of 40", unknown);
}
