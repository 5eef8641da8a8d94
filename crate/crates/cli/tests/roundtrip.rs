use cdd_chc::{parse_horn, parse_native, print_horn, print_native};
use cdd_chc_core::oracle::{gen_system, gen_system_sorted, Profile};
use cdd_chc_core::Sort;
use proptest::prelude::*;

#[test]
fn horn_round_trip_on_generated_systems() {
    for seed in 0..50 {
        let s = gen_system(seed, Profile::ALL[seed as usize % 4]);
        let once = parse_horn(&print_horn(&s)).unwrap();
        let twice = parse_horn(&print_horn(&once)).unwrap();
        assert_eq!(once, twice, "seed {}", seed);
        assert_eq!(once, s, "seed {}", seed);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn both_formats_round_trip(seed in 0u64..100_000, p in 0usize..4, int in any::<bool>()) {
        let sort = if int { Sort::Int } else { Sort::Real };
        let s = gen_system_sorted(seed, Profile::ALL[p], sort);
        prop_assert_eq!(&parse_horn(&print_horn(&s)).unwrap(), &s);
        prop_assert_eq!(&parse_native(&print_native(&s)).unwrap(), &s);
    }
}
