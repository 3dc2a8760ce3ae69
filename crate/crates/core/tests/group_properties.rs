mod common;

use common::small_group;
use malle_lab::arith::divisors;
use malle_lab::group::{frattini, AbelianGroup, SubgroupLattice};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mobius_satisfies_defining_recursion(g in small_group(200)) {
        let lat = SubgroupLattice::new(&g).unwrap();
        for i in 0..lat.len() {
            for j in 0..lat.len() {
                if !lat.leq(i, j) {
                    continue;
                }
                let s: i64 = (0..lat.len())
                    .filter(|&k| lat.leq(i, k) && lat.leq(k, j))
                    .map(|k| lat.mobius(i, k))
                    .sum();
                prop_assert_eq!(s, i64::from(i == j));
            }
        }
    }

    #[test]
    fn mobius_support_contains_frattini(g in small_group(200)) {
        let lat = SubgroupLattice::new(&g).unwrap();
        let phi = frattini(&g).unwrap();
        for i in 0..lat.len() {
            if lat.mobius_to_top(i) != 0 {
                prop_assert!(phi.is_subset_of(&lat.subgroups[i]));
            }
        }
    }

    #[test]
    fn dual_has_same_invariant_factors(g in small_group(10_000)) {
        let d = g.dual();
        prop_assert_eq!(d.invariant_factors(), g.invariant_factors());
    }

    #[test]
    fn normalization_is_idempotent(f in prop::collection::vec(2u64..=30, 1..=4)) {
        let g = AbelianGroup::new(&f).unwrap();
        let h = AbelianGroup::new(g.invariant_factors()).unwrap();
        prop_assert_eq!(g.invariant_factors(), h.invariant_factors());
        prop_assert_eq!(g.order(), f.iter().product::<u64>());
    }
}

#[test]
fn cyclic_subgroup_count_is_divisor_count() {
    for n in 1..=200u64 {
        let lat = SubgroupLattice::new(&AbelianGroup::cyclic(n)).unwrap();
        assert_eq!(lat.len(), divisors(n).len(), "C{n}");
    }
}
