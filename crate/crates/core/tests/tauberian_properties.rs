use malle_lab::rat::Q;
use malle_lab::tauberian::{envelope_bound, sandwich_check, saving_exponent, StepSequence, TauberianParams};
use proptest::prelude::*;

fn seq_strategy(signed: bool) -> impl Strategy<Value = Vec<(u64, f64)>> {
    let lo = if signed { -5.0 } else { 0.0 };
    prop::collection::btree_map(1u64..400, lo..5.0f64, 0..120).prop_map(|m| m.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sandwich_holds(pairs in seq_strategy(false), k in 1u32..=5, y in 0.05f64..20.0, x in 1.0f64..500.0) {
        prop_assume!(x - f64::from(k) * y > 0.0);
        let seq = StepSequence::new(pairs).unwrap();
        let s = sandwich_check(&seq, k, y, x).unwrap();
        prop_assert!(s.holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn envelope_dominates(pairs in seq_strategy(true), slack in 0.0f64..2.0, k in 1u32..=5, y in 0.05f64..20.0, x in 1.0f64..500.0) {
        let env: Vec<(u64, f64)> = pairs.iter().map(|&(n, a)| (n, a.abs() + slack)).collect();
        let (l, r) = envelope_bound(&StepSequence::new(pairs).unwrap(), &StepSequence::new(env).unwrap(), k, y, x).unwrap();
        prop_assert!(l <= r + 1e-9 * r.max(1.0));
    }

    #[test]
    fn saving_exponent_nonincreasing_in_k(xn in 0i64..12, xd in 1i64..4, dn in 0i64..10, k in 1u64..200) {
        let xi = Q::new(xn.into(), xd.into());
        let p = |k| TauberianParams { sigma_a: Q::from_integer(1.into()), delta: Q::new(dn.into(), 10.into()), xi: xi.clone(), k };
        prop_assume!(Q::from_integer((k as i64).into()) > &xi - Q::from_integer(1.into()));
        let a = saving_exponent(&p(k)).unwrap();
        let b = saving_exponent(&p(k + 1)).unwrap();
        prop_assert!(b.exponent <= a.exponent);
        prop_assert!(b.exponent >= b.limit);
    }
}
