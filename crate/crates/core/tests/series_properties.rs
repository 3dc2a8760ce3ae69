mod common;

use std::collections::BTreeMap;

use common::{close, small_group};
use malle_lab::arith::{is_prime, valuation};
use malle_lab::group::parse_group;
use malle_lab::invariants::index_of;
use malle_lab::oracle::{count_surjections, Ordering};
use malle_lab::rat::q;
use malle_lab::series::{
    euler_product_truncated, local_factor, series_coefficients, zeta_factorization, ProductMode,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tame_factor_is_the_element_sum(g in small_group(48)) {
        for p in (2..1000u64).filter(|&p| is_prime(p) && g.order() % p != 0) {
            let mut want: BTreeMap<u64, u64> = BTreeMap::new();
            for x in g.elements().unwrap() {
                if (p - 1) % g.element_order(&x) == 0 && g.element_order(&x) > 1 {
                    *want.entry(index_of(&g, &x)).or_default() += 1;
                }
            }
            let got: BTreeMap<u64, u64> =
                local_factor(&g, p).unwrap().terms.iter().map(|&(c, e)| (e, c)).collect();
            prop_assert_eq!(got, want, "p = {}", p);
        }
    }

    #[test]
    fn wild_factor_counts_local_homs(g in small_group(200)) {
        for p in (2..=g.order()).filter(|&p| is_prime(p) && g.order() % p == 0) {
            let tame = if p == 2 { 2 } else { p - 1 };
            // |Hom(Z/tame, G)| · |G[p^∞]|: the p-primary part of G has order p^{v_p(|G|)}.
            let want = g.torsion_count(tame) * p.pow(valuation(g.order(), p));
            let f = local_factor(&g, p).unwrap();
            let sum: u64 = f.terms.iter().map(|t| t.0).sum();
            prop_assert_eq!(sum + 1, want, "p = {}", p);
        }
    }

    #[test]
    fn pole_orders_are_b_d(g in small_group(200)) {
        prop_assert!(zeta_factorization(&g).is_ok());
    }
}

#[test]
fn oracle_equivalence_small() {
    for lit in ["C2", "C3", "C4", "C2xC2", "C5", "C6"] {
        let g = parse_group(lit).unwrap();
        let series: BTreeMap<u64, i64> = series_coefficients(&g, 2000, true).unwrap().into_iter().collect();
        let opts = malle_lab::oracle::count::CountOptions { histogram: true, ..Default::default() };
        let oracle = malle_lab::oracle::count::count_surjections_with(&g, 2000, Ordering::Disc, opts).unwrap();
        let oracle: BTreeMap<u64, i64> = oracle.histogram.into_iter().map(|(k, v)| (k, v as i64)).collect();
        assert_eq!(series, oracle, "{lit}");
    }
}

#[test]
fn quadratic_residual_product_at_one() {
    // B(1) for C_2 is the leading constant 6/π² of the quadratic-field count.
    let g = parse_group("C2").unwrap();
    let b = euler_product_truncated(&g, &q(1, 1), 1_000_000, ProductMode::B, 30).unwrap();
    assert!((b.value_f64 - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-3);
    let oracle = count_surjections(&g, 100_000, Ordering::Disc).unwrap();
    assert!(close(oracle.fields as f64 / 1e5, b.value_f64, 0.01));
}

#[test]
fn cubic_residual_product_converges() {
    let g = parse_group("C3").unwrap();
    let s = q(3, 4);
    let lo = euler_product_truncated(&g, &s, 100_000, ProductMode::B, 30).unwrap();
    let hi = euler_product_truncated(&g, &s, 1_000_000, ProductMode::B, 30).unwrap();
    assert!((lo.value_f64 - hi.value_f64).abs() < 1e-4);
}
