#![allow(dead_code)]

use malle_lab::group::AbelianGroup;
use proptest::prelude::*;

/// Nontrivial abelian groups of order at most `cap`, from random cyclic factors.
pub fn small_group(cap: u64) -> impl Strategy<Value = AbelianGroup> {
    prop::collection::vec(2u64..=24, 1..=4)
        .prop_filter("order within cap", move |f| f.iter().product::<u64>() <= cap)
        .prop_map(|f| AbelianGroup::new(&f).unwrap())
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}
