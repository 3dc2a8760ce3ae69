//! Factorization of the homomorphism series into cyclotomic Dedekind zeta
//! functions times a residual Euler product B.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::arith::{euler_phi, mult_order, valuation};
use crate::error::{LabError, Result};
use crate::group::AbelianGroup;
use crate::invariants::{b_d, q_orbits, GaloisActionSpec, WeightFn};
use crate::rat::qu;

/// ζ_{Q(ζ_m)}(scale·s).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ZetaEntry {
    pub m: u64,
    pub scale: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZetaFactorization {
    pub group: String,
    pub entries: Vec<ZetaEntry>,
    /// Pole order at s = 1/d for each d in the spectrum.
    pub pole_orders: BTreeMap<u64, usize>,
}

pub fn zeta_factorization(g: &AbelianGroup) -> Result<ZetaFactorization> {
    let orbs = q_orbits(g)?;
    let mut entries: Vec<ZetaEntry> = orbs
        .iter()
        .filter(|o| !o.is_identity())
        .map(|o| ZetaEntry {
            m: o.order,
            scale: g.order() - g.order() / o.order,
        })
        .collect();
    entries.sort_by_key(|e| (e.scale, e.m));
    let mut pole_orders = BTreeMap::new();
    for e in &entries {
        *pole_orders.entry(e.scale).or_insert(0) += 1;
    }
    if !g.is_trivial() {
        let action = GaloisActionSpec::cyclotomic(g)?;
        for (&d, &k) in &pole_orders {
            let b = b_d(g, &action, &WeightFn::Disc, &qu(d))?;
            if b != k {
                return Err(LabError::Contract(format!(
                    "pole order {k} at s = 1/{d} disagrees with b_{d} = {b}"
                )));
            }
        }
    }
    Ok(ZetaFactorization { group: g.to_string(), entries, pole_orders })
}

/// (f, r) with ζ_{Q(ζ_m)}(x) having Euler factor (1 - p^{-f x})^{-r} at p:
/// f is the order of p modulo the prime-to-p part of m.
pub fn cyclotomic_splitting(m: u64, p: u64) -> (u64, u64) {
    let m0 = m / p.pow(valuation(m, p));
    if m0 <= 2 {
        return (1, 1);
    }
    let f = mult_order(p % m0, m0);
    (f, euler_phi(m0) / f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;

    fn entries(g: &str) -> Vec<(u64, u64)> {
        zeta_factorization(&parse_group(g).unwrap())
            .unwrap()
            .entries
            .iter()
            .map(|e| (e.m, e.scale))
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(entries("C3"), vec![(3, 2)]);
        assert_eq!(entries("C2xC2"), vec![(2, 2), (2, 2), (2, 2)]);
        assert_eq!(entries("C4"), vec![(2, 2), (4, 3)]);
        let f = zeta_factorization(&parse_group("C2xC2").unwrap()).unwrap();
        assert_eq!(f.pole_orders[&2], 3);
    }

    #[test]
    fn pole_orders_match_b_d() {
        for lit in ["C6", "C12", "C2xC6", "C3xC3", "C2xC2xC4", "C30"] {
            zeta_factorization(&parse_group(lit).unwrap()).unwrap();
        }
    }

    #[test]
    fn splitting_degrees() {
        assert_eq!(cyclotomic_splitting(3, 7), (1, 2));
        assert_eq!(cyclotomic_splitting(3, 5), (2, 1));
        assert_eq!(cyclotomic_splitting(3, 3), (1, 1));
        assert_eq!(cyclotomic_splitting(12, 5), (2, 2));
        assert_eq!(cyclotomic_splitting(12, 2), (2, 1));
        assert_eq!(cyclotomic_splitting(5, 11), (1, 4));
        assert_eq!(cyclotomic_splitting(5, 19), (2, 2));
    }
}
