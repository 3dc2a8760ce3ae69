//! Local Euler factors of the homomorphism series over Q.
//!
//! The factor at p is (1/|G|)·Σ_{f ∈ Hom(G_{Q_p}, G)} p^{-e(f)s}. The
//! unramified Ẑ part contributes |G| homomorphisms with identical
//! discriminant, which cancels the normalization, so only the inertia part
//! Z_p^* → G is enumerated.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::arith::{is_prime, valuation};
use crate::error::{invalid, Result};
use crate::group::{AbelianGroup, GroupElement, Subgroup};

/// 1 + Σ c_j p^{-a_j s}, terms sorted by exponent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LocalFactor {
    pub p: u64,
    pub terms: Vec<(u64, u64)>,
}

impl LocalFactor {
    fn from_map(p: u64, map: BTreeMap<u64, u64>) -> LocalFactor {
        LocalFactor {
            p,
            terms: map.into_iter().filter(|&(e, c)| e > 0 && c > 0).map(|(e, c)| (c, e)).collect(),
        }
    }

    /// Coefficient of p^{-ks}.
    pub fn coefficient(&self, k: u64) -> u64 {
        if k == 0 {
            return 1;
        }
        self.terms.iter().find(|t| t.1 == k).map_or(0, |t| t.0)
    }

    /// Number of local homomorphisms (constant term included).
    pub fn hom_count(&self) -> u64 {
        1 + self.terms.iter().map(|t| t.0).sum::<u64>()
    }

    pub fn degree(&self) -> u64 {
        self.terms.last().map_or(0, |t| t.1)
    }

    pub fn eval_f64(&self, s: f64) -> f64 {
        let p = self.p as f64;
        1.0 + self.terms.iter().map(|&(c, e)| c as f64 * p.powf(-(e as f64) * s)).sum::<f64>()
    }

    pub fn is_trivial(&self) -> bool {
        self.terms.is_empty()
    }
}

impl std::fmt::Display for LocalFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "1")?;
        for &(c, e) in &self.terms {
            write!(f, " + {c}·{}^(-{e}s)", self.p)?;
        }
        Ok(())
    }
}

/// Elements of a subgroup H ≤ G with their G-orders, precomputed once so
/// factors at many primes are cheap.
#[derive(Clone, Debug)]
pub struct ElementProfile {
    pub group_order: u64,
    pub exponent: u64,
    /// (order m, number of elements of H of order m), identity excluded.
    pub order_counts: Vec<(u64, u64)>,
    elements: Vec<GroupElement>,
}

impl ElementProfile {
    pub fn whole(g: &AbelianGroup) -> Result<ElementProfile> {
        Ok(Self::build(g, g.elements()?))
    }

    pub fn restricted(g: &AbelianGroup, h: &Subgroup) -> ElementProfile {
        Self::build(g, h.elements(g))
    }

    fn build(g: &AbelianGroup, elements: Vec<GroupElement>) -> ElementProfile {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for x in &elements {
            let m = g.element_order(x);
            if m > 1 {
                *counts.entry(m).or_insert(0) += 1;
            }
        }
        ElementProfile {
            group_order: g.order(),
            exponent: g.exponent().max(1),
            order_counts: counts.into_iter().collect(),
            elements,
        }
    }

    fn ind(&self, m: u64) -> u64 {
        self.group_order - self.group_order / m
    }

    /// Local factor at a prime not dividing |G|.
    pub fn tame(&self, p: u64) -> LocalFactor {
        let mut map = BTreeMap::new();
        for &(m, c) in &self.order_counts {
            if (p - 1) % m == 0 {
                *map.entry(self.ind(m)).or_insert(0) += c;
            }
        }
        LocalFactor::from_map(p, map)
    }

    /// Local factor by enumerating images (g0, g1) of the canonical
    /// generators of Z_p^* and applying conductor-discriminant.
    pub fn wild(&self, g: &AbelianGroup, p: u64) -> LocalFactor {
        let chars = g.characters();
        let tame_ok = |x: &GroupElement| {
            let o = g.element_order(x);
            if p == 2 {
                2 % o == 0
            } else {
                (p - 1) % o == 0
            }
        };
        let pro_p = |x: &GroupElement| {
            let o = g.element_order(x);
            o == p.pow(valuation(o, p))
        };
        let g0s: Vec<&GroupElement> = self.elements.iter().filter(|x| tame_ok(x)).collect();
        let g1s: Vec<&GroupElement> = self.elements.iter().filter(|x| pro_p(x)).collect();
        let mut map: BTreeMap<u64, u64> = BTreeMap::new();
        for g0 in &g0s {
            for g1 in &g1s {
                let e: u64 = chars
                    .iter()
                    .map(|psi| {
                        let o1 = g.pair_order(psi, g1);
                        let o0 = g.pair_order(psi, g0);
                        local_exponent(p, o0, o1)
                    })
                    .sum();
                *map.entry(e).or_insert(0) += 1;
            }
        }
        LocalFactor::from_map(p, map)
    }

    pub fn factor(&self, g: &AbelianGroup, p: u64) -> LocalFactor {
        if self.group_order % p == 0 {
            self.wild(g, p)
        } else {
            self.tame(p)
        }
    }
}

/// Conductor exponent of a character of Z_p^* whose values on the canonical
/// generators have orders o0 (μ_{p-1} or -1) and o1 (1+p or 5).
fn local_exponent(p: u64, o0: u64, o1: u64) -> u64 {
    if o1 > 1 {
        let j = valuation(o1, p) as u64;
        if p == 2 {
            j + 2
        } else {
            j + 1
        }
    } else if o0 > 1 {
        if p == 2 {
            2
        } else {
            1
        }
    } else {
        0
    }
}

pub fn local_factor(g: &AbelianGroup, p: u64) -> Result<LocalFactor> {
    if !is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    Ok(ElementProfile::whole(g)?.factor(g, p))
}

/// Factor for homomorphisms with inertia image in H, indices taken in G.
pub fn local_factor_in(g: &AbelianGroup, h: &Subgroup, p: u64) -> Result<LocalFactor> {
    if !is_prime(p) {
        return invalid(format!("{p} is not prime"));
    }
    Ok(ElementProfile::restricted(g, h).factor(g, p))
}

/// |Hom(Z_p^*, G)| from torsion counts: |G[p-1]| (|G[2]| at p = 2) times
/// the order of the p-primary part.
pub fn local_hom_count(g: &AbelianGroup, p: u64) -> u64 {
    let tame = g.torsion_count(if p == 2 { 2 } else { p - 1 });
    let primary: u64 = g.invariant_factors().iter().map(|&d| p.pow(valuation(d, p))).product();
    tame * primary
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;
    use crate::invariants::index_of;

    fn lf(g: &str, p: u64) -> Vec<(u64, u64)> {
        local_factor(&parse_group(g).unwrap(), p).unwrap().terms
    }

    #[test]
    fn cubic_factors() {
        assert_eq!(lf("C3", 7), vec![(2, 2)]);
        assert_eq!(lf("C3", 5), vec![]);
        assert_eq!(lf("C3", 3), vec![(2, 4)]);
        assert_eq!(lf("C3", 13), vec![(2, 2)]);
    }

    #[test]
    fn quadratic_factors() {
        assert_eq!(lf("C2", 2), vec![(1, 2), (2, 3)]);
        assert_eq!(lf("C2", 3), vec![(1, 1)]);
        assert_eq!(lf("C2", 5), vec![(1, 1)]);
    }

    #[test]
    fn composite_rejected() {
        assert!(local_factor(&parse_group("C3").unwrap(), 9).is_err());
    }

    #[test]
    fn wild_path_agrees_on_tame_primes() {
        for lit in ["C4", "C6", "C2xC2", "C2xC6", "C12", "C3xC3"] {
            let g = parse_group(lit).unwrap();
            let prof = ElementProfile::whole(&g).unwrap();
            for p in crate::arith::primes_up_to(60) {
                if g.order() % p != 0 {
                    assert_eq!(prof.tame(p), prof.wild(&g, p), "{lit} p={p}");
                }
            }
        }
    }

    #[test]
    fn tame_matches_element_sum() {
        for lit in ["C4", "C2xC4", "C5", "C3xC6", "C2xC2xC2"] {
            let g = parse_group(lit).unwrap();
            for p in crate::arith::primes_up_to(200) {
                if g.order() % p == 0 {
                    continue;
                }
                let mut map = BTreeMap::new();
                for x in g.elements().unwrap() {
                    if g.element_order(&x) > 1 && (p - 1) % g.element_order(&x) == 0 {
                        *map.entry(index_of(&g, &x)).or_insert(0u64) += 1;
                    }
                }
                let want: Vec<(u64, u64)> = map.into_iter().map(|(e, c)| (c, e)).collect();
                assert_eq!(lf(lit, p), want);
            }
        }
    }

    #[test]
    fn wild_hom_counts() {
        for lit in ["C2", "C4", "C8", "C2xC2", "C3", "C9", "C6", "C2xC4", "C3xC3"] {
            let g = parse_group(lit).unwrap();
            for p in [2u64, 3] {
                if g.order() % p != 0 {
                    continue;
                }
                let f = local_factor(&g, p).unwrap();
                assert_eq!(f.hom_count(), local_hom_count(&g, p), "{lit} p={p}");
            }
        }
    }

    #[test]
    fn restricted_factor() {
        let g = parse_group("C4").unwrap();
        let h = Subgroup::multiples(&g, 2).unwrap();
        let f = local_factor_in(&g, &h, 3).unwrap();
        assert_eq!(f.terms, vec![(1, 2)]);
        let f2 = local_factor_in(&g, &h, 2).unwrap();
        // Quadratic characters of Q_2 with index measured in C_4.
        assert_eq!(f2.terms, vec![(1, 4), (2, 6)]);
    }
}
