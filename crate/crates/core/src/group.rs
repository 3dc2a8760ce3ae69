//! Finite abelian groups in invariant-factor form.
//!
//! Elements are tuples of residues against the invariant factors
//! d_1 | d_2 | ... | d_k.  Internally elements are also addressed by a
//! mixed-radix index so that subgroups can be stored as sorted index lists.

use crate::arith::{factorize, gcd, lcm, radical};
use crate::error::{invalid, LabError, Result};
use serde::Serialize;
use std::collections::HashMap;
use std::fmt;

/// Default cap on |G| for subgroup-lattice enumeration.
pub const LATTICE_CAP: u64 = 10_000;
/// Cap on |G| for full element enumeration.
pub const ELEMENT_CAP: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AbelianGroup {
    factors: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GroupElement {
    pub residues: Vec<u64>,
}

/// A character ψ of G, ψ(e_i) = exp(2πi·exponents[i]/d_i).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CharacterOfGroup {
    pub exponents: Vec<u64>,
}

impl AbelianGroup {
    /// Normalizes an arbitrary list of cyclic orders to invariant-factor form.
    pub fn new(factors: &[u64]) -> Result<Self> {
        if let Some(bad) = factors.iter().find(|&&d| d <= 1) {
            return invalid(format!("cyclic factor {bad} must be at least 2"));
        }
        Ok(Self {
            factors: smith_diagonal(factors),
        })
    }

    pub fn trivial() -> Self {
        Self { factors: Vec::new() }
    }

    pub fn cyclic(n: u64) -> Self {
        if n <= 1 {
            Self::trivial()
        } else {
            Self { factors: vec![n] }
        }
    }

    pub fn invariant_factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn order(&self) -> u64 {
        self.factors.iter().product()
    }

    pub fn exponent(&self) -> u64 {
        self.factors.last().copied().unwrap_or(1)
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn is_cyclic(&self) -> bool {
        self.factors.len() <= 1
    }

    /// The character group; isomorphic to G, so it carries the same factors.
    pub fn dual(&self) -> AbelianGroup {
        self.clone()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement {
            residues: vec![0; self.factors.len()],
        }
    }

    pub fn element(&self, residues: &[u64]) -> Result<GroupElement> {
        if residues.len() != self.factors.len() {
            return invalid("element length does not match the number of invariant factors");
        }
        if residues.iter().zip(&self.factors).any(|(r, d)| r >= d) {
            return invalid("element residue out of range");
        }
        Ok(GroupElement {
            residues: residues.to_vec(),
        })
    }

    pub fn generator(&self, i: usize) -> GroupElement {
        let mut g = self.identity();
        g.residues[i] = 1;
        g
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement {
            residues: a
                .residues
                .iter()
                .zip(&b.residues)
                .zip(&self.factors)
                .map(|((x, y), d)| (x + y) % d)
                .collect(),
        }
    }

    pub fn neg(&self, a: &GroupElement) -> GroupElement {
        self.scale(a, -1)
    }

    /// k·a, for any integer k.
    pub fn scale(&self, a: &GroupElement, k: i64) -> GroupElement {
        GroupElement {
            residues: a
                .residues
                .iter()
                .zip(&self.factors)
                .map(|(x, d)| {
                    let d = *d as i128;
                    ((*x as i128 * k as i128).rem_euclid(d)) as u64
                })
                .collect(),
        }
    }

    pub fn element_order(&self, g: &GroupElement) -> u64 {
        g.residues
            .iter()
            .zip(&self.factors)
            .fold(1, |acc, (r, d)| lcm(acc, d / gcd(*d, *r)))
    }

    /// Mixed-radix index of an element (first factor is least significant).
    pub fn index_of(&self, g: &GroupElement) -> usize {
        let mut idx = 0usize;
        for (r, d) in g.residues.iter().zip(&self.factors).rev() {
            idx = idx * (*d as usize) + *r as usize;
        }
        idx
    }

    pub fn element_at(&self, mut idx: usize) -> GroupElement {
        let mut residues = Vec::with_capacity(self.factors.len());
        for d in &self.factors {
            residues.push((idx % *d as usize) as u64);
            idx /= *d as usize;
        }
        GroupElement { residues }
    }

    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        self.check_cap(ELEMENT_CAP)?;
        Ok((0..self.order() as usize).map(|i| self.element_at(i)).collect())
    }

    pub fn check_cap(&self, cap: u64) -> Result<()> {
        if self.order() > cap {
            Err(LabError::Budget(format!(
                "|G| = {} exceeds the enumeration cap {cap}",
                self.order()
            )))
        } else {
            Ok(())
        }
    }

    /// |G[m]| = #{g : m·g = 0}; also equals [G : mG].
    pub fn torsion_count(&self, m: u64) -> u64 {
        self.factors.iter().map(|d| gcd(*d, m)).product()
    }

    /// |Hom(self, other)|.
    pub fn hom_count(&self, other: &AbelianGroup) -> u64 {
        let mut n = 1u64;
        for a in &self.factors {
            for b in &other.factors {
                n *= gcd(*a, *b);
            }
        }
        n
    }

    /// Exponents of the p-primary part, sorted ascending.
    pub fn primary_type(&self, p: u64) -> Vec<u32> {
        let mut ex: Vec<u32> = self
            .factors
            .iter()
            .map(|d| crate::arith::valuation(*d, p))
            .filter(|&e| e > 0)
            .collect();
        ex.sort_unstable();
        ex
    }

    pub fn characters(&self) -> Vec<CharacterOfGroup> {
        (0..self.order() as usize)
            .map(|i| CharacterOfGroup {
                exponents: self.element_at(i).residues,
            })
            .collect()
    }

    /// ψ(g) as a fraction t/den of a full turn, returned reduced as (t, den).
    pub fn pair(&self, psi: &CharacterOfGroup, g: &GroupElement) -> (u64, u64) {
        let e = self.exponent();
        let mut t = 0u64;
        for ((x, r), d) in psi.exponents.iter().zip(&g.residues).zip(&self.factors) {
            t = (t + x * r % d * (e / d)) % e;
        }
        let g0 = gcd(t, e);
        (t / g0, e / g0)
    }

    /// Order of ψ(g) as a root of unity.
    pub fn pair_order(&self, psi: &CharacterOfGroup, g: &GroupElement) -> u64 {
        self.pair(psi, g).1
    }
}

impl fmt::Display for AbelianGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "C1");
        }
        let parts: Vec<String> = self.factors.iter().map(|d| format!("C{d}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// Smith normalization of diag(factors) by pairwise gcd/lcm pivoting.
fn smith_diagonal(factors: &[u64]) -> Vec<u64> {
    let mut d: Vec<u64> = factors.to_vec();
    let k = d.len();
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (d[i], d[j]);
            let g = gcd(a, b);
            d[i] = g;
            d[j] = a / g * b;
        }
    }
    d.retain(|&x| x > 1);
    d
}

/// Parses `C4`, `C2xC6`, `[2,6]` (and `1`/`C1` for the trivial group).
pub fn parse_group(literal: &str) -> Result<AbelianGroup> {
    let s = literal.trim();
    let bad = || LabError::Invalid(format!("malformed group literal '{literal}'"));
    let nums: Vec<u64> = if let Some(inner) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        if inner.trim().is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(|t| t.trim().parse::<u64>().map_err(|_| bad()))
                .collect::<Result<_>>()?
        }
    } else {
        s.split(['x', 'X', '×'])
            .map(|t| {
                let t = t.trim();
                t.strip_prefix('C')
                    .or_else(|| t.strip_prefix('c'))
                    .ok_or_else(bad)?
                    .parse::<u64>()
                    .map_err(|_| bad())
            })
            .collect::<Result<_>>()?
    };
    let nums: Vec<u64> = nums.into_iter().filter(|&n| n != 1).collect();
    AbelianGroup::new(&nums)
}

#[derive(Clone, Debug)]
pub struct Subgroup {
    elements: Vec<u32>,
    pub generators: Vec<GroupElement>,
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
    }
}
impl Eq for Subgroup {}

impl Subgroup {
    pub fn order(&self) -> u64 {
        self.elements.len() as u64
    }

    pub fn element_indices(&self) -> &[u32] {
        &self.elements
    }

    pub fn contains_index(&self, idx: usize) -> bool {
        self.elements.binary_search(&(idx as u32)).is_ok()
    }

    pub fn contains(&self, g: &AbelianGroup, x: &GroupElement) -> bool {
        self.contains_index(g.index_of(x))
    }

    pub fn is_subset_of(&self, other: &Subgroup) -> bool {
        if self.elements.len() > other.elements.len() {
            return false;
        }
        self.elements.iter().all(|e| other.elements.binary_search(e).is_ok())
    }

    pub fn elements(&self, g: &AbelianGroup) -> Vec<GroupElement> {
        self.elements.iter().map(|&i| g.element_at(i as usize)).collect()
    }

    pub fn trivial(g: &AbelianGroup) -> Self {
        Self {
            elements: vec![g.index_of(&g.identity()) as u32],
            generators: Vec::new(),
        }
    }

    pub fn whole(g: &AbelianGroup) -> Result<Self> {
        g.check_cap(ELEMENT_CAP)?;
        Ok(Self {
            elements: (0..g.order() as u32).collect(),
            generators: (0..g.rank()).map(|i| g.generator(i)).collect(),
        })
    }

    /// Subgroup generated by a list of elements.
    pub fn generated(g: &AbelianGroup, gens: &[GroupElement]) -> Result<Self> {
        g.check_cap(ELEMENT_CAP)?;
        let mut h = Self::trivial(g);
        for x in gens {
            h = h.join_element(g, x);
        }
        Ok(h)
    }

    /// <H, x> built coset by coset: H, H + x, H + 2x, ... until k·x ∈ H.
    pub fn join_element(&self, g: &AbelianGroup, x: &GroupElement) -> Self {
        if self.contains(g, x) {
            return self.clone();
        }
        let base: Vec<GroupElement> = self.elements(g);
        let mut out: Vec<u32> = self.elements.clone();
        let mut shift = x.clone();
        while !self.contains(g, &shift) {
            for h in &base {
                out.push(g.index_of(&g.add(h, &shift)) as u32);
            }
            shift = g.add(&shift, x);
        }
        out.sort_unstable();
        let mut generators = self.generators.clone();
        generators.push(x.clone());
        Self {
            elements: out,
            generators,
        }
    }

    pub fn join(&self, g: &AbelianGroup, other: &Subgroup) -> Self {
        let mut h = self.clone();
        for x in &other.generators {
            h = h.join_element(g, x);
        }
        h
    }

    pub fn intersect(&self, g: &AbelianGroup, other: &Subgroup) -> Self {
        let elements: Vec<u32> = self
            .elements
            .iter()
            .copied()
            .filter(|e| other.elements.binary_search(e).is_ok())
            .collect();
        let generators = elements.iter().map(|&i| g.element_at(i as usize)).collect();
        Self {
            elements,
            generators,
        }
    }

    /// The subgroup m·G.
    pub fn multiples(g: &AbelianGroup, m: u64) -> Result<Self> {
        let gens: Vec<GroupElement> = (0..g.rank())
            .map(|i| g.scale(&g.generator(i), m as i64))
            .collect();
        Self::generated(g, &gens)
    }
}

/// Frattini subgroup Φ(G) = rad(|G|)·G for abelian G.
pub fn frattini(g: &AbelianGroup) -> Result<Subgroup> {
    Subgroup::multiples(g, radical(g.order().max(1)))
}

/// The subgroup lattice with its containment relation and Möbius values.
#[derive(Clone, Debug)]
pub struct SubgroupLattice {
    pub group: AbelianGroup,
    pub subgroups: Vec<Subgroup>,
    /// `above[i]` lists j with subgroups[i] ≤ subgroups[j] (including i).
    above: Vec<Vec<usize>>,
    top: usize,
    mu_top: Vec<i64>,
}

impl SubgroupLattice {
    pub fn new(g: &AbelianGroup) -> Result<Self> {
        Self::with_cap(g, LATTICE_CAP)
    }

    pub fn with_cap(g: &AbelianGroup, cap: u64) -> Result<Self> {
        g.check_cap(cap)?;
        let cyclic = cyclic_subgroups(g)?;
        let mut subgroups: Vec<Subgroup> = vec![Subgroup::trivial(g)];
        let mut seen: HashMap<Vec<u32>, usize> = HashMap::new();
        seen.insert(subgroups[0].elements.clone(), 0);
        let mut next = 0;
        while next < subgroups.len() {
            let h = subgroups[next].clone();
            next += 1;
            for c in &cyclic {
                let x = &c.generators[0];
                if h.contains(g, x) {
                    continue;
                }
                let j = h.join_element(g, x);
                if !seen.contains_key(&j.elements) {
                    seen.insert(j.elements.clone(), subgroups.len());
                    subgroups.push(j);
                }
            }
        }
        subgroups.sort_by_key(|s| s.order());
        let n = subgroups.len();
        let mut above = vec![Vec::new(); n];
        for i in 0..n {
            for j in i..n {
                if subgroups[j].order() % subgroups[i].order() == 0
                    && subgroups[i].is_subset_of(&subgroups[j])
                {
                    above[i].push(j);
                }
            }
        }
        let top = n - 1;
        let mut mu_top = vec![0i64; n];
        for i in (0..n).rev() {
            mu_top[i] = if i == top {
                1
            } else {
                -above[i].iter().filter(|&&j| j != i).map(|&j| mu_top[j]).sum::<i64>()
            };
        }
        Ok(Self {
            group: g.clone(),
            subgroups,
            above,
            top,
            mu_top,
        })
    }

    pub fn len(&self) -> usize {
        self.subgroups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subgroups.is_empty()
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.above[i].binary_search(&j).is_ok()
    }

    pub fn find(&self, h: &Subgroup) -> Option<usize> {
        self.subgroups.iter().position(|s| s == h)
    }

    /// μ(H_i, G) from the upper-interval recursion.
    pub fn mobius_to_top(&self, i: usize) -> i64 {
        self.mu_top[i]
    }

    /// μ(H_i, H_j) for arbitrary pairs (0 when H_i is not contained in H_j).
    pub fn mobius(&self, i: usize, j: usize) -> i64 {
        if !self.leq(i, j) {
            return 0;
        }
        let mut mu: HashMap<usize, i64> = HashMap::new();
        let mut interval: Vec<usize> = self.above[i].iter().copied().filter(|&k| self.leq(k, j)).collect();
        interval.sort_by_key(|&k| std::cmp::Reverse(self.subgroups[k].order()));
        for &k in &interval {
            let v = if k == j {
                1
            } else {
                -self.above[k]
                    .iter()
                    .filter(|&&m| m != k && self.leq(m, j))
                    .map(|m| mu[m])
                    .sum::<i64>()
            };
            mu.insert(k, v);
        }
        mu[&i]
    }

    /// Maximal proper subgroups.
    pub fn maximal(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| i != self.top && self.above[i].iter().all(|&j| j == i || j == self.top))
            .collect()
    }
}

fn cyclic_subgroups(g: &AbelianGroup) -> Result<Vec<Subgroup>> {
    let n = g.order() as usize;
    let mut covered = vec![false; n];
    covered[g.index_of(&g.identity())] = true;
    let mut out = Vec::new();
    for idx in 0..n {
        if covered[idx] {
            continue;
        }
        let x = g.element_at(idx);
        let h = Subgroup::generated(g, std::slice::from_ref(&x))?;
        let ord = h.order();
        for &e in &h.elements {
            if g.element_order(&g.element_at(e as usize)) == ord {
                covered[e as usize] = true;
            }
        }
        out.push(h);
    }
    Ok(out)
}

/// μ(H, G) for a subgroup H of G.
pub fn moebius_subgroup(h: &Subgroup, g: &AbelianGroup) -> Result<i64> {
    let lattice = SubgroupLattice::new(g)?;
    let i = lattice
        .find(h)
        .ok_or_else(|| LabError::Invalid("H is not a subgroup of G".into()))?;
    let mu = lattice.mobius_to_top(i);
    if mu != 0 {
        let phi = frattini(g)?;
        if !phi.is_subset_of(h) {
            return Err(LabError::Contract(
                "nonzero Möbius value below the Frattini subgroup".into(),
            ));
        }
    }
    Ok(mu)
}

/// |Aut(G)| as the product over Sylow subgroups of the Hillar–Rhea count.
pub fn aut_order(g: &AbelianGroup) -> u128 {
    factorize(g.order().max(1))
        .into_iter()
        .map(|(p, _)| aut_order_p_group(p as u128, &g.primary_type(p)))
        .product()
}

fn aut_order_p_group(p: u128, e: &[u32]) -> u128 {
    let n = e.len();
    let mut total: u128 = 1;
    for k in 0..n {
        let dk = (0..n).rev().find(|&l| e[l] == e[k]).unwrap() + 1;
        let ck = (0..n).find(|&l| e[l] == e[k]).unwrap() + 1;
        total *= p.pow(dk as u32) - p.pow(k as u32);
        total *= p.pow(e[k]).pow((n - dk) as u32);
        total *= p.pow(e[k] - 1).pow((n - ck + 1) as u32);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(f: &[u64]) -> AbelianGroup {
        AbelianGroup::new(f).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(g(&[2, 2]).invariant_factors(), &[2, 2]);
        assert_eq!(g(&[2, 3]).invariant_factors(), &[6]);
        assert_eq!(g(&[4, 6]).invariant_factors(), &[2, 12]);
        assert_eq!(g(&[6, 10, 15]).invariant_factors(), &[30, 30]);
        assert!(AbelianGroup::new(&[1, 2]).is_err());
        assert!(AbelianGroup::new(&[]).unwrap().is_trivial());
    }

    #[test]
    fn normalization_matches_primary_decomposition() {
        // Oracle: collect prime powers, then stack the largest ones.
        for a in 2..25u64 {
            for b in 2..25u64 {
                for c in [2u64, 3, 4, 9] {
                    let mut by_p: std::collections::BTreeMap<u64, Vec<u64>> = Default::default();
                    for d in [a, b, c] {
                        for (p, e) in factorize(d) {
                            by_p.entry(p).or_default().push(p.pow(e));
                        }
                    }
                    let mut inv = vec![1u64; 3];
                    for (_, mut pws) in by_p {
                        pws.sort_unstable_by(|x, y| y.cmp(x));
                        for (i, q) in pws.into_iter().enumerate() {
                            inv[2 - i] *= q;
                        }
                    }
                    inv.retain(|&x| x > 1);
                    assert_eq!(g(&[a, b, c]).invariant_factors(), inv.as_slice());
                }
            }
        }
    }

    #[test]
    fn element_orders() {
        let c6 = g(&[6]);
        assert_eq!(c6.element_order(&c6.element(&[0]).unwrap()), 1);
        assert_eq!(c6.element_order(&c6.element(&[3]).unwrap()), 2);
        let h = g(&[2, 12]);
        assert_eq!(h.element_order(&h.element(&[1, 4]).unwrap()), 6);
    }

    #[test]
    fn parse_literals() {
        assert_eq!(parse_group("C4").unwrap(), g(&[4]));
        assert_eq!(parse_group("C2xC6").unwrap(), g(&[2, 6]));
        assert_eq!(parse_group("[2,6]").unwrap(), g(&[2, 6]));
        assert_eq!(parse_group("C2xC3").unwrap(), g(&[6]));
        assert!(parse_group("C1").unwrap().is_trivial());
        assert!(parse_group("D4").is_err());
        assert!(parse_group("C0").is_err());
    }

    #[test]
    fn lattice_sizes() {
        assert_eq!(SubgroupLattice::new(&g(&[4])).unwrap().len(), 3);
        assert_eq!(SubgroupLattice::new(&g(&[2, 2])).unwrap().len(), 5);
        assert_eq!(SubgroupLattice::new(&g(&[6])).unwrap().len(), 4);
        assert_eq!(SubgroupLattice::new(&g(&[3, 3])).unwrap().len(), 6);
        // C_2^3 has 16 subgroups, C_2^4 has 67.
        assert_eq!(SubgroupLattice::new(&g(&[2, 2, 2])).unwrap().len(), 16);
        assert_eq!(SubgroupLattice::new(&g(&[2, 2, 2, 2])).unwrap().len(), 67);
    }

    #[test]
    fn lattice_matches_subset_bruteforce() {
        // Oracle: every subset of C_2×C_2 closed under addition.
        let v4 = g(&[2, 2]);
        let mut count = 0;
        for mask in 0u32..16 {
            let set: Vec<usize> = (0..4).filter(|i| mask >> i & 1 == 1).collect();
            if !set.contains(&0) {
                continue;
            }
            let closed = set.iter().all(|&a| {
                set.iter().all(|&b| {
                    let s = v4.add(&v4.element_at(a), &v4.element_at(b));
                    set.contains(&v4.index_of(&s))
                })
            });
            count += closed as usize;
        }
        assert_eq!(count, 5);
    }

    #[test]
    fn frattini_examples() {
        assert_eq!(frattini(&g(&[2, 2])).unwrap().order(), 1);
        assert_eq!(frattini(&g(&[4])).unwrap().order(), 2);
        assert_eq!(frattini(&g(&[12])).unwrap().order(), 2);
    }

    #[test]
    fn mobius_examples() {
        let c5 = g(&[5]);
        assert_eq!(moebius_subgroup(&Subgroup::trivial(&c5), &c5).unwrap(), -1);
        let g33 = g(&[3, 3]);
        assert_eq!(moebius_subgroup(&Subgroup::trivial(&g33), &g33).unwrap(), 3);
        assert_eq!(moebius_subgroup(&Subgroup::whole(&g33).unwrap(), &g33).unwrap(), 1);
        let lat = SubgroupLattice::new(&g(&[12])).unwrap();
        assert_eq!(lat.mobius(0, lat.top()), 0);
    }

    #[test]
    fn aut_orders() {
        assert_eq!(aut_order(&g(&[3])), 2);
        assert_eq!(aut_order(&g(&[2, 2])), 6);
        assert_eq!(aut_order(&g(&[2])), 1);
        assert_eq!(aut_order(&g(&[2, 4])), 8);
        assert_eq!(aut_order(&g(&[2, 2, 2])), 168);
        assert_eq!(aut_order(&AbelianGroup::trivial()), 1);
    }

    #[test]
    fn characters_pair_like_a_perfect_pairing() {
        let h = g(&[2, 6]);
        let chars = h.characters();
        for x in h.elements().unwrap() {
            let trivial_on_x = chars.iter().filter(|c| h.pair_order(c, &x) == 1).count() as u64;
            if x == h.identity() {
                assert_eq!(trivial_on_x, h.order());
            } else {
                assert_eq!(trivial_on_x, h.order() / h.element_order(&x));
            }
        }
    }
}
