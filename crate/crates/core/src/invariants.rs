//! Malle-type invariants: weights, Galois actions, orbits, a(G), b_d, b̄_d,
//! the non-vanishing case classification and the conjectured pole order.

use crate::arith::{divisors, euler_phi, gcd, radical, valuation};
use crate::error::{invalid, LabError, Result};
use crate::group::{frattini, AbelianGroup, GroupElement, SubgroupLattice};
use crate::rat::{qu, Q};
use num_traits::{Signed, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// ind(g) = |G|(1 − 1/ord(g)) in the regular representation.
pub fn index_of(g: &AbelianGroup, x: &GroupElement) -> u64 {
    let n = g.order();
    n - n / g.element_order(x)
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightFn {
    /// Discriminant weight of the regular representation.
    Disc,
    /// Product of ramified primes: every non-identity element has weight 1.
    Ram,
    /// Weight by element order.
    ByOrder(BTreeMap<u64, Q>),
    /// Weight by element (mixed-radix index); validated against the group.
    ByElement(HashMap<usize, Q>),
}

impl WeightFn {
    pub fn by_order(table: BTreeMap<u64, Q>) -> Result<Self> {
        for (ord, w) in &table {
            if *ord == 1 && !w.is_zero() {
                return invalid("the identity must have weight 0");
            }
            if *ord > 1 && !w.is_positive() {
                return invalid(format!("weight of order-{ord} elements must be positive"));
            }
        }
        Ok(WeightFn::ByOrder(table))
    }

    /// Custom per-element table; checks wt(g) = wt(g^k) for units k.
    pub fn by_element(g: &AbelianGroup, table: HashMap<usize, Q>) -> Result<Self> {
        for x in g.elements()? {
            let i = g.index_of(&x);
            let w = table
                .get(&i)
                .ok_or_else(|| LabError::Invalid(format!("no weight for element {:?}", x.residues)))?;
            let ord = g.element_order(&x);
            if ord == 1 {
                if !w.is_zero() {
                    return invalid("the identity must have weight 0");
                }
                continue;
            }
            if !w.is_positive() {
                return invalid("non-identity weights must be positive");
            }
            for k in 2..ord {
                if gcd(k, ord) == 1 {
                    let j = g.index_of(&g.scale(&x, k as i64));
                    if table.get(&j) != Some(w) {
                        return Err(LabError::Contract(
                            "custom weight is not invariant under invertible powers".into(),
                        ));
                    }
                }
            }
        }
        Ok(WeightFn::ByElement(table))
    }

    pub fn weight(&self, g: &AbelianGroup, x: &GroupElement) -> Result<Q> {
        let ord = g.element_order(x);
        if ord == 1 {
            return Ok(Q::zero());
        }
        match self {
            WeightFn::Disc => Ok(qu(index_of(g, x))),
            WeightFn::Ram => Ok(qu(1)),
            WeightFn::ByOrder(t) => t
                .get(&ord)
                .cloned()
                .ok_or_else(|| LabError::Invalid(format!("no weight for order {ord}"))),
            WeightFn::ByElement(t) => t
                .get(&g.index_of(x))
                .cloned()
                .ok_or_else(|| LabError::Invalid("element missing from weight table".into())),
        }
    }
}

/// An automorphism given by the images of the canonical generators e_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupAutomorphism {
    pub images: Vec<GroupElement>,
}

impl GroupAutomorphism {
    pub fn identity(g: &AbelianGroup) -> Self {
        Self {
            images: (0..g.rank()).map(|i| g.generator(i)).collect(),
        }
    }

    pub fn apply(&self, g: &AbelianGroup, x: &GroupElement) -> GroupElement {
        let mut out = g.identity();
        for (r, img) in x.residues.iter().zip(&self.images) {
            out = g.add(&out, &g.scale(img, *r as i64));
        }
        out
    }

    fn validate(&self, g: &AbelianGroup) -> Result<()> {
        if self.images.len() != g.rank() {
            return invalid("automorphism needs one image per invariant factor");
        }
        for (img, d) in self.images.iter().zip(g.invariant_factors()) {
            if d % g.element_order(img) != 0 {
                return invalid("generator image order does not divide the factor");
            }
        }
        let mut seen = vec![false; g.order() as usize];
        for x in g.elements()? {
            let i = g.index_of(&self.apply(g, &x));
            if seen[i] {
                return invalid("map is not injective");
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// A group of maps t ↦ α(t)^u generated by (α, u) pairs, stored as the
/// element permutations of its generators together with its closure size.
#[derive(Clone, Debug)]
pub struct GaloisActionSpec {
    perms: Vec<Vec<u32>>,
    closure: Vec<Vec<u32>>,
}

/// Largest closure (number of permutations × |G|) materialized at construction.
const CLOSURE_CAP: usize = 4_000_000;

impl GaloisActionSpec {
    pub fn new(g: &AbelianGroup, generators: &[(GroupAutomorphism, u64)]) -> Result<Self> {
        let e = g.exponent();
        let mut perms = Vec::new();
        for (alpha, u) in generators {
            alpha.validate(g)?;
            if gcd(*u, e) != 1 {
                return invalid(format!("{u} is not a unit modulo the exponent {e}"));
            }
            let perm: Vec<u32> = g
                .elements()?
                .iter()
                .map(|x| g.index_of(&g.scale(&alpha.apply(g, x), *u as i64)) as u32)
                .collect();
            perms.push(perm);
        }
        let closure = close_permutations(g.order() as usize, &perms);
        Ok(Self { perms, closure })
    }

    /// The cyclotomic action over Q: all of (Z/exp)^*, trivial automorphisms.
    pub fn cyclotomic(g: &AbelianGroup) -> Result<Self> {
        let e = g.exponent();
        let units: Vec<u64> = (1..e.max(2)).filter(|&u| gcd(u, e) == 1).collect();
        Self::units(g, &units)
    }

    /// Pure power action restricted to the subgroup generated by `units`.
    pub fn units(g: &AbelianGroup, units: &[u64]) -> Result<Self> {
        let id = GroupAutomorphism::identity(g);
        let gens: Vec<(GroupAutomorphism, u64)> = units.iter().map(|&u| (id.clone(), u)).collect();
        Self::new(g, &gens)
    }

    /// Number of distinct permutations in the generated group, when it was
    /// small enough to materialize.
    pub fn closure_size(&self) -> Option<usize> {
        if self.closure.is_empty() {
            None
        } else {
            Some(self.closure.len())
        }
    }

    pub fn closure(&self) -> &[Vec<u32>] {
        &self.closure
    }

    pub fn generator_permutations(&self) -> &[Vec<u32>] {
        &self.perms
    }
}

fn close_permutations(n: usize, gens: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let identity: Vec<u32> = (0..n as u32).collect();
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    seen.insert(identity.clone());
    let mut queue = vec![identity];
    while let Some(p) = queue.pop() {
        for gen in gens {
            let q: Vec<u32> = p.iter().map(|&i| gen[i as usize]).collect();
            if !seen.contains(&q) {
                if (seen.len() + 1) * n.max(1) > CLOSURE_CAP {
                    return Vec::new();
                }
                seen.insert(q.clone());
                queue.push(q);
            }
        }
    }
    seen.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitData {
    pub representative: GroupElement,
    pub size: u64,
    #[serde(serialize_with = "crate::rat::ser")]
    pub index: Q,
    pub order: u64,
    #[serde(skip)]
    pub members: Vec<u32>,
}

impl OrbitData {
    pub fn is_identity(&self) -> bool {
        self.order == 1
    }
}

/// Partition of G (identity included) into orbits, annotated with weights.
pub fn orbits(g: &AbelianGroup, action: &GaloisActionSpec, wt: &WeightFn) -> Result<Vec<OrbitData>> {
    let n = g.order() as usize;
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if assigned[start] {
            continue;
        }
        let mut members = vec![start as u32];
        assigned[start] = true;
        let mut k = 0;
        while k < members.len() {
            let cur = members[k] as usize;
            k += 1;
            for perm in &action.perms {
                let nx = perm[cur] as usize;
                if !assigned[nx] {
                    assigned[nx] = true;
                    members.push(nx as u32);
                }
            }
        }
        members.sort_unstable();
        let rep = g.element_at(members[0] as usize);
        let index = wt.weight(g, &rep)?;
        for &m in &members[1..] {
            if wt.weight(g, &g.element_at(m as usize))? != index {
                return Err(LabError::Contract("weight is not constant on an orbit".into()));
            }
        }
        out.push(OrbitData {
            order: g.element_order(&rep),
            representative: rep,
            size: members.len() as u64,
            index,
            members,
        });
    }
    Ok(out)
}

/// Q-cyclotomic orbits with the discriminant weight.
pub fn q_orbits(g: &AbelianGroup) -> Result<Vec<OrbitData>> {
    orbits(g, &GaloisActionSpec::cyclotomic(g)?, &WeightFn::Disc)
}

/// Distinct weights of non-identity orbits, ascending.
pub fn spectrum(orbits: &[OrbitData]) -> Vec<Q> {
    let set: BTreeSet<Q> = orbits.iter().filter(|o| !o.is_identity()).map(|o| o.index.clone()).collect();
    set.into_iter().collect()
}

pub fn a_invariant(g: &AbelianGroup, action: &GaloisActionSpec, wt: &WeightFn) -> Result<Q> {
    if g.is_trivial() {
        return invalid("a(G) is undefined for the trivial group");
    }
    Ok(spectrum(&orbits(g, action, wt)?).into_iter().next().expect("nontrivial group"))
}

/// a(G) for the discriminant weight: |G|(ℓ − 1)/ℓ.
pub fn a_disc(n: u64) -> u64 {
    let l = crate::arith::smallest_prime_factor(n).expect("n > 1");
    n / l * (l - 1)
}

pub fn b_d(g: &AbelianGroup, action: &GaloisActionSpec, wt: &WeightFn, d: &Q) -> Result<usize> {
    Ok(count_index(&orbits(g, action, wt)?, d))
}

fn count_index(orbits: &[OrbitData], d: &Q) -> usize {
    orbits.iter().filter(|o| !o.is_identity() && &o.index == d).count()
}

/// Order of vanishing of ζ_{Q(ζ_m)} at the real point x.
pub type ZetaOrdHook<'a> = &'a dyn Fn(u64, &Q) -> i64;

pub fn default_hook(_m: u64, _x: &Q) -> i64 {
    0
}

fn hook_sum(orbits: &[OrbitData], d: u64, hook: ZetaOrdHook, keep: impl Fn(&OrbitData) -> bool) -> Result<i64> {
    let dq = qu(d);
    let mut total = 0i64;
    for o in orbits.iter().filter(|o| !o.is_identity() && o.index < dq && keep(o)) {
        let v = hook(o.order, &(&o.index / &dq));
        if v < 0 {
            return Err(LabError::Contract("zeta order hook returned a negative order".into()));
        }
        total += v;
    }
    Ok(total)
}

/// b̄_d(Q, G): b_d minus hypothetical real-zero orders, clamped at 0.
pub fn bbar_d(g: &AbelianGroup, d: u64, hook: ZetaOrdHook) -> Result<u64> {
    let orbs = q_orbits(g)?;
    let b = count_index(&orbs, &qu(d)) as i64;
    Ok((b - hook_sum(&orbs, d, hook, |_| true)?).max(0) as u64)
}

/// max over Φ(G) ≤ H ≤ G of b̄_{d/[G:H]}(Q, H).
///
/// The index of g in H is ind_G(g)/[G:H], so the orbit counts of H at the
/// scaled index are the G-orbits inside H with G-index d, and the hook is
/// evaluated at the same rational points.
pub fn conjectured_pole_order(g: &AbelianGroup, d: u64, hook: ZetaOrdHook) -> Result<u64> {
    let orbs = q_orbits(g)?;
    let lattice = SubgroupLattice::new(g)?;
    let phi = frattini(g)?;
    let dq = qu(d);
    let mut best = 0u64;
    for h in &lattice.subgroups {
        if !phi.is_subset_of(h) {
            continue;
        }
        let inside = |o: &OrbitData| h.contains_index(o.members[0] as usize);
        let b = orbs.iter().filter(|o| !o.is_identity() && o.index == dq && inside(o)).count() as i64;
        let sub = hook_sum(&orbs, d, hook, inside)?;
        best = best.max((b - sub).max(0) as u64);
    }
    Ok(best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NonvanishingCase {
    CaseI,
    CaseIi,
    CaseIii,
    CaseIv,
    None,
}

impl NonvanishingCase {
    pub fn label(self) -> &'static str {
        match self {
            NonvanishingCase::CaseI => "case_i",
            NonvanishingCase::CaseIi => "case_ii",
            NonvanishingCase::CaseIii => "case_iii",
            NonvanishingCase::CaseIv => "case_iv",
            NonvanishingCase::None => "none",
        }
    }
}

/// First applicable case of the non-vanishing theorem (K = Q).
pub fn nonvanishing_case(g: &AbelianGroup, d: u64) -> Result<NonvanishingCase> {
    if g.is_trivial() {
        return invalid("trivial group has no index spectrum");
    }
    let n = g.order();
    let orbs = q_orbits(g)?;
    let dq = qu(d);
    if !orbs.iter().any(|o| !o.is_identity() && o.index == dq) {
        return invalid(format!("{d} is not in the index spectrum of {g}"));
    }
    if d == a_disc(n) {
        return Ok(NonvanishingCase::CaseI);
    }
    let phi = frattini(g)?;
    let lower: Vec<&OrbitData> = orbs.iter().filter(|o| !o.is_identity() && o.index < dq).collect();
    if lower.iter().all(|o| phi.contains_index(o.members[0] as usize)) {
        return Ok(NonvanishingCase::CaseIi);
    }
    if valuation(n, 2) == 1
        && lower
            .iter()
            .all(|o| o.order == 2 || phi.contains_index(o.members[0] as usize))
    {
        return Ok(NonvanishingCase::CaseIii);
    }
    if g.is_cyclic() && d == n - 1 {
        return Ok(NonvanishingCase::CaseIv);
    }
    Ok(NonvanishingCase::None)
}

/// Orbit summary for C_n built from divisors, without enumerating elements.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclicOrbit {
    pub order: u64,
    pub size: u64,
    pub index: u64,
}

pub fn cyclic_orbits(n: u64) -> Vec<CyclicOrbit> {
    divisors(n)
        .into_iter()
        .filter(|&m| m > 1)
        .map(|m| CyclicOrbit {
            order: m,
            size: euler_phi(m),
            index: n - n / m,
        })
        .collect()
}

/// Divisor-based fast path of `nonvanishing_case` for C_n.
pub fn nonvanishing_case_cyclic(n: u64, d: u64) -> NonvanishingCase {
    let a = a_disc(n);
    if d == a {
        return NonvanishingCase::CaseI;
    }
    let frat = n / radical(n);
    let lower: Vec<u64> = cyclic_orbits(n).into_iter().filter(|o| o.index < d).map(|o| o.order).collect();
    if lower.iter().all(|m| frat % m == 0) {
        return NonvanishingCase::CaseIi;
    }
    if n % 4 == 2 && lower.iter().all(|&m| m == 2 || frat % m == 0) {
        return NonvanishingCase::CaseIii;
    }
    if d == n - 1 {
        return NonvanishingCase::CaseIv;
    }
    NonvanishingCase::None
}
