//! Dirichlet characters stored prime by prime.
//!
//! A character mod q is the sum of its local components at the prime powers
//! p^k dividing q. At odd p the value is given on a primitive root g mod p^2
//! (which generates every (Z/p^k)^*); at p = 2 on the pair (-1, 5). Values are
//! elements of Q/Z, so the character's value at a generator is exp(2πi·turn).

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::arith::{euler_phi, factorize, gcd, lcm, primitive_root_odd, valuation};
use crate::error::{invalid, Result};
use crate::group::AbelianGroup;

/// An element k/order of Q/Z in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Turn {
    pub k: u64,
    pub order: u64,
}

impl Turn {
    pub const ZERO: Turn = Turn { k: 0, order: 1 };

    pub fn new(k: u64, order: u64) -> Turn {
        assert!(order > 0);
        let k = k % order;
        let g = gcd(k, order);
        if k == 0 {
            Turn::ZERO
        } else {
            Turn { k: k / g, order: order / g }
        }
    }

    pub fn is_zero(self) -> bool {
        self.k == 0
    }

    pub fn add(self, other: Turn) -> Turn {
        let n = lcm(self.order, other.order);
        let a = (self.k as u128 * (n / self.order) as u128 + other.k as u128 * (n / other.order) as u128)
            % n as u128;
        Turn::new(a as u64, n)
    }

    pub fn scale(self, c: u64) -> Turn {
        Turn::new(((self.k as u128 * c as u128) % self.order as u128) as u64, self.order)
    }
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.k, self.order)
    }
}

/// Local component at p^k. `v0` is the value on the primitive root (p odd)
/// or on -1 (p = 2); `v1` is the value on 5 and is zero for odd p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct LocalComponent {
    pub p: u64,
    pub k: u32,
    pub v0: Turn,
    pub v1: Turn,
}

impl LocalComponent {
    /// Exponent c of the local conductor p^c.
    pub fn conductor_exponent(&self) -> u32 {
        local_conductor_exponent(self.p, self.v0, self.v1)
    }

    fn valid(&self) -> bool {
        let p = self.p;
        let k = self.k;
        if k == 0 {
            return false;
        }
        if p == 2 {
            match k {
                1 => self.v0.is_zero() && self.v1.is_zero(),
                2 => 2 % self.v0.order == 0 && self.v1.is_zero(),
                _ => 2 % self.v0.order == 0 && (1u64 << (k - 2)) % self.v1.order == 0,
            }
        } else {
            self.v1.is_zero() && euler_phi(p.pow(k)) % self.v0.order == 0
        }
    }
}

/// Conductor exponent of a local character given by its values on the
/// canonical generators: the least m such that it kills 1 + p^m Z_p.
pub fn local_conductor_exponent(p: u64, v0: Turn, v1: Turn) -> u32 {
    if p == 2 {
        if !v1.is_zero() {
            valuation(v1.order, 2) + 2
        } else if !v0.is_zero() {
            2
        } else {
            0
        }
    } else if v0.is_zero() {
        0
    } else {
        valuation(v0.order, p) + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct DirichletCharacter {
    pub modulus: u64,
    pub components: Vec<LocalComponent>,
    conductor: u64,
}

impl DirichletCharacter {
    pub fn trivial(modulus: u64) -> DirichletCharacter {
        let components = factorize(modulus)
            .into_iter()
            .map(|(p, k)| LocalComponent { p, k, v0: Turn::ZERO, v1: Turn::ZERO })
            .collect();
        DirichletCharacter { modulus, components, conductor: 1 }
    }

    /// Builds a character mod q from local values; missing primes of q get
    /// the trivial component.
    pub fn from_components(modulus: u64, comps: &[(u64, Turn, Turn)]) -> Result<DirichletCharacter> {
        if modulus == 0 {
            return invalid("modulus must be positive");
        }
        let mut components = Vec::new();
        for (p, k) in factorize(modulus) {
            let (v0, v1) = comps
                .iter()
                .find(|c| c.0 == p)
                .map(|c| (c.1, c.2))
                .unwrap_or((Turn::ZERO, Turn::ZERO));
            let c = LocalComponent { p, k, v0, v1 };
            if !c.valid() {
                return invalid(format!("character values at {p} are not defined mod {}", p.pow(k)));
            }
            components.push(c);
        }
        if comps.iter().any(|c| modulus % c.0 != 0) {
            return invalid("component at a prime not dividing the modulus");
        }
        Ok(Self::assemble(modulus, components))
    }

    fn assemble(modulus: u64, components: Vec<LocalComponent>) -> DirichletCharacter {
        let conductor = components
            .iter()
            .map(|c| c.p.pow(c.conductor_exponent()))
            .product();
        DirichletCharacter { modulus, components, conductor }
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_trivial(&self) -> bool {
        self.conductor == 1
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.modulus
    }

    /// Order of the character in the group of characters.
    pub fn order(&self) -> u64 {
        self.components
            .iter()
            .fold(1, |acc, c| lcm(acc, lcm(c.v0.order, c.v1.order)))
    }

    /// The primitive character inducing this one.
    pub fn primitive(&self) -> DirichletCharacter {
        let components: Vec<LocalComponent> = self
            .components
            .iter()
            .filter_map(|c| {
                let e = c.conductor_exponent();
                (e > 0).then_some(LocalComponent { k: e, ..*c })
            })
            .collect();
        DirichletCharacter { modulus: self.conductor, components, conductor: self.conductor }
    }

    /// Product character modulo lcm of the moduli.
    pub fn mul(&self, other: &DirichletCharacter) -> DirichletCharacter {
        let modulus = lcm(self.modulus, other.modulus);
        let mut components = Vec::new();
        for (p, k) in factorize(modulus) {
            let a = self.components.iter().find(|c| c.p == p);
            let b = other.components.iter().find(|c| c.p == p);
            let (v0, v1) = match (a, b) {
                (Some(a), Some(b)) => (a.v0.add(b.v0), a.v1.add(b.v1)),
                (Some(a), None) => (a.v0, a.v1),
                (None, Some(b)) => (b.v0, b.v1),
                (None, None) => (Turn::ZERO, Turn::ZERO),
            };
            components.push(LocalComponent { p, k, v0, v1 });
        }
        Self::assemble(modulus, components)
    }

    pub fn pow(&self, c: u64) -> DirichletCharacter {
        let components = self
            .components
            .iter()
            .map(|x| LocalComponent { v0: x.v0.scale(c), v1: x.v1.scale(c), ..*x })
            .collect();
        Self::assemble(self.modulus, components)
    }

    /// χ(n) as a turn, or None when gcd(n, q) > 1.
    pub fn eval(&self, n: u64) -> Option<Turn> {
        if gcd(n, self.modulus) != 1 {
            return None;
        }
        let mut t = Turn::ZERO;
        for c in &self.components {
            let (e0, e1) = local_log(c.p, c.k, n);
            t = t.add(c.v0.scale(e0)).add(c.v1.scale(e1));
        }
        Some(t)
    }

    /// Values χ(r) for r in 0..q.
    pub fn table(&self) -> Vec<Option<Turn>> {
        let q = self.modulus;
        let logs: Vec<Vec<(u64, u64)>> = self
            .components
            .iter()
            .map(|c| local_log_table(c.p, c.k))
            .collect();
        (0..q)
            .map(|r| {
                if gcd(r, q) != 1 {
                    return None;
                }
                let mut t = Turn::ZERO;
                for (c, tab) in self.components.iter().zip(&logs) {
                    let (e0, e1) = tab[(r % c.p.pow(c.k)) as usize];
                    t = t.add(c.v0.scale(e0)).add(c.v1.scale(e1));
                }
                Some(t)
            })
            .collect()
    }
}

impl fmt::Display for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi mod {} [", self.modulus)?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            if c.p == 2 {
                write!(f, "2^{}: {} {}", c.k, c.v0, c.v1)?;
            } else {
                write!(f, "{}^{}: {}", c.p, c.k, c.v0)?;
            }
        }
        write!(f, "]")
    }
}

/// Canonical generator residues mod p^k: the primitive root for odd p,
/// (-1, 5) for 2^k with k ≥ 3, (-1) for k = 2 and none for k = 1.
pub fn local_generators(p: u64, k: u32) -> Vec<(u64, u64)> {
    let q = p.pow(k);
    if p == 2 {
        match k {
            1 => vec![],
            2 => vec![(3, 2)],
            _ => vec![(q - 1, 2), (5, q / 4)],
        }
    } else {
        vec![(primitive_root_odd(p) % q, euler_phi(q))]
    }
}

/// Exponents (e0, e1) of n on the canonical generators mod p^k.
fn local_log(p: u64, k: u32, n: u64) -> (u64, u64) {
    let q = p.pow(k);
    let n = n % q;
    if p == 2 {
        if k == 1 {
            return (0, 0);
        }
        let (e0, m) = if n % 4 == 3 { (1, q - n) } else { (0, n) };
        if k == 2 {
            return (e0, 0);
        }
        let mut x = 1u64;
        let mut e1 = 0u64;
        while x != m {
            x = x * 5 % q;
            e1 += 1;
        }
        (e0, e1)
    } else {
        let g = primitive_root_odd(p);
        let mut x = 1u64;
        let mut e = 0u64;
        while x != n {
            x = (x as u128 * g as u128 % q as u128) as u64;
            e += 1;
        }
        (e, 0)
    }
}

fn local_log_table(p: u64, k: u32) -> Vec<(u64, u64)> {
    let q = p.pow(k);
    let mut tab = vec![(0u64, 0u64); q as usize];
    if p == 2 {
        if k == 1 {
            return tab;
        }
        let half = if k == 2 { 1 } else { q / 4 };
        let mut x = 1u64;
        for e1 in 0..half {
            tab[x as usize] = (0, e1);
            tab[(q - x) as usize] = (1, e1);
            x = x * 5 % q;
        }
    } else {
        let g = primitive_root_odd(p);
        let mut x = 1u64;
        for e in 0..euler_phi(q) {
            tab[x as usize] = (e, 0);
            x = (x as u128 * g as u128 % q as u128) as u64;
        }
    }
    tab
}

/// (Z/q)^* in invariant-factor form with one generator residue per factor.
#[derive(Clone, Debug)]
pub struct UnitGroup {
    pub modulus: u64,
    pub group: AbelianGroup,
    pub generators: Vec<u64>,
}

pub fn unit_group_structure(q: u64) -> Result<UnitGroup> {
    if q == 0 {
        return invalid("modulus must be positive");
    }
    // Cyclic pieces (generator mod q, order), split into prime-power parts.
    let mut parts: Vec<(u64, u64, u64)> = Vec::new();
    let fac = factorize(q);
    for &(p, k) in &fac {
        let pk = p.pow(k);
        for (g, ord) in local_generators(p, k) {
            let g = crt_lift(g, pk, q);
            for (l, e) in factorize(ord) {
                let le = l.pow(e);
                // Idempotent exponent: ≡ 1 mod l^e and ≡ 0 mod ord/l^e, so the
                // parts of one cyclic piece multiply back to g.
                let rest = ord / le;
                let c = rest * inverse_mod(rest % le, le) % ord;
                parts.push((l, le, crate::arith::pow_mod(g, c, q)));
            }
        }
    }
    let mut primes: Vec<u64> = parts.iter().map(|x| x.0).collect();
    primes.sort_unstable();
    primes.dedup();
    let mut by_prime: Vec<Vec<(u64, u64)>> = primes
        .iter()
        .map(|&l| {
            let mut v: Vec<(u64, u64)> = parts.iter().filter(|x| x.0 == l).map(|x| (x.1, x.2)).collect();
            v.sort_unstable_by(|a, b| b.0.cmp(&a.0));
            v
        })
        .collect();
    let width = by_prime.iter().map(Vec::len).max().unwrap_or(0);
    let mut factors = Vec::new();
    let mut generators = Vec::new();
    for i in 0..width {
        let mut order = 1u64;
        let mut g = 1u64 % q.max(2);
        for v in by_prime.iter_mut() {
            if let Some(&(o, h)) = v.get(i) {
                order *= o;
                g = (g as u128 * h as u128 % q as u128) as u64;
            }
        }
        factors.push(order);
        generators.push(g);
    }
    factors.reverse();
    generators.reverse();
    let group = if factors.is_empty() {
        AbelianGroup::trivial()
    } else {
        AbelianGroup::new(&factors)?
    };
    Ok(UnitGroup { modulus: q, group, generators })
}

fn inverse_mod(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    (1..m).find(|&x| a * x % m == 1).expect("unit")
}

/// The residue mod q that is ≡ g mod pk and ≡ 1 mod q/pk.
fn crt_lift(g: u64, pk: u64, q: u64) -> u64 {
    let rest = q / pk;
    (0..pk)
        .map(|t| 1 + t * rest)
        .find(|x| x % pk == g % pk)
        .map(|x| x % q)
        .expect("crt solution")
}

/// Primitive local components at p^k whose order divides e.
pub fn primitive_local(p: u64, k: u32, e: u64) -> Vec<(Turn, Turn)> {
    let mut out = Vec::new();
    if p == 2 {
        match k {
            1 => {}
            2 => {
                if e % 2 == 0 {
                    out.push((Turn::new(1, 2), Turn::ZERO));
                }
            }
            _ => {
                let n = 1u64 << (k - 2);
                if e % n != 0 || e % 2 != 0 {
                    return out;
                }
                for eps in 0..2 {
                    for j in (1..n).step_by(2) {
                        out.push((Turn::new(eps, 2), Turn::new(j, n)));
                    }
                }
            }
        }
        return out;
    }
    let phi = euler_phi(p.pow(k));
    let g = gcd(e, phi);
    for j in 1..g {
        let t = Turn::new(j * (phi / g), phi);
        if local_conductor_exponent(p, t, Turn::ZERO) == k {
            out.push((t, Turn::ZERO));
        }
    }
    out
}

/// Calls `f` on every nontrivial primitive character of order dividing `e`
/// whose conductor lies in `lo..=hi`, in increasing conductor order.
pub fn for_each_character<Fn_: FnMut(&DirichletCharacter)>(e: u64, lo: u64, hi: u64, mut f: Fn_) {
    let lo = lo.max(3);
    if hi < lo || e < 2 {
        return;
    }
    let small = crate::arith::primes_up_to((hi as f64).sqrt() as u64 + 1);
    let mut cache: HashMap<(u64, u32), Vec<(Turn, Turn)>> = HashMap::new();
    let mut start = lo;
    while start <= hi {
        let end = hi.min(start.saturating_add(BLOCK - 1));
        for (cond, fac) in (start..=end).zip(factor_block(start, end, &small)) {
            emit_for_conductor(e, cond, &fac, &mut cache, &mut f);
        }
        if end == u64::MAX {
            break;
        }
        start = end + 1;
    }
}

const BLOCK: u64 = 1 << 15;

/// Factorizations of every n in lo..=hi by trial division with the given
/// primes (which must reach sqrt(hi)).
pub fn factor_block(lo: u64, hi: u64, primes: &[u64]) -> Vec<Vec<(u64, u32)>> {
    let len = (hi - lo + 1) as usize;
    let mut rem: Vec<u64> = (lo..=hi).collect();
    let mut facs: Vec<Vec<(u64, u32)>> = vec![Vec::new(); len];
    for &p in primes {
        if p * p > hi {
            break;
        }
        let first = lo.div_ceil(p) * p;
        let mut n = first;
        while n <= hi {
            let i = (n - lo) as usize;
            let mut k = 0;
            while rem[i] % p == 0 {
                rem[i] /= p;
                k += 1;
            }
            facs[i].push((p, k));
            n += p;
        }
    }
    for (r, f) in rem.into_iter().zip(facs.iter_mut()) {
        if r > 1 {
            f.push((r, 1));
        }
    }
    facs
}

fn emit_for_conductor<Fn_: FnMut(&DirichletCharacter)>(
    e: u64,
    cond: u64,
    fac: &[(u64, u32)],
    cache: &mut HashMap<(u64, u32), Vec<(Turn, Turn)>>,
    f: &mut Fn_,
) {
    let mut lists = Vec::with_capacity(fac.len());
    for &(p, k) in fac {
        let l = cache.entry((p, k)).or_insert_with(|| primitive_local(p, k, e));
        if l.is_empty() {
            return;
        }
        lists.push(l.clone());
    }
    let mut idx = vec![0usize; lists.len()];
    loop {
        let components = fac
            .iter()
            .zip(&idx)
            .zip(&lists)
            .map(|((&(p, k), &i), l)| LocalComponent { p, k, v0: l[i].0, v1: l[i].1 })
            .collect();
        f(&DirichletCharacter { modulus: cond, components, conductor: cond });
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
}

/// All nontrivial primitive characters of order dividing `e` with conductor
/// at most `f_max`.
pub fn characters_up_to(e: u64, f_max: u64) -> Vec<DirichletCharacter> {
    let mut out = Vec::new();
    if e > 1 {
        for_each_character(e, 3, f_max, |c| out.push(c.clone()));
    }
    out
}

/// Every primitive character (trivial included) whose conductor divides m.
pub fn primitive_characters_dividing(m: u64) -> Vec<DirichletCharacter> {
    let mut out = vec![DirichletCharacter::trivial(1)];
    let e = euler_phi(m.max(1)) * 2;
    for d in crate::arith::divisors(m) {
        if d >= 3 {
            for_each_character(e, d, d, |c| out.push(c.clone()));
        }
    }
    out
}

/// Conductor by definition: the least f | q such that χ is trivial on every
/// unit n ≡ 1 mod f. Quadratic in q; used to cross-check the local rule.
pub fn conductor_brute_force(chi: &DirichletCharacter) -> u64 {
    let q = chi.modulus;
    let table = chi.table();
    crate::arith::divisors(q)
        .into_iter()
        .find(|&f| {
            (1..q)
                .filter(|&n| n % f == 1 % f)
                .all(|n| table[n as usize].is_none_or(|t| t.is_zero()))
        })
        .unwrap_or(q)
}
