//! Möbius sieve from homomorphisms to surjections, and the numeric limits
//! built on it: the leading residue and the limits at s = 1/d.
//!
//! For H ≤ G write D_H for the product of local factors whose inertia image
//! lies in H (indices measured in G). Then D_surj = Σ_H μ(H, G)·D_H, and
//! D_H(s) = W_H(s)·Π ζ_{Q(ζ_m)}(ind·s) over the cyclotomic orbits of H with
//! ind ≤ d, where W_H converges at s = 1/d.

use std::collections::HashMap;

use serde::Serialize;

use super::euler::{evaluate, ProductSpec};
use super::local::ElementProfile;
use super::lvalues::{cyclotomic_residue, cyclotomic_zeta};
use super::zeta::ZetaEntry;
use crate::error::{invalid, LabError, Result};
use crate::group::{AbelianGroup, Subgroup, SubgroupLattice};
use crate::hp::{to_f64, Hp, F};
use crate::invariants::{a_disc, nonvanishing_case, q_orbits, NonvanishingCase, OrbitData};
use crate::rat::{q, Q};

/// Relative accuracy credited to each zeta or L-value factor.
const ZETA_REL_ERR: f64 = 1e-25;

#[derive(Clone, Debug, Serialize)]
pub struct SieveTerm {
    pub order: u64,
    pub generators: Vec<Vec<u64>>,
    pub mobius: i64,
    pub value: String,
    pub value_f64: f64,
    /// Absolute error bound of this term.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SieveReport {
    pub group: String,
    #[serde(serialize_with = "crate::rat::ser")]
    pub s: Q,
    pub p_max: u64,
    pub digits: usize,
    pub value: String,
    pub value_f64: f64,
    pub error: f64,
    pub terms: Vec<SieveTerm>,
}

fn term_header(h: &Subgroup, mobius: i64) -> (u64, Vec<Vec<u64>>, i64) {
    (h.order(), h.generators.iter().map(|x| x.residues.clone()).collect(), mobius)
}

fn relative_error(trunc: Option<f64>, rounding: f64) -> f64 {
    trunc.unwrap_or(f64::INFINITY) + rounding
}

/// Σ_H μ(H, G) Π_{p ≤ P_max} L_{H,p}(s).
pub fn sieve_to_surjective(g: &AbelianGroup, s: &Q, p_max: u64, digits: usize) -> Result<SieveReport> {
    let lat = SubgroupLattice::new(g)?;
    let mut hp = Hp::with_digits(digits);
    let mut total = hp.zero();
    let mut error = 0.0;
    let mut terms = Vec::new();
    for i in 0..lat.len() {
        let mu = lat.mobius_to_top(i);
        if mu == 0 {
            continue;
        }
        let h = &lat.subgroups[i];
        let (order, generators, mobius) = term_header(h, mu);
        let (v, err) = if h.order() == 1 {
            (hp.one(), 0.0)
        } else {
            let spec = ProductSpec { profile: ElementProfile::restricted(g, h), divide: Vec::new() };
            let st = evaluate(g, &spec, s, p_max, digits)?;
            let e = st.value_f64.abs() * relative_error(st.truncation_bound, st.rounding_bound);
            (st.value_hp, e)
        };
        let tv = hp.mul(&hp.int(mu), &v);
        total = hp.add(&total, &tv);
        error += err;
        terms.push(SieveTerm {
            order,
            generators,
            mobius,
            value: hp.render(&tv),
            value_f64: to_f64(&tv),
            error: err,
        });
    }
    Ok(SieveReport {
        group: g.to_string(),
        s: s.clone(),
        p_max,
        digits,
        value: hp.render(&total),
        value_f64: to_f64(&total),
        error,
        terms,
    })
}

struct OrbitInfo {
    m: u64,
    ind: u64,
    rep: usize,
}

fn orbit_infos(g: &AbelianGroup) -> Result<Vec<OrbitInfo>> {
    Ok(q_orbits(g)?
        .iter()
        .filter(|o: &&OrbitData| !o.is_identity())
        .map(|o| OrbitInfo {
            m: o.order,
            ind: g.order() - g.order() / o.order,
            rep: o.members[0] as usize,
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitReport {
    pub group: String,
    pub d: u64,
    pub case: NonvanishingCase,
    pub p_max: u64,
    pub digits: usize,
    pub value: String,
    pub value_f64: f64,
    /// Absolute error bound (truncation, rounding and zeta values).
    pub error: f64,
    /// "positive", "negative" or "undetermined" when the error bar covers 0.
    pub sign: String,
    pub terms: Vec<SieveTerm>,
    #[serde(skip)]
    pub value_hp: F,
}

fn sign_label(v: f64, err: f64) -> String {
    if v.abs() <= err || !err.is_finite() {
        "undetermined".to_string()
    } else if v > 0.0 {
        "positive".to_string()
    } else {
        "negative".to_string()
    }
}

/// Core of the limit computation with an explicit set S of divided orbits.
fn limit_with(
    g: &AbelianGroup,
    d: u64,
    in_s: &dyn Fn(&OrbitInfo) -> bool,
    p_max: u64,
    digits: usize,
) -> Result<(F, f64, Vec<SieveTerm>)> {
    let orbs = orbit_infos(g)?;
    let lat = SubgroupLattice::new(g)?;
    let mut hp = Hp::with_digits(digits);
    let s = q(1, d as i64);
    let mut zeta_cache: HashMap<(u64, u64), F> = HashMap::new();
    let mut zeta = |hp: &mut Hp, m: u64, ind: u64| -> Result<F> {
        if let Some(v) = zeta_cache.get(&(m, ind)) {
            return Ok(v.clone());
        }
        let v = cyclotomic_zeta(hp, m, &q(ind as i64, d as i64))?;
        zeta_cache.insert((m, ind), v.clone());
        Ok(v)
    };
    let mut total = hp.zero();
    let mut error = 0.0;
    let mut terms = Vec::new();
    for i in 0..lat.len() {
        let mu = lat.mobius_to_top(i);
        if mu == 0 {
            continue;
        }
        let h = &lat.subgroups[i];
        let inside = |o: &OrbitInfo| h.contains_index(o.rep);
        // A divided pole at s = 1/d that D_H lacks sends the term to zero.
        if orbs.iter().any(|o| in_s(o) && o.ind == d && !inside(o)) {
            continue;
        }
        let divide: Vec<ZetaEntry> = orbs
            .iter()
            .filter(|o| inside(o) && o.ind <= d)
            .map(|o| ZetaEntry { m: o.m, scale: o.ind })
            .collect();
        let spec = ProductSpec { profile: ElementProfile::restricted(g, h), divide };
        let st = evaluate(g, &spec, &s, p_max, digits)?;
        let mut rel = relative_error(st.truncation_bound, st.rounding_bound);
        let mut v = st.value_hp.clone();
        for o in &orbs {
            if in_s(o) && !inside(o) && o.ind < d {
                let z = zeta(&mut hp, o.m, o.ind)?;
                v = hp.div(&v, &z);
                rel += ZETA_REL_ERR;
            } else if inside(o) && o.ind <= d && !in_s(o) {
                let z = zeta(&mut hp, o.m, o.ind)?;
                v = hp.mul(&v, &z);
                rel += ZETA_REL_ERR;
            }
        }
        let tv = hp.mul(&hp.int(mu), &v);
        let err = to_f64(&tv).abs() * rel;
        total = hp.add(&total, &tv);
        error += err;
        let (order, generators, mobius) = term_header(h, mu);
        terms.push(SieveTerm {
            order,
            generators,
            mobius,
            value: hp.render(&tv),
            value_f64: to_f64(&tv),
            error: err,
        });
    }
    Ok((total, error, terms))
}

/// lim_{s→1/d} D_surj(s)·Π_{o ∈ S} ζ_{Q(ζ_m)}(ind(o)·s)^{-1}, where S holds the
/// cyclotomic orbits of index at most d. In case iii the index-a(G) orbits
/// (the involutions) are left undivided, so their finite values ζ(a/d) < 0
/// stay in the limit.
pub fn nonvanishing_limit(g: &AbelianGroup, d: u64, p_max: u64, digits: usize) -> Result<LimitReport> {
    let case = nonvanishing_case(g, d)?;
    if case == NonvanishingCase::None {
        return Err(LabError::Unsupported(format!(
            "no non-vanishing case applies to {g} at d = {d}"
        )));
    }
    let a = a_disc(g.order());
    let in_s = move |o: &OrbitInfo| o.ind <= d && !(case == NonvanishingCase::CaseIii && o.ind == a && d > a);
    let (total, error, terms) = limit_with(g, d, &in_s, p_max, digits)?;
    let mut hp = Hp::with_digits(digits);
    let value_f64 = to_f64(&total);
    Ok(LimitReport {
        group: g.to_string(),
        d,
        case,
        p_max,
        digits,
        value: hp.render(&total),
        value_f64,
        error,
        sign: sign_label(value_f64, error),
        terms,
        value_hp: total,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidueReport {
    pub group: String,
    pub a: u64,
    pub b: u64,
    #[serde(serialize_with = "crate::rat::ser")]
    pub exponent: Q,
    pub log_power: u64,
    /// Σ_H μ(H,G)·W_H(1/a) over H containing every index-a orbit.
    pub sieve_value: String,
    /// Residues κ_m of the divided zeta factors.
    pub residues: Vec<(u64, String)>,
    /// c with main term c·X^{1/a}·(log X)^{b-1}.
    pub coefficient: String,
    pub coefficient_f64: f64,
    /// Relative error bound of the coefficient.
    pub relative_error: f64,
    /// Coefficient recomputed at P_max/100 and P_max/10.
    pub trend: Vec<(u64, f64)>,
    pub p_max: u64,
    pub digits: usize,
}

impl ResidueReport {
    pub fn predict(&self, x: f64) -> f64 {
        let a = self.a as f64;
        self.coefficient_f64 * x.powf(1.0 / a) * x.ln().powi(self.log_power as i32)
    }
}

fn residue_coefficient(g: &AbelianGroup, p_max: u64, digits: usize) -> Result<(F, f64, u64, Vec<(u64, F)>)> {
    let a = a_disc(g.order());
    let orbs = orbit_infos(g)?;
    let top: Vec<&OrbitInfo> = orbs.iter().filter(|o| o.ind == a).collect();
    let b = top.len() as u64;
    let in_s = |o: &OrbitInfo| o.ind <= a;
    let (v, err, _) = limit_with(g, a, &in_s, p_max, digits)?;
    let mut hp = Hp::with_digits(digits);
    let mut coeff = v;
    let mut residues = Vec::new();
    let mut rel = err / to_f64(&coeff).abs();
    for o in &top {
        let k = cyclotomic_residue(&mut hp, o.m)?;
        coeff = hp.mul(&coeff, &k);
        rel += ZETA_REL_ERR;
        residues.push((o.m, k));
    }
    // D ~ V·Πκ/(a^b (s − 1/a)^b); Perron gives c = V·Πκ·a/(a^b (b−1)!).
    let mut denom = hp.powi(&hp.uint(a), b as usize - 1);
    for k in 2..b {
        denom = hp.mul(&denom, &hp.uint(k));
    }
    coeff = hp.div(&coeff, &denom);
    Ok((coeff, rel, b, residues))
}

pub fn residue_main_term(g: &AbelianGroup, p_max: u64, digits: usize) -> Result<ResidueReport> {
    if g.is_trivial() {
        return invalid("trivial group has no main term");
    }
    let a = a_disc(g.order());
    let (coeff, rel, b, residues) = residue_coefficient(g, p_max, digits)?;
    let mut hp = Hp::with_digits(digits);
    let mut trend = Vec::new();
    for div in [100u64, 10] {
        let p = p_max / div;
        if p >= 2 {
            if let Ok((c, _, _, _)) = residue_coefficient(g, p, digits) {
                trend.push((p, to_f64(&c)));
            }
        }
    }
    let sieve_value = {
        let mut v = coeff.clone();
        for (_, k) in &residues {
            v = hp.div(&v, k);
        }
        let mut denom = hp.powi(&hp.uint(a), b as usize - 1);
        for k in 2..b {
            denom = hp.mul(&denom, &hp.uint(k));
        }
        hp.render(&hp.mul(&v, &denom))
    };
    Ok(ResidueReport {
        group: g.to_string(),
        a,
        b,
        exponent: q(1, a as i64),
        log_power: b - 1,
        sieve_value,
        residues: residues.iter().map(|(m, k)| (*m, hp.render(k))).collect(),
        coefficient: hp.render(&coeff),
        coefficient_f64: to_f64(&coeff),
        relative_error: rel,
        trend,
        p_max,
        digits,
    })
}

/// Both sides of the inclusion-exclusion identity for Euler products over
/// the subgroup lattice, with x = G:
/// Σ_z μ(z,x) Π_p (1 + Σ_{y≤z} f(y,p)) and
/// Σ_z μ(z,x) + Σ_{n ≥ 2 squarefree} Σ_{∨ y_p = x} Π_{p|n} f(y_p, p).
/// `f[j][i]` is f(subgroup i, j-th prime); primes outside the table have f = 0.
pub fn sieve_identity_sides(lat: &SubgroupLattice, f: &[Vec<f64>]) -> (f64, f64) {
    let n = lat.len();
    let top = lat.top();
    let g = &lat.group;
    let mut lhs = 0.0;
    for z in 0..n {
        let mu = lat.mobius_to_top(z) as f64;
        if mu == 0.0 {
            continue;
        }
        let mut prod = 1.0;
        for row in f {
            let inner: f64 = (0..n).filter(|&y| lat.leq(y, z)).map(|y| row[y]).sum();
            prod *= 1.0 + inner;
        }
        lhs += mu * prod;
    }
    let join: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s = lat.subgroups[i].join(g, &lat.subgroups[j]);
                    lat.find(&s).expect("join is a subgroup")
                })
                .collect()
        })
        .collect();
    // dp[i]: total weight of nonempty prime sets whose choices join to i.
    let mut dp = vec![0.0f64; n];
    for row in f {
        let mut next = dp.clone();
        for y in 0..n {
            if row[y] == 0.0 {
                continue;
            }
            next[y] += row[y];
            for (i, w) in dp.iter().enumerate() {
                if *w != 0.0 {
                    next[join[i][y]] += w * row[y];
                }
            }
        }
        dp = next;
    }
    let mu_sum: f64 = (0..n).map(|z| lat.mobius_to_top(z) as f64).sum();
    (lhs, mu_sum + dp[top])
}

/// Σ_z μ(z, G) as an exact check value.
pub fn mobius_sum(lat: &SubgroupLattice) -> i64 {
    (0..lat.len()).map(|z| lat.mobius_to_top(z)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::parse_group;
    use crate::series::euler::{euler_product_truncated, ProductMode};
    use rand::{Rng, SeedableRng};

    #[test]
    fn quadratic_sieve_is_full_minus_one() {
        let g = parse_group("C2").unwrap();
        let s = q(3, 2);
        let r = sieve_to_surjective(&g, &s, 1000, 30).unwrap();
        let full = euler_product_truncated(&g, &s, 1000, ProductMode::Full, 30).unwrap();
        assert!((r.value_f64 - (full.value_f64 - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn cyclic_four_sieve() {
        let g = parse_group("C4").unwrap();
        let s = q(3, 5);
        let r = sieve_to_surjective(&g, &s, 2000, 30).unwrap();
        assert_eq!(r.terms.len(), 2);
        let full = euler_product_truncated(&g, &s, 2000, ProductMode::Full, 30).unwrap();
        let h = Subgroup::multiples(&g, 2).unwrap();
        let spec = ProductSpec { profile: ElementProfile::restricted(&g, &h), divide: Vec::new() };
        let sub = evaluate(&g, &spec, &s, 2000, 30).unwrap();
        assert!((r.value_f64 - (full.value_f64 - sub.value_f64)).abs() < 1e-12);
    }

    #[test]
    fn quadratic_residue_is_six_over_pi_squared() {
        let g = parse_group("C2").unwrap();
        let r = residue_main_term(&g, 100_000, 30).unwrap();
        let want = 6.0 / std::f64::consts::PI.powi(2);
        assert!((r.coefficient_f64 / want - 1.0).abs() < 1e-4, "{}", r.coefficient_f64);
        assert!((r.coefficient_f64 / want - 1.0).abs() <= r.relative_error);
        assert_eq!(r.log_power, 0);
    }

    #[test]
    fn klein_log_power() {
        let r = residue_main_term(&parse_group("C2xC2").unwrap(), 1000, 30).unwrap();
        assert_eq!(r.log_power, 2);
        assert_eq!(r.b, 3);
    }

    #[test]
    fn identity_on_small_lattices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for lit in ["C12", "C2xC4", "C6", "C2xC2"] {
            let lat = SubgroupLattice::new(&parse_group(lit).unwrap()).unwrap();
            for _ in 0..20 {
                let f: Vec<Vec<f64>> = (0..8)
                    .map(|_| (0..lat.len()).map(|_| rng.gen_range(0.0..0.1)).collect())
                    .collect();
                let (l, r) = sieve_identity_sides(&lat, &f);
                assert!((l - r).abs() <= 1e-9 * r.abs().max(1.0), "{lit}: {l} vs {r}");
            }
        }
    }

    #[test]
    fn quadratic_limit_is_positive() {
        let g = parse_group("C2").unwrap();
        let r = nonvanishing_limit(&g, 1, 10_000, 30).unwrap();
        assert_eq!(r.case, NonvanishingCase::CaseI);
        assert_eq!(r.sign, "positive");
    }

    #[test]
    fn unsupported_case() {
        // C_12 at d = 10: the order-3 orbit of index 8 is neither Frattini
        // nor an involution, and 10 ≠ n − 1.
        let g = parse_group("C12").unwrap();
        let r = nonvanishing_limit(&g, 10, 1000, 30);
        assert!(matches!(r, Err(LabError::Unsupported(_))));
    }
}
