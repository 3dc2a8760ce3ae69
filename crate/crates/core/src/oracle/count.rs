//! Counting surjections G_Q → G as injections Ĝ → {Dirichlet characters}.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::Serialize;

use super::characters::{for_each_character, local_conductor_exponent, DirichletCharacter, Turn};
use crate::arith::{radical, smallest_prime_factor};
use crate::error::{invalid, LabError, Result};
use crate::group::{aut_order, AbelianGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    Disc,
    Ram,
}

impl FromStr for Ordering {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disc" => Ok(Ordering::Disc),
            "ram" => Ok(Ordering::Ram),
            _ => invalid(format!("unknown ordering '{s}' (expected disc or ram)")),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CountOptions {
    pub histogram: bool,
    /// Cap on enumeration nodes before a budget error.
    pub max_work: u64,
    /// Cap on the largest conductor enumerated.
    pub max_conductor: u64,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions { histogram: true, max_work: 2_000_000_000, max_conductor: 200_000_000 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CountReport {
    pub group: String,
    pub bound: u64,
    pub ordering: Ordering,
    pub surjections: u64,
    pub aut_order: u128,
    pub fields: u64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub histogram: BTreeMap<u64, u64>,
}

impl CountReport {
    /// Surjection counts with invariant at most `y ≤ bound`.
    pub fn count_up_to(&self, y: u64) -> u64 {
        self.histogram.range(..=y).map(|(_, c)| c).sum()
    }
}

pub fn count_surjections(g: &AbelianGroup, x: u64, ordering: Ordering) -> Result<CountReport> {
    count_surjections_with(g, x, ordering, CountOptions::default())
}

pub fn count_surjections_with(
    g: &AbelianGroup,
    x: u64,
    ordering: Ordering,
    opts: CountOptions,
) -> Result<CountReport> {
    if x == 0 {
        return invalid("bound X must be at least 1");
    }
    let mut histogram = BTreeMap::new();
    if g.is_trivial() {
        histogram.insert(1, 1);
    } else {
        let ds = g.invariant_factors().to_vec();
        let bounds: Vec<u64> = ds
            .iter()
            .map(|&d| conductor_bound(g.order(), d, x, ordering))
            .collect();
        if let Some(&f) = bounds.iter().max() {
            if f > opts.max_conductor {
                return Err(LabError::Budget(format!(
                    "conductors up to {f} exceed the enumeration budget {}",
                    opts.max_conductor
                )));
            }
        }
        histogram = if ds.len() == 1 {
            count_cyclic(ds[0], bounds[0], x, ordering)
        } else {
            count_general(&ds, &bounds, x, ordering, opts.max_work)?
        };
    }
    let surjections: u64 = histogram.values().sum();
    let aut = aut_order(g);
    if (surjections as u128) % aut != 0 {
        return Err(LabError::Contract(format!(
            "surjection count {surjections} not divisible by |Aut(G)| = {aut}"
        )));
    }
    if !opts.histogram {
        histogram.clear();
    }
    Ok(CountReport {
        group: g.to_string(),
        bound: x,
        ordering,
        surjections,
        aut_order: aut,
        fields: (surjections as u128 / aut) as u64,
        histogram,
    })
}

/// Largest conductor a generator image of order dividing d can have.
///
/// Disc: within each coset of the generator's cyclic span, the multiples
/// whose p-part has smaller conductor exponent form a proper subgroup, so
/// the p-exponent of cond(χ) appears at least |G|(1 − 1/ℓ) times in the
/// discriminant (ℓ the least prime of d). Ram: the local conductor exponent
/// at p is at most v_p(d) + 1 (v_2(d) + 2 at 2), so cond ≤ 2·d·rad.
fn conductor_bound(order: u64, d: u64, x: u64, ordering: Ordering) -> u64 {
    match ordering {
        Ordering::Disc => {
            let l = smallest_prime_factor(d).unwrap_or(1);
            let e = (order - order / l) as u32;
            integer_root(x, e)
        }
        Ordering::Ram => x.saturating_mul(2 * d),
    }
}

fn integer_root(x: u64, e: u32) -> u64 {
    let mut r = (x as f64).powf(1.0 / e as f64).round() as u64;
    while r > 0 && r.checked_pow(e).is_none_or(|v| v > x) {
        r -= 1;
    }
    while (r + 1).checked_pow(e).is_some_and(|v| v <= x) {
        r += 1;
    }
    r
}

/// Sparse view of a tuple of characters: for each prime in the union of
/// supports, the values of every generator image at that prime.
struct Support {
    primes: Vec<u64>,
    values: Vec<Vec<(Turn, Turn)>>,
}

impl Support {
    fn new(chars: &[&DirichletCharacter]) -> Support {
        let mut primes: Vec<u64> = chars
            .iter()
            .flat_map(|c| c.components.iter().map(|x| x.p))
            .collect();
        primes.sort_unstable();
        primes.dedup();
        let values = primes
            .iter()
            .map(|&p| {
                chars
                    .iter()
                    .map(|c| {
                        c.components
                            .iter()
                            .find(|x| x.p == p)
                            .map_or((Turn::ZERO, Turn::ZERO), |x| (x.v0, x.v1))
                    })
                    .collect()
            })
            .collect();
        Support { primes, values }
    }

    /// Conductor of Σ c_i χ_i, or None if it exceeds `cap`.
    fn conductor(&self, coeffs: &[u64], cap: u64) -> Option<u64> {
        let mut f = 1u64;
        for (p, vals) in self.primes.iter().zip(&self.values) {
            let (mut v0, mut v1) = (Turn::ZERO, Turn::ZERO);
            for (&c, &(a, b)) in coeffs.iter().zip(vals) {
                v0 = v0.add(a.scale(c));
                v1 = v1.add(b.scale(c));
            }
            let e = local_conductor_exponent(*p, v0, v1);
            f = f.checked_mul(p.checked_pow(e)?)?;
            if f > cap {
                return None;
            }
        }
        Some(f)
    }

    fn ram(&self) -> u64 {
        self.primes.iter().product()
    }
}

/// Invariant of the homomorphism restricted to the span of the first
/// `ds.len()` generators; None when it exceeds X or is not injective there.
fn invariant(support: &Support, ds: &[u64], x: u64, ordering: Ordering) -> Option<u64> {
    let total: u64 = ds.iter().product();
    let mut disc = 1u64;
    let mut coeffs = vec![0u64; ds.len()];
    for idx in 1..total {
        let mut r = idx;
        for (c, &d) in coeffs.iter_mut().zip(ds) {
            *c = r % d;
            r /= d;
        }
        let cap = if ordering == Ordering::Disc { x / disc } else { u64::MAX };
        let f = support.conductor(&coeffs, cap)?;
        if f == 1 {
            return None;
        }
        disc *= f;
    }
    match ordering {
        Ordering::Disc => Some(disc),
        Ordering::Ram => {
            let r = support.ram();
            (r <= x).then_some(r)
        }
    }
}

fn count_cyclic(d: u64, f_max: u64, x: u64, ordering: Ordering) -> BTreeMap<u64, u64> {
    let chunk = 1u64 << 18;
    let ranges: Vec<(u64, u64)> = (0..=f_max / chunk)
        .map(|i| (i * chunk, ((i + 1) * chunk - 1).min(f_max)))
        .filter(|(lo, hi)| lo <= hi)
        .collect();
    ranges
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut h = BTreeMap::new();
            for_each_character(d, lo, hi, |chi| {
                if ordering == Ordering::Ram && radical(chi.conductor()) > x {
                    return;
                }
                let s = Support::new(&[chi]);
                if let Some(v) = invariant(&s, &[d], x, ordering) {
                    *h.entry(v).or_insert(0) += 1;
                }
            });
            h
        })
        .reduce(BTreeMap::new, merge)
}

fn merge(mut a: BTreeMap<u64, u64>, b: BTreeMap<u64, u64>) -> BTreeMap<u64, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

fn count_general(
    ds: &[u64],
    bounds: &[u64],
    x: u64,
    ordering: Ordering,
    max_work: u64,
) -> Result<BTreeMap<u64, u64>> {
    let lists: Vec<Vec<DirichletCharacter>> = ds
        .iter()
        .zip(bounds)
        .map(|(&d, &f)| {
            let mut v = Vec::new();
            for_each_character(d, 3, f, |c| {
                if ordering == Ordering::Disc || radical(c.conductor()) <= x {
                    v.push(c.clone());
                }
            });
            v
        })
        .collect();
    let work = AtomicU64::new(0);
    let results: Vec<Result<BTreeMap<u64, u64>>> = lists[0]
        .par_iter()
        .map(|first| {
            let mut h = BTreeMap::new();
            let mut chosen = vec![first];
            descend(&lists, ds, x, ordering, &mut chosen, &mut h, &work, max_work)?;
            Ok(h)
        })
        .collect();
    let mut out = BTreeMap::new();
    for r in results {
        out = merge(out, r?);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn descend<'a>(
    lists: &'a [Vec<DirichletCharacter>],
    ds: &[u64],
    x: u64,
    ordering: Ordering,
    chosen: &mut Vec<&'a DirichletCharacter>,
    hist: &mut BTreeMap<u64, u64>,
    work: &AtomicU64,
    max_work: u64,
) -> Result<()> {
    if work.fetch_add(1, AtomicOrdering::Relaxed) > max_work {
        return Err(LabError::Budget(format!("enumeration exceeded {max_work} nodes")));
    }
    let depth = chosen.len();
    let support = Support::new(chosen);
    let Some(v) = invariant(&support, &ds[..depth], x, ordering) else {
        return Ok(());
    };
    if depth == ds.len() {
        *hist.entry(v).or_insert(0) += 1;
        return Ok(());
    }
    for c in &lists[depth] {
        chosen.push(c);
        descend(lists, ds, x, ordering, chosen, hist, work, max_work)?;
        chosen.pop();
    }
    Ok(())
}
