//! Exact-rational power-saving bounds.
//!
//! For D in [a, 2a] the bound is
//!
//! ```text
//! θ(D) = 1/a − (1/a − 1/D) / (1 + Σ_{o : 0 < ind(o) < D} 2μ(o)(1 − ind(o)/D))
//! ```
//!
//! and the best bound is the minimum over D in the index spectrum and 2a.
//! Between consecutive candidates θ is monotone, so the minimum is attained
//! at a candidate.

use crate::arith::is_prime;
use crate::error::{invalid, LabError, Result};
use crate::group::AbelianGroup;
use crate::invariants::{
    cyclic_orbits, nonvanishing_case_cyclic, orbits, GaloisActionSpec, NonvanishingCase, OrbitData, WeightFn,
};
use crate::rat::{qu, Q};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Convexity,
    Soehne,
    Lindelof,
    Custom,
}

impl std::str::FromStr for ModelKind {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "convexity" => Ok(ModelKind::Convexity),
            "soehne" | "söhne" | "sohne" => Ok(ModelKind::Soehne),
            "lindelof" | "lindelöf" => Ok(ModelKind::Lindelof),
            other => invalid(format!("unknown subconvexity model '{other}'")),
        }
    }
}

/// Subconvexity exponent μ(1/2) per orbit, scaled by [K:Q].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubconvexityModel {
    pub kind: ModelKind,
    pub deg_k: u64,
    /// Custom μ values keyed by orbit representative residues.
    #[serde(skip)]
    pub custom: HashMap<Vec<u64>, Q>,
}

impl SubconvexityModel {
    pub fn preset(kind: ModelKind, deg_k: u64) -> Self {
        Self {
            kind,
            deg_k,
            custom: HashMap::new(),
        }
    }

    pub fn soehne() -> Self {
        Self::preset(ModelKind::Soehne, 1)
    }

    pub fn custom(table: HashMap<Vec<u64>, Q>) -> Result<Self> {
        if table.values().any(|v| v.is_negative()) {
            return invalid("custom μ values must be nonnegative");
        }
        Ok(Self {
            kind: ModelKind::Custom,
            deg_k: 1,
            custom: table,
        })
    }

    pub fn mu(&self, orbit: &OrbitWeight) -> Result<Q> {
        let size = qu(self.deg_k * orbit.size);
        Ok(match self.kind {
            ModelKind::Convexity => size / qu(4),
            ModelKind::Soehne => size / qu(6),
            ModelKind::Lindelof => Q::zero(),
            ModelKind::Custom => self
                .custom
                .get(&orbit.key)
                .cloned()
                .ok_or_else(|| LabError::Invalid(format!("no custom μ for orbit {:?}", orbit.key)))?,
        })
    }
}

/// What the bound needs to know about an orbit.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitWeight {
    pub size: u64,
    pub index: Q,
    pub key: Vec<u64>,
}

pub fn orbit_weights(orbits: &[OrbitData]) -> Vec<OrbitWeight> {
    orbits
        .iter()
        .filter(|o| !o.is_identity())
        .map(|o| OrbitWeight {
            size: o.size,
            index: o.index.clone(),
            key: o.representative.residues.clone(),
        })
        .collect()
}

pub fn cyclic_weights(n: u64) -> Vec<OrbitWeight> {
    cyclic_orbits(n)
        .into_iter()
        .map(|o| OrbitWeight {
            size: o.size,
            index: qu(o.index),
            key: vec![n / o.order],
        })
        .collect()
}

fn a_of(orbits: &[OrbitWeight]) -> Result<Q> {
    orbits
        .iter()
        .map(|o| o.index.clone())
        .min()
        .ok_or_else(|| LabError::Invalid("no non-identity orbits".into()))
}

/// Σ over non-identity orbits of 2μ(o)·max{1 − ind(o)σ, 0}.
pub fn vertical_exponent(orbits: &[OrbitWeight], model: &SubconvexityModel, sigma: &Q) -> Result<Q> {
    if !sigma.is_positive() {
        return invalid("σ must be positive");
    }
    let mut total = Q::zero();
    for o in orbits {
        let t = Q::one() - &o.index * sigma;
        if t.is_positive() {
            total += qu(2) * model.mu(o)? * t;
        }
    }
    Ok(total)
}

fn orbit_sum(orbits: &[OrbitWeight], model: &SubconvexityModel, d: &Q) -> Result<Q> {
    let mut s = Q::zero();
    for o in orbits.iter().filter(|o| &o.index < d) {
        s += qu(2) * model.mu(o)? * (Q::one() - &o.index / d);
    }
    Ok(s)
}

/// The per-element form: Σ_{g ≠ 1, ind(g) < D} ([K:Q]/3)(1 − ind(g)/D).
fn element_sum(orbits: &[OrbitWeight], deg_k: u64, d: &Q) -> Q {
    let c = qu(deg_k) / qu(3);
    let mut s = Q::zero();
    for o in orbits.iter().filter(|o| &o.index < d) {
        s += &c * qu(o.size) * (Q::one() - &o.index / d);
    }
    s
}

pub fn theta_at_d(orbits: &[OrbitWeight], model: &SubconvexityModel, d: &Q) -> Result<Q> {
    let a = a_of(orbits)?;
    if d < &a || d > &(qu(2) * &a) {
        return invalid(format!("D = {d} lies outside [a, 2a] = [{a}, {}]", qu(2) * &a));
    }
    let s = orbit_sum(orbits, model, d)?;
    if model.kind == ModelKind::Soehne && s != element_sum(orbits, model.deg_k, d) {
        return Err(LabError::Contract(
            "orbit-level and element-level Söhne sums disagree".into(),
        ));
    }
    let inv_a = Q::one() / &a;
    Ok(&inv_a - (&inv_a - Q::one() / d) / (Q::one() + s))
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaRow {
    #[serde(serialize_with = "crate::rat::ser")]
    pub d: Q,
    #[serde(serialize_with = "crate::rat::ser")]
    pub bound: Q,
}

/// An upper bound for θ, never θ itself.
#[derive(Clone, Debug, Serialize)]
pub struct ThetaResult {
    #[serde(serialize_with = "crate::rat::ser")]
    pub bound: Q,
    #[serde(serialize_with = "crate::rat::ser")]
    pub witness_d: Q,
    #[serde(serialize_with = "crate::rat::ser")]
    pub a: Q,
    pub model: ModelKind,
    pub deg_k: u64,
    pub table: Vec<ThetaRow>,
}

pub fn candidates(orbits: &[OrbitWeight]) -> Result<Vec<Q>> {
    let a = a_of(orbits)?;
    let two_a = qu(2) * &a;
    let mut ds: Vec<Q> = orbits.iter().map(|o| o.index.clone()).filter(|d| d <= &two_a).collect();
    ds.push(two_a);
    ds.sort();
    ds.dedup();
    Ok(ds)
}

pub fn theta_best(orbits: &[OrbitWeight], model: &SubconvexityModel) -> Result<ThetaResult> {
    let a = a_of(orbits)?;
    let mut table = Vec::new();
    for d in candidates(orbits)? {
        let bound = theta_at_d(orbits, model, &d)?;
        table.push(ThetaRow { d, bound });
    }
    if has_interior_max(&table) {
        return Err(LabError::Contract("candidate table has an interior local maximum".into()));
    }
    let best = table
        .iter()
        .min_by(|x, y| x.bound.cmp(&y.bound).then(x.d.cmp(&y.d)))
        .expect("at least the 2a candidate")
        .clone();
    Ok(ThetaResult {
        bound: best.bound,
        witness_d: best.d,
        a,
        model: model.kind,
        deg_k: model.deg_k,
        table,
    })
}

fn has_interior_max(table: &[ThetaRow]) -> bool {
    table
        .windows(3)
        .any(|w| w[1].bound > w[0].bound && w[1].bound > w[2].bound)
}

/// θ bound for a group under the Q-cyclotomic action and a given weight.
pub fn theta_for_group(g: &AbelianGroup, wt: &WeightFn, model: &SubconvexityModel) -> Result<ThetaResult> {
    if g.is_trivial() {
        return invalid("θ is undefined for the trivial group");
    }
    let orbs = orbits(g, &GaloisActionSpec::cyclotomic(g)?, wt)?;
    theta_best(&orbit_weights(&orbs), model)
}

/// θ_ram(K, G) ≤ 1 − 3/(6 + [K:Q](|G| − 1)), checked against the general
/// bound under the ram weight.
pub fn theta_ram(g: &AbelianGroup, deg_k: u64) -> Result<Q> {
    if g.is_trivial() {
        return invalid("θ is undefined for the trivial group");
    }
    let closed = Q::one() - qu(3) / qu(6 + deg_k * (g.order() - 1));
    let general = theta_for_group(g, &WeightFn::Ram, &SubconvexityModel::preset(ModelKind::Soehne, deg_k))?;
    if general.bound != closed {
        return Err(LabError::Contract(format!(
            "ram closed form {closed} disagrees with the general bound {}",
            general.bound
        )));
    }
    Ok(closed)
}

pub fn theta_ram_lindelof() -> Q {
    qu(1) / qu(2)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub n: u64,
    pub a: u64,
    pub d2: u64,
    #[serde(serialize_with = "crate::rat::ser")]
    pub theta: Q,
    pub flag_i: bool,
    pub flag_ii: bool,
    pub case: NonvanishingCase,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub n_max: u64,
    pub composite_count: usize,
    pub count_i: usize,
    pub count_ii: usize,
    pub fraction_i: f64,
    pub fraction_ii: f64,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

pub fn scan_row(n: u64, model: &SubconvexityModel) -> Result<ScanRow> {
    let orbs = cyclic_weights(n);
    let res = theta_best(&orbs, model)?;
    let mut idx: Vec<u64> = cyclic_orbits(n).into_iter().map(|o| o.index).collect();
    idx.sort_unstable();
    let a = idx[0];
    let d2 = idx.get(1).copied().unwrap_or(a);
    let below = |d: u64| res.bound < Q::one() / qu(d);
    let flag_i = below(d2);
    let mut case = NonvanishingCase::None;
    for &d in idx.iter().filter(|&&d| d > a && below(d)) {
        let c = nonvanishing_case_cyclic(n, d);
        if c != NonvanishingCase::None {
            case = c;
            break;
        }
    }
    Ok(ScanRow {
        n,
        a,
        d2,
        theta: res.bound,
        flag_i,
        flag_ii: case != NonvanishingCase::None,
        case,
    })
}

/// Scan of composite n < n_max for C_n over Q.
pub fn scan_cyclic(n_max: u64, model: &SubconvexityModel) -> Result<ScanReport> {
    if n_max < 4 {
        return invalid("n_max must be at least 4");
    }
    let rows: Vec<ScanRow> = (4..n_max)
        .into_par_iter()
        .filter(|&n| !is_prime(n))
        .map(|n| scan_row(n, model))
        .collect::<Result<_>>()?;
    let count_i = rows.iter().filter(|r| r.flag_i).count();
    let count_ii = rows.iter().filter(|r| r.flag_ii).count();
    let total = rows.len();
    Ok(ScanReport {
        n_max,
        composite_count: total,
        count_i,
        count_ii,
        fraction_i: count_i as f64 / total.max(1) as f64,
        fraction_ii: count_ii as f64 / total.max(1) as f64,
        rows,
    })
}

/// |G|^{r1+r2−1} · [G : |μ_K|G] / |G[2]|^{r1} · |Hom(Cl_K, G)|.
pub fn dual_selmer_size(r1: u32, r2: u32, mu_k: u64, class_group: &AbelianGroup, g: &AbelianGroup) -> Result<u64> {
    if r1 + r2 == 0 {
        return invalid("r1 + r2 must be at least 1");
    }
    if mu_k == 0 || mu_k % 2 != 0 {
        return invalid("|μ(K)| must be a positive even integer");
    }
    let n = qu(g.order());
    let mut v = Q::one();
    for _ in 0..(r1 + r2 - 1) {
        v *= &n;
    }
    v *= qu(g.torsion_count(mu_k));
    let two_torsion = qu(g.torsion_count(2));
    for _ in 0..r1 {
        v /= &two_torsion;
    }
    v *= qu(class_group.hom_count(g));
    if !v.is_integer() {
        return Err(LabError::Contract(format!("dual Selmer size {v} is not an integer")));
    }
    v.to_integer()
        .try_into()
        .map_err(|_| LabError::Invalid("dual Selmer size overflows u64".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    fn soehne_cyclic(n: u64) -> ThetaResult {
        theta_best(&cyclic_weights(n), &SubconvexityModel::soehne()).unwrap()
    }

    #[test]
    fn vertical_exponent_examples() {
        let c3 = cyclic_weights(3);
        let lind = SubconvexityModel::preset(ModelKind::Lindelof, 1);
        assert_eq!(vertical_exponent(&c3, &lind, &q(1, 4)).unwrap(), qu(0));
        assert_eq!(vertical_exponent(&c3, &SubconvexityModel::soehne(), &q(1, 4)).unwrap(), q(1, 3));
        assert_eq!(vertical_exponent(&c3, &SubconvexityModel::soehne(), &q(1, 2)).unwrap(), qu(0));
    }

    #[test]
    fn theta_at_d_examples() {
        let s = SubconvexityModel::soehne();
        assert_eq!(theta_at_d(&cyclic_weights(3), &s, &qu(4)).unwrap(), q(5, 16));
        assert_eq!(theta_at_d(&cyclic_weights(4), &s, &qu(3)).unwrap(), q(7, 20));
        assert!(theta_at_d(&cyclic_weights(4), &s, &qu(5)).is_err());
        assert!(theta_at_d(&cyclic_weights(4), &s, &qu(1)).is_err());
    }

    #[test]
    fn theta_best_examples() {
        for p in [3u64, 5, 7, 11, 13, 17, 101] {
            let p_i = p as i64;
            assert_eq!(soehne_cyclic(p).bound, q(p_i + 2, (p_i - 1) * (p_i + 5)));
        }
        let c4 = soehne_cyclic(4);
        assert_eq!(c4.bound, q(5, 16));
        assert_eq!(c4.witness_d, qu(4));
        let bounds: Vec<Q> = c4.table.iter().map(|r| r.bound.clone()).collect();
        assert_eq!(bounds, vec![q(1, 2), q(7, 20), q(5, 16)]);
    }

    #[test]
    fn ram_examples() {
        assert_eq!(theta_ram(&AbelianGroup::new(&[2, 2]).unwrap(), 1).unwrap(), q(2, 3));
        assert_eq!(theta_ram(&AbelianGroup::new(&[2]).unwrap(), 1).unwrap(), q(4, 7));
        assert_eq!(theta_ram_lindelof(), q(1, 2));
    }

    #[test]
    fn dual_selmer_examples() {
        let triv = AbelianGroup::trivial();
        for f in [vec![2u64], vec![3], vec![4], vec![2, 2], vec![6]] {
            let g = AbelianGroup::new(&f).unwrap();
            assert_eq!(dual_selmer_size(1, 0, 2, &triv, &g).unwrap(), 1);
        }
        let c2 = AbelianGroup::new(&[2]).unwrap();
        assert_eq!(dual_selmer_size(2, 0, 2, &triv, &c2).unwrap(), 1);
        assert_eq!(dual_selmer_size(0, 1, 2, &triv, &c2).unwrap(), 2);
        // Odd G over an imaginary quadratic field with trivial class group.
        let c3 = AbelianGroup::new(&[3]).unwrap();
        assert_eq!(dual_selmer_size(0, 1, 2, &triv, &c3).unwrap(), 1);
        assert!(dual_selmer_size(0, 0, 2, &triv, &c2).is_err());
    }

    #[test]
    fn scan_small() {
        let r = scan_row(4, &SubconvexityModel::soehne()).unwrap();
        assert_eq!((r.a, r.d2), (2, 3));
        assert_eq!(r.theta, q(5, 16));
        assert!(r.flag_i && r.flag_ii);
        assert_eq!(r.case, NonvanishingCase::CaseIi);
    }
}
