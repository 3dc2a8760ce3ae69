//! Exact Dirichlet coefficients by multiplicative expansion.

use std::collections::HashMap;

use super::local::ElementProfile;
use crate::arith::spf_table;
use crate::error::{LabError, Result};
use crate::group::{AbelianGroup, SubgroupLattice};

pub const COEFF_CAP: u64 = 10_000_000;

/// Coefficients a_n for 1 ≤ n ≤ N of the homomorphism series, or of the
/// surjection series when `surjective`. Only nonzero entries are returned.
pub fn series_coefficients(g: &AbelianGroup, n_max: u64, surjective: bool) -> Result<Vec<(u64, i64)>> {
    let dense = series_coefficients_dense(g, n_max, surjective)?;
    Ok(dense
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|&(_, c)| c != 0)
        .map(|(n, c)| (n as u64, c))
        .collect())
}

/// Dense form: index n holds a_n (index 0 unused).
pub fn series_coefficients_dense(g: &AbelianGroup, n_max: u64, surjective: bool) -> Result<Vec<i64>> {
    if n_max > COEFF_CAP {
        return Err(LabError::Budget(format!(
            "coefficient bound {n_max} exceeds the cap {COEFF_CAP}"
        )));
    }
    let n = n_max as usize;
    let spf = spf_table(n);
    let mut total = vec![0i64; n + 1];
    let terms: Vec<(ElementProfile, i64)> = if surjective {
        let lat = SubgroupLattice::new(g)?;
        (0..lat.len())
            .filter(|&i| lat.mobius_to_top(i) != 0)
            .map(|i| (ElementProfile::restricted(g, &lat.subgroups[i]), lat.mobius_to_top(i)))
            .collect()
    } else {
        vec![(ElementProfile::whole(g)?, 1)]
    };
    let mut a = vec![0i64; n + 1];
    for (profile, mu) in terms {
        expand(g, &profile, &spf, &mut a);
        for (t, v) in total.iter_mut().zip(&a) {
            *t += mu * v;
        }
    }
    Ok(total)
}

fn expand(g: &AbelianGroup, profile: &ElementProfile, spf: &[u32], a: &mut [i64]) {
    let n = a.len() - 1;
    // Dense coefficient lists, shared between primes with equal factors.
    let mut tables: Vec<Vec<i64>> = Vec::new();
    let mut by_class: HashMap<u64, usize> = HashMap::new();
    let mut table_of = vec![u32::MAX; n + 1];
    let exp = profile.exponent;
    for p in 2..=n {
        if spf[p] as usize != p {
            continue;
        }
        let wild = profile.group_order % p as u64 == 0;
        let key = p as u64 % exp;
        let idx = match (wild, by_class.get(&key)) {
            (false, Some(&i)) => i,
            _ => {
                let f = profile.factor(g, p as u64);
                let mut dense = vec![0i64; f.degree() as usize + 1];
                dense[0] = 1;
                for &(c, e) in &f.terms {
                    dense[e as usize] = c as i64;
                }
                tables.push(dense);
                if !wild {
                    by_class.insert(key, tables.len() - 1);
                }
                tables.len() - 1
            }
        };
        table_of[p] = idx as u32;
    }
    if n >= 1 {
        a[1] = 1;
    }
    for m in 2..=n {
        let p = spf[m] as usize;
        let mut rest = m;
        let mut k = 0usize;
        while rest % p == 0 {
            rest /= p;
            k += 1;
        }
        let t = &tables[table_of[p] as usize];
        a[m] = t.get(k).copied().unwrap_or(0) * a[rest];
    }
}
