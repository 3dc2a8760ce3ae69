//! Truncated Euler products at real s, with a rigorous tail bound.
//!
//! The product runs over p ≤ P_max of L_p(s)·Π_{(m,c)} E_{m,p}(c·s)^{-1},
//! where L_p is a (possibly subgroup-restricted) local factor and E_{m,p} the
//! Euler factor of ζ_{Q(ζ_m)}. Primes are split into fixed chunks whose
//! products are combined in prime order, so the value does not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use super::local::{ElementProfile, LocalFactor};
use super::zeta::{cyclotomic_splitting, zeta_factorization, ZetaEntry};
use crate::arith::{euler_phi, factorize, gcd, mult_order, primes_up_to};
use crate::error::{invalid, LabError, Result};
use crate::group::AbelianGroup;
use crate::hp::{to_f64, Hp, F};
use crate::invariants::a_disc;
use crate::rat::{qu, to_f64 as q_to_f64, Q};

/// Constant in π(x) < 1.25506·x/ln x (x > 1).
const PI_BOUND: f64 = 1.25506;
const CHUNK: usize = 256;
const LOGGED_FACTORS: usize = 10;

/// What is multiplied at each prime.
#[derive(Clone, Debug)]
pub struct ProductSpec {
    pub profile: ElementProfile,
    /// Zeta factors ζ_{Q(ζ_m)}(scale·s) divided out.
    pub divide: Vec<ZetaEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMode {
    /// The full homomorphism series.
    Full,
    /// The residual product B with every zeta factor divided out.
    B,
}

#[derive(Clone, Debug, Serialize)]
pub struct TracePoint {
    pub p_max: u64,
    pub value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EulerProductState {
    pub group: String,
    #[serde(serialize_with = "crate::rat::ser")]
    pub s: Q,
    pub p_max: u64,
    pub primes_used: usize,
    pub digits: usize,
    pub value: String,
    #[serde(skip)]
    pub value_hp: F,
    pub value_f64: f64,
    /// Factor values at the first few primes.
    pub factor_log: Vec<TracePoint>,
    /// Partial products at powers of ten.
    pub trace: Vec<TracePoint>,
    /// Least exponent x with the tail factors 1 + O(p^{-x}).
    pub tail_exponent: f64,
    /// Relative bound on |full / truncated − 1|; None when a wild prime lies
    /// beyond P_max.
    pub truncation_bound: Option<f64>,
    /// Relative bound on accumulated rounding error.
    pub rounding_bound: f64,
}

struct PrimeData {
    local: LocalFactor,
    /// (exponent k, power r) of each (1 - t^k)^r factor.
    divide: Vec<(u64, u64)>,
}

fn prime_data(g: &AbelianGroup, spec: &ProductSpec, p: u64) -> PrimeData {
    let local = spec.profile.factor(g, p);
    let divide = spec
        .divide
        .iter()
        .map(|e| {
            let (f, r) = cyclotomic_splitting(e.m, p);
            (f * e.scale, r)
        })
        .collect();
    PrimeData { local, divide }
}

/// Factor value at p together with the number of rounded operations.
fn eval_prime(hp: &mut Hp, data: &PrimeData, s: &F) -> Result<(F, u64)> {
    let p = data.local.p;
    let lnp = hp.ln(&hp.uint(p));
    let t = hp.exp(&hp.mul(&lnp, s).neg());
    let mut ops = 4u64;
    let mut acc = hp.one();
    for &(c, e) in &data.local.terms {
        let term = hp.mul(&hp.uint(c), &hp.powi(&t, e as usize));
        acc = hp.add(&acc, &term);
        ops += 3 + 2 * (64 - e.leading_zeros() as u64);
    }
    for &(k, r) in &data.divide {
        let base = hp.sub(&hp.one(), &hp.powi(&t, k as usize));
        acc = hp.mul(&acc, &hp.powi(&base, r as usize));
        ops += 3 + 2 * (64 - (k.leading_zeros() as u64).min(63)) + 2 * (64 - r.leading_zeros() as u64);
    }
    if !acc.is_positive() {
        return Err(LabError::Contract(format!(
            "Euler factor at p = {p} is not positive at real s"
        )));
    }
    Ok((acc, ops))
}

/// Class polynomial Π-expansion of the tame factor for p ≡ r mod exp(G),
/// as dense f64 coefficients of t = p^{-s}.
fn class_polynomial(spec: &ProductSpec, r: u64) -> Vec<f64> {
    let mut poly = vec![1.0f64];
    for &(m, c) in &spec.profile.order_counts {
        if (r - 1) % m == 0 {
            let e = (spec.profile.group_order - spec.profile.group_order / m) as usize;
            if poly.len() <= e {
                poly.resize(e + 1, 0.0);
            }
            poly[e] += c as f64;
        }
    }
    for d in &spec.divide {
        let (f, k) = if d.m <= 2 {
            (1, 1)
        } else {
            let f = mult_order(r % d.m, d.m);
            (f, euler_phi(d.m) / f)
        };
        let step = (f * d.scale) as usize;
        for _ in 0..k {
            poly.resize(poly.len() + step, 0.0);
            for i in (step..poly.len()).rev() {
                poly[i] -= poly[i - step];
            }
        }
    }
    poly
}

/// Least exponent with a nonzero coefficient in (factor − 1) over all tame
/// classes, and the relative tail bound for primes above `p_max`.
fn tail_analysis(spec: &ProductSpec, s: f64, p_max: u64) -> (Option<u64>, Option<f64>) {
    let e = spec.profile.exponent;
    let polys: Vec<Vec<f64>> = (1..=e.max(1))
        .filter(|&r| gcd(r, e) == 1)
        .map(|r| class_polynomial(spec, r))
        .collect();
    let k0 = polys
        .iter()
        .filter_map(|p| p.iter().enumerate().skip(1).find(|(_, c)| c.abs() > 0.5).map(|(k, _)| k as u64))
        .min();
    let Some(k0) = k0 else {
        return (None, Some(0.0));
    };
    let x = k0 as f64 * s;
    if x <= 1.0 || p_max < 2 {
        return (Some(k0), None);
    }
    let pf = p_max as f64;
    let mut worst = 0.0f64;
    for p in &polys {
        let c: f64 = p
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c.abs() * pf.powf(-((k as f64) - k0 as f64) * s))
            .sum();
        let head = c * pf.powf(-x);
        if head >= 0.5 {
            return (Some(k0), None);
        }
        worst = worst.max(c / (1.0 - head));
    }
    let prime_tail = PI_BOUND * x * pf.powf(1.0 - x) / ((x - 1.0) * pf.ln());
    let tau = worst * prime_tail;
    (Some(k0), Some(tau.exp_m1()))
}

/// Evaluates the truncated product of `spec` at s.
pub fn evaluate(
    g: &AbelianGroup,
    spec: &ProductSpec,
    s: &Q,
    p_max: u64,
    digits: usize,
) -> Result<EulerProductState> {
    let sf = q_to_f64(s);
    if sf <= 0.0 {
        return invalid("s must be positive");
    }
    let (k0, tail) = tail_analysis(spec, sf, p_max);
    if let Some(k0) = k0 {
        if k0 as f64 * sf <= 1.0 {
            return invalid(format!(
                "Euler product diverges at s = {s}: tame factors are 1 + O(p^(-{k0}s)), need s > 1/{k0}"
            ));
        }
    }
    let wild_beyond = factorize(g.order()).iter().any(|&(p, _)| p > p_max);
    let truncation_bound = if wild_beyond { None } else { tail };

    let primes = primes_up_to(p_max);
    let mut cuts: Vec<usize> = Vec::new();
    let mut pow10 = 10u64;
    while pow10 < p_max {
        cuts.push(primes.partition_point(|&p| p <= pow10));
        pow10 = pow10.saturating_mul(10);
    }
    let mut chunks: Vec<(usize, usize)> = Vec::new();
    let mut start = 0usize;
    for end in cuts.iter().copied().chain(std::iter::once(primes.len())) {
        let mut a = start;
        while a < end {
            let b = (a + CHUNK).min(end);
            chunks.push((a, b));
            a = b;
        }
        start = end;
    }
    let results: Vec<Result<(F, u64, Vec<(u64, F)>)>> = chunks
        .par_iter()
        .map(|&(a, b)| {
            let mut hp = Hp::with_digits(digits);
            let s_hp = hp.rat(s);
            let mut acc = hp.one();
            let mut ops = 0u64;
            let mut logged = Vec::new();
            for (i, &p) in primes[a..b].iter().enumerate() {
                let data = prime_data(g, spec, p);
                let (v, o) = eval_prime(&mut hp, &data, &s_hp)?;
                if a + i < LOGGED_FACTORS {
                    logged.push((p, v.clone()));
                }
                acc = hp.mul(&acc, &v);
                ops += o + 1;
            }
            Ok((acc, ops, logged))
        })
        .collect();

    let mut hp = Hp::with_digits(digits);
    let mut value = hp.one();
    let mut ops = 0u64;
    let mut factor_log = Vec::new();
    let mut trace = Vec::new();
    for (&(_, b), r) in chunks.iter().zip(results) {
        let (v, o, logged) = r?;
        value = hp.mul(&value, &v);
        ops += o + 1;
        for (p, f) in logged {
            factor_log.push(TracePoint { p_max: p, value: hp.render_digits(&f, 20) });
        }
        if cuts.contains(&b) && b < primes.len() {
            trace.push(TracePoint { p_max: primes[b - 1], value: hp.render_digits(&value, 20) });
        }
    }
    let rendered = hp.render(&value);
    trace.push(TracePoint { p_max, value: hp.render_digits(&value, 20) });
    // Each operation contributes at most a few units of roundoff, the
    // transcendental ones included.
    let rounding_bound = 4.0 * ops as f64 * hp.eps();
    Ok(EulerProductState {
        group: g.to_string(),
        s: s.clone(),
        p_max,
        primes_used: primes.len(),
        digits,
        value: rendered,
        value_f64: to_f64(&value),
        value_hp: value,
        factor_log,
        trace,
        tail_exponent: k0.map_or(f64::INFINITY, |k| k as f64 * sf),
        truncation_bound,
        rounding_bound,
    })
}

/// Π_{p ≤ P_max} of the local factors (Full) or of the residual factors of B.
pub fn euler_product_truncated(
    g: &AbelianGroup,
    s: &Q,
    p_max: u64,
    mode: ProductMode,
    digits: usize,
) -> Result<EulerProductState> {
    if g.is_trivial() {
        return invalid("trivial group has no Euler product to evaluate");
    }
    let a = qu(a_disc(g.order()));
    let divide = match mode {
        ProductMode::Full => {
            if s * &a <= qu(1) {
                return invalid(format!("full product diverges for s ≤ 1/a(G) = 1/{a}"));
            }
            Vec::new()
        }
        ProductMode::B => {
            if s * &a * qu(2) <= qu(1) {
                return invalid(format!("B converges only for s > 1/(2a(G)) = 1/{}", &a * qu(2)));
            }
            zeta_factorization(g)?.entries
        }
    };
    let spec = ProductSpec { profile: ElementProfile::whole(g)?, divide };
    evaluate(g, &spec, s, p_max, digits)
}
