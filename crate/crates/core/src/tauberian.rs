//! Real-variable layer of the Tauberian argument: smoothed partial sums,
//! k-fold differences, the sandwich inequalities, the optimal parameter
//! exponents and empirical error-exponent fits.

use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, LabError, Result};
use crate::rat::{self, Q};

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn compensated<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = Accumulator::default();
    xs.into_iter().for_each(|x| acc.add(x));
    acc.value()
}

/// Coefficients a_n at positive integers n, sorted by n.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepSequence {
    pairs: Vec<(u64, f64)>,
}

impl StepSequence {
    pub fn new(mut pairs: Vec<(u64, f64)>) -> Result<Self> {
        if pairs.iter().any(|&(n, a)| n == 0 || !a.is_finite()) {
            return invalid("indices must be positive and coefficients finite");
        }
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return invalid("duplicate index in step sequence");
        }
        Ok(StepSequence { pairs })
    }

    pub fn pairs(&self) -> &[(u64, f64)] {
        &self.pairs
    }

    pub fn is_nonnegative(&self) -> bool {
        self.pairs.iter().all(|p| p.1 >= 0.0)
    }

    /// N(x) = Σ_{n<x} a_n.
    pub fn partial_sum(&self, x: f64) -> f64 {
        compensated(self.pairs.iter().take_while(|p| (p.0 as f64) < x).map(|p| p.1))
    }
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn binomial(k: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * f64::from(k - i) / f64::from(i + 1))
}

/// N_k(X) = (1/k!) Σ_{n<X} a_n (X−n)^k, the k-fold integral of N.
pub fn smoothed_sum(seq: &StepSequence, k: u32, x: f64) -> f64 {
    let kf = factorial(k);
    compensated(
        seq.pairs
            .iter()
            .take_while(|p| (p.0 as f64) < x)
            .map(|&(n, a)| a * (x - n as f64).powi(k as i32) / kf),
    )
}

/// Δ_y^{(k)} f(X) = Σ_j (−1)^{k−j} C(k,j) f(X + jy).
pub fn difference(f: impl Fn(f64) -> f64, y: f64, k: u32, x: f64) -> f64 {
    compensated((0..=k).map(|j| {
        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * binomial(k, j) * f(x + f64::from(j) * y)
    }))
}

/// K_k(u) = (1/k!) Σ_j (−1)^{k−j} C(k,j) (u+j)_+^k, so that
/// y^{-k} Δ_y^{(k)} N_k(X) = Σ_n a_n K_k((X−n)/y). K_k is 1 for u ≥ 0 and 0
/// for u ≤ −k; evaluating it per n avoids the cancellation of the global
/// binomial expansion.
fn difference_kernel(k: u32, u: f64) -> f64 {
    if u >= 0.0 {
        return 1.0;
    }
    if u <= -f64::from(k) {
        return 0.0;
    }
    let kf = factorial(k);
    compensated((0..=k).filter(|&j| u + f64::from(j) > 0.0).map(|j| {
        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * binomial(k, j) * (u + f64::from(j)).powi(k as i32) / kf
    }))
}

/// y^{-k} Δ_y^{(k)} N_k(X), evaluated stably.
pub fn normalized_difference(seq: &StepSequence, k: u32, y: f64, x: f64) -> f64 {
    compensated(
        seq.pairs
            .iter()
            .take_while(|p| (p.0 as f64) < x + f64::from(k) * y)
            .map(|&(n, a)| a * difference_kernel(k, (x - n as f64) / y)),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct Sandwich {
    pub lower: f64,
    pub value: f64,
    pub upper: f64,
    pub holds: bool,
}

/// y^{-k}Δ_y^{(k)}N_k(X−ky) ≤ N(X) ≤ y^{-k}Δ_y^{(k)}N_k(X) for a_n ≥ 0.
pub fn sandwich_check(seq: &StepSequence, k: u32, y: f64, x: f64) -> Result<Sandwich> {
    if !seq.is_nonnegative() {
        return invalid("sandwich inequalities need nonnegative coefficients");
    }
    if k == 0 || y <= 0.0 || x - f64::from(k) * y <= 0.0 {
        return invalid("need k ≥ 1, y > 0 and X − ky > 0");
    }
    let value = seq.partial_sum(x);
    let lower = normalized_difference(seq, k, y, x - f64::from(k) * y);
    let upper = normalized_difference(seq, k, y, x);
    let tol = 1e-12 * upper.abs().max(1.0);
    let holds = lower <= value + tol && value <= upper + tol;
    if !holds {
        return Err(LabError::Contract(format!(
            "sandwich violated at k = {k}, y = {y}, X = {x}: {lower} ≤ {value} ≤ {upper}"
        )));
    }
    Ok(Sandwich { lower, value, upper, holds })
}

/// Both sides of |y^{-k}Δ N_k(X) − N(X)| ≤ y^{-k}Δ N̂_k(X) − N̂(X), where
/// `envelope` dominates |a_n| termwise.
pub fn envelope_bound(seq: &StepSequence, envelope: &StepSequence, k: u32, y: f64, x: f64) -> Result<(f64, f64)> {
    for &(n, a) in &seq.pairs {
        let hat = envelope.pairs.binary_search_by_key(&n, |p| p.0).map(|i| envelope.pairs[i].1).unwrap_or(0.0);
        if a.abs() > hat {
            return invalid(format!("envelope does not dominate at n = {n}"));
        }
    }
    let lhs = (normalized_difference(seq, k, y, x) - seq.partial_sum(x)).abs();
    let rhs = normalized_difference(envelope, k, y, x) - envelope.partial_sum(x);
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct TauberianParams {
    #[serde(serialize_with = "rat::ser")]
    pub sigma_a: Q,
    #[serde(serialize_with = "rat::ser")]
    pub delta: Q,
    #[serde(serialize_with = "rat::ser")]
    pub xi: Q,
    pub k: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SavingExponent {
    #[serde(serialize_with = "rat::ser")]
    pub exponent: Q,
    #[serde(serialize_with = "rat::ser")]
    pub t_exponent: Q,
    #[serde(serialize_with = "rat::ser")]
    pub y_exponent: Q,
    /// σ_a − δ/(ξ+1), the k → ∞ limit.
    #[serde(serialize_with = "rat::ser")]
    pub limit: Q,
}

pub fn saving_exponent(p: &TauberianParams) -> Result<SavingExponent> {
    if p.delta.is_negative() || p.xi.is_negative() || p.sigma_a.is_negative() {
        return invalid("σ_a, δ and ξ must be nonnegative");
    }
    let k = Q::from_integer(p.k.into());
    let c = (&p.xi - Q::one()).max(Q::zero());
    let denom = (&k + Q::one()) * &p.xi + &k - &c;
    if denom.is_zero() {
        return invalid("degenerate parameters: (k+1)ξ + k − max(ξ−1, 0) = 0");
    }
    let saving = (&k - &c) * &p.delta / &denom;
    Ok(SavingExponent {
        exponent: &p.sigma_a - &saving,
        t_exponent: (&k + Q::one()) * &p.delta / &denom,
        y_exponent: Q::one() - &saving,
        limit: &p.sigma_a - &p.delta / (&p.xi + Q::one()),
    })
}

/// c·X^e·(log X)^m.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MainTerm {
    pub c: f64,
    pub e: f64,
    pub m: u32,
}

impl MainTerm {
    pub fn eval(&self, x: f64) -> f64 {
        self.c * x.powf(self.e) * x.ln().powi(self.m as i32)
    }
}

fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    if let Some(q) = rat::parse(s) {
        return Some(rat::to_f64(&q));
    }
    s.parse().ok()
}

impl FromStr for MainTerm {
    type Err = LabError;

    /// Grammar: `c*X^e[*logX^m]`; `c`, `X` and `logX` alone are accepted.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || LabError::Invalid(format!("malformed main term {s:?}; expected c*X^e[*logX^m]"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut term = MainTerm { c: 1.0, e: 0.0, m: 0 };
        for (i, tok) in compact.split('*').enumerate() {
            if let Some(rest) = tok.strip_prefix("logX") {
                term.m = match rest.strip_prefix('^') {
                    Some(m) => m.parse().map_err(|_| bad())?,
                    None if rest.is_empty() => 1,
                    None => return Err(bad()),
                };
            } else if let Some(rest) = tok.strip_prefix('X') {
                term.e = match rest.strip_prefix('^') {
                    Some(e) => parse_real(e).ok_or_else(bad)?,
                    None if rest.is_empty() => 1.0,
                    None => return Err(bad()),
                };
            } else if i == 0 {
                term.c = parse_real(tok).ok_or_else(bad)?;
            } else {
                return Err(bad());
            }
        }
        Ok(term)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    /// Fitted slope; −∞ when the error term vanishes identically.
    pub exponent: f64,
    /// 95% confidence interval of the slope.
    pub ci: (f64, f64),
    pub intercept: f64,
    /// Points with nonzero error that entered the regression.
    pub points_used: usize,
}

impl ExponentFit {
    pub fn is_sentinel(&self) -> bool {
        self.exponent == f64::NEG_INFINITY
    }
}

/// Least-squares slope of log|N(X) − M(X)| against log X.
pub fn fit_exponent(counts: &[(f64, f64)], main: impl Fn(f64) -> f64) -> Result<ExponentFit> {
    if counts.len() < 10 {
        return invalid(format!("need at least 10 sample points, got {}", counts.len()));
    }
    if counts.iter().any(|&(x, _)| x <= 0.0 || !x.is_finite()) {
        return invalid("sample abscissae must be positive");
    }
    let lo = counts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = counts.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < 100.0 {
        return invalid("sample points must span at least two decades");
    }
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .filter_map(|&(x, n)| {
            let r = (n - main(x)).abs();
            (r > 0.0).then(|| (x.ln(), r.ln()))
        })
        .collect();
    if pts.is_empty() {
        return Ok(ExponentFit {
            exponent: f64::NEG_INFINITY,
            ci: (f64::NEG_INFINITY, f64::NEG_INFINITY),
            intercept: f64::NEG_INFINITY,
            points_used: 0,
        });
    }
    if pts.len() < 3 {
        return invalid("fewer than three points with nonzero error term");
    }
    let n = pts.len() as f64;
    let mx = compensated(pts.iter().map(|p| p.0)) / n;
    let my = compensated(pts.iter().map(|p| p.1)) / n;
    let sxx = compensated(pts.iter().map(|p| (p.0 - mx).powi(2)));
    let sxy = compensated(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse = compensated(pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)));
    let se = (sse / (n - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, n - 2.0)
        .map_err(|e| LabError::Contract(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(ExponentFit {
        exponent: slope,
        ci: (slope - t * se, slope + t * se),
        intercept,
        points_used: pts.len(),
    })
}
