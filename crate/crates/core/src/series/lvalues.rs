//! Dirichlet L-values and cyclotomic Dedekind zeta values at real points.
//!
//! L(x, χ) = f^{-x} Σ_{r=1}^{f} χ(r) ζ(x, r/f) with the Hurwitz zeta function
//! evaluated by Euler–Maclaurin. At x = 1 the pole term w^{1-x}/(x-1) of each
//! Hurwitz value is replaced by -ln w, which is exact for non-principal χ
//! because Σ χ(r) = 0 kills the divergent constant.

use num_traits::One;

use crate::arith::bernoulli;
use crate::error::{invalid, Result};
use crate::hp::{Hp, F};
use crate::oracle::characters::{primitive_characters_dividing, DirichletCharacter};
use crate::rat::Q;

pub struct HurwitzEngine {
    terms: usize,
    /// B_{2j}/(2j)! for j = 1..=corrections.
    coeffs: Vec<F>,
}

impl HurwitzEngine {
    pub fn new(hp: &Hp) -> Self {
        let terms = hp.digits() + 10;
        let corrections = hp.digits() / 2 + 5;
        let b = bernoulli(2 * corrections);
        let mut fact = Q::one();
        let mut coeffs = Vec::with_capacity(corrections);
        for k in 1..=2 * corrections {
            fact *= Q::from_integer((k as i64).into());
            if k % 2 == 0 {
                coeffs.push(hp.rat(&(&b[k] / &fact)));
            }
        }
        HurwitzEngine { terms, coeffs }
    }

    /// ζ(x, a) for 0 < a ≤ 1; when `regularized` (x = 1) the pole term is
    /// replaced by -ln(w).
    pub fn hurwitz(&self, hp: &mut Hp, x: &F, a: &F, regularized: bool) -> F {
        let neg_x = x.neg();
        let mut sum = hp.zero();
        let mut w = a.clone();
        let one = hp.one();
        for _ in 0..self.terms {
            let t = hp.pow(&w, &neg_x);
            sum = hp.add(&sum, &t);
            w = hp.add(&w, &one);
        }
        let ln_w = hp.ln(&w);
        let w_neg_x = hp.exp(&hp.mul(&ln_w, &neg_x));
        let pole = if regularized {
            ln_w.neg()
        } else {
            let xm1 = hp.sub(x, &one);
            hp.div(&hp.mul(&w_neg_x, &w), &xm1)
        };
        sum = hp.add(&sum, &pole);
        sum = hp.add(&sum, &hp.div(&w_neg_x, &hp.uint(2)));
        // Σ B_{2j}/(2j)! · x(x+1)…(x+2j-2) · w^{-x-2j+1}
        let inv_w = hp.div(&one, &w);
        let inv_w2 = hp.mul(&inv_w, &inv_w);
        let mut rising = x.clone();
        let mut wp = hp.mul(&w_neg_x, &inv_w);
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                let k = 2 * j as i64;
                let a1 = hp.add(x, &hp.int(k - 1));
                let a2 = hp.add(x, &hp.int(k));
                rising = hp.mul(&rising, &hp.mul(&a1, &a2));
                wp = hp.mul(&wp, &inv_w2);
            }
            let term = hp.mul(c, &hp.mul(&rising, &wp));
            sum = hp.add(&sum, &term);
        }
        sum
    }
}

/// L(x, χ) for a primitive character, as (real, imaginary).
pub fn dirichlet_l(hp: &mut Hp, eng: &HurwitzEngine, chi: &DirichletCharacter, x: &Q) -> Result<(F, F)> {
    let regularized = x.is_one();
    if regularized && chi.is_trivial() {
        return invalid("ζ(s) has a pole at s = 1");
    }
    let f = chi.modulus;
    let xf = hp.rat(x);
    let table = chi.table();
    let two_pi = {
        let pi = hp.pi();
        hp.mul(&pi, &hp.uint(2))
    };
    let mut re = hp.zero();
    let mut im = hp.zero();
    let fq = hp.uint(f);
    for r in 1..=f {
        let Some(t) = table[(r % f) as usize] else {
            continue;
        };
        let a = hp.div(&hp.uint(r), &fq);
        let h = eng.hurwitz(hp, &xf, &a, regularized);
        if t.is_zero() {
            re = hp.add(&re, &h);
        } else {
            let ang = hp.div(&hp.mul(&two_pi, &hp.uint(t.k)), &hp.uint(t.order));
            let c = hp.cos(&ang);
            let s = hp.sin(&ang);
            re = hp.add(&re, &hp.mul(&c, &h));
            im = hp.add(&im, &hp.mul(&s, &h));
        }
    }
    let scale = hp.pow(&fq, &xf.neg());
    Ok((hp.mul(&re, &scale), hp.mul(&im, &scale)))
}

/// Product of L(x, χ*) over characters χ mod m, skipping the trivial one when
/// `skip_trivial`. The result is real; the imaginary part is discarded after
/// pairing conjugates.
fn character_product(hp: &mut Hp, m: u64, x: &Q, skip_trivial: bool) -> Result<F> {
    let eng = HurwitzEngine::new(hp);
    let mut re = hp.one();
    let mut im = hp.zero();
    for chi in primitive_characters_dividing(m) {
        if skip_trivial && chi.is_trivial() {
            continue;
        }
        let (a, b) = dirichlet_l(hp, &eng, &chi, x)?;
        let nr = hp.sub(&hp.mul(&re, &a), &hp.mul(&im, &b));
        let ni = hp.add(&hp.mul(&re, &b), &hp.mul(&im, &a));
        re = nr;
        im = ni;
    }
    Ok(re)
}

/// ζ_{Q(ζ_m)}(x) for real x ≠ 1.
pub fn cyclotomic_zeta(hp: &mut Hp, m: u64, x: &Q) -> Result<F> {
    if x.is_one() {
        return invalid("Dedekind zeta has a pole at 1");
    }
    character_product(hp, m, x, false)
}

/// Residue of ζ_{Q(ζ_m)} at 1: the product of L(1, χ*) over nontrivial χ.
pub fn cyclotomic_residue(hp: &mut Hp, m: u64) -> Result<F> {
    character_product(hp, m, &Q::one(), true)
}
