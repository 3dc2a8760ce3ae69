//! Thin high-precision layer over `astro-float`.
//!
//! Every evaluation in the series module goes through an [`Hp`] context so
//! precision is chosen once and all operations round the same way.

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};
use num_traits::ToPrimitive;

use crate::rat::Q;

pub type F = BigFloat;

pub const DEFAULT_DIGITS: usize = 50;
const GUARD_BITS: usize = 32;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Hp {
    digits: usize,
    bits: usize,
    cc: Consts,
}

impl Hp {
    pub fn with_digits(digits: usize) -> Self {
        let digits = digits.max(10);
        let bits = (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + GUARD_BITS;
        Hp {
            digits,
            bits,
            cc: Consts::new().expect("astro-float constant cache"),
        }
    }

    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Unit roundoff of one operation at this precision.
    pub fn eps(&self) -> f64 {
        2f64.powi(1 - self.bits as i32)
    }

    pub fn zero(&self) -> F {
        BigFloat::from_u64(0, self.bits)
    }

    pub fn one(&self) -> F {
        BigFloat::from_u64(1, self.bits)
    }

    pub fn int(&self, n: i64) -> F {
        BigFloat::from_i64(n, self.bits)
    }

    pub fn uint(&self, n: u64) -> F {
        BigFloat::from_u64(n, self.bits)
    }

    pub fn float(&self, x: f64) -> F {
        BigFloat::from_f64(x, self.bits)
    }

    pub fn rat(&self, x: &Q) -> F {
        let num = self.big(x.numer());
        let den = self.big(x.denom());
        self.div(&num, &den)
    }

    fn big(&self, n: &num_bigint::BigInt) -> F {
        if let Some(v) = n.to_i64() {
            return self.int(v);
        }
        let (sign, digits) = n.to_u64_digits();
        let base = self.mul(&self.uint(1 << 32), &self.uint(1 << 32));
        let mut acc = self.zero();
        for d in digits.iter().rev() {
            acc = self.add(&self.mul(&acc, &base), &self.uint(*d));
        }
        if sign == num_bigint::Sign::Minus {
            acc.neg()
        } else {
            acc
        }
    }

    pub fn add(&self, a: &F, b: &F) -> F {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &F, b: &F) -> F {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &F, b: &F) -> F {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &F, b: &F) -> F {
        a.div(b, self.bits, RM)
    }

    pub fn powi(&self, a: &F, n: usize) -> F {
        a.powi(n, self.bits, RM)
    }

    pub fn ln(&mut self, a: &F) -> F {
        a.ln(self.bits, RM, &mut self.cc)
    }

    pub fn exp(&mut self, a: &F) -> F {
        a.exp(self.bits, RM, &mut self.cc)
    }

    /// `a^b` for positive `a`.
    pub fn pow(&mut self, a: &F, b: &F) -> F {
        let l = self.ln(a);
        let e = self.mul(&l, b);
        self.exp(&e)
    }

    pub fn sin(&mut self, a: &F) -> F {
        a.sin(self.bits, RM, &mut self.cc)
    }

    pub fn cos(&mut self, a: &F) -> F {
        a.cos(self.bits, RM, &mut self.cc)
    }

    pub fn sqrt(&mut self, a: &F) -> F {
        a.sqrt(self.bits, RM)
    }

    pub fn pi(&mut self) -> F {
        self.cc.pi(self.bits, RM)
    }

    /// Decimal rendering rounded to the context's significant digits.
    pub fn render(&mut self, a: &F) -> String {
        let digits = self.digits;
        self.render_digits(a, digits)
    }

    pub fn render_digits(&mut self, a: &F, digits: usize) -> String {
        if a.is_zero() {
            return "0".to_string();
        }
        let s = a
            .format(Radix::Dec, RM, &mut self.cc)
            .unwrap_or_else(|_| "NaN".to_string());
        round_scientific(&s, digits)
    }
}

/// Nearest `f64` (mantissa read directly from the raw words).
pub fn to_f64(a: &F) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let Some((words, _, sign, exp, _)) = a.as_raw_parts() else {
        return f64::NAN;
    };
    let top = words.len() - 1;
    let mut m = words[top] as f64 / 2f64.powi(64);
    if top > 0 {
        m += words[top - 1] as f64 / 2f64.powi(128);
    }
    let v = m * 2f64.powi(exp);
    if sign == Sign::Neg {
        -v
    } else {
        v
    }
}

pub fn is_negative(a: &F) -> bool {
    a.is_negative()
}

fn round_scientific(s: &str, digits: usize) -> String {
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (mant, exp) = match body.split_once('e') {
        Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let mut ds: Vec<u8> = mant.bytes().filter(u8::is_ascii_digit).map(|b| b - b'0').collect();
    let mut exp = exp;
    if ds.len() > digits {
        let round_up = ds[digits] >= 5;
        ds.truncate(digits);
        if round_up {
            let mut i = digits;
            loop {
                if i == 0 {
                    ds.insert(0, 1);
                    ds.pop();
                    exp += 1;
                    break;
                }
                i -= 1;
                if ds[i] == 9 {
                    ds[i] = 0;
                } else {
                    ds[i] += 1;
                    break;
                }
            }
        }
    }
    while ds.len() > 1 && *ds.last().unwrap() == 0 {
        ds.pop();
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push((b'0' + ds[0]) as char);
    if ds.len() > 1 {
        out.push('.');
        out.extend(ds[1..].iter().map(|d| (b'0' + d) as char));
    }
    if exp != 0 {
        out.push_str(&format!("e{exp}"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;

    #[test]
    fn conversions() {
        let mut hp = Hp::with_digits(40);
        let two = hp.uint(2);
        let l = hp.ln(&two);
        assert!((to_f64(&l) - std::f64::consts::LN_2).abs() < 1e-16);
        assert_eq!(to_f64(&hp.rat(&q(-3, 8))), -0.375);
        assert_eq!(hp.render_digits(&l, 10), "6.931471806e-1");
        let pi = hp.pi();
        assert_eq!(hp.render_digits(&pi, 5), "3.1416");
        assert_eq!(round_scientific("9.9996e2", 4), "1e3");
    }

    #[test]
    fn pow_and_trig() {
        let mut hp = Hp::with_digits(50);
        let x = hp.uint(7);
        let h = hp.rat(&q(1, 2));
        let r = hp.pow(&x, &h);
        assert!((to_f64(&r) - 7f64.sqrt()).abs() < 1e-15);
        let pi = hp.pi();
        let third = hp.div(&pi, &hp.uint(3));
        assert!((to_f64(&hp.cos(&third)) - 0.5).abs() < 1e-16);
    }
}
