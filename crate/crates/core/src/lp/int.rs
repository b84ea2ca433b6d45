//! Integers with an inline `i64` fast path, used for the simplex tableau rows.

use std::borrow::Cow;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::rational::Rational;

/// `|b| mod m`, one limb at a time.
fn rem_u64(b: &BigInt, m: u64) -> u64 {
    b.iter_u64_digits().rev().fold(0, |r, d| ((((r as u128) << 64) | d as u128) % m as u128) as u64)
}

/// Euclid's algorithm; row gcds usually divide the next entry, which takes one step.
fn big_gcd(a: &BigInt, b: &BigInt) -> Int {
    let mut r = a % b;
    let mut prev = b.abs();
    loop {
        if r.is_zero() {
            return Int::from_big(prev);
        }
        let r_abs = r.abs();
        if let Some(m) = r_abs.to_u64() {
            return Int::from_i128(m.gcd(&rem_u64(&prev, m)) as i128);
        }
        r = &prev % &r_abs;
        prev = r_abs;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Int {
    Small(i64),
    Big(BigInt),
}

impl Int {
    pub const ONE: Int = Int::Small(1);

    fn from_i128(v: i128) -> Int {
        match i64::try_from(v) {
            Ok(s) => Int::Small(s),
            Err(_) => Int::Big(BigInt::from(v)),
        }
    }

    pub fn from_big(v: BigInt) -> Int {
        match v.to_i64() {
            Some(s) => Int::Small(s),
            None => Int::Big(v),
        }
    }

    fn to_big(&self) -> BigInt {
        match self {
            Int::Small(s) => BigInt::from(*s),
            Int::Big(b) => b.clone(),
        }
    }

    fn as_big(&self) -> Cow<'_, BigInt> {
        match self {
            Int::Small(s) => Cow::Owned(BigInt::from(*s)),
            Int::Big(b) => Cow::Borrowed(b),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Int::Small(0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Int::Small(1))
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Int::Small(s) => *s < 0,
            Int::Big(b) => b.is_negative(),
        }
    }

    pub fn neg(&self) -> Int {
        match self {
            Int::Small(s) => Int::from_i128(-(*s as i128)),
            Int::Big(b) => Int::from_big(-b),
        }
    }

    pub fn mul(&self, o: &Int) -> Int {
        match (self, o) {
            (_, Int::Small(1)) => self.clone(),
            (Int::Small(1), _) => o.clone(),
            (Int::Small(a), Int::Small(b)) => Int::from_i128(*a as i128 * *b as i128),
            _ => Int::from_big(&*self.as_big() * &*o.as_big()),
        }
    }

    /// `a * b - c * d`.
    pub fn mul_sub(a: &Int, b: &Int, c: &Int, d: &Int) -> Int {
        if let (Int::Small(a), Int::Small(b), Int::Small(c), Int::Small(d)) = (a, b, c, d) {
            let (p, r) = (*a as i128 * *b as i128, *c as i128 * *d as i128);
            if let Some(v) = p.checked_sub(r) {
                return Int::from_i128(v);
            }
        }
        let mut v = &*a.as_big() * &*b.as_big();
        if !c.is_zero() {
            v -= &*c.as_big() * &*d.as_big();
        }
        Int::from_big(v)
    }

    /// Non-negative greatest common divisor.
    pub fn gcd(&self, o: &Int) -> Int {
        match (self, o) {
            (Int::Small(a), Int::Small(b)) => Int::from_i128(a.unsigned_abs().gcd(&b.unsigned_abs()) as i128),
            (Int::Small(s), Int::Big(b)) | (Int::Big(b), Int::Small(s)) if *s != 0 => {
                let s = s.unsigned_abs();
                Int::from_i128(s.gcd(&rem_u64(b, s)) as i128)
            }
            (Int::Big(a), Int::Big(b)) => big_gcd(a, b),
            _ => Int::from_big(self.as_big().abs()),
        }
    }

    /// `self / o` for an `o` known to divide `self`.
    pub fn div_exact(&self, o: &Int) -> Int {
        match (self, o) {
            (Int::Small(a), Int::Small(b)) => Int::from_i128(*a as i128 / *b as i128),
            _ => Int::from_big(&*self.as_big() / &*o.as_big()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Int::Small(s) => *s as f64,
            Int::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// `self / den` as a reduced rational.
    pub fn ratio(&self, den: &Int) -> Rational {
        match (self, den) {
            (Int::Small(a), Int::Small(b)) if *a != i64::MIN && *b != i64::MIN => Rational::new(*a, *b),
            _ => Rational::from_bigints(self.to_big(), den.to_big()),
        }
    }

    /// Writes `v` as `num / den` with `den > 0`.
    pub fn split(v: &Rational) -> (Int, Int) {
        (Int::from_big(v.numer()), Int::from_big(v.denom()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_width_arithmetic() {
        let big = Int::Small(i64::MAX).mul(&Int::Small(4));
        assert!(matches!(big, Int::Big(_)));
        let back = big.div_exact(&Int::Small(4));
        assert_eq!(back, Int::Small(i64::MAX));
        let z = Int::mul_sub(&big, &Int::Small(3), &Int::Small(i64::MAX), &Int::Small(12));
        assert!(z.is_zero());
        assert_eq!(big.gcd(&Int::Small(-6)), Int::Small(2));
        assert_eq!(Int::Small(-6).gcd(&big.neg()), Int::Small(2));
        let huge = Int::from_big(BigInt::from(3u8).pow(100));
        assert_eq!(huge.gcd(&Int::Small(-27)), Int::Small(27));
        assert_eq!(huge.gcd(&Int::Small(0)), huge);
        let a = Int::from_big(BigInt::from(3u8).pow(60) * BigInt::from(1u128 << 70));
        let b = Int::from_big(-BigInt::from(3u8).pow(50) * BigInt::from(1u128 << 90));
        assert_eq!(a.gcd(&b), Int::from_big(BigInt::from(3u8).pow(50) * BigInt::from(1u128 << 70)));
        assert_eq!(a.gcd(&a.neg()), a);
        assert_eq!(Int::Small(-6).ratio(&Int::Small(4)), Rational::new(-3, 2));
        assert_eq!(Int::Small(i64::MIN).neg(), Int::from_big(BigInt::from(i64::MIN).abs()));
    }
}
