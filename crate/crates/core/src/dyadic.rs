//! Dyadic rationals with directed rounding, plus the certified integer
//! kernels (log2 enclosures, integer roots) every enclosure is built from.
//!
//! A `Dyadic` is `mant * 2^exp` with `mant` odd (or zero). Addition,
//! subtraction and multiplication are exact; division and the transcendental
//! kernels round outward to a requested number of fractional bits.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        let mut d = Dyadic { mant, exp };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Dyadic::new(n, 0)
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            self.mant >>= tz;
            self.exp += tz as i64;
        }
    }

    pub fn mant(&self) -> &BigInt {
        &self.mant
    }

    pub fn exp(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as u64)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as u64)
        }
    }

    /// Exact conversion; `None` when the denominator is not a power of two.
    pub fn from_rational_exact(r: &BigRational) -> Option<Self> {
        let den = r.denom();
        if den.is_zero() || den.is_negative() {
            return None;
        }
        let mag = den.magnitude();
        if mag.count_ones() != 1 {
            return None;
        }
        let k = mag.trailing_zeros().unwrap_or(0) as i64;
        Some(Dyadic::new(r.numer().clone(), -k))
    }

    pub fn neg(&self) -> Self {
        Dyadic { mant: -self.mant.clone(), exp: self.exp }
    }

    pub fn abs(&self) -> Self {
        Dyadic { mant: self.mant.abs(), exp: self.exp }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    pub fn shl(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp + k }
    }

    /// 2^-w grid; `floor` rounds toward minus infinity, otherwise toward plus.
    pub fn round(&self, frac_bits: u32, floor: bool) -> Self {
        let w = frac_bits as i64;
        if self.exp >= -w || self.is_zero() {
            return self.clone();
        }
        let shift = ((-w) - self.exp) as u64;
        let q = if floor {
            // BigInt shr is arithmetic (floor) for negative values
            &self.mant >> shift
        } else {
            -(&(-&self.mant) >> shift)
        };
        Dyadic::new(q, -w)
    }

    /// Directed division: result on a 2^-w grid bounding self/other.
    pub fn div(&self, other: &Self, frac_bits: u32, floor: bool) -> Result<Self, crate::error::ScalarError> {
        if other.is_zero() {
            return Err(crate::error::ScalarError::DivisionByZero);
        }
        let w = frac_bits as i64;
        // (self / other) * 2^w = mant_a * 2^(exp_a - exp_b + w) / mant_b
        let mut num = self.mant.clone();
        let mut den = other.mant.clone();
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        let sh = self.exp - other.exp + w;
        if sh >= 0 {
            num <<= sh as u64;
        } else {
            den <<= (-sh) as u64;
        }
        let q = if floor { num.div_floor(&den) } else { num.div_ceil(&den) };
        Ok(Dyadic::new(q, -w))
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.mant.is_zero() || other.mant.is_zero() || self.mant.sign() != other.mant.sign() {
            return self.mant.sign().cmp(&other.mant.sign());
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as u64;
        let b = &other.mant << (other.exp - e) as u64;
        a.cmp(&b)
    }
}

/// Floor of the q-th root of n.
pub fn iroot_floor(n: &BigUint, q: u32) -> BigUint {
    assert!(q >= 1);
    if q == 1 || n.is_zero() || n.is_one() {
        return n.clone();
    }
    let bits = n.bits();
    let mut x = BigUint::one() << (bits / q as u64 + 1);
    let qm1 = BigUint::from(q - 1);
    let qq = BigUint::from(q);
    loop {
        // Newton step: x' = ((q-1)x + n / x^(q-1)) / q
        let xp = x.pow(q - 1);
        let t = (&qm1 * &x + n / &xp) / &qq;
        if t >= x {
            break;
        }
        x = t;
    }
    while x.pow(q) > *n {
        x -= BigUint::one();
    }
    x
}

/// Exact log2 if n is a power of two.
pub fn exact_log2(n: &BigUint) -> Option<u64> {
    if !n.is_zero() && n.count_ones() == 1 {
        Some(n.trailing_zeros().unwrap_or(0))
    } else {
        None
    }
}

/// Certified enclosure of log2(n) for integer n >= 1, width <= 2^-frac_bits.
///
/// Shift-and-square with interval truncation at a working precision that is
/// doubled whenever a bit decision is ambiguous; powers of two are exact.
pub fn log2_enclosure_uint(n: &BigUint, frac_bits: u32) -> (Dyadic, Dyadic) {
    assert!(!n.is_zero(), "log2 of zero");
    if let Some(k) = exact_log2(n) {
        let d = Dyadic::from_bigint(BigInt::from(k));
        return (d.clone(), d);
    }
    let k = n.bits() - 1; // n / 2^k in (1, 2)
    let mut w: u64 = frac_bits as u64 + 32;
    'retry: loop {
        let grid = BigUint::one() << w;
        let two_grid = &grid << 1u32;
        // x0 = n / 2^k exactly on the 2^-w grid when w >= k, else rounded
        let (mut xlo, mut xhi) = if w >= k {
            let v = n << (w - k);
            (v.clone(), v)
        } else {
            let lo = n >> (k - w);
            (lo.clone(), lo + BigUint::one())
        };
        let mut acc = BigUint::zero();
        let mut produced: u32 = 0;
        while produced < frac_bits {
            // square, rounding lo down and hi up onto the grid
            xlo = (&xlo * &xlo) >> w;
            let hisq = &xhi * &xhi;
            let mask = (BigUint::one() << w) - BigUint::one();
            let carry = if (&hisq & &mask).is_zero() { BigUint::zero() } else { BigUint::one() };
            xhi = (hisq >> w) + carry;
            if xhi < two_grid {
                acc <<= 1u32;
            } else if xlo >= two_grid {
                acc = (acc << 1u32) + BigUint::one();
                // halve, lo floors and hi ceils
                let lo_odd = xlo.is_odd();
                let hi_odd = xhi.is_odd();
                xlo >>= 1u32;
                let _ = lo_odd;
                xhi = (xhi >> 1u32) + if hi_odd { BigUint::one() } else { BigUint::zero() };
            } else {
                w *= 2;
                if w > 1 << 24 {
                    // mathematically unreachable for non-powers of two
                    panic!("log2 enclosure failed to converge");
                }
                continue 'retry;
            }
            produced += 1;
        }
        // log2(n) in [k + acc/2^p, k + acc/2^p + 2^-p]
        let p = produced as i64;
        let lo_m = (BigInt::from(k) << produced) + BigInt::from_biguint(Sign::Plus, acc);
        let lo = Dyadic::new(lo_m.clone(), -p);
        let hi = Dyadic::new(lo_m + BigInt::one(), -p);
        return (lo, hi);
    }
}

/// Certified enclosure of log2(r) for rational r >= 1, width <= 2^(1-frac_bits).
pub fn log2_enclosure_rational(r: &BigRational, frac_bits: u32) -> (Dyadic, Dyadic) {
    assert!(!r.is_negative() && !r.is_zero());
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let (nlo, nhi) = log2_enclosure_uint(num, frac_bits);
    let (dlo, dhi) = log2_enclosure_uint(den, frac_bits);
    (nlo.sub(&dhi), nhi.sub(&dlo))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn dyadic_normalization_and_order() {
        let a = Dyadic::new(BigInt::from(4), 0);
        assert_eq!(a.mant(), &BigInt::from(1));
        assert_eq!(a.exp(), 2);
        let b = Dyadic::new(BigInt::from(3), -1); // 1.5
        assert!(b < a);
        assert!(b > Dyadic::one());
        assert_eq!(a.sub(&a), Dyadic::zero());
    }

    #[test]
    fn directed_division() {
        let one = Dyadic::one();
        let three = Dyadic::from_int(3);
        let lo = one.div(&three, 8, true).unwrap();
        let hi = one.div(&three, 8, false).unwrap();
        assert!(lo < hi);
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        assert!(lo.to_rational() <= third && third <= hi.to_rational());
        assert!(hi.sub(&lo).to_rational() <= BigRational::new(BigInt::one(), BigInt::from(128)));
    }

    #[test]
    fn log2_exact_powers() {
        let (lo, hi) = log2_enclosure_uint(&big(32), 50);
        assert_eq!(lo, hi);
        assert_eq!(lo, Dyadic::from_int(5));
    }

    #[test]
    fn log2_of_three() {
        let (lo, hi) = log2_enclosure_uint(&big(3), 40);
        // log2(3) = 1.5849625007...
        let lo_r = lo.to_rational();
        let hi_r = hi.to_rational();
        let approx = BigRational::new(BigInt::from(15849625u64), BigInt::from(10000000u64));
        assert!(lo_r < approx && approx < hi_r);
        assert!(hi.sub(&lo).to_rational() <= BigRational::new(BigInt::one(), BigInt::from(1u64 << 39)));
    }

    #[test]
    fn log2_large_argument() {
        // log2(2^96 + 1) is just above 96
        let n = (BigUint::one() << 96u32) + BigUint::one();
        let (lo, hi) = log2_enclosure_uint(&n, 64);
        assert!(lo.to_rational() >= BigRational::from_integer(BigInt::from(96)));
        assert!(hi.to_rational() < BigRational::from_integer(BigInt::from(97)));
    }

    #[test]
    fn iroot_basics() {
        assert_eq!(iroot_floor(&big(27), 3), big(3));
        assert_eq!(iroot_floor(&big(26), 3), big(2));
        assert_eq!(iroot_floor(&big(1 << 20), 2), big(1 << 10));
        let n = BigUint::from(123456789u64);
        let r = iroot_floor(&n, 5);
        assert!(r.pow(5) <= n && (r + BigUint::one()).pow(5) > BigUint::from(123456789u64));
    }
}
