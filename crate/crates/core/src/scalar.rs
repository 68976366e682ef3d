//! Exact scalar expressions with certified dyadic enclosures.
//!
//! A `Scalar` is an immutable expression DAG over rational constants,
//! `f(x) = log2(x+1)`, rational powers of positive rationals, and the field
//! operations. Purely rational expressions canonicalize to exact rationals;
//! `f` arguments with `x+1` a perfect power canonicalize through
//! `f(m^k - 1) = k*f(m-1)` (so `f(3) = 2`, `f(8) = 2*f(2)`). All ordering
//! decisions go through `compare`, which refines enclosures adaptively and
//! reports `Undecidable` instead of guessing.

use crate::dyadic::{iroot_floor, log2_enclosure_rational, Dyadic};
use crate::error::ScalarError;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

pub const DEFAULT_MAX_BITS: u32 = 256;

/// Certified interval with dyadic endpoints; always contains the exact value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Dyadic,
    pub hi: Dyadic,
}

impl Enclosure {
    pub fn point(d: Dyadic) -> Self {
        Enclosure { lo: d.clone(), hi: d }
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub(&self.lo)
    }

    pub fn contains(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

#[derive(Debug)]
enum Expr {
    Rat(BigRational),
    /// log2(x + 1); x >= 1 and, when x + 1 is an integer, it is not a perfect power.
    F(BigRational),
    /// base^(p/q); base > 0 rational, not a perfect power; exponent non-integer, reduced.
    Pow(BigRational, BigRational),
    Add(Scalar, Scalar),
    Mul(Scalar, Scalar),
    Neg(Scalar),
    Recip(Scalar),
}

struct Node {
    expr: Expr,
    cache: Mutex<Option<(u32, Dyadic, Dyadic)>>,
}

#[derive(Clone)]
pub struct Scalar(Arc<Node>);

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.canonical_string())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_string())
    }
}

fn node(expr: Expr) -> Scalar {
    Scalar(Arc::new(Node { expr, cache: Mutex::new(None) }))
}

/// n = base^k with k maximal (k >= 2), if n >= 2 is a perfect power.
fn perfect_power(n: &BigUint) -> Option<(BigUint, u32)> {
    if n < &BigUint::from(4u32) {
        return None;
    }
    let bits = n.bits() as u32;
    for k in (2..=bits).rev() {
        let r = iroot_floor(n, k);
        if r.pow(k) == *n {
            return Some((r, k));
        }
    }
    None
}

/// r = s^g with g maximal (g >= 2) for positive rational r, if such s exists.
fn rational_perfect_power(r: &BigRational) -> Option<(BigRational, u32)> {
    let n = r.numer().magnitude().clone();
    let d = r.denom().magnitude().clone();
    let bits = n.bits().max(d.bits()) as u32;
    for g in (2..=bits.max(2)).rev() {
        let rn = if n.is_one() { BigUint::one() } else { iroot_floor(&n, g) };
        let rd = if d.is_one() { BigUint::one() } else { iroot_floor(&d, g) };
        if rn.pow(g) == n && rd.pow(g) == d {
            if n.is_one() && d.is_one() {
                return None;
            }
            return Some((
                BigRational::new(BigInt::from(rn), BigInt::from(rd)),
                g,
            ));
        }
    }
    None
}

fn rational_pow(base: &BigRational, e: i64) -> Result<BigRational, ScalarError> {
    if e >= 0 {
        let e = u32::try_from(e).map_err(|_| ScalarError::Unsupported("exponent too large".into()))?;
        Ok(BigRational::new(base.numer().pow(e), base.denom().pow(e)))
    } else {
        if base.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let e = u32::try_from(-e).map_err(|_| ScalarError::Unsupported("exponent too large".into()))?;
        Ok(BigRational::new(base.denom().pow(e), base.numer().pow(e)))
    }
}

impl Scalar {
    pub fn from_rational(r: BigRational) -> Scalar {
        node(Expr::Rat(r))
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Scalar {
        assert!(den != 0);
        Scalar::from_rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn zero() -> Scalar {
        Scalar::from_int(0)
    }

    pub fn one() -> Scalar {
        Scalar::from_int(1)
    }

    pub fn from_dyadic(d: &Dyadic) -> Scalar {
        Scalar::from_rational(d.to_rational())
    }

    /// f(x) = log2(x+1) for rational x >= 1.
    pub fn f_rational(x: &BigRational) -> Result<Scalar, ScalarError> {
        if *x < BigRational::one() {
            return Err(ScalarError::Domain(format!("f({x}) requires x >= 1")));
        }
        let arg = x + BigRational::one();
        if arg.is_integer() {
            let n = arg.numer().magnitude().clone();
            if let Some(k) = crate::dyadic::exact_log2(&n) {
                return Ok(Scalar::from_int(k as i64));
            }
            if let Some((base, k)) = perfect_power(&n) {
                // log2(m^k) = k * log2(m) = k * f(m - 1)
                let m1 = BigRational::from_integer(BigInt::from(base) - BigInt::one());
                let inner = Scalar::f_rational(&m1)?;
                return Ok(&Scalar::from_int(k as i64) * &inner);
            }
        }
        Ok(node(Expr::F(x.clone())))
    }

    pub fn f_int(n: u64) -> Scalar {
        Scalar::f_rational(&BigRational::from_integer(BigInt::from(n)))
            .expect("f of integer >= 1")
    }

    /// f^{-1}(y) = 2^y - 1 for rational y >= 1.
    pub fn f_inv(y: &BigRational) -> Result<Scalar, ScalarError> {
        if *y < BigRational::one() {
            return Err(ScalarError::Domain(format!("f_inv({y}) requires y >= 1")));
        }
        let two = BigRational::from_integer(BigInt::from(2));
        let p = Scalar::pow_rational(&two, y)?;
        Ok(&p - &Scalar::one())
    }

    /// base^exp for rational base >= 0.
    pub fn pow_rational(base: &BigRational, exp: &BigRational) -> Result<Scalar, ScalarError> {
        if base.is_negative() {
            return Err(ScalarError::Domain("negative power base".into()));
        }
        if base.is_zero() {
            return if exp.is_positive() {
                Ok(Scalar::zero())
            } else {
                Err(ScalarError::Domain("0^q for q <= 0".into()))
            };
        }
        if base.is_one() || exp.is_zero() {
            return if exp.is_zero() { Ok(Scalar::one()) } else { Ok(Scalar::one()) };
        }
        if exp.is_integer() {
            let e = exp
                .numer()
                .to_i64()
                .ok_or_else(|| ScalarError::Unsupported("exponent too large".into()))?;
            return Ok(Scalar::from_rational(rational_pow(base, e)?));
        }
        if let Some((root, g)) = rational_perfect_power(base) {
            let e2 = exp * BigRational::from_integer(BigInt::from(g));
            return Scalar::pow_rational(&root, &e2);
        }
        // exact q-th root available?
        let q = exp
            .denom()
            .to_u32()
            .ok_or_else(|| ScalarError::Unsupported("root order too large".into()))?;
        let rn = iroot_floor(base.numer().magnitude(), q);
        let rd = iroot_floor(base.denom().magnitude(), q);
        if rn.pow(q) == *base.numer().magnitude() && rd.pow(q) == *base.denom().magnitude() {
            let root = BigRational::new(BigInt::from(rn), BigInt::from(rd));
            let p = exp
                .numer()
                .to_i64()
                .ok_or_else(|| ScalarError::Unsupported("exponent too large".into()))?;
            return Ok(Scalar::from_rational(rational_pow(&root, p)?));
        }
        Ok(node(Expr::Pow(base.clone(), exp.clone())))
    }

    /// n^(num/den) for integer n >= 1.
    pub fn pow_int(n: u64, num: i64, den: u64) -> Result<Scalar, ScalarError> {
        if n < 1 {
            return Err(ScalarError::Domain("pow base must be >= 1".into()));
        }
        let exp = BigRational::new(BigInt::from(num), BigInt::from(den));
        Scalar::pow_rational(&BigRational::from_integer(BigInt::from(n)), &exp)
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match &self.0.expr {
            Expr::Rat(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_exact_zero(&self) -> bool {
        self.as_rational().map(|r| r.is_zero()).unwrap_or(false)
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        if self.is_exact_zero() {
            return other.clone();
        }
        if other.is_exact_zero() {
            return self.clone();
        }
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return Scalar::from_rational(a + b);
        }
        node(Expr::Add(self.clone(), other.clone()))
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        if self.is_exact_zero() || other.is_exact_zero() {
            return Scalar::zero();
        }
        if let Some(a) = self.as_rational() {
            if a.is_one() {
                return other.clone();
            }
        }
        if let Some(b) = other.as_rational() {
            if b.is_one() {
                return self.clone();
            }
        }
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return Scalar::from_rational(a * b);
        }
        node(Expr::Mul(self.clone(), other.clone()))
    }

    pub fn neg(&self) -> Scalar {
        if let Some(r) = self.as_rational() {
            return Scalar::from_rational(-r);
        }
        if let Expr::Neg(inner) = &self.0.expr {
            return inner.clone();
        }
        node(Expr::Neg(self.clone()))
    }

    pub fn recip(&self) -> Result<Scalar, ScalarError> {
        if let Some(r) = self.as_rational() {
            if r.is_zero() {
                return Err(ScalarError::DivisionByZero);
            }
            return Ok(Scalar::from_rational(r.recip()));
        }
        if let Expr::Recip(inner) = &self.0.expr {
            return Ok(inner.clone());
        }
        Ok(node(Expr::Recip(self.clone())))
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        Ok(self.mul(&other.recip()?))
    }

    /// Sign under certified comparison against zero.
    pub fn sign(&self) -> Result<Ordering, ScalarError> {
        self.compare(&Scalar::zero())
    }

    pub fn abs(&self) -> Result<Scalar, ScalarError> {
        match self.sign()? {
            Ordering::Less => Ok(self.neg()),
            _ => Ok(self.clone()),
        }
    }

    fn eval(&self, w: u32) -> Result<(Dyadic, Dyadic), ScalarError> {
        {
            let cache = self.0.cache.lock().unwrap();
            if let Some((cw, lo, hi)) = cache.as_ref() {
                if *cw >= w {
                    return Ok((lo.clone(), hi.clone()));
                }
            }
        }
        let (lo, hi) = match &self.0.expr {
            Expr::Rat(r) => {
                let num = Dyadic::from_bigint(r.numer().clone());
                let den = Dyadic::from_bigint(r.denom().clone());
                let lo = num.div(&den, w, true)?;
                let hi = num.div(&den, w, false)?;
                (lo, hi)
            }
            Expr::F(x) => {
                let arg = x + BigRational::one();
                log2_enclosure_rational(&arg, w + 1)
            }
            Expr::Pow(base, exp) => pow_enclosure(base, exp, w)?,
            Expr::Add(a, b) => {
                let (alo, ahi) = a.eval(w + 2)?;
                let (blo, bhi) = b.eval(w + 2)?;
                (alo.add(&blo).round(w, true), ahi.add(&bhi).round(w, false))
            }
            Expr::Mul(a, b) => {
                let (alo, ahi) = a.eval(w + 2)?;
                let (blo, bhi) = b.eval(w + 2)?;
                let cands = [alo.mul(&blo), alo.mul(&bhi), ahi.mul(&blo), ahi.mul(&bhi)];
                let lo = cands.iter().min().unwrap().round(w, true);
                let hi = cands.iter().max().unwrap().round(w, false);
                (lo, hi)
            }
            Expr::Neg(a) => {
                let (alo, ahi) = a.eval(w)?;
                (ahi.neg(), alo.neg())
            }
            Expr::Recip(a) => {
                let (alo, ahi) = a.eval(w + 2)?;
                if alo.is_zero() || ahi.is_zero() || alo.is_negative() != ahi.is_negative() {
                    return Err(ScalarError::Domain(
                        "reciprocal of interval containing zero".into(),
                    ));
                }
                let one = Dyadic::one();
                (one.div(&ahi, w, true)?, one.div(&alo, w, false)?)
            }
        };
        let mut cache = self.0.cache.lock().unwrap();
        match cache.as_mut() {
            Some((cw, clo, chi)) if *cw >= w => return Ok((clo.clone(), chi.clone())),
            Some(entry) => {
                // refinement may only narrow
                let lo = if lo > entry.1 { lo } else { entry.1.clone() };
                let hi = if hi < entry.2 { hi } else { entry.2.clone() };
                *entry = (w, lo.clone(), hi.clone());
                return Ok((lo, hi));
            }
            None => {
                *cache = Some((w, lo.clone(), hi.clone()));
            }
        }
        Ok((lo, hi))
    }

    /// Certified enclosure with width <= 2^(1 - precision_bits).
    pub fn enclose(&self, precision_bits: u32) -> Result<Enclosure, ScalarError> {
        let target = precision_bits.max(1);
        let mut w = target + 8;
        loop {
            let (lo, hi) = self.eval(w)?;
            let width = hi.sub(&lo);
            let bound = Dyadic::new(BigInt::one(), 1 - target as i64);
            if width <= bound {
                return Ok(Enclosure { lo, hi });
            }
            if w > (1 << 22) {
                return Err(ScalarError::Unsupported(format!(
                    "enclosure of {} did not reach width 2^(1-{target})",
                    self.canonical_string()
                )));
            }
            w *= 2;
        }
    }

    pub fn compare(&self, other: &Scalar) -> Result<Ordering, ScalarError> {
        self.compare_prec(other, DEFAULT_MAX_BITS)
    }

    pub fn compare_prec(&self, other: &Scalar, max_bits: u32) -> Result<Ordering, ScalarError> {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ok(Ordering::Equal);
        }
        if let (Some(a), Some(b)) = (self.as_rational(), other.as_rational()) {
            return Ok(a.cmp(b));
        }
        if let (Some(a), Some(b)) = (self.monomial(), other.monomial()) {
            if a == b {
                return Ok(Ordering::Equal);
            }
        }
        let mut w: u32 = 64;
        loop {
            let pair = (self.eval(w), other.eval(w));
            if let (Ok((alo, ahi)), Ok((blo, bhi))) = pair {
                if alo > bhi {
                    return Ok(Ordering::Greater);
                }
                if ahi < blo {
                    return Ok(Ordering::Less);
                }
                if alo == ahi && blo == bhi {
                    return Ok(Ordering::Equal);
                }
            }
            if w >= max_bits {
                return Err(ScalarError::Undecidable { max_bits });
            }
            w = (w * 2).min(max_bits);
        }
    }

    /// <= under certified comparison (Undecidable propagates).
    pub fn le(&self, other: &Scalar) -> Result<bool, ScalarError> {
        Ok(self.compare(other)? != Ordering::Greater)
    }

    /// Multiplicative normal form `sign * (p/q) * prod f(x_i)^e_i`, when the
    /// expression is a product of rationals, f-values and their reciprocals.
    pub fn monomial(&self) -> Option<Monomial> {
        match &self.0.expr {
            Expr::Rat(r) => Some(Monomial::from_rational(r)),
            Expr::F(x) => {
                let mut m = Monomial::one();
                m.f_pows.insert(RatKey(x.clone()), 1);
                Some(m)
            }
            Expr::Mul(a, b) => {
                let ma = a.monomial()?;
                let mb = b.monomial()?;
                ma.mul(&mb)
            }
            Expr::Neg(a) => {
                let mut m = a.monomial()?;
                m.neg = !m.neg;
                Some(m)
            }
            Expr::Recip(a) => a.monomial()?.invert(),
            Expr::Add(_, _) | Expr::Pow(_, _) => None,
        }
    }

    pub fn canonical_string(&self) -> String {
        if let Some(m) = self.monomial() {
            return m.to_string();
        }
        let mut s = String::new();
        self.fmt_structural(&mut s, 0);
        s
    }

    // levels: 0 sum, 1 product, 2 atom
    fn fmt_structural(&self, out: &mut String, level: u8) {
        match &self.0.expr {
            Expr::Rat(r) => {
                let s = fmt_rational(r);
                if level >= 1 && r.is_negative() {
                    out.push('(');
                    out.push_str(&s);
                    out.push(')');
                } else {
                    out.push_str(&s);
                }
            }
            Expr::F(x) => {
                out.push_str("f(");
                out.push_str(&fmt_rational(x));
                out.push(')');
            }
            Expr::Pow(b, e) => {
                out.push_str("pow(");
                out.push_str(&fmt_rational(b));
                out.push(',');
                out.push_str(&fmt_rational(e));
                out.push(')');
            }
            Expr::Add(a, b) => {
                let wrap = level >= 1;
                if wrap {
                    out.push('(');
                }
                a.fmt_structural(out, 0);
                match &b.0.expr {
                    Expr::Neg(inner) => {
                        out.push('-');
                        inner.fmt_structural(out, 1);
                    }
                    Expr::Rat(r) if r.is_negative() => {
                        out.push('-');
                        out.push_str(&fmt_rational(&-r));
                    }
                    _ => {
                        out.push('+');
                        b.fmt_structural(out, 1);
                    }
                }
                if wrap {
                    out.push(')');
                }
            }
            Expr::Mul(a, b) => {
                a.fmt_structural(out, 1);
                out.push('*');
                b.fmt_structural(out, 1);
            }
            Expr::Neg(a) => {
                out.push('-');
                a.fmt_structural(out, 2.min(1));
            }
            Expr::Recip(a) => {
                out.push_str("1/");
                match &a.0.expr {
                    Expr::F(_) | Expr::Pow(_, _) => a.fmt_structural(out, 2),
                    _ => {
                        out.push('(');
                        a.fmt_structural(out, 0);
                        out.push(')');
                    }
                }
            }
        }
    }

    pub fn parse(input: &str) -> Result<Scalar, ScalarError> {
        let mut p = Parser { bytes: input.as_bytes(), pos: 0 };
        let s = p.parse_expr()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(ScalarError::Parse { at: p.pos, msg: "trailing input".into() });
        }
        Ok(s)
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn pow_enclosure(
    base: &BigRational,
    exp: &BigRational,
    w: u32,
) -> Result<(Dyadic, Dyadic), ScalarError> {
    let p = exp
        .numer()
        .to_i64()
        .ok_or_else(|| ScalarError::Unsupported("exponent too large".into()))?;
    let q = exp
        .denom()
        .to_u32()
        .ok_or_else(|| ScalarError::Unsupported("root order too large".into()))?;
    let target = rational_pow(base, p.abs())?;
    // q-th root of `target` with directed rounding on the 2^-w grid
    let mut ww = w as u64;
    loop {
        let scaled_num = target.numer().magnitude() << (ww * q as u64);
        let den = target.denom().magnitude();
        let floor_in = &scaled_num / den;
        let rem = &scaled_num % den;
        let ceil_in = if rem.is_zero() { floor_in.clone() } else { &floor_in + BigUint::one() };
        let lo_root = iroot_floor(&floor_in, q);
        if lo_root.is_zero() {
            ww *= 2;
            if ww > 1 << 22 {
                return Err(ScalarError::Unsupported("power enclosure underflow".into()));
            }
            continue;
        }
        let hi_base = iroot_floor(&ceil_in, q);
        let hi_root = if hi_base.pow(q) == ceil_in && rem.is_zero() {
            hi_base
        } else {
            hi_base + BigUint::one()
        };
        let lo = Dyadic::new(BigInt::from(lo_root), -(ww as i64));
        let hi = Dyadic::new(BigInt::from(hi_root), -(ww as i64));
        if p >= 0 {
            return Ok((lo.round(w, true), hi.round(w, false)));
        }
        let one = Dyadic::one();
        return Ok((one.div(&hi, w, true)?, one.div(&lo, w, false)?));
    }
}

/// Ord/Eq wrapper for rationals used as monomial keys.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatKey(pub BigRational);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub neg: bool,
    /// strictly positive
    pub rat: BigRational,
    /// f-argument -> exponent (never zero)
    pub f_pows: BTreeMap<RatKey, i64>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial { neg: false, rat: BigRational::one(), f_pows: BTreeMap::new() }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        Monomial { neg: r.is_negative(), rat: r.abs(), f_pows: BTreeMap::new() }
    }

    fn mul(&self, other: &Monomial) -> Option<Monomial> {
        if self.rat.is_zero() || other.rat.is_zero() {
            return Some(Monomial {
                neg: false,
                rat: BigRational::zero(),
                f_pows: BTreeMap::new(),
            });
        }
        let mut f_pows = self.f_pows.clone();
        for (k, e) in &other.f_pows {
            let entry = f_pows.entry(k.clone()).or_insert(0);
            *entry += e;
            if *entry == 0 {
                f_pows.remove(k);
            }
        }
        Some(Monomial { neg: self.neg ^ other.neg, rat: &self.rat * &other.rat, f_pows })
    }

    fn invert(&self) -> Option<Monomial> {
        if self.rat.is_zero() {
            return None;
        }
        Some(Monomial {
            neg: self.neg,
            rat: self.rat.recip(),
            f_pows: self.f_pows.iter().map(|(k, e)| (k.clone(), -e)).collect(),
        })
    }

    pub fn to_scalar(&self) -> Scalar {
        let mut s = Scalar::from_rational(if self.neg { -self.rat.clone() } else { self.rat.clone() });
        for (k, e) in &self.f_pows {
            let f = Scalar::f_rational(&k.0).expect("canonical f argument");
            for _ in 0..e.unsigned_abs() {
                if *e > 0 {
                    s = s.mul(&f);
                } else {
                    s = s.mul(&f.recip().expect("f value nonzero"));
                }
            }
        }
        s
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.rat.is_zero() {
            return write!(out, "0");
        }
        let mut s = String::new();
        if self.neg {
            s.push('-');
        }
        let show_rat = !self.rat.is_one() || self.f_pows.is_empty();
        if show_rat {
            s.push_str(&fmt_rational(&self.rat));
        }
        let mut first = !show_rat;
        for (k, e) in &self.f_pows {
            let tok = format!("f({})", fmt_rational(&k.0));
            for _ in 0..e.unsigned_abs() {
                if *e > 0 {
                    if first {
                        s.push_str(&tok);
                        first = false;
                    } else {
                        s.push('*');
                        s.push_str(&tok);
                    }
                } else {
                    if first {
                        s.push('1');
                        first = false;
                    }
                    s.push('/');
                    s.push_str(&tok);
                }
            }
        }
        write!(out, "{s}")
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> Result<(), ScalarError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(ScalarError::Parse { at: self.pos, msg: format!("expected '{}'", c as char) })
        }
    }

    /// Accepts ASCII '-' and the UTF-8 minus sign.
    fn eat_minus(&mut self) -> bool {
        self.skip_ws();
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
            return true;
        }
        let rest = &self.bytes[self.pos.min(self.bytes.len())..];
        if rest.starts_with("\u{2212}".as_bytes()) {
            self.pos += 3;
            return true;
        }
        false
    }

    fn parse_uint(&mut self) -> Result<BigUint, ScalarError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ScalarError::Parse { at: self.pos, msg: "expected number".into() });
        }
        let s = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn parse_expr(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.add(&t);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.parse_term()?;
                    acc = acc.sub(&t);
                }
                Some(_) if self.eat_minus() => {
                    let t = self.parse_term()?;
                    acc = acc.sub(&t);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Scalar, ScalarError> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let t = self.parse_factor()?;
                    acc = acc.mul(&t);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let t = self.parse_factor()?;
                    acc = acc.div(&t)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn parse_factor(&mut self) -> Result<Scalar, ScalarError> {
        self.skip_ws();
        if self.eat_minus() {
            let f = self.parse_factor()?;
            return Ok(f.neg());
        }
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.parse_expr()?;
                self.eat(b')')?;
                Ok(e)
            }
            Some(b'f') if self.bytes.get(self.pos + 1) == Some(&b'(') => {
                self.pos += 2;
                let arg = self.parse_rational_expr()?;
                self.eat(b')')?;
                Ok(Scalar::f_rational(&arg)?)
            }
            Some(b'p') => {
                let rest = &self.bytes[self.pos..];
                if rest.starts_with(b"pow(") {
                    self.pos += 4;
                    let b = self.parse_rational_expr()?;
                    self.eat(b',')?;
                    let e = self.parse_rational_expr()?;
                    self.eat(b')')?;
                    Ok(Scalar::pow_rational(&b, &e)?)
                } else {
                    Err(ScalarError::Parse { at: self.pos, msg: "unknown identifier".into() })
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.parse_uint()?;
                // greedy rational: "p/q" when q is a plain number
                let save = self.pos;
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    if self.peek().map(|c| c.is_ascii_digit()).unwrap_or(false) {
                        let den = self.parse_uint()?;
                        if den.is_zero() {
                            return Err(ScalarError::Parse { at: self.pos, msg: "zero denominator".into() });
                        }
                        return Ok(Scalar::from_rational(BigRational::new(
                            BigInt::from(num),
                            BigInt::from(den),
                        )));
                    }
                    self.pos = save;
                }
                Ok(Scalar::from_rational(BigRational::from_integer(BigInt::from(num))))
            }
            _ => Err(ScalarError::Parse { at: self.pos, msg: "expected factor".into() }),
        }
    }

    fn parse_rational_expr(&mut self) -> Result<BigRational, ScalarError> {
        let neg = self.eat_minus();
        let num = self.parse_uint()?;
        let mut r = BigRational::from_integer(BigInt::from(num));
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let den = self.parse_uint()?;
            if den.is_zero() {
                return Err(ScalarError::Parse { at: self.pos, msg: "zero denominator".into() });
            }
            r /= BigRational::from_integer(BigInt::from(den));
        }
        Ok(if neg { -r } else { r })
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.canonical_string() == other.canonical_string()
    }
}

impl Eq for Scalar {}

impl std::hash::Hash for Scalar {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical_string().hash(state);
    }
}

impl std::ops::Add for &Scalar {
    type Output = Scalar;
    fn add(self, other: &Scalar) -> Scalar {
        Scalar::add(self, other)
    }
}

impl std::ops::Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, other: &Scalar) -> Scalar {
        Scalar::sub(self, other)
    }
}

impl std::ops::Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, other: &Scalar) -> Scalar {
        Scalar::mul(self, other)
    }
}

impl std::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::neg(self)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.canonical_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Scalar::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{}*2^{}", self.mant(), self.exp()))
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let (m, e) = s
            .split_once("*2^")
            .ok_or_else(|| serde::de::Error::custom("expected mant*2^exp"))?;
        let mant: BigInt = m.parse().map_err(serde::de::Error::custom)?;
        let exp: i64 = e.parse().map_err(serde::de::Error::custom)?;
        Ok(Dyadic::new(mant, exp))
    }
}

impl Serialize for Enclosure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("Enclosure", 2)?;
        st.serialize_field("lo", &self.lo)?;
        st.serialize_field("hi", &self.hi)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for Enclosure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            lo: Dyadic,
            hi: Dyadic,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.lo > raw.hi {
            return Err(serde::de::Error::custom("enclosure lo > hi"));
        }
        Ok(Enclosure { lo: raw.lo, hi: raw.hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn f_canonicalizes_powers() {
        assert_eq!(Scalar::f_int(1).as_rational(), Some(&rat(1, 1)));
        assert_eq!(Scalar::f_int(3).as_rational(), Some(&rat(2, 1)));
        assert_eq!(Scalar::f_int(7).as_rational(), Some(&rat(3, 1)));
        // f(8) = log2(9) = 2*f(2)
        let f8 = Scalar::f_int(8);
        let two_f2 = &Scalar::from_int(2) * &Scalar::f_int(2);
        assert_eq!(f8.compare(&two_f2).unwrap(), Ordering::Equal);
        assert_eq!(f8.canonical_string(), two_f2.canonical_string());
    }

    #[test]
    fn f_monotone_window() {
        for m in 1u64..20 {
            let a = Scalar::f_int(m);
            let b = Scalar::f_int(m + 1);
            assert_eq!(a.compare(&b).unwrap(), Ordering::Less, "f({m}) < f({})", m + 1);
        }
    }

    #[test]
    fn compare_examples() {
        // 1/f(2) < 1 since f(2) = log2(3) > 1
        let lhs = Scalar::one().div(&Scalar::f_int(2)).unwrap();
        assert_eq!(lhs.compare(&Scalar::one()).unwrap(), Ordering::Less);
        // 2^(-1/2) > 1/2
        let lhs = Scalar::pow_int(2, -1, 2).unwrap();
        assert_eq!(lhs.compare(&Scalar::from_ratio(1, 2)).unwrap(), Ordering::Greater);
        // reflexive EQ on a transcendental
        let f2 = Scalar::f_int(2);
        assert_eq!(f2.compare(&f2.clone()).unwrap(), Ordering::Equal);
    }

    #[test]
    fn f_inv_examples() {
        for (y, expect) in [(1, 1), (2, 3), (3, 7)] {
            let v = Scalar::f_inv(&rat(y, 1)).unwrap();
            assert_eq!(v.as_rational(), Some(&rat(expect, 1)));
        }
        assert!(Scalar::f_inv(&rat(1, 2)).is_err());
    }

    #[test]
    fn enclose_contract() {
        let e = Scalar::one().enclose(10).unwrap();
        assert_eq!(e.lo, e.hi);
        let s = &Scalar::f_int(1) + &Scalar::f_int(3);
        let e = s.enclose(4).unwrap();
        assert_eq!(e.lo, Dyadic::from_int(3));
        assert_eq!(e.hi, Dyadic::from_int(3));
        let f2 = Scalar::f_int(2);
        let e20 = f2.enclose(20).unwrap();
        let e21 = f2.enclose(21).unwrap();
        assert!(e20.contains(&e21), "refinement must narrow");
        let w = e20.width().to_rational();
        assert!(w <= rat(1, 1 << 19));
    }

    #[test]
    fn concavity_probe_x_over_fx() {
        // chord inequality for x/f(x) on integer triples a < b < c:
        // (g(c)-g(a))/(c-a) evaluated at b lies below g(b)
        let g = |n: u64| {
            Scalar::from_int(n as i64).div(&Scalar::f_int(n)).unwrap()
        };
        for (a, b, c) in [(1u64, 2, 4), (2, 5, 9), (3, 7, 15), (4, 10, 20)] {
            let ga = g(a);
            let gb = g(b);
            let gc = g(c);
            let lam = rat((c - b) as i64, (c - a) as i64);
            let chord = &(&Scalar::from_rational(lam.clone()) * &ga)
                + &(&Scalar::from_rational(BigRational::one() - lam) * &gc);
            assert_eq!(chord.compare(&gb).unwrap(), Ordering::Less, "chord below at {a},{b},{c}");
        }
    }

    #[test]
    fn parse_roundtrip() {
        for s in [
            "3/4*f(5)+1/2",
            "1/f(2)",
            "-1/2",
            "pow(2,-1/2)",
            "f(3/2)",
            "2*f(2)",
            "1",
            "7/8",
        ] {
            let v = Scalar::parse(s).unwrap();
            let printed = v.canonical_string();
            let v2 = Scalar::parse(&printed).unwrap();
            assert_eq!(v.compare(&v2).unwrap(), Ordering::Equal, "{s} -> {printed}");
            assert_eq!(printed, v2.canonical_string());
        }
        assert!(Scalar::parse("bad((").is_err());
    }

    #[test]
    fn monomial_normal_form() {
        let m = Scalar::parse("3/4/f(5)").unwrap().monomial().unwrap();
        assert!(!m.neg);
        assert_eq!(m.rat, rat(3, 4));
        assert_eq!(m.f_pows.len(), 1);
        let s = Scalar::parse("1/2*f(2)*f(2)").unwrap();
        assert_eq!(s.monomial().unwrap().f_pows.values().copied().collect::<Vec<_>>(), vec![2]);
        // additions have no monomial form
        assert!(Scalar::parse("1+f(2)").unwrap().monomial().is_none());
    }
}
