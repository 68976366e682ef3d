//! The c00 model: finitely supported vectors with exact scalar coefficients.
//!
//! A single carrier serves both vectors and functionals; the zero vector is
//! excluded from `Vec00` itself, and operations that can produce it return
//! `Option<Vec00>`.

use crate::error::ScalarError;
use crate::scalar::Scalar;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexInterval {
    pub lo: u32,
    pub hi: u32,
}

impl IndexInterval {
    pub fn new(lo: u32, hi: u32) -> Self {
        assert!(1 <= lo && lo <= hi, "interval requires 1 <= lo <= hi");
        IndexInterval { lo, hi }
    }

    pub fn contains(&self, j: u32) -> bool {
        self.lo <= j && j <= self.hi
    }

    pub fn len(&self) -> u32 {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for IndexInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// Finitely supported vector; invariant: no stored zero coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct Vec00 {
    entries: BTreeMap<u32, Scalar>,
}

impl fmt::Debug for Vec00 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vec00({})", self.canonical_string())
    }
}

impl Vec00 {
    /// Builds from (index, coefficient) pairs; exact zeros are rejected,
    /// duplicate indices are an error, empty support returns None.
    pub fn new(pairs: impl IntoIterator<Item = (u32, Scalar)>) -> Option<Vec00> {
        let mut entries = BTreeMap::new();
        for (j, c) in pairs {
            assert!(j >= 1, "coordinates are 1-based");
            if c.is_exact_zero() {
                continue;
            }
            let prev = entries.insert(j, c);
            assert!(prev.is_none(), "duplicate coordinate {j}");
        }
        if entries.is_empty() {
            None
        } else {
            Some(Vec00 { entries })
        }
    }

    pub fn basis(j: u32) -> Vec00 {
        Vec00::new([(j, Scalar::one())]).unwrap()
    }

    pub fn entries(&self) -> impl Iterator<Item = (u32, &Scalar)> {
        self.entries.iter().map(|(j, c)| (*j, c))
    }

    pub fn coeff(&self, j: u32) -> Option<&Scalar> {
        self.entries.get(&j)
    }

    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.keys().copied()
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn min_supp(&self) -> u32 {
        *self.entries.keys().next().unwrap()
    }

    pub fn max_supp(&self) -> u32 {
        *self.entries.keys().next_back().unwrap()
    }

    pub fn restrict(&self, interval: IndexInterval) -> Option<Vec00> {
        let entries: BTreeMap<u32, Scalar> = self
            .entries
            .range(interval.lo..=interval.hi)
            .map(|(j, c)| (*j, c.clone()))
            .collect();
        if entries.is_empty() {
            None
        } else {
            Some(Vec00 { entries })
        }
    }

    pub fn restrict_set(&self, set: &BTreeSet<u32>) -> Option<Vec00> {
        let entries: BTreeMap<u32, Scalar> = self
            .entries
            .iter()
            .filter(|(j, _)| set.contains(j))
            .map(|(j, c)| (*j, c.clone()))
            .collect();
        if entries.is_empty() {
            None
        } else {
            Some(Vec00 { entries })
        }
    }

    /// max supp(self) < min supp(other).
    pub fn precedes(&self, other: &Vec00) -> bool {
        self.max_supp() < other.min_supp()
    }

    /// The dual pairing sum_j self(j) * x(j).
    pub fn pair(&self, x: &Vec00) -> Scalar {
        let mut acc = Scalar::zero();
        for (j, c) in &self.entries {
            if let Some(xc) = x.entries.get(j) {
                acc = acc.add(&c.mul(xc));
            }
        }
        acc
    }

    pub fn add(&self, other: &Vec00) -> Option<Vec00> {
        let mut entries = self.entries.clone();
        for (j, c) in &other.entries {
            match entries.remove(j) {
                Some(prev) => {
                    let s = prev.add(c);
                    if !s.is_exact_zero() {
                        entries.insert(*j, s);
                    }
                }
                None => {
                    entries.insert(*j, c.clone());
                }
            }
        }
        if entries.is_empty() {
            None
        } else {
            Some(Vec00 { entries })
        }
    }

    pub fn scale(&self, c: &Scalar) -> Option<Vec00> {
        if c.is_exact_zero() {
            return None;
        }
        Some(Vec00 {
            entries: self.entries.iter().map(|(j, x)| (*j, c.mul(x))).collect(),
        })
    }

    pub fn negate(&self) -> Vec00 {
        Vec00 { entries: self.entries.iter().map(|(j, x)| (*j, x.neg())).collect() }
    }

    /// Standard lp norm of the coefficient sequence; p is a positive integer
    /// or infinity (None). Integer p keeps everything exact up to one root.
    pub fn lp_norm(&self, p: Option<u32>) -> Result<Scalar, ScalarError> {
        match p {
            None => {
                // sup |c_j| under certified comparison
                let mut best: Option<Scalar> = None;
                for c in self.entries.values() {
                    let a = c.abs()?;
                    best = Some(match best {
                        None => a,
                        Some(b) => {
                            if a.compare(&b).unwrap_or(Ordering::Less) == Ordering::Greater {
                                a
                            } else {
                                b
                            }
                        }
                    });
                }
                Ok(best.unwrap())
            }
            Some(1) => {
                let mut acc = Scalar::zero();
                for c in self.entries.values() {
                    acc = acc.add(&c.abs()?);
                }
                Ok(acc)
            }
            Some(p) if p >= 2 => {
                let mut acc = BigRational::zero();
                for c in self.entries.values() {
                    let r = c.as_rational().ok_or_else(|| {
                        ScalarError::Unsupported(
                            "lp_norm with p >= 2 needs rational coefficients".into(),
                        )
                    })?;
                    let mut t = BigRational::one();
                    for _ in 0..p {
                        t *= r.abs();
                    }
                    acc += t;
                }
                Scalar::pow_rational(&acc, &BigRational::new(1.into(), p.into()))
            }
            Some(_) => Err(ScalarError::Domain("p must be >= 1".into())),
        }
    }

    /// l1 norm as an exact scalar (used as the universal upper cap).
    pub fn l1(&self) -> Result<Scalar, ScalarError> {
        self.lp_norm(Some(1))
    }

    /// sup-norm as an exact scalar.
    pub fn linf(&self) -> Result<Scalar, ScalarError> {
        self.lp_norm(None)
    }

    /// Deterministic canonical form: "j1:c1,j2:c2,...".
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        for (i, (j, c)) in self.entries.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&j.to_string());
            s.push(':');
            s.push_str(&c.canonical_string());
        }
        s
    }

    /// Parses vector literals like "e1+2*e4-1/2*e7" or "1/f(2)*e3".
    pub fn parse(input: &str) -> Result<Option<Vec00>, ScalarError> {
        let mut terms: Vec<(u32, Scalar)> = Vec::new();
        let mut rest = input.trim();
        let mut sign = Scalar::one();
        let mut first = true;
        while !rest.is_empty() {
            if !first {
                if let Some(r) = rest.strip_prefix('+') {
                    sign = Scalar::one();
                    rest = r.trim_start();
                } else if let Some(r) = rest.strip_prefix('-').or_else(|| rest.strip_prefix('\u{2212}')) {
                    sign = Scalar::from_int(-1);
                    rest = r.trim_start();
                } else {
                    return Err(ScalarError::Parse {
                        at: input.len() - rest.len(),
                        msg: "expected '+' or '-'".into(),
                    });
                }
            } else {
                if let Some(r) = rest.strip_prefix('-').or_else(|| rest.strip_prefix('\u{2212}')) {
                    sign = Scalar::from_int(-1);
                    rest = r.trim_start();
                }
                first = false;
            }
            // term: [scalar '*'] 'e' INT
            let epos = find_basis_marker(rest).ok_or(ScalarError::Parse {
                at: input.len() - rest.len(),
                msg: "expected basis term 'eN'".into(),
            })?;
            let coeff = if epos == 0 {
                Scalar::one()
            } else {
                let cs = rest[..epos].trim().trim_end_matches('*').trim();
                Scalar::parse(cs)?
            };
            rest = &rest[epos + 1..];
            let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
            if digits.is_empty() {
                return Err(ScalarError::Parse {
                    at: input.len() - rest.len(),
                    msg: "expected coordinate index".into(),
                });
            }
            let idx: u32 = digits.parse().map_err(|_| ScalarError::Parse {
                at: input.len() - rest.len(),
                msg: "coordinate index too large".into(),
            })?;
            if idx == 0 {
                return Err(ScalarError::Parse {
                    at: input.len() - rest.len(),
                    msg: "coordinates are 1-based".into(),
                });
            }
            rest = rest[digits.len()..].trim_start();
            let c = sign.mul(&coeff);
            terms.push((idx, c));
        }
        if terms.is_empty() {
            return Err(ScalarError::Parse { at: 0, msg: "empty vector literal".into() });
        }
        // accumulate duplicates
        let mut acc: BTreeMap<u32, Scalar> = BTreeMap::new();
        for (j, c) in terms {
            let cur = acc.remove(&j).unwrap_or_else(Scalar::zero);
            let s = cur.add(&c);
            if !s.is_exact_zero() {
                acc.insert(j, s);
            }
        }
        Ok(Vec00::new(acc))
    }
}

/// Position of the basis marker 'e' that starts the trailing "eN" token,
/// skipping over scalar syntax like "f(2)*" or "pow(2,1/2)*".
fn find_basis_marker(term: &str) -> Option<usize> {
    let bytes = term.as_bytes();
    let mut depth = 0usize;
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b'e' if depth == 0 => {
                if bytes.get(i + 1).map(|c| c.is_ascii_digit()).unwrap_or(false) {
                    return Some(i);
                }
            }
            b'+' | b'-' if depth == 0 && i > 0 => return None,
            _ => {}
        }
    }
    None
}

impl Serialize for Vec00 {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(u32, String)> = self
            .entries
            .iter()
            .map(|(j, c)| (*j, c.canonical_string()))
            .collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Vec00 {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(u32, String)>::deserialize(deserializer)?;
        let mut entries = BTreeMap::new();
        for (j, s) in pairs {
            if j == 0 {
                return Err(serde::de::Error::custom("coordinates are 1-based"));
            }
            let c = Scalar::parse(&s).map_err(serde::de::Error::custom)?;
            if c.is_exact_zero() {
                return Err(serde::de::Error::custom("stored zero coefficient"));
            }
            if entries.insert(j, c).is_some() {
                return Err(serde::de::Error::custom("duplicate coordinate"));
            }
        }
        if entries.is_empty() {
            return Err(serde::de::Error::custom("empty support"));
        }
        Ok(Vec00 { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(j: u32) -> Vec00 {
        Vec00::basis(j)
    }

    #[test]
    fn restrict_examples() {
        assert!(e(3).restrict(IndexInterval::new(1, 2)).is_none());
        let x = e(1).add(&e(4).scale(&Scalar::from_int(2)).unwrap()).unwrap();
        let r = x.restrict(IndexInterval::new(2, 9)).unwrap();
        assert_eq!(r.canonical_string(), "4:2");
        let full = IndexInterval::new(x.min_supp(), x.max_supp());
        assert_eq!(x.restrict(full).unwrap(), x);
    }

    #[test]
    fn restrict_idempotent_and_intersects() {
        let x = Vec00::parse("e1+e3+e5+e7").unwrap().unwrap();
        let i1 = IndexInterval::new(2, 6);
        let r1 = x.restrict(i1).unwrap();
        assert_eq!(r1.restrict(i1).unwrap(), r1);
        let i2 = IndexInterval::new(4, 9);
        let a = x.restrict(i1).and_then(|v| v.restrict(i2));
        let b = x.restrict(IndexInterval::new(4, 6));
        assert_eq!(a, b);
    }

    #[test]
    fn precedes_examples() {
        assert!(e(1).precedes(&e(2)));
        let a = e(2).add(&e(5)).unwrap();
        assert!(!a.precedes(&e(5)));
        let b = e(1).add(&e(3)).unwrap();
        let c = e(4).add(&e(9)).unwrap();
        assert!(b.precedes(&c));
    }

    #[test]
    fn pair_examples() {
        assert_eq!(e(1).pair(&e(1)).as_rational().unwrap().to_string(), "1");
        let xstar = Vec00::parse("1/2*e1+1/2*e3").unwrap().unwrap();
        let x = Vec00::parse("e1+e2+e3").unwrap().unwrap();
        assert_eq!(xstar.pair(&x).as_rational().unwrap().to_string(), "1");
        let y = Vec00::parse("e5+e6").unwrap().unwrap();
        assert!(xstar.pair(&y).is_exact_zero());
    }

    #[test]
    fn pair_bilinear() {
        let xs = Vec00::parse("e1+2*e2").unwrap().unwrap();
        let ys = Vec00::parse("e2-e3").unwrap().unwrap();
        let z = Vec00::parse("1/2*e1+e2+3*e3").unwrap().unwrap();
        let a = Scalar::from_int(3);
        let b = Scalar::from_ratio(-1, 2);
        let lhs = xs
            .scale(&a)
            .unwrap()
            .add(&ys.scale(&b).unwrap())
            .unwrap()
            .pair(&z);
        let rhs = &a.mul(&xs.pair(&z)) + &b.mul(&ys.pair(&z));
        assert_eq!(lhs.compare(&rhs).unwrap(), std::cmp::Ordering::Equal);
    }

    #[test]
    fn lp_norms() {
        let x = e(1).add(&e(2)).unwrap();
        assert_eq!(x.lp_norm(None).unwrap().as_rational().unwrap().to_string(), "1");
        assert_eq!(x.lp_norm(Some(1)).unwrap().as_rational().unwrap().to_string(), "2");
        let y = e(7).scale(&Scalar::from_int(3)).unwrap();
        assert_eq!(y.lp_norm(Some(2)).unwrap().as_rational().unwrap().to_string(), "3");
    }

    #[test]
    fn parse_literals() {
        assert!(Vec00::parse("e1").unwrap().is_some());
        let v = Vec00::parse("2*e1-1/2*e7").unwrap().unwrap();
        assert_eq!(v.canonical_string(), "1:2,7:-1/2");
        let w = Vec00::parse("1/f(2)*e3").unwrap().unwrap();
        assert_eq!(w.min_supp(), 3);
        assert!(Vec00::parse("e1-e1").unwrap().is_none());
        assert!(Vec00::parse("bad((").is_err());
    }
}
