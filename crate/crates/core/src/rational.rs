//! Exact rationals backed by `num_rational::BigRational`.
//!
//! Every value is kept reduced with a positive denominator, and arithmetic is
//! arbitrary precision, so nothing overflows silently.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default denominator cap used when snapping floats.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Panics if `den` is zero.
    pub fn new(num: i64, den: i64) -> Self {
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        Rational(BigRational::new(num, den))
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn recip(&self) -> Self {
        Rational(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        // Dividing two huge integers as f64 overflows, so scale first.
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => self.0.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// The exact binary value of a finite float.
    pub fn from_f64_exact(x: f64) -> Result<Self> {
        BigRational::from_float(x)
            .map(Rational)
            .ok_or_else(|| Error::Domain(format!("{x} is not finite")))
    }

    /// Best rational approximation with denominator at most `max_den`,
    /// found from the continued-fraction expansion (convergents and the last
    /// admissible semiconvergent).
    pub fn snap(x: f64, max_den: u64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("cannot snap {x}")));
        }
        if max_den == 0 {
            return Err(Error::Argument("denominator cap must be positive".into()));
        }
        if x.abs() >= 1e30 {
            return Err(Error::Domain(format!("{x} is too large to snap")));
        }
        let target = Self::from_f64_exact(x.abs())?;
        let cap = BigInt::from(max_den);
        let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
        let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
        let mut rest = target.0.clone();
        loop {
            let a = rest.floor().to_integer();
            let h2 = &a * &h1 + &h0;
            let k2 = &a * &k1 + &k0;
            if k2 > cap {
                let t = (&cap - &k0) / &k1;
                let hs = &t * &h1 + &h0;
                let ks = &t * &k1 + &k0;
                let conv = BigRational::new(h1.clone(), k1.clone());
                let semi = BigRational::new(hs, ks);
                let d_conv = (&conv - &target.0).abs();
                let d_semi = (&semi - &target.0).abs();
                let best = if d_semi < d_conv { semi } else { conv };
                return Ok(Self::signed(best, x));
            }
            h0 = std::mem::replace(&mut h1, h2);
            k0 = std::mem::replace(&mut k1, k2);
            let frac = &rest - BigRational::from_integer(a);
            if frac.is_zero() {
                return Ok(Self::signed(BigRational::new(h1, k1), x));
            }
            rest = frac.recip();
        }
    }

    /// Snap with the default denominator cap.
    pub fn snap_default(x: f64) -> Result<Self> {
        Self::snap(x, DEFAULT_MAX_DENOMINATOR)
    }

    fn signed(r: BigRational, x: f64) -> Self {
        if x < 0.0 {
            Rational(-r)
        } else {
            Rational(r)
        }
    }

    /// `Some(k)` when `self = k·base` for an integer `k`.
    pub fn multiple_of(&self, base: &Rational) -> Option<BigInt> {
        if base.is_zero() {
            return None;
        }
        let q = &self.0 / &base.0;
        q.is_integer().then(|| q.to_integer())
    }

    /// Smallest positive integer `m` with `m·base ≥ x`, compared exactly
    /// against the binary value of `x`.
    pub fn ceil_multiple(x: f64, base: &Rational) -> Result<BigInt> {
        if !base.is_positive() {
            return Err(Error::Domain("base must be positive".into()));
        }
        let q = Self::from_f64_exact(x)?.0 / &base.0;
        let m = q.ceil().to_integer();
        Ok(if m < BigInt::one() { BigInt::one() } else { m })
    }

    pub fn pow(&self, e: i32) -> Self {
        Rational(num_traits::Pow::pow(&self.0, e))
    }

    pub fn mul_int(&self, k: &BigInt) -> Self {
        Rational(&self.0 * BigRational::from_integer(k.clone()))
    }
}

/// Least common multiple of positive rationals: with every value written over
/// the common denominator `Q`, it is `lcm(numerators) / Q`.
pub fn rational_lcm(values: &[Rational]) -> Rational {
    let q = common_denominator(values);
    let mut l = BigInt::one();
    for v in values {
        let p = (v.numer() * &q) / v.denom();
        l = l.lcm(&p);
    }
    Rational::from_big(l, q)
}

/// Least common multiple of all denominators.
pub fn common_denominator(values: &[Rational]) -> BigInt {
    values.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| {
            BigInt::from_str(t.trim()).map_err(|_| Error::Parse(format!("bad rational {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let d = parse(d)?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in {s:?}")));
                }
                Ok(Rational::from_big(parse(n)?, d))
            }
            None => Ok(Rational::from_big(parse(s)?, BigInt::one())),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational(BigRational::from_integer(n))
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}
