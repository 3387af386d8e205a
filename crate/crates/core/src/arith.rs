//! Exact integer and rational primitives.
//!
//! Everything here is generic over a [`Natural`] backing type so the same code
//! runs on checked fixed-width integers (`u64`, `u128`) and on unbounded
//! `BigUint`. Fixed-width overflow is always reported as [`Error::Overflow`],
//! never wrapped.

use std::cmp::Ordering;
use std::fmt;

use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, Unsigned};

use crate::error::{Error, Result};

/// Unsigned exact integer usable as the backing type of [`Fraction`].
pub trait Natural:
    Clone
    + Ord
    + Integer
    + Unsigned
    + CheckedAdd
    + CheckedSub
    + CheckedMul
    + From<u64>
    + fmt::Debug
    + fmt::Display
{
}

impl<T> Natural for T where
    T: Clone
        + Ord
        + Integer
        + Unsigned
        + CheckedAdd
        + CheckedSub
        + CheckedMul
        + From<u64>
        + fmt::Debug
        + fmt::Display
{
}

pub fn gcd<T: Natural>(a: T, b: T) -> Result<T> {
    if a.is_zero() && b.is_zero() {
        return Err(Error::Domain("gcd(0, 0) is undefined".into()));
    }
    Ok(a.gcd(&b))
}

/// Least common multiple of two positive integers; overflow is an error.
pub fn lcm_checked<T: Natural>(a: T, b: T) -> Result<T> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::Domain("lcm requires positive arguments".into()));
    }
    let g = a.gcd(&b);
    (a / g).checked_mul(&b).ok_or(Error::Overflow)
}

pub fn smallest_prime_factor(m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::Domain(format!("smallest prime factor of {m}")));
    }
    if m.is_multiple_of(2) {
        return Ok(2);
    }
    let mut p = 3u64;
    while p.saturating_mul(p) <= m {
        if m.is_multiple_of(p) {
            return Ok(p);
        }
        p += 2;
    }
    Ok(m)
}

/// A nonnegative rational in lowest terms.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Fraction<T> {
    num: T,
    den: T,
}

impl<T: Natural> Fraction<T> {
    pub fn new(num: T, den: T) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Domain("zero denominator".into()));
        }
        let g = num.gcd(&den);
        Ok(Self {
            num: num / g.clone(),
            den: den / g,
        })
    }

    pub fn zero() -> Self {
        Self {
            num: T::zero(),
            den: T::one(),
        }
    }

    pub fn one() -> Self {
        Self {
            num: T::one(),
            den: T::one(),
        }
    }

    /// `1/m`.
    pub fn unit(m: u64) -> Result<Self> {
        Self::new(T::one(), T::from(m))
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        Self::new(T::from(num), T::from(den))
    }

    pub fn numer(&self) -> &T {
        &self.num
    }

    pub fn denom(&self) -> &T {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        // a/b + c/d over lcm(b, d) keeps intermediates small.
        let g = self.den.gcd(&rhs.den);
        let left = self.den.clone() / g.clone();
        let right = rhs.den.clone() / g;
        let den = left.checked_mul(&rhs.den).ok_or(Error::Overflow)?;
        let a = self.num.checked_mul(&right).ok_or(Error::Overflow)?;
        let b = rhs.num.checked_mul(&left).ok_or(Error::Overflow)?;
        Self::new(a.checked_add(&b).ok_or(Error::Overflow)?, den)
    }

    /// `self - rhs`; a negative result is [`Error::Underflow`].
    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        let g = self.den.gcd(&rhs.den);
        let left = self.den.clone() / g.clone();
        let right = rhs.den.clone() / g;
        let den = left.checked_mul(&rhs.den).ok_or(Error::Overflow)?;
        let a = self.num.checked_mul(&right).ok_or(Error::Overflow)?;
        let b = rhs.num.checked_mul(&left).ok_or(Error::Overflow)?;
        if a < b {
            return Err(Error::Underflow);
        }
        Self::new(a - b, den)
    }

    pub fn add_unit(&self, m: u64) -> Result<Self> {
        self.checked_add(&Self::unit(m)?)
    }

    /// `self - 1/m`, exact.
    pub fn sub_unit(&self, m: u64) -> Result<Self> {
        frac_sub_unit(self, m)
    }

    /// Nearest `f64`, for diagnostics and conservative float bounds only.
    pub fn approx(&self) -> f64 {
        let n: f64 = self.num.to_string().parse().unwrap_or(f64::INFINITY);
        let d: f64 = self.den.to_string().parse().unwrap_or(f64::INFINITY);
        n / d
    }
}

/// `f - 1/m` in lowest terms. Fails with [`Error::Underflow`] when `1/m > f`.
pub fn frac_sub_unit<T: Natural>(f: &Fraction<T>, m: u64) -> Result<Fraction<T>> {
    if m == 0 {
        return Err(Error::Domain("unit fraction with zero denominator".into()));
    }
    let m = T::from(m);
    let scaled = f.num.checked_mul(&m).ok_or(Error::Overflow)?;
    if scaled < f.den {
        return Err(Error::Underflow);
    }
    let den = f.den.checked_mul(&m).ok_or(Error::Overflow)?;
    Fraction::new(scaled - f.den.clone(), den)
}

/// Compares `a/b` with `c/d` via continued-fraction expansion; never overflows.
fn cmp_ratio<T: Natural>(mut a: T, mut b: T, mut c: T, mut d: T) -> Ordering {
    let mut flipped = false;
    loop {
        let (q1, r1) = a.div_rem(&b);
        let (q2, r2) = c.div_rem(&d);
        let ord = q1.cmp(&q2);
        if ord != Ordering::Equal {
            return if flipped { ord.reverse() } else { ord };
        }
        let ord = match (r1.is_zero(), r2.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => {
                // a/b = q + r1/b; compare b/r1 against d/r2 with the order reversed.
                (a, b, c, d) = (b, r1, d, r2);
                flipped = !flipped;
                continue;
            }
        };
        return if flipped { ord.reverse() } else { ord };
    }
}

impl<T: Natural> PartialOrd for Fraction<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Natural> Ord for Fraction<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_ratio(
            self.num.clone(),
            self.den.clone(),
            other.num.clone(),
            other.den.clone(),
        )
    }
}

impl<T: fmt::Display> fmt::Display for Fraction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl<T: fmt::Display> fmt::Debug for Fraction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fraction({}/{})", self.num, self.den)
    }
}
