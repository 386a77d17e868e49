//! Exact error bookkeeping in column units.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// An exact rational error measured in units of a column's bit weight.
///
/// Every cell mean error is an average of integer row errors over 4 or 8
/// truth-table rows, so all quantities the design flow manipulates are
/// multiples of 1/8. They are stored as an integer count of eighths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Eighths(i64);

impl Eighths {
    pub const ZERO: Eighths = Eighths(0);

    pub const fn from_eighths(n: i64) -> Self {
        Eighths(n)
    }

    pub const fn from_quarters(n: i64) -> Self {
        Eighths(2 * n)
    }

    pub const fn from_int(n: i64) -> Self {
        Eighths(8 * n)
    }

    pub const fn eighths(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> Self {
        Eighths(self.0.abs())
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 8.0
    }

    /// Reduced `(numerator, denominator)` pair.
    pub fn ratio(self) -> (i64, i64) {
        let g = self.0.gcd(&8);
        (self.0 / g, 8 / g)
    }
}

impl Add for Eighths {
    type Output = Eighths;
    fn add(self, rhs: Self) -> Self {
        Eighths(self.0 + rhs.0)
    }
}

impl AddAssign for Eighths {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for Eighths {
    type Output = Eighths;
    fn sub(self, rhs: Self) -> Self {
        Eighths(self.0 - rhs.0)
    }
}

impl Neg for Eighths {
    type Output = Eighths;
    fn neg(self) -> Self {
        Eighths(-self.0)
    }
}

impl Mul<i64> for Eighths {
    type Output = Eighths;
    fn mul(self, rhs: i64) -> Self {
        Eighths(self.0 * rhs)
    }
}

impl std::iter::Sum for Eighths {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Eighths::ZERO, Add::add)
    }
}

impl fmt::Display for Eighths {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ratio() {
            (n, 1) => write!(f, "{n}"),
            (n, d) => write!(f, "{n}/{d}"),
        }
    }
}

impl FromStr for Eighths {
    type Err = Error;

    /// Accepts `n`, `n/d` with `d` dividing 8, or a `+` prefixed form of either.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(s.to_string());
        let t = s.trim();
        let t = t.strip_prefix('+').unwrap_or(t);
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (
                n.trim().parse::<i64>().map_err(|_| bad())?,
                d.trim().parse::<i64>().map_err(|_| bad())?,
            ),
            None => (t.parse::<i64>().map_err(|_| bad())?, 1),
        };
        if den <= 0 || 8 % den != 0 {
            return Err(bad());
        }
        Ok(Eighths(num * (8 / den)))
    }
}

impl Serialize for Eighths {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Eighths {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
