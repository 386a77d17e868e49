//! Radix-16 maximally redundant signed-digit numbers.
//!
//! A digit holds five stored bits: four posibits with weights 1, 2, 4, 8 and
//! one negabit with weight 16. Negabits use inverted encoding, so a stored 1
//! is worth 0 and a stored 0 is worth -1. The digit set is therefore
//! `[-16, 15]` and the 32 stored patterns map one-to-one onto it.
//!
//! The negabit of digit `k` sits at bit position `4k + 4`, the same weight as
//! the least significant posibit of digit `k + 1`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DIGIT_MIN: i32 = -16;
pub const DIGIT_MAX: i32 = 15;

/// Sign class of a stored bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    /// Conventional bit with value in `{0, 1}`.
    #[serde(rename = "P")]
    Posibit,
    /// Inverted-encoded negative bit with value in `{-1, 0}`.
    #[serde(rename = "N")]
    Negabit,
}

impl Polarity {
    /// Arithmetic value of a stored bit of this polarity at weight 1.
    #[inline]
    pub fn value(self, stored: bool) -> i32 {
        match self {
            Polarity::Posibit => stored as i32,
            Polarity::Negabit => stored as i32 - 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Polarity::Posibit => 'P',
            Polarity::Negabit => 'N',
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// One radix-16 digit: four posibits and one negabit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MrsdDigit {
    posibits: u8,
    negabit: bool,
}

impl MrsdDigit {
    pub const ZERO: MrsdDigit = MrsdDigit {
        posibits: 0,
        negabit: true,
    };

    /// Builds a digit from its stored bits. `posibits` holds bit `i` at weight `2^i`.
    pub fn new(posibits: u8, negabit: bool) -> Result<Self> {
        if posibits > 0xF {
            return Err(Error::Parse(format!(
                "posibit field {posibits:#x} wider than 4 bits"
            )));
        }
        Ok(MrsdDigit { posibits, negabit })
    }

    /// Decodes a 5-bit stored pattern: bits 0..4 are the posibits, bit 4 is the negabit.
    pub fn from_pattern(pattern: u8) -> Self {
        MrsdDigit {
            posibits: pattern & 0xF,
            negabit: pattern & 0x10 != 0,
        }
    }

    /// The unique digit with the given value.
    pub fn from_value(value: i32) -> Result<Self> {
        if !(DIGIT_MIN..=DIGIT_MAX).contains(&value) {
            return Err(Error::DigitRange(value as i64));
        }
        Ok(Self::from_pattern((value - DIGIT_MIN) as u8))
    }

    pub fn pattern(self) -> u8 {
        self.posibits | ((self.negabit as u8) << 4)
    }

    pub fn posibits(self) -> u8 {
        self.posibits
    }

    pub fn posibit(self, i: usize) -> bool {
        (self.posibits >> i) & 1 == 1
    }

    /// Stored negabit (1 means value 0).
    pub fn negabit(self) -> bool {
        self.negabit
    }

    #[inline]
    pub fn value(self) -> i32 {
        self.posibits as i32 + 16 * Polarity::Negabit.value(self.negabit)
    }
}

pub fn digit_value(digit: MrsdDigit) -> i32 {
    digit.value()
}

/// An N-digit MRSD number, least significant digit first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MrsdNumber {
    digits: Vec<MrsdDigit>,
}

impl MrsdNumber {
    pub fn new(digits: Vec<MrsdDigit>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::ZeroDigits);
        }
        Ok(MrsdNumber { digits })
    }

    /// Builds a number from digit values, least significant first.
    pub fn from_digit_values(values: &[i32]) -> Result<Self> {
        let digits = values
            .iter()
            .map(|&v| MrsdDigit::from_value(v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(digits)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(vec![MrsdDigit::ZERO; n])
    }

    pub fn digits(&self) -> &[MrsdDigit] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digit_values(&self) -> Vec<i32> {
        self.digits.iter().map(|d| d.value()).collect()
    }

    /// Exact value at any width.
    pub fn value(&self) -> BigInt {
        self.digits
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, d| acc * 16 + d.value())
    }

    /// Value as `i128`, or `None` when it does not fit.
    pub fn value_i128(&self) -> Option<i128> {
        self.digits.iter().rev().try_fold(0i128, |acc, d| {
            acc.checked_mul(16)?.checked_add(d.value() as i128)
        })
    }

    /// Stored bits with their polarity and bit position, digit by digit
    /// (posibits ascending, then the negabit).
    pub fn typed_bits(&self) -> impl Iterator<Item = (bool, Polarity, u32)> + '_ {
        self.digits.iter().enumerate().flat_map(|(k, d)| {
            let base = 4 * k as u32;
            (0..4)
                .map(move |i| (d.posibit(i), Polarity::Posibit, base + i as u32))
                .chain(std::iter::once((d.negabit, Polarity::Negabit, base + 4)))
        })
    }
}

impl fmt::Display for MrsdNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<String> = self.digit_values().iter().map(i32::to_string).collect();
        write!(f, "[{}]", values.join(", "))
    }
}

pub fn number_value(x: &MrsdNumber) -> BigInt {
    x.value()
}

/// `(min, max)` over all N-digit encodings: `(-16 (16^N - 1) / 15, 16^N - 1)`.
pub fn dynamic_range(n: usize) -> Result<(BigInt, BigInt)> {
    if n == 0 {
        return Err(Error::ZeroDigits);
    }
    let span = BigInt::from(16).pow(n as u32) - BigInt::one();
    let lo = -(&span * BigInt::from(16)) / BigInt::from(15);
    Ok((lo, span))
}

/// `dynamic_range` in machine integers, for widths up to 30 digits.
pub fn dynamic_range_i128(n: usize) -> Result<(i128, i128)> {
    if n == 0 {
        return Err(Error::ZeroDigits);
    }
    if n > 30 {
        return Err(Error::TooManyDigits { digits: n, max: 30 });
    }
    let span = (1i128 << (4 * n)) - 1;
    Ok((-(span * 16) / 15, span))
}

fn range_error<T: fmt::Display>(value: T, below: bool, digits: usize, lo: T, hi: T) -> Error {
    Error::OutOfRange {
        value: value.to_string(),
        bound: if below { "below" } else { "above" },
        digits,
        lo: lo.to_string(),
        hi: hi.to_string(),
    }
}

/// Canonical N-digit encoding of `v`.
///
/// Digits are peeled least significant first. Each lower digit takes the
/// remainder in `[0, 15]` unless that leaves a quotient below the range of
/// the remaining digits, in which case it borrows and takes `remainder - 16`.
/// The most significant digit receives whatever is left.
pub fn encode_value(v: &BigInt, n: usize) -> Result<MrsdNumber> {
    let (lo, hi) = dynamic_range(n)?;
    if *v < lo || *v > hi {
        return Err(range_error(v.clone(), *v < lo, n, lo, hi));
    }
    let mut digits = Vec::with_capacity(n);
    let mut rest = v.clone();
    for k in 0..n - 1 {
        let (mut q, r) = rest.div_mod_floor(&BigInt::from(16));
        let mut d = r.to_i32().expect("remainder below 16");
        let (sub_lo, _) = dynamic_range(n - 1 - k)?;
        if q < sub_lo {
            d -= 16;
            q += 1;
        }
        digits.push(MrsdDigit::from_value(d)?);
        rest = q;
    }
    debug_assert!(rest.abs() <= BigInt::from(16));
    digits.push(MrsdDigit::from_value(
        rest.to_i32().expect("top digit in range"),
    )?);
    MrsdNumber::new(digits)
}

/// [`encode_value`] on machine integers. Produces the identical encoding.
pub fn encode_i128(v: i128, n: usize) -> Result<MrsdNumber> {
    if n > 30 {
        return encode_value(&BigInt::from(v), n);
    }
    let (lo, hi) = dynamic_range_i128(n)?;
    if v < lo || v > hi {
        return Err(range_error(v, v < lo, n, lo, hi));
    }
    let mut digits = Vec::with_capacity(n);
    let mut rest = v;
    for k in 0..n - 1 {
        let mut q = rest.div_euclid(16);
        let mut d = rest.rem_euclid(16) as i32;
        let (sub_lo, _) = dynamic_range_i128(n - 1 - k)?;
        if q < sub_lo {
            d -= 16;
            q += 1;
        }
        digits.push(MrsdDigit::from_value(d)?);
        rest = q;
    }
    digits.push(MrsdDigit::from_value(rest as i32)?);
    MrsdNumber::new(digits)
}

/// Draws an N-digit number whose 5N stored bits are independent and uniform.
///
/// Bits are taken from successive `next_u64` words, twelve digits (60 bits)
/// per word, lowest bits first.
pub fn random_number<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> MrsdNumber {
    assert!(n >= 1, "random_number needs at least one digit");
    let mut digits = Vec::with_capacity(n);
    while digits.len() < n {
        let mut word = rng.next_u64();
        for _ in 0..12.min(n - digits.len()) {
            digits.push(MrsdDigit::from_pattern((word & 0x1F) as u8));
            word >>= 5;
        }
    }
    MrsdNumber { digits }
}
