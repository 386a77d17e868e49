//! Partial-product generation over polarity-typed bits.
//!
//! Every operand bit of `a` is multiplied with every operand bit of `b`. The
//! product of two typed bits is a single typed bit at the summed position:
//!
//! | operands | result  | stored bit      |
//! |----------|---------|-----------------|
//! | P x P    | posibit | `p AND q`       |
//! | P x N    | negabit | `NOT p OR n`    |
//! | N x N    | posibit | `n1 NOR n2`     |
//!
//! These gates are the unique stored-bit functions that preserve value under
//! the inverted negabit encoding.

use serde::{Deserialize, Serialize};

use crate::mrsd::{MrsdNumber, Polarity};
use crate::{Error, Result};

/// A stored bit with its polarity and bit position (weight `2^column`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TypedBit {
    pub stored: bool,
    pub polarity: Polarity,
    pub column: u32,
}

impl TypedBit {
    pub fn new(stored: bool, polarity: Polarity, column: u32) -> Self {
        TypedBit {
            stored,
            polarity,
            column,
        }
    }

    #[inline]
    pub fn value(&self) -> i128 {
        (self.polarity.value(self.stored) as i128) << self.column
    }
}

/// Polarity of the product of two bits.
#[inline]
pub fn product_polarity(a: Polarity, b: Polarity) -> Polarity {
    if a == b {
        Polarity::Posibit
    } else {
        Polarity::Negabit
    }
}

#[inline]
fn product_stored(a: bool, pa: Polarity, b: bool, pb: Polarity) -> bool {
    use Polarity::*;
    match (pa, pb) {
        (Posibit, Posibit) => a & b,
        (Posibit, Negabit) => !a | b,
        (Negabit, Posibit) => !b | a,
        (Negabit, Negabit) => !(a | b),
    }
}

pub fn product_bit(a: TypedBit, b: TypedBit) -> TypedBit {
    TypedBit {
        stored: product_stored(a.stored, a.polarity, b.stored, b.polarity),
        polarity: product_polarity(a.polarity, b.polarity),
        column: a.column + b.column,
    }
}

/// The partial-product bit matrix of an N x N digit multiplication.
///
/// Bits are kept in generation order: the outer loop walks the bits of `a`,
/// the inner loop the bits of `b`, each in [`MrsdNumber::typed_bits`] order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PpMatrix {
    digits: usize,
    bits: Vec<TypedBit>,
}

impl PpMatrix {
    pub fn digits(&self) -> usize {
        self.digits
    }

    pub fn bits(&self) -> &[TypedBit] {
        &self.bits
    }

    /// Number of bit positions, `8N + 1`.
    pub fn width(&self) -> usize {
        8 * self.digits + 1
    }

    /// Bits grouped by position, each group in generation order.
    pub fn columns(&self) -> Vec<Vec<TypedBit>> {
        let mut cols = vec![Vec::new(); self.width()];
        for b in &self.bits {
            cols[b.column as usize].push(*b);
        }
        cols
    }

    pub fn value(&self) -> i128 {
        self.bits.iter().map(TypedBit::value).sum()
    }
}

pub fn generate(a: &MrsdNumber, b: &MrsdNumber) -> Result<PpMatrix> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let rhs: Vec<TypedBit> = b
        .typed_bits()
        .map(|(s, p, c)| TypedBit::new(s, p, c))
        .collect();
    let mut bits = Vec::with_capacity(rhs.len() * rhs.len());
    for (s, p, c) in a.typed_bits() {
        let lhs = TypedBit::new(s, p, c);
        bits.extend(rhs.iter().map(|&r| product_bit(lhs, r)));
    }
    Ok(PpMatrix {
        digits: a.len(),
        bits,
    })
}

/// Writes the stored product bits of `a x b` into `out` in generation order.
///
/// Same order as [`generate`], without building typed bits. `out` must hold
/// `(5N)^2` entries.
pub(crate) fn fill_stored(a: &MrsdNumber, b: &MrsdNumber, out: &mut [bool]) {
    let rhs: Vec<(bool, Polarity)> = b.typed_bits().map(|(s, p, _)| (s, p)).collect();
    let mut i = 0;
    for (sa, pa, _) in a.typed_bits() {
        for &(sb, pb) in &rhs {
            out[i] = product_stored(sa, pa, sb, pb);
            i += 1;
        }
    }
}

/// Posibit and negabit population of one column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnCount {
    pub pos: u32,
    pub neg: u32,
}

impl ColumnCount {
    pub fn new(pos: u32, neg: u32) -> Self {
        ColumnCount { pos, neg }
    }

    pub fn height(&self) -> u32 {
        self.pos + self.neg
    }

    pub fn add(&mut self, p: Polarity) {
        match p {
            Polarity::Posibit => self.pos += 1,
            Polarity::Negabit => self.neg += 1,
        }
    }
}

/// Per-position polarity counts of a bit matrix.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub columns: Vec<ColumnCount>,
}

impl ColumnProfile {
    pub fn total(&self) -> u64 {
        self.columns.iter().map(|c| c.height() as u64).sum()
    }

    pub fn max_height(&self) -> u32 {
        self.columns
            .iter()
            .map(ColumnCount::height)
            .max()
            .unwrap_or(0)
    }
}

pub fn column_profile(m: &PpMatrix) -> ColumnProfile {
    let mut columns = vec![ColumnCount::default(); m.width()];
    for b in &m.bits {
        columns[b.column as usize].add(b.polarity);
    }
    ColumnProfile { columns }
}

/// Profile of any N-digit product; polarities do not depend on operand values.
pub fn symbolic_profile(digits: usize) -> Result<ColumnProfile> {
    let zero = MrsdNumber::zero(digits)?;
    Ok(column_profile(&generate(&zero, &zero)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrsd::random_number;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use Polarity::*;

    fn bit(stored: bool, p: Polarity) -> TypedBit {
        TypedBit::new(stored, p, 0)
    }

    #[test]
    fn product_bit_examples() {
        let r = product_bit(bit(true, Posibit), bit(true, Posibit));
        assert_eq!((r.polarity, r.value()), (Posibit, 1));
        let r = product_bit(bit(true, Posibit), bit(false, Negabit));
        assert_eq!((r.polarity, r.stored, r.value()), (Negabit, false, -1));
        let r = product_bit(bit(false, Negabit), bit(false, Negabit));
        assert_eq!((r.polarity, r.stored, r.value()), (Posibit, true, 1));
        let r = product_bit(bit(false, Posibit), bit(false, Negabit));
        assert_eq!((r.polarity, r.stored, r.value()), (Negabit, true, 0));
    }

    #[test]
    fn product_gates_preserve_value_exhaustively() {
        for pa in [Posibit, Negabit] {
            for pb in [Posibit, Negabit] {
                for sa in [false, true] {
                    for sb in [false, true] {
                        let a = TypedBit::new(sa, pa, 2);
                        let b = TypedBit::new(sb, pb, 3);
                        let r = product_bit(a, b);
                        assert_eq!(r.column, 5);
                        assert_eq!(
                            pa.value(sa) * pb.value(sb),
                            r.polarity.value(r.stored),
                            "{pa:?}({sa}) x {pb:?}({sb})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn generate_small_examples() {
        let one = MrsdNumber::from_digit_values(&[1]).unwrap();
        assert_eq!(generate(&one, &one).unwrap().value(), 1);
        let a = MrsdNumber::from_digit_values(&[-16]).unwrap();
        let b = MrsdNumber::from_digit_values(&[15]).unwrap();
        assert_eq!(generate(&a, &b).unwrap().value(), -240);
    }

    #[test]
    fn generate_rejects_mismatched_widths() {
        let a = MrsdNumber::from_digit_values(&[1]).unwrap();
        let b = MrsdNumber::from_digit_values(&[1, 1]).unwrap();
        assert!(matches!(
            generate(&a, &b),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn one_digit_products_exhaustive() {
        for x in -16..=15 {
            for y in -16..=15 {
                let a = MrsdNumber::from_digit_values(&[x]).unwrap();
                let b = MrsdNumber::from_digit_values(&[y]).unwrap();
                let m = generate(&a, &b).unwrap();
                assert_eq!(m.value(), (x * y) as i128);
                assert_eq!(m.bits().len(), 25);
            }
        }
    }

    #[test]
    fn conservation_and_polarity_closure_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1usize, 2, 4] {
            for _ in 0..10_000 {
                let a = random_number(n, &mut rng);
                let b = random_number(n, &mut rng);
                let m = generate(&a, &b).unwrap();
                assert_eq!(m.value(), a.value_i128().unwrap() * b.value_i128().unwrap());
                assert_eq!(m.bits().len(), 25 * n * n);
                let ops: Vec<_> = a.typed_bits().collect();
                let rhs: Vec<_> = b.typed_bits().collect();
                for (i, bit) in m.bits().iter().enumerate() {
                    let (pa, pb) = (ops[i / rhs.len()].1, rhs[i % rhs.len()].1);
                    assert_eq!(bit.polarity == Posibit, pa == pb);
                }
            }
        }
    }

    #[test]
    fn fill_stored_matches_generate() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_number(3, &mut rng);
        let b = random_number(3, &mut rng);
        let m = generate(&a, &b).unwrap();
        let mut out = vec![false; m.bits().len()];
        fill_stored(&a, &b, &mut out);
        assert!(m.bits().iter().zip(&out).all(|(t, &s)| t.stored == s));
    }

    /// Counts (pos, neg) per position by walking every bit pair directly.
    fn brute_profile() -> Vec<(u32, u32)> {
        let mut cols = vec![(0, 0); 9];
        let op: Vec<(u32, bool)> = (0..4).map(|i| (i, false)).chain([(4, true)]).collect();
        for &(ca, na) in &op {
            for &(cb, nb) in &op {
                let c = &mut cols[(ca + cb) as usize];
                if na == nb {
                    c.0 += 1;
                } else {
                    c.1 += 1;
                }
            }
        }
        cols
    }

    #[test]
    fn one_digit_profile() {
        let p = symbolic_profile(1).unwrap();
        let got: Vec<(u32, u32)> = p.columns.iter().map(|c| (c.pos, c.neg)).collect();
        assert_eq!(got, brute_profile());
        assert_eq!(
            got,
            vec![
                (1, 0),
                (2, 0),
                (3, 0),
                (4, 0),
                (3, 2),
                (2, 2),
                (1, 2),
                (0, 2),
                (1, 0)
            ]
        );
    }

    #[test]
    fn profile_totals() {
        assert_eq!(
            column_profile(&PpMatrix {
                digits: 1,
                bits: vec![]
            })
            .total(),
            0
        );
        for n in 1..=8 {
            assert_eq!(symbolic_profile(n).unwrap().total(), 25 * (n * n) as u64);
        }
    }

    #[test]
    fn profile_independent_of_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_number(2, &mut rng);
        let b = random_number(2, &mut rng);
        assert_eq!(
            column_profile(&generate(&a, &b).unwrap()),
            symbolic_profile(2).unwrap()
        );
    }
}
