//! Reduction cells: exact full/half adders over any polarity mix and the six
//! approximate full adders.
//!
//! Truth tables operate on stored bits. Input row `r` assigns bit `i` of `r`
//! to input `i`; inputs are listed posibits first. Under the inverted negabit
//! encoding the ordinary binary FA/HA tables are value-exact for every
//! polarity mix, provided the outputs take the polarities returned by
//! [`exact_output_polarities`].
//!
//! The approximate cells are fixed by their input mix and a target mean
//! error. Their default tables come from an exhaustive search over all
//! 4^8 output tables (see [`derive_default_library`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::logic::min_sop_literals;
use crate::mrsd::Polarity::{self, Negabit, Posibit};
use crate::units::Eighths;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CellKind {
    #[serde(rename = "FA_PP")]
    FaPp,
    #[serde(rename = "FA_PN1")]
    FaPn1,
    #[serde(rename = "FA_PN2")]
    FaPn2,
    #[serde(rename = "FA_NP1")]
    FaNp1,
    #[serde(rename = "FA_NP2")]
    FaNp2,
    #[serde(rename = "FA_NN")]
    FaNn,
    #[serde(rename = "FA_EXACT")]
    FaExact,
    #[serde(rename = "HA_EXACT")]
    HaExact,
}

impl CellKind {
    /// Approximate cells in branch order.
    pub const APPROXIMATE: [CellKind; 6] = [
        CellKind::FaPp,
        CellKind::FaPn1,
        CellKind::FaPn2,
        CellKind::FaNp1,
        CellKind::FaNp2,
        CellKind::FaNn,
    ];

    pub const ALL: [CellKind; 8] = [
        CellKind::FaPp,
        CellKind::FaPn1,
        CellKind::FaPn2,
        CellKind::FaNp1,
        CellKind::FaNp2,
        CellKind::FaNn,
        CellKind::FaExact,
        CellKind::HaExact,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            CellKind::FaPp => "FA_PP",
            CellKind::FaPn1 => "FA_PN1",
            CellKind::FaPn2 => "FA_PN2",
            CellKind::FaNp1 => "FA_NP1",
            CellKind::FaNp2 => "FA_NP2",
            CellKind::FaNn => "FA_NN",
            CellKind::FaExact => "FA_EXACT",
            CellKind::HaExact => "HA_EXACT",
        }
    }

    pub fn from_name(name: &str) -> Option<CellKind> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_approximate(self) -> bool {
        self.index() < 6
    }

    /// `(posibits, negabits)` consumed by an approximate cell.
    pub fn input_mix(self) -> Option<(u32, u32)> {
        match self {
            CellKind::FaPp => Some((3, 0)),
            CellKind::FaPn1 | CellKind::FaPn2 => Some((2, 1)),
            CellKind::FaNp1 | CellKind::FaNp2 => Some((1, 2)),
            CellKind::FaNn => Some((0, 3)),
            _ => None,
        }
    }

    /// Design mean error of an approximate cell, in column units.
    pub fn target_mean_error(self) -> Option<Eighths> {
        let q = match self {
            CellKind::FaPp => 1,
            CellKind::FaPn1 => 1,
            CellKind::FaPn2 => -2,
            CellKind::FaNp1 => -1,
            CellKind::FaNp2 => 2,
            CellKind::FaNn => -1,
            _ => return None,
        };
        Some(Eighths::from_quarters(q))
    }

    fn canonical_inputs(self) -> Option<Vec<Polarity>> {
        let (p, n) = self.input_mix()?;
        Some(
            std::iter::repeat_n(Posibit, p as usize)
                .chain(std::iter::repeat_n(Negabit, n as usize))
                .collect(),
        )
    }
}

impl fmt::Display for CellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `(sum, carry)` polarities that make the binary FA/HA exact for the given
/// input polarities.
pub fn exact_output_polarities(inputs: &[Polarity]) -> Result<(Polarity, Polarity)> {
    if !(2..=3).contains(&inputs.len()) {
        return Err(Error::Arity {
            cell: "adder",
            expected: 3,
            got: inputs.len(),
        });
    }
    let negs = inputs.iter().filter(|&&p| p == Negabit).count();
    let sum = if negs % 2 == 1 { Negabit } else { Posibit };
    let carry = if negs >= 2 { Negabit } else { Posibit };
    Ok((sum, carry))
}

/// A reduction cell: input polarities, output polarities and stored-bit table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSpec {
    pub kind: CellKind,
    pub inputs: Vec<Polarity>,
    pub sum: Polarity,
    pub carry: Polarity,
    /// `(sum, carry)` per input row; `2^arity` rows.
    pub table: Vec<(bool, bool)>,
}

fn binary_adder_table(arity: usize) -> Vec<(bool, bool)> {
    (0..1u32 << arity)
        .map(|r| {
            let ones = r.count_ones();
            (ones & 1 == 1, ones >= 2)
        })
        .collect()
}

impl CellSpec {
    pub fn exact_fa(inputs: [Polarity; 3]) -> CellSpec {
        let (sum, carry) = exact_output_polarities(&inputs).expect("three inputs");
        CellSpec {
            kind: CellKind::FaExact,
            inputs: inputs.to_vec(),
            sum,
            carry,
            table: binary_adder_table(3),
        }
    }

    pub fn exact_ha(inputs: [Polarity; 2]) -> CellSpec {
        let (sum, carry) = exact_output_polarities(&inputs).expect("two inputs");
        CellSpec {
            kind: CellKind::HaExact,
            inputs: inputs.to_vec(),
            sum,
            carry,
            table: binary_adder_table(2),
        }
    }

    pub fn arity(&self) -> usize {
        self.inputs.len()
    }

    pub fn rows(&self) -> usize {
        1 << self.arity()
    }

    #[inline]
    pub fn lookup(&self, row: usize) -> (bool, bool) {
        self.table[row]
    }

    /// Output value minus input value on `row`, in column units.
    pub fn row_error(&self, row: usize) -> i32 {
        let (s, c) = self.table[row];
        let out = self.sum.value(s) + 2 * self.carry.value(c);
        let input: i32 = self
            .inputs
            .iter()
            .enumerate()
            .map(|(i, p)| p.value(row >> i & 1 == 1))
            .sum();
        out - input
    }

    pub fn row_errors(&self) -> Vec<i32> {
        (0..self.rows()).map(|r| self.row_error(r)).collect()
    }

    /// Uniform average of the row errors.
    pub fn mean_error(&self) -> Eighths {
        let total: i64 = self.row_errors().iter().map(|&e| e as i64).sum();
        Eighths::from_eighths(total * (8 / self.rows() as i64))
    }

    /// Minimum two-level literal count of the sum and carry functions.
    pub fn literal_cost(&self) -> u32 {
        let (sum, carry) = self.truth_bytes();
        min_sop_literals(sum, self.arity()) + min_sop_literals(carry, self.arity())
    }

    fn truth_bytes(&self) -> (u8, u8) {
        self.table
            .iter()
            .enumerate()
            .fold((0u8, 0u8), |(s, c), (r, &(sb, cb))| {
                (s | (sb as u8) << r, c | (cb as u8) << r)
            })
    }

    /// Table packed as `sum | carry << 1` per row, padded to 8 rows.
    pub(crate) fn packed(&self) -> [u8; 8] {
        let mut out = [0u8; 8];
        for (r, &(s, c)) in self.table.iter().enumerate() {
            out[r] = s as u8 | (c as u8) << 1;
        }
        out
    }

    fn check_shape(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Library(format!("{}: {msg}", self.kind)));
        if let Some(expected) = self.kind.canonical_inputs() {
            if self.inputs != expected {
                return bad(format!("inputs must be {}", polarity_string(&expected)));
            }
        }
        let (sum, carry) = exact_output_polarities(&self.inputs)?;
        if (self.sum, self.carry) != (sum, carry) {
            return bad(format!("outputs must be sum {sum}, carry {carry}"));
        }
        if self.table.len() != self.rows() {
            return bad(format!(
                "table has {} rows, expected {}",
                self.table.len(),
                self.rows()
            ));
        }
        Ok(())
    }
}

pub(crate) fn polarity_string(ps: &[Polarity]) -> String {
    ps.iter().map(|p| p.symbol()).collect()
}

pub fn apply_cell(cell: &CellSpec, inputs: &[bool]) -> Result<(bool, bool)> {
    if inputs.len() != cell.arity() {
        return Err(Error::Arity {
            cell: cell.kind.name(),
            expected: cell.arity(),
            got: inputs.len(),
        });
    }
    let row = inputs
        .iter()
        .enumerate()
        .fold(0usize, |r, (i, &b)| r | (b as usize) << i);
    Ok(cell.lookup(row))
}

pub fn cell_mean_error(cell: &CellSpec) -> Eighths {
    cell.mean_error()
}

/// The six approximate cells, in branch order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellLibrary {
    cells: Vec<CellSpec>,
}

impl CellLibrary {
    /// Builds a library, checking that each approximate slot appears once with
    /// the right input and output polarities.
    pub fn from_cells(mut cells: Vec<CellSpec>) -> Result<Self> {
        cells.sort_by_key(|c| c.kind);
        let kinds: Vec<CellKind> = cells.iter().map(|c| c.kind).collect();
        if kinds != CellKind::APPROXIMATE {
            let names: Vec<&str> = kinds.iter().map(|k| k.name()).collect();
            return Err(Error::Library(format!(
                "expected one cell for each of FA_PP, FA_PN1, FA_PN2, FA_NP1, FA_NP2, FA_NN; got {names:?}"
            )));
        }
        for c in &cells {
            c.check_shape()?;
        }
        Ok(CellLibrary { cells })
    }

    pub fn cells(&self) -> &[CellSpec] {
        &self.cells
    }

    pub fn get(&self, kind: CellKind) -> &CellSpec {
        assert!(kind.is_approximate(), "{kind} is not a library cell");
        &self.cells[kind.index()]
    }

    pub fn mean_error(&self, kind: CellKind) -> Eighths {
        match kind {
            CellKind::FaExact | CellKind::HaExact => Eighths::ZERO,
            k => self.get(k).mean_error(),
        }
    }

    /// Largest mean-error magnitude any single cell can add to a column.
    pub fn max_mean_shift(&self) -> Eighths {
        self.cells
            .iter()
            .map(|c| c.mean_error().abs())
            .max()
            .unwrap_or(Eighths::ZERO)
    }

    /// Gate-count proxy for a cell kind.
    pub fn literal_cost(&self, kind: CellKind) -> u32 {
        match kind {
            CellKind::FaExact => CellSpec::exact_fa([Posibit; 3]).literal_cost(),
            CellKind::HaExact => CellSpec::exact_ha([Posibit; 2]).literal_cost(),
            k => self.get(k).literal_cost(),
        }
    }
}

/// Erroneous rows, literal cost, table bytes.
type RankKey = (usize, u32, Vec<u8>);

/// Search for the default table of one approximate slot.
///
/// Among all tables whose mean error equals the slot target and whose row
/// errors lie in `{-1, 0, +1}`, picks the one with the fewest erroneous rows,
/// then the lowest literal count, then the lexicographically smallest table.
pub fn derive_cell(kind: CellKind) -> CellSpec {
    let inputs = kind.canonical_inputs().expect("approximate cell");
    let target = kind
        .target_mean_error()
        .expect("approximate cell")
        .eighths();
    let (sum, carry) = exact_output_polarities(&inputs).expect("three inputs");
    let mut best: Option<(RankKey, CellSpec)> = None;
    for code in 0u32..1 << 16 {
        let table: Vec<(bool, bool)> = (0..8)
            .map(|r| {
                let e = code >> (2 * (7 - r)) & 3;
                (e & 2 != 0, e & 1 != 0)
            })
            .collect();
        let cell = CellSpec {
            kind,
            inputs: inputs.clone(),
            sum,
            carry,
            table,
        };
        let errs = cell.row_errors();
        if errs.iter().any(|e| e.abs() > 1) || errs.iter().sum::<i32>() as i64 != target {
            continue;
        }
        let key = (
            errs.iter().filter(|&&e| e != 0).count(),
            cell.literal_cost(),
            cell.table
                .iter()
                .map(|&(s, c)| (s as u8) << 1 | c as u8)
                .collect::<Vec<u8>>(),
        );
        if best.as_ref().is_none_or(|(k, _)| key < *k) {
            best = Some((key, cell));
        }
    }
    best.expect("a feasible table always exists").1
}

pub fn derive_default_library() -> CellLibrary {
    CellLibrary::from_cells(
        CellKind::APPROXIMATE
            .iter()
            .map(|&k| derive_cell(k))
            .collect(),
    )
    .expect("derived cells are well formed")
}
