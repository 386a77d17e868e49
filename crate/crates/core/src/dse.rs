//! Assignment of reduction cells to the columns of every Wallace stage.
//!
//! Each reduction stage is split at the border column `b` (1-based, counted
//! from the product LSB). Columns left of `b` use approximate full adders and
//! exact half adders, the border column may also use exact full adders, and
//! columns right of `b` are fully exact.
//!
//! For approximate and border columns, [`assign_column`] chooses the cell
//! multiset whose accumulated mean error has the smallest magnitude. It is a
//! depth-first branch-and-bound over cell sequences in non-decreasing branch
//! order (`FA_PP`, `FA_PN1`, `FA_PN2`, `FA_NP1`, `FA_NP2`, `FA_NN`, then
//! `FA_EXACT`), so every multiset is reached exactly once, through its sorted
//! sequence. The first optimum found is kept, which makes the tie-break "most
//! cells of the earliest kind". [`exhaustive_assign`] enumerates count
//! vectors directly and serves as the reference.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cells::{exact_output_polarities, CellKind, CellLibrary};
use crate::mrsd::Polarity::{self, Negabit, Posibit};
use crate::ppgen::{symbolic_profile, ColumnCount, ColumnProfile};
use crate::units::Eighths;
use crate::{Error, Result, MAX_DIGITS};

/// Default bit cap for [`exhaustive_assign`].
pub const EXHAUSTIVE_CAP: u32 = 15;

const STAGE_LIMIT: usize = 64;

/// Multiset of full adders: the six approximate kinds plus `FA_EXACT`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<CellKind, u32>", into = "BTreeMap<CellKind, u32>")]
pub struct CellCounts([u32; 7]);

impl CellCounts {
    pub fn get(&self, kind: CellKind) -> u32 {
        self.0.get(kind.index()).copied().unwrap_or(0)
    }

    pub fn add(&mut self, kind: CellKind, n: u32) {
        assert!(
            kind != CellKind::HaExact,
            "half adders are not counted in a column multiset"
        );
        self.0[kind.index()] += n;
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn approximate(&self) -> u32 {
        self.0[..6].iter().sum()
    }

    /// Non-zero entries in branch order.
    pub fn iter(&self) -> impl Iterator<Item = (CellKind, u32)> + '_ {
        CellKind::ALL[..7]
            .iter()
            .map(|&k| (k, self.get(k)))
            .filter(|&(_, n)| n > 0)
    }

    /// Posibits and negabits eaten by the approximate cells.
    pub fn approximate_consumption(&self) -> (u32, u32) {
        CellKind::APPROXIMATE.iter().fold((0, 0), |(p, n), &k| {
            let (kp, kn) = k.input_mix().expect("approximate");
            (p + kp * self.get(k), n + kn * self.get(k))
        })
    }

    pub fn mean_error(&self, lib: &CellLibrary) -> Eighths {
        self.iter().map(|(k, n)| lib.mean_error(k) * n as i64).sum()
    }
}

impl From<CellCounts> for BTreeMap<CellKind, u32> {
    fn from(c: CellCounts) -> Self {
        c.iter().collect()
    }
}

impl TryFrom<BTreeMap<CellKind, u32>> for CellCounts {
    type Error = String;

    fn try_from(m: BTreeMap<CellKind, u32>) -> std::result::Result<Self, String> {
        let mut c = CellCounts::default();
        for (k, n) in m {
            if k == CellKind::HaExact {
                return Err("HA_EXACT is implied by the leftover bits".into());
            }
            c.add(k, n);
        }
        Ok(c)
    }
}

/// Node counters of one column search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub visited: u64,
    pub pruned: u64,
    /// Branches closed by the posibit-only or negabit-only completion.
    pub forced: u64,
}

impl std::ops::AddAssign for SearchStats {
    fn add_assign(&mut self, o: Self) {
        self.visited += o.visited;
        self.pruned += o.pruned;
        self.forced += o.forced;
    }
}

/// Cell assignment of one column in one stage.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnAssignment {
    pub pos_cnt: u32,
    pub neg_cnt: u32,
    pub cells: CellCounts,
    /// Unconsumed bits: two feed an exact half adder, one passes through.
    pub leftover: Vec<Polarity>,
    pub err_in: Eighths,
    pub err_out: Eighths,
    #[serde(default)]
    pub stats: SearchStats,
}

/// A cell placed in a column, with the polarities of the bits it consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacedCell {
    pub kind: CellKind,
    pub inputs: Vec<Polarity>,
}

impl PlacedCell {
    pub fn outputs(&self) -> (Polarity, Polarity) {
        exact_output_polarities(&self.inputs).expect("2 or 3 inputs")
    }
}

fn polarities(p: u32, n: u32) -> Vec<Polarity> {
    std::iter::repeat_n(Posibit, p as usize)
        .chain(std::iter::repeat_n(Negabit, n as usize))
        .collect()
}

impl ColumnAssignment {
    /// Builds the assignment for a chosen multiset. Exact full adders take
    /// the bits left by the approximate cells, posibits first.
    fn from_cells(
        pos: u32,
        neg: u32,
        cells: CellCounts,
        err_in: Eighths,
        err_out: Eighths,
    ) -> Self {
        let (ap, an) = cells.approximate_consumption();
        let (mut p, mut n) = (pos - ap, neg - an);
        let exact_bits = 3 * cells.get(CellKind::FaExact);
        let take_p = exact_bits.min(p);
        p -= take_p;
        n -= exact_bits - take_p;
        ColumnAssignment {
            pos_cnt: pos,
            neg_cnt: neg,
            cells,
            leftover: polarities(p, n),
            err_in,
            err_out,
            stats: SearchStats::default(),
        }
    }

    pub fn height(&self) -> u32 {
        self.pos_cnt + self.neg_cnt
    }

    /// Cells in wiring order: approximate cells by kind, exact full adders,
    /// then a half adder when two bits are left over.
    pub fn placed_cells(&self) -> Vec<PlacedCell> {
        let mut out = Vec::new();
        for kind in CellKind::APPROXIMATE {
            let (p, n) = kind.input_mix().expect("approximate");
            for _ in 0..self.cells.get(kind) {
                out.push(PlacedCell {
                    kind,
                    inputs: polarities(p, n),
                });
            }
        }
        let (ap, an) = self.cells.approximate_consumption();
        let mut p = self.pos_cnt - ap;
        debug_assert!(self.neg_cnt >= an);
        for _ in 0..self.cells.get(CellKind::FaExact) {
            let tp = p.min(3);
            out.push(PlacedCell {
                kind: CellKind::FaExact,
                inputs: polarities(tp, 3 - tp),
            });
            p -= tp;
        }
        if self.leftover.len() == 2 {
            out.push(PlacedCell {
                kind: CellKind::HaExact,
                inputs: self.leftover.clone(),
            });
        }
        out
    }

    /// Bit passed unchanged to the next stage, if any.
    pub fn pass_through(&self) -> Option<Polarity> {
        match self.leftover.as_slice() {
            [p] => Some(*p),
            _ => None,
        }
    }
}

#[derive(Clone, Copy)]
struct Branch {
    kind: CellKind,
    pos: u32,
    neg: u32,
    err: Eighths,
}

struct Search<'a> {
    branches: &'a [Branch],
    allow_exact: bool,
    bounds: bool,
    max_shift: Eighths,
    path: CellCounts,
    best: Option<(Eighths, CellCounts)>,
    stats: SearchStats,
}

impl Search<'_> {
    fn offer(&mut self, err: Eighths, cells: CellCounts) {
        if self.best.is_none_or(|(b, _)| err.abs() < b.abs()) {
            self.best = Some((err, cells));
        }
    }

    fn forced(&mut self, kind: CellKind, per_cell: Eighths, cells: u32, err: Eighths) {
        self.stats.forced += 1;
        let mut done = self.path;
        done.add(kind, cells);
        self.offer(err + per_cell * cells as i64, done);
    }

    fn visit(&mut self, pos: u32, neg: u32, err: Eighths, first: usize) {
        self.stats.visited += 1;
        let remaining = (pos + neg) / 3;
        if remaining == 0 {
            self.offer(err, self.path);
            return;
        }
        if self.bounds {
            if let Some((best, _)) = self.best {
                // Each remaining cell moves the error by at most max_shift.
                if err.abs() - self.max_shift * remaining as i64 > best.abs() {
                    self.stats.pruned += 1;
                    return;
                }
            }
            if !self.allow_exact && neg == 0 {
                // Only posibits remain: the completion is all FA_PP, if still reachable.
                if first == 0 {
                    self.forced(CellKind::FaPp, self.branches[0].err, remaining, err);
                }
                return;
            }
            if !self.allow_exact && pos == 0 {
                let nn = self.branches[5];
                self.forced(CellKind::FaNn, nn.err, remaining, err);
                return;
            }
        }
        for i in first..self.branches.len() {
            let b = self.branches[i];
            let (bp, bn) = if b.kind == CellKind::FaExact {
                let tp = pos.min(3);
                (tp, 3 - tp)
            } else {
                (b.pos, b.neg)
            };
            if bp > pos || bn > neg {
                continue;
            }
            self.path.add(b.kind, 1);
            self.visit(pos - bp, neg - bn, err + b.err, i);
            self.path.0[b.kind.index()] -= 1;
        }
    }
}

fn branches(lib: &CellLibrary, allow_exact: bool) -> Vec<Branch> {
    let mut out: Vec<Branch> = CellKind::APPROXIMATE
        .iter()
        .map(|&kind| {
            let (pos, neg) = kind.input_mix().expect("approximate");
            Branch {
                kind,
                pos,
                neg,
                err: lib.mean_error(kind),
            }
        })
        .collect();
    if allow_exact {
        out.push(Branch {
            kind: CellKind::FaExact,
            pos: 0,
            neg: 0,
            err: Eighths::ZERO,
        });
    }
    out
}

/// Branch-and-bound cell assignment for one column.
pub fn assign_column(
    pos_cnt: u32,
    neg_cnt: u32,
    err_in: Eighths,
    allow_exact: bool,
    lib: &CellLibrary,
) -> ColumnAssignment {
    assign_column_with(pos_cnt, neg_cnt, err_in, allow_exact, lib, true)
}

/// [`assign_column`] with the pruning bounds switched on or off.
pub fn assign_column_with(
    pos_cnt: u32,
    neg_cnt: u32,
    err_in: Eighths,
    allow_exact: bool,
    lib: &CellLibrary,
    bounds: bool,
) -> ColumnAssignment {
    let branches = branches(lib, allow_exact);
    let mut search = Search {
        branches: &branches,
        allow_exact,
        bounds,
        max_shift: lib.max_mean_shift(),
        path: CellCounts::default(),
        best: None,
        stats: SearchStats::default(),
    };
    search.visit(pos_cnt, neg_cnt, err_in, 0);
    let (err_out, cells) = search.best.expect("every column has a feasible assignment");
    let mut asg = ColumnAssignment::from_cells(pos_cnt, neg_cnt, cells, err_in, err_out);
    asg.stats = search.stats;
    asg
}

/// Reference assignment by enumerating every feasible count vector.
///
/// Ranks candidates by `|error|`, then by descending count of each kind in
/// branch order, matching the tie-break of [`assign_column`]. `stats.visited`
/// counts every candidate vector, feasible or not.
pub fn exhaustive_assign(
    pos_cnt: u32,
    neg_cnt: u32,
    err_in: Eighths,
    allow_exact: bool,
    lib: &CellLibrary,
    cap: u32,
) -> Result<ColumnAssignment> {
    let bits = pos_cnt + neg_cnt;
    if bits > cap {
        return Err(Error::CapExceeded { bits, cap });
    }
    let cells = bits / 3;
    let kinds: &[CellKind] = if allow_exact {
        &CellKind::ALL[..7]
    } else {
        &CellKind::APPROXIMATE
    };
    let mut vectors = Vec::new();
    let mut current = vec![0u32; kinds.len()];
    compositions(cells, 0, &mut current, &mut vectors);

    let mut best: Option<((Eighths, Vec<i64>), CellCounts, Eighths)> = None;
    let visited = vectors.len() as u64;
    for v in vectors {
        let mut counts = CellCounts::default();
        for (&k, &n) in kinds.iter().zip(&v) {
            counts.add(k, n);
        }
        let (p, n) = counts.approximate_consumption();
        if p > pos_cnt || n > neg_cnt {
            continue;
        }
        let err = err_in + counts.mean_error(lib);
        let key = (
            err.abs(),
            v.iter().map(|&c| -(c as i64)).collect::<Vec<_>>(),
        );
        if best.as_ref().is_none_or(|(k, _, _)| key < *k) {
            best = Some((key, counts, err));
        }
    }
    let (_, counts, err) = best.expect("a feasible multiset exists");
    let mut asg = ColumnAssignment::from_cells(pos_cnt, neg_cnt, counts, err_in, err);
    asg.stats.visited = visited;
    Ok(asg)
}

fn compositions(total: u32, at: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if at + 1 == current.len() {
        current[at] = total;
        out.push(current.clone());
        return;
    }
    for c in 0..=total {
        current[at] = c;
        compositions(total - c, at + 1, current, out);
    }
}

/// Position of a column relative to the border.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Approximate,
    Border,
    Exact,
}

impl Region {
    pub fn of(column: u32, border: u32) -> Region {
        use std::cmp::Ordering::*;
        match column.cmp(&border) {
            Less => Region::Approximate,
            Equal => Region::Border,
            Greater => Region::Exact,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedColumn {
    /// 1-based column index; column `c` has bit weight `2^(c-1)`.
    pub column: u32,
    pub region: Region,
    #[serde(flatten)]
    pub assignment: ColumnAssignment,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StagePlan {
    pub columns: Vec<PlannedColumn>,
}

impl StagePlan {
    pub fn profile(&self) -> ColumnProfile {
        ColumnProfile {
            columns: self
                .columns
                .iter()
                .map(|c| ColumnCount::new(c.assignment.pos_cnt, c.assignment.neg_cnt))
                .collect(),
        }
    }
}

/// Per-stage, per-column cell assignments of an N-digit multiplier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignPlan {
    pub digits: usize,
    pub border: u32,
    pub stages: Vec<StagePlan>,
}

pub fn check_geometry(digits: usize, border: u32) -> Result<()> {
    if digits == 0 {
        return Err(Error::ZeroDigits);
    }
    if digits > MAX_DIGITS {
        return Err(Error::TooManyDigits {
            digits,
            max: MAX_DIGITS,
        });
    }
    let max = 8 * digits as u32 + 1;
    if border == 0 || border > max {
        return Err(Error::InvalidBorder {
            border,
            digits,
            max,
        });
    }
    Ok(())
}

/// Profile of the bits a stage hands to the next one.
fn next_profile(stage: &StagePlan) -> ColumnProfile {
    let mut next = vec![ColumnCount::default(); stage.columns.len() + 1];
    for (pos, col) in stage.columns.iter().enumerate() {
        if let Some(p) = col.assignment.pass_through() {
            next[pos].add(p);
        }
        for cell in col.assignment.placed_cells() {
            let (s, c) = cell.outputs();
            next[pos].add(s);
            next[pos + 1].add(c);
        }
    }
    while next.last().is_some_and(|c| c.height() == 0) {
        next.pop();
    }
    ColumnProfile { columns: next }
}

/// Plans every reduction stage of an N-digit multiplier with border `border`.
///
/// Within a stage, approximate and border columns are processed in ascending
/// order with `err_in(t, c) = err_out(t-1, c) + err_out(t, c-1)`. Exact
/// columns carry `err_out = err_in` forward unchanged.
pub fn plan_design(digits: usize, border: u32, lib: &CellLibrary) -> Result<DesignPlan> {
    check_geometry(digits, border)?;
    let mut profile = symbolic_profile(digits)?;
    let mut prev_err: Vec<Eighths> = Vec::new();
    let mut stages = Vec::new();
    while profile.max_height() > 2 {
        if stages.len() == STAGE_LIMIT {
            return Err(Error::Design("reduction did not converge".into()));
        }
        let mut columns: Vec<PlannedColumn> = Vec::with_capacity(profile.columns.len());
        for (pos, count) in profile.columns.iter().enumerate() {
            let column = pos as u32 + 1;
            let region = Region::of(column, border);
            let left = columns
                .last()
                .map_or(Eighths::ZERO, |c| c.assignment.err_out);
            let err_in = prev_err.get(pos).copied().unwrap_or_default() + left;
            let assignment = match region {
                Region::Approximate => assign_column(count.pos, count.neg, err_in, false, lib),
                Region::Border => assign_column(count.pos, count.neg, err_in, true, lib),
                Region::Exact => exact_assignment(count.pos, count.neg, err_in),
            };
            columns.push(PlannedColumn {
                column,
                region,
                assignment,
            });
        }
        let stage = StagePlan { columns };
        prev_err = stage.columns.iter().map(|c| c.assignment.err_out).collect();
        profile = next_profile(&stage);
        stages.push(stage);
    }
    Ok(DesignPlan {
        digits,
        border,
        stages,
    })
}

fn exact_assignment(pos: u32, neg: u32, err_in: Eighths) -> ColumnAssignment {
    let mut cells = CellCounts::default();
    cells.add(CellKind::FaExact, (pos + neg) / 3);
    ColumnAssignment::from_cells(pos, neg, cells, err_in, err_in)
}

/// A plan whose every cell is exact.
pub fn plan_exact(digits: usize, lib: &CellLibrary) -> Result<DesignPlan> {
    // Column 1 only ever holds the single LSB product bit, so a border at
    // column 1 leaves no approximate cell anywhere.
    let plan = plan_design(digits, 1, lib)?;
    debug_assert_eq!(plan.cell_counts().approximate(), 0);
    Ok(plan)
}

impl DesignPlan {
    /// Accumulated error ledger entry `err(stage, column)`; `column` is 1-based.
    pub fn err(&self, stage: usize, column: u32) -> Option<Eighths> {
        let s = self.stages.get(stage)?;
        let c = s.columns.get(column.checked_sub(1)? as usize)?;
        Some(c.assignment.err_out)
    }

    pub fn cell_counts(&self) -> CellCounts {
        let mut total = CellCounts::default();
        for col in self.stages.iter().flat_map(|s| &s.columns) {
            for (k, n) in col.assignment.cells.iter() {
                total.add(k, n);
            }
        }
        total
    }

    pub fn half_adders(&self) -> u32 {
        self.stages
            .iter()
            .flat_map(|s| &s.columns)
            .filter(|c| c.assignment.leftover.len() == 2)
            .count() as u32
    }

    /// Search counters summed over all columns.
    pub fn search_totals(&self) -> SearchStats {
        let mut total = SearchStats::default();
        for col in self.stages.iter().flat_map(|s| &s.columns) {
            total += col.assignment.stats;
        }
        total
    }

    /// Profile of the bits left after the last stage.
    pub fn final_profile(&self) -> Result<ColumnProfile> {
        match self.stages.last() {
            Some(s) => Ok(next_profile(s)),
            None => symbolic_profile(self.digits),
        }
    }

    /// Re-checks every feasibility and bookkeeping invariant of the plan.
    pub fn validate(&self, lib: &CellLibrary) -> Result<()> {
        check_geometry(self.digits, self.border)?;
        let bad = |t: usize, c: u32, msg: &str| {
            Err(Error::Design(format!("stage {t}, column {c}: {msg}")))
        };
        let mut profile = symbolic_profile(self.digits)?;
        let mut prev_err: Vec<Eighths> = Vec::new();
        for (t, stage) in self.stages.iter().enumerate() {
            if profile.max_height() <= 2 {
                return Err(Error::Design(format!(
                    "stage {t} follows a fully reduced profile"
                )));
            }
            if stage.profile() != profile {
                return Err(Error::Design(format!(
                    "stage {t} column counts do not match its inputs"
                )));
            }
            for (pos, col) in stage.columns.iter().enumerate() {
                let a = &col.assignment;
                let c = col.column;
                if c != pos as u32 + 1 {
                    return bad(t, c, "columns out of order");
                }
                if col.region != Region::of(c, self.border) {
                    return bad(t, c, "wrong region for border");
                }
                if a.cells.total() != a.height() / 3 {
                    return bad(t, c, "full-adder count is not floor(height / 3)");
                }
                let (ap, an) = a.cells.approximate_consumption();
                if ap > a.pos_cnt || an > a.neg_cnt {
                    return bad(t, c, "cells consume more bits than the column holds");
                }
                let expected = ColumnAssignment::from_cells(
                    a.pos_cnt, a.neg_cnt, a.cells, a.err_in, a.err_out,
                );
                if expected.leftover != a.leftover {
                    return bad(t, c, "leftover is not the unconsumed remainder");
                }
                match col.region {
                    Region::Approximate if a.cells.get(CellKind::FaExact) > 0 => {
                        return bad(t, c, "exact full adder in the approximate region")
                    }
                    Region::Exact if a.cells.approximate() > 0 => {
                        return bad(t, c, "approximate cell in the exact region")
                    }
                    _ => {}
                }
                let left = if pos > 0 {
                    stage.columns[pos - 1].assignment.err_out
                } else {
                    Eighths::ZERO
                };
                if a.err_in != prev_err.get(pos).copied().unwrap_or_default() + left {
                    return bad(t, c, "err_in does not follow the ledger");
                }
                let expected_out = match col.region {
                    Region::Exact => a.err_in,
                    _ => a.err_in + a.cells.mean_error(lib),
                };
                if a.err_out != expected_out {
                    return bad(t, c, "err_out does not match the assigned cells");
                }
            }
            prev_err = stage.columns.iter().map(|c| c.assignment.err_out).collect();
            profile = next_profile(stage);
        }
        if profile.max_height() > 2 {
            return Err(Error::Design(
                "final stage leaves a column taller than 2".into(),
            ));
        }
        Ok(())
    }
}
