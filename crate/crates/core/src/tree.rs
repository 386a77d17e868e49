//! Materialized reduction trees and bit-accurate evaluation.
//!
//! [`build`] replays a [`DesignPlan`] on concrete wires. Every partial-product
//! bit and every cell output gets a wire id; each cell records which wires it
//! reads and writes. Evaluation fills the product bits, runs the cells in
//! order through their truth tables, and sums the surviving (at most two per
//! column) bits. The final conversion back to MRSD digits is value-exact, so
//! it is modeled as an integer sum followed by [`encode_i128`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cells::{CellKind, CellLibrary, CellSpec};
use crate::dse::DesignPlan;
use crate::mrsd::{dynamic_range_i128, encode_i128, MrsdNumber, Polarity};
use crate::ppgen::{fill_stored, generate, TypedBit};
use crate::{Error, Result};

/// A wire with its polarity and bit position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Wire {
    pub id: u32,
    pub polarity: Polarity,
    pub column: u32,
}

/// One cell instance in the tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellInstance {
    pub kind: CellKind,
    pub stage: u32,
    /// Bit position (0-based) of the cell's inputs and sum output.
    pub column: u32,
    pub inputs: Vec<Wire>,
    pub sum: Wire,
    pub carry: Wire,
}

#[derive(Clone, Copy, Debug)]
struct Gate {
    table: u8,
    arity: u8,
    inputs: [u32; 3],
    sum: u32,
    carry: u32,
}

/// A reduction tree ready for evaluation.
#[derive(Clone, Debug)]
pub struct MultiplierDesign {
    plan: DesignPlan,
    library: CellLibrary,
    product_bits: usize,
    wires: usize,
    cells: Vec<CellInstance>,
    gates: Vec<Gate>,
    tables: [[u8; 8]; 8],
    outputs: Vec<Wire>,
    stage_heights: Vec<u32>,
}

fn exact_tables(lib: &CellLibrary) -> [[u8; 8]; 8] {
    let mut tables = [[0u8; 8]; 8];
    for kind in CellKind::APPROXIMATE {
        tables[kind.index()] = lib.get(kind).packed();
    }
    tables[CellKind::FaExact.index()] = CellSpec::exact_fa([Polarity::Posibit; 3]).packed();
    tables[CellKind::HaExact.index()] = CellSpec::exact_ha([Polarity::Posibit; 2]).packed();
    tables
}

/// A wire and the stage it was created in.
type Aged = (Wire, u32);

/// Wires of one column, posibits first, oldest first within a polarity.
fn ordered(mut bits: Vec<Aged>) -> (Vec<Aged>, Vec<Aged>) {
    bits.sort_by_key(|&(w, age)| (w.polarity, age));
    bits.into_iter()
        .partition(|(w, _)| w.polarity == Polarity::Posibit)
}

/// Wires a plan into a concrete reduction tree.
pub fn build(plan: &DesignPlan, library: &CellLibrary) -> Result<MultiplierDesign> {
    plan.validate(library)?;
    let infeasible = |msg: String| Error::Design(format!("plan infeasible: {msg}"));

    let zero = MrsdNumber::zero(plan.digits)?;
    let pp = generate(&zero, &zero)?;
    let mut live: Vec<Vec<(Wire, u32)>> = vec![Vec::new(); pp.width()];
    for (i, b) in pp.bits().iter().enumerate() {
        live[b.column as usize].push((
            Wire {
                id: i as u32,
                polarity: b.polarity,
                column: b.column,
            },
            0,
        ));
    }
    let mut next_id = pp.bits().len() as u32;
    let mut cells = Vec::new();
    let mut stage_heights = Vec::new();

    for (t, stage) in plan.stages.iter().enumerate() {
        stage_heights.push(live.iter().map(|c| c.len() as u32).max().unwrap_or(0));
        if live.len() != stage.columns.len() {
            return Err(infeasible(format!(
                "stage {t} spans {} columns, wires span {}",
                stage.columns.len(),
                live.len()
            )));
        }
        let age = t as u32 + 1;
        let mut next: Vec<Vec<(Wire, u32)>> = vec![Vec::new(); live.len() + 1];
        for (pos, col) in stage.columns.iter().enumerate() {
            let (mut p, mut n) = ordered(std::mem::take(&mut live[pos]));
            let a = &col.assignment;
            if (p.len() as u32, n.len() as u32) != (a.pos_cnt, a.neg_cnt) {
                return Err(infeasible(format!(
                    "stage {t}, column {}: wire counts differ from plan",
                    col.column
                )));
            }
            let (mut pi, mut ni) = (0usize, 0usize);
            for placed in a.placed_cells() {
                let mut inputs = Vec::with_capacity(3);
                for &pol in &placed.inputs {
                    let w = match pol {
                        Polarity::Posibit => p.get(pi).inspect(|_| pi += 1),
                        Polarity::Negabit => n.get(ni).inspect(|_| ni += 1),
                    };
                    let (w, _) = w.ok_or_else(|| {
                        infeasible(format!("column {} ran out of {pol} bits", col.column))
                    })?;
                    inputs.push(*w);
                }
                let (sp, cp) = placed.outputs();
                let sum = Wire {
                    id: next_id,
                    polarity: sp,
                    column: pos as u32,
                };
                let carry = Wire {
                    id: next_id + 1,
                    polarity: cp,
                    column: pos as u32 + 1,
                };
                next_id += 2;
                next[pos].push((sum, age));
                next[pos + 1].push((carry, age));
                cells.push(CellInstance {
                    kind: placed.kind,
                    stage: t as u32,
                    column: pos as u32,
                    inputs,
                    sum,
                    carry,
                });
            }
            let rest: Vec<(Wire, u32)> = p.drain(pi..).chain(n.drain(ni..)).collect();
            match (rest.as_slice(), a.pass_through()) {
                ([], None) => {}
                ([bit], Some(pol)) if bit.0.polarity == pol => next[pos].push(*bit),
                _ => {
                    return Err(infeasible(format!(
                        "stage {t}, column {}: leftover mismatch",
                        col.column
                    )))
                }
            }
        }
        while next.last().is_some_and(|c| c.is_empty()) {
            next.pop();
        }
        live = next;
    }

    let outputs: Vec<Wire> = live.into_iter().flatten().map(|(w, _)| w).collect();
    stage_heights.push(column_heights(&outputs).into_iter().max().unwrap_or(0));
    let gates = cells
        .iter()
        .map(|c| {
            let mut inputs = [0u32; 3];
            for (slot, w) in inputs.iter_mut().zip(&c.inputs) {
                *slot = w.id;
            }
            Gate {
                table: c.kind.index() as u8,
                arity: c.inputs.len() as u8,
                inputs,
                sum: c.sum.id,
                carry: c.carry.id,
            }
        })
        .collect();

    Ok(MultiplierDesign {
        plan: plan.clone(),
        library: library.clone(),
        product_bits: pp.bits().len(),
        wires: next_id as usize,
        cells,
        gates,
        tables: exact_tables(library),
        outputs,
        stage_heights,
    })
}

fn column_heights(wires: &[Wire]) -> Vec<u32> {
    let width = wires
        .iter()
        .map(|w| w.column as usize + 1)
        .max()
        .unwrap_or(0);
    let mut h = vec![0u32; width];
    for w in wires {
        h[w.column as usize] += 1;
    }
    h
}

/// Reusable wire-value buffer for repeated evaluations.
#[derive(Default)]
pub struct Scratch {
    values: Vec<bool>,
}

impl MultiplierDesign {
    pub fn digits(&self) -> usize {
        self.plan.digits
    }

    pub fn plan(&self) -> &DesignPlan {
        &self.plan
    }

    pub fn library(&self) -> &CellLibrary {
        &self.library
    }

    pub fn cells(&self) -> &[CellInstance] {
        &self.cells
    }

    /// Wires that survive the last reduction stage.
    pub fn outputs(&self) -> &[Wire] {
        &self.outputs
    }

    /// Maximum column height before each stage, then after the last.
    pub fn stage_heights(&self) -> &[u32] {
        &self.stage_heights
    }

    pub fn wire_count(&self) -> usize {
        self.wires
    }

    /// Result width in digits, `2N + 1`.
    pub fn final_width(&self) -> usize {
        2 * self.plan.digits + 1
    }

    /// The same tree with every approximate cell replaced by an exact adder.
    pub fn with_exact_cells(&self) -> MultiplierDesign {
        let mut twin = self.clone();
        let exact = twin.tables[CellKind::FaExact.index()];
        for kind in CellKind::APPROXIMATE {
            twin.tables[kind.index()] = exact;
        }
        twin
    }

    fn check_width(&self, a: &MrsdNumber, b: &MrsdNumber) -> Result<()> {
        for x in [a, b] {
            if x.len() != self.digits() {
                return Err(Error::DimensionMismatch {
                    left: self.digits(),
                    right: x.len(),
                });
            }
        }
        Ok(())
    }

    /// Runs every cell and returns the value of the surviving bits.
    ///
    /// `scratch` is resized on first use. Operand widths are not checked.
    pub(crate) fn run(&self, a: &MrsdNumber, b: &MrsdNumber, scratch: &mut Scratch) -> i128 {
        let v = &mut scratch.values;
        v.resize(self.wires, false);
        fill_stored(a, b, &mut v[..self.product_bits]);
        for g in &self.gates {
            let mut row = 0usize;
            for i in 0..g.arity as usize {
                row |= (v[g.inputs[i] as usize] as usize) << i;
            }
            let out = self.tables[g.table as usize][row];
            v[g.sum as usize] = out & 1 != 0;
            v[g.carry as usize] = out & 2 != 0;
        }
        self.outputs
            .iter()
            .map(|w| (w.polarity.value(v[w.id as usize]) as i128) << w.column)
            .sum()
    }

    /// Value of the product as computed by the tree.
    pub fn evaluate_value(
        &self,
        a: &MrsdNumber,
        b: &MrsdNumber,
        scratch: &mut Scratch,
    ) -> Result<i128> {
        self.check_width(a, b)?;
        Ok(self.run(a, b, scratch))
    }

    /// Surviving bits after the last stage for operands `a`, `b`.
    pub fn final_rows(&self, a: &MrsdNumber, b: &MrsdNumber) -> Result<Vec<TypedBit>> {
        self.check_width(a, b)?;
        let mut scratch = Scratch::default();
        self.run(a, b, &mut scratch);
        Ok(self
            .outputs
            .iter()
            .map(|w| TypedBit::new(scratch.values[w.id as usize], w.polarity, w.column))
            .collect())
    }

    pub fn evaluate(&self, a: &MrsdNumber, b: &MrsdNumber) -> Result<(MrsdNumber, i128)> {
        let rows = self.final_rows(a, b)?;
        let result = finalize(&rows, self.digits())?;
        let value = result.value_i128().expect("result width fits i128");
        Ok((result, value))
    }

    /// Hex SHA-256 over the cell wiring and output wires.
    pub fn wiring_digest(&self) -> String {
        let mut h = Sha256::new();
        for c in &self.cells {
            h.update([c.kind.index() as u8]);
            h.update(c.stage.to_le_bytes());
            h.update(c.column.to_le_bytes());
            for w in c.inputs.iter().chain([&c.sum, &c.carry]) {
                h.update(w.id.to_le_bytes());
            }
        }
        for w in &self.outputs {
            h.update(w.id.to_le_bytes());
            h.update(w.column.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

pub fn evaluate(
    design: &MultiplierDesign,
    a: &MrsdNumber,
    b: &MrsdNumber,
) -> Result<(MrsdNumber, i128)> {
    design.evaluate(a, b)
}

/// Converts the final rows (at most two bits per column) of an N-digit
/// product into a `2N + 1` digit MRSD number.
pub fn finalize(rows: &[TypedBit], digits: usize) -> Result<MrsdNumber> {
    let mut heights: BTreeMap<u32, u32> = BTreeMap::new();
    for b in rows {
        let h = heights.entry(b.column).or_default();
        *h += 1;
        if *h > 2 {
            return Err(Error::Design(format!(
                "column {} holds more than two bits",
                b.column + 1
            )));
        }
    }
    let value: i128 = rows.iter().map(TypedBit::value).sum();
    encode_i128(value, 2 * digits + 1)
}

/// Drops the extra result digit when the value fits in `2N` digits.
pub fn compress_result(x: &MrsdNumber, digits: usize) -> Result<MrsdNumber> {
    let v = x.value_i128().ok_or_else(|| Error::Parse(x.to_string()))?;
    encode_i128(v, 2 * digits)
}

/// Cell usage and cost proxies of a design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignStats {
    pub digits: usize,
    pub border: u32,
    pub counts: BTreeMap<CellKind, u32>,
    /// Share of each full-adder kind among all full adders, in percent.
    pub fa_usage_percent: BTreeMap<CellKind, f64>,
    pub approximate_percent: f64,
    /// Sum of per-cell minimum two-level literal counts.
    pub gate_count: u64,
    /// Reduction stages between the product bits and the final rows.
    pub logic_depth: u32,
    pub stage_heights: Vec<u32>,
}

impl DesignStats {
    /// Most used approximate kind, if any approximate cell exists.
    pub fn dominant_approximate(&self) -> Option<CellKind> {
        CellKind::APPROXIMATE
            .iter()
            .copied()
            .filter(|k| self.counts[k] > 0)
            .max_by_key(|k| (self.counts[k], std::cmp::Reverse(*k)))
    }
}

pub fn stats(design: &MultiplierDesign) -> DesignStats {
    let mut counts: BTreeMap<CellKind, u32> = CellKind::ALL.iter().map(|&k| (k, 0)).collect();
    for c in &design.cells {
        *counts.get_mut(&c.kind).expect("all kinds present") += 1;
    }
    let fa_total: u32 = CellKind::ALL[..7].iter().map(|k| counts[k]).sum();
    let pct = |n: u32| {
        if fa_total == 0 {
            0.0
        } else {
            100.0 * n as f64 / fa_total as f64
        }
    };
    let fa_usage_percent = CellKind::ALL[..7]
        .iter()
        .map(|&k| (k, pct(counts[&k])))
        .collect();
    let approx: u32 = CellKind::APPROXIMATE.iter().map(|k| counts[k]).sum();
    let gate_count = counts
        .iter()
        .map(|(&k, &n)| design.library.literal_cost(k) as u64 * n as u64)
        .sum();
    DesignStats {
        digits: design.digits(),
        border: design.plan.border,
        counts,
        fa_usage_percent,
        approximate_percent: pct(approx),
        gate_count,
        logic_depth: design.plan.stages.len() as u32,
        stage_heights: design.stage_heights.clone(),
    }
}

/// Largest product magnitude of two N-digit operands.
pub fn max_product_magnitude(digits: usize) -> Result<i128> {
    let (lo, hi) = dynamic_range_i128(digits)?;
    let m = lo.abs().max(hi);
    Ok(m * m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::derive_default_library;
    use crate::dse::{plan_design, plan_exact};
    use crate::mrsd::random_number;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::OnceLock;

    fn lib() -> &'static CellLibrary {
        static LIB: OnceLock<CellLibrary> = OnceLock::new();
        LIB.get_or_init(derive_default_library)
    }

    fn num(v: &[i32]) -> MrsdNumber {
        MrsdNumber::from_digit_values(v).unwrap()
    }

    #[test]
    fn exact_one_digit_tree_matches_oracle() {
        let design = build(&plan_exact(1, lib()).unwrap(), lib()).unwrap();
        for x in -16..=15 {
            for y in -16..=15 {
                let (r, v) = design.evaluate(&num(&[x]), &num(&[y])).unwrap();
                assert_eq!(v, (x * y) as i128);
                assert_eq!(r.len(), 3);
            }
        }
        let (_, v) = evaluate(&design, &num(&[-16]), &num(&[15])).unwrap();
        assert_eq!(v, -240);
    }

    #[test]
    fn exact_trees_match_oracle_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2usize, 3, 4] {
            let design = build(&plan_exact(n, lib()).unwrap(), lib()).unwrap();
            let mut s = Scratch::default();
            for _ in 0..5_000 {
                let a = random_number(n, &mut rng);
                let b = random_number(n, &mut rng);
                let v = design.evaluate_value(&a, &b, &mut s).unwrap();
                assert_eq!(v, a.value_i128().unwrap() * b.value_i128().unwrap());
            }
        }
    }

    #[test]
    fn approximate_tree_with_exact_tables_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2usize, 4] {
            let design = build(&plan_design(n, 4 * n as u32 + 4, lib()).unwrap(), lib()).unwrap();
            let twin = design.with_exact_cells();
            let mut s = Scratch::default();
            for _ in 0..10_000 {
                let a = random_number(n, &mut rng);
                let b = random_number(n, &mut rng);
                let v = twin.evaluate_value(&a, &b, &mut s).unwrap();
                assert_eq!(v, a.value_i128().unwrap() * b.value_i128().unwrap());
            }
        }
    }

    #[test]
    fn zero_operand_gives_zero_on_exact_design() {
        let design = build(&plan_exact(2, lib()).unwrap(), lib()).unwrap();
        let zero = MrsdNumber::zero(2).unwrap();
        let (r, v) = design.evaluate(&zero, &num(&[7, -3])).unwrap();
        assert_eq!(v, 0);
        assert_eq!(r, MrsdNumber::zero(5).unwrap());
    }

    #[test]
    fn evaluate_rejects_width_mismatch() {
        let design = build(&plan_exact(2, lib()).unwrap(), lib()).unwrap();
        assert!(matches!(
            design.evaluate(&num(&[1]), &num(&[1])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn stage_heights_decrease() {
        for n in 1..=8 {
            let design = build(&plan_design(n, 4 * n as u32, lib()).unwrap(), lib()).unwrap();
            let h = design.stage_heights();
            assert!(h.windows(2).all(|w| w[1] < w[0] || w[0] <= 2), "{h:?}");
            assert!(*h.last().unwrap() <= 2);
        }
    }

    #[test]
    fn every_wire_is_consumed_once() {
        let design = build(&plan_design(3, 12, lib()).unwrap(), lib()).unwrap();
        let mut uses = vec![0u32; design.wire_count()];
        for c in design.cells() {
            for w in &c.inputs {
                uses[w.id as usize] += 1;
            }
        }
        for w in design.outputs() {
            uses[w.id as usize] += 1;
        }
        assert!(uses.iter().all(|&u| u == 1));
    }

    #[test]
    fn rebuild_is_deterministic() {
        let plan = plan_design(2, 8, lib()).unwrap();
        let a = build(&plan, lib()).unwrap();
        let b = build(&plan, lib()).unwrap();
        assert_eq!(a.wiring_digest(), b.wiring_digest());
        assert_eq!(a.cells(), b.cells());
    }

    #[test]
    fn exact_cells_conserve_value_during_evaluation() {
        let design = build(&plan_design(2, 9, lib()).unwrap(), lib()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut s = Scratch::default();
        for _ in 0..500 {
            let a = random_number(2, &mut rng);
            let b = random_number(2, &mut rng);
            design.run(&a, &b, &mut s);
            let val = |w: &Wire| (w.polarity.value(s.values[w.id as usize]) as i64) << w.column;
            for c in design.cells() {
                let inp: i64 = c.inputs.iter().map(val).sum();
                let out = val(&c.sum) + val(&c.carry);
                if c.kind.is_approximate() {
                    assert!((out - inp).abs() <= 1 << c.column);
                } else {
                    assert_eq!(out, inp, "{}", c.kind);
                }
            }
        }
    }

    #[test]
    fn finalize_examples() {
        assert_eq!(finalize(&[], 1).unwrap(), MrsdNumber::zero(3).unwrap());
        let rows = [
            TypedBit::new(true, Polarity::Posibit, 4),
            TypedBit::new(false, Polarity::Negabit, 8),
        ];
        let r = finalize(&rows, 1).unwrap();
        assert_eq!((r.len(), r.value_i128()), (3, Some(16 - 256)));
        let too_tall = [TypedBit::new(true, Polarity::Posibit, 0); 3];
        assert!(finalize(&too_tall, 1).is_err());
        // (-272)^2 needs the fifth digit.
        let (lo, hi) = dynamic_range_i128(5).unwrap();
        assert!((lo..=hi).contains(&(272 * 272)));
        let (_, hi4) = dynamic_range_i128(4).unwrap();
        assert!(272 * 272 > hi4);
    }

    #[test]
    fn compress_examples() {
        let zero3 = MrsdNumber::zero(3).unwrap();
        assert_eq!(
            compress_result(&zero3, 1).unwrap(),
            MrsdNumber::zero(2).unwrap()
        );
        let x = encode_i128(255, 3).unwrap();
        assert_eq!(compress_result(&x, 1).unwrap().digit_values(), vec![15, 15]);
        let x = encode_i128(-272, 3).unwrap();
        assert_eq!(
            compress_result(&x, 1).unwrap().digit_values(),
            vec![-16, -16]
        );
        let x = encode_i128(256, 3).unwrap();
        assert!(compress_result(&x, 1).is_err());
    }

    #[test]
    fn stats_exact_design() {
        let s = stats(&build(&plan_exact(2, lib()).unwrap(), lib()).unwrap());
        assert_eq!(s.approximate_percent, 0.0);
        assert_eq!(s.dominant_approximate(), None);
        let total: f64 = s.fa_usage_percent.values().sum();
        assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn stats_border_eight() {
        let s = stats(&build(&plan_design(2, 8, lib()).unwrap(), lib()).unwrap());
        assert_eq!(s.dominant_approximate(), Some(CellKind::FaPp));
        let total: f64 = s.fa_usage_percent.values().sum();
        assert!((total - 100.0).abs() < 1e-9);
    }

    #[test]
    fn gate_count_falls_with_wider_approximate_part() {
        let g = |b| stats(&build(&plan_design(2, b, lib()).unwrap(), lib()).unwrap()).gate_count;
        assert!(g(10) < g(6));
    }
}
