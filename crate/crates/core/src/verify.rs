//! Built-in oracle suites run by `amrmul verify`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cells::{exact_output_polarities, CellKind, CellLibrary, CellSpec};
use crate::dse::{assign_column_with, exhaustive_assign, plan_design, plan_exact, EXHAUSTIVE_CAP};
use crate::mrsd::{random_number, MrsdNumber, Polarity};
use crate::tree::{build, Scratch};
use crate::units::Eighths;
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub checks: u64,
    pub failures: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str) -> Self {
        SuiteResult {
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }
}

pub fn run_all(lib: &CellLibrary) -> Result<VerifyReport> {
    Ok(VerifyReport {
        suites: vec![
            cell_suite(lib),
            exactness_suite(lib)?,
            search_suite(lib)?,
            bounds_suite(lib)?,
        ],
    })
}

/// Every polarity mix of an exact adder is value-exact, and each library cell
/// keeps its row errors in {-1, 0, 1} with the target mean.
pub fn cell_suite(lib: &CellLibrary) -> SuiteResult {
    let mut s = SuiteResult::new("cells");
    let ps = [Polarity::Posibit, Polarity::Negabit];
    for mask in 0..8u32 {
        let inputs = [0, 1, 2].map(|i| ps[(mask >> i & 1) as usize]);
        let fa = CellSpec::exact_fa(inputs);
        s.check(fa.row_errors().iter().all(|&e| e == 0), || {
            format!("exact FA {inputs:?} deviates")
        });
        let (sum, carry) = exact_output_polarities(&inputs).expect("arity 3");
        let k = inputs.iter().filter(|&&p| p == Polarity::Negabit).count();
        s.check((sum == Polarity::Negabit) == (k % 2 == 1), || {
            format!("sum polarity for {inputs:?}")
        });
        s.check((carry == Polarity::Negabit) == (k >= 2), || {
            format!("carry polarity for {inputs:?}")
        });
        if mask < 4 {
            let ha = CellSpec::exact_ha([inputs[0], inputs[1]]);
            s.check(ha.row_errors().iter().all(|&e| e == 0), || {
                format!("exact HA {:?} deviates", &inputs[..2])
            });
        }
    }
    for kind in CellKind::APPROXIMATE {
        let cell = lib.get(kind);
        s.check(cell.row_errors().iter().all(|e| e.abs() <= 1), || {
            format!("{kind} row error outside [-1, 1]")
        });
        let target = kind.target_mean_error().expect("approximate");
        s.check(cell.mean_error() == target, || {
            format!("{kind} mean {} != {target}", cell.mean_error())
        });
    }
    s
}

/// The all-exact multiplier reproduces every product.
pub fn exactness_suite(lib: &CellLibrary) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("exactness");
    let one = build(&plan_exact(1, lib)?, lib)?;
    let mut scratch = Scratch::default();
    for x in -16..=15 {
        for y in -16..=15 {
            let a = MrsdNumber::from_digit_values(&[x])?;
            let b = MrsdNumber::from_digit_values(&[y])?;
            let got = one.evaluate_value(&a, &b, &mut scratch)?;
            s.check(got == (x * y) as i128, || format!("{x} x {y} gave {got}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for (digits, samples) in [(2, 20_000), (4, 5_000), (8, 2_000)] {
        let d = build(&plan_exact(digits, lib)?, lib)?;
        let twin =
            build(&plan_design(digits, 4 * digits as u32 + 2, lib)?, lib)?.with_exact_cells();
        for _ in 0..samples {
            let a = random_number(digits, &mut rng);
            let b = random_number(digits, &mut rng);
            let want = a.value_i128().expect("fits") * b.value_i128().expect("fits");
            for (name, design) in [("exact", &d), ("twin", &twin)] {
                let got = design.evaluate_value(&a, &b, &mut scratch)?;
                s.check(got == want, || {
                    format!("{name} N={digits}: {a} x {b} gave {got}, want {want}")
                });
            }
        }
    }
    Ok(s)
}

fn grid() -> impl Iterator<Item = (u32, u32, Eighths, bool)> {
    let errs = [0, 2, -2, 4, -4, 8, -8].map(Eighths::from_eighths);
    (0..=12u32).flat_map(move |pos| {
        (0..=12 - pos).flat_map(move |neg| {
            errs.into_iter()
                .flat_map(move |e| [false, true].map(move |x| (pos, neg, e, x)))
        })
    })
}

/// Branch-and-bound agrees with exhaustive enumeration.
pub fn search_suite(lib: &CellLibrary) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("search");
    for (pos, neg, err, exact) in grid() {
        let fast = assign_column_with(pos, neg, err, exact, lib, true);
        let slow = exhaustive_assign(pos, neg, err, exact, lib, EXHAUSTIVE_CAP)?;
        s.check(
            fast.err_out == slow.err_out && fast.cells == slow.cells,
            || {
                format!(
                    "({pos}P, {neg}N, {err}, exact={exact}): {:?} vs {:?}",
                    fast.cells, slow.cells
                )
            },
        );
    }
    Ok(s)
}

/// Pruning never changes the answer and does fire on real plans.
pub fn bounds_suite(lib: &CellLibrary) -> Result<SuiteResult> {
    let mut s = SuiteResult::new("bounds");
    for (pos, neg, err, exact) in grid() {
        let on = assign_column_with(pos, neg, err, exact, lib, true);
        let off = assign_column_with(pos, neg, err, exact, lib, false);
        s.check(on.cells == off.cells && on.err_out == off.err_out, || {
            format!("bounds change the result at ({pos}P, {neg}N, {err}, exact={exact})")
        });
        s.check(on.stats.visited <= off.stats.visited, || {
            format!("bounds visit more nodes at ({pos}P, {neg}N, {err})")
        });
    }
    let plan = plan_design(2, 10, lib)?;
    let totals = plan.search_totals();
    s.check(totals.pruned > 0, || {
        "no pruning on the 2-digit border-10 plan".into()
    });
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::derive_default_library;

    #[test]
    fn default_library_passes_every_suite() {
        let report = run_all(&derive_default_library()).unwrap();
        for suite in &report.suites {
            assert!(suite.passed(), "{}: {:?}", suite.name, suite.failures);
            assert!(suite.checks > 0);
        }
    }

    #[test]
    fn grid_covers_both_exact_settings() {
        let n = grid().count();
        assert_eq!(n, 91 * 7 * 2);
    }
}
