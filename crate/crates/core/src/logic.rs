//! Two-level (sum-of-products) literal counting for small truth tables.
//!
//! Used as a gate-complexity proxy for reduction cells. Functions have at
//! most three inputs, so prime implicants and minimum covers are found by
//! plain enumeration.

/// A product term over `vars` inputs: `care` marks the variables present,
/// `value` their required polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cube {
    care: u8,
    value: u8,
}

impl Cube {
    fn literals(self) -> u32 {
        self.care.count_ones()
    }

    fn covers(self, minterm: u8) -> bool {
        minterm & self.care == self.value
    }

    fn minterms(self, vars: usize) -> u8 {
        (0..1u8 << vars)
            .filter(|&m| self.covers(m))
            .fold(0u8, |acc, m| acc | 1 << m)
    }
}

fn all_cubes(vars: usize) -> impl Iterator<Item = Cube> {
    let full = (1u8 << vars) - 1;
    (0..=full).flat_map(move |care| {
        (0..=full)
            .filter(move |value| value & !care == 0)
            .map(move |value| Cube { care, value })
    })
}

/// Minimum literal count of any sum-of-products form of `truth`.
///
/// Bit `m` of `truth` is the function value on input row `m`. Constants cost
/// zero literals.
pub fn min_sop_literals(truth: u8, vars: usize) -> u32 {
    assert!((1..=3).contains(&vars), "only 1 to 3 inputs are supported");
    let rows = 1u16 << vars;
    let on = (truth as u16 & ((1u16 << rows) - 1)) as u8;
    if on == 0 {
        return 0;
    }
    let implicants: Vec<(Cube, u8)> = all_cubes(vars)
        .map(|c| (c, c.minterms(vars)))
        .filter(|&(_, m)| m & !on == 0)
        .collect();
    let primes: Vec<(Cube, u8)> = implicants
        .iter()
        .copied()
        .filter(|&(c, m)| {
            !implicants
                .iter()
                .any(|&(d, n)| d != c && n & m == m && d.literals() < c.literals())
        })
        .collect();
    let mut best = u32::MAX;
    for subset in 1u32..1 << primes.len() {
        let (covered, cost) = primes
            .iter()
            .enumerate()
            .filter(|(i, _)| subset >> i & 1 == 1)
            .fold((0u8, 0u32), |(cov, cost), (_, &(c, m))| {
                (cov | m, cost + c.literals())
            });
        if covered == on {
            best = best.min(cost);
        }
    }
    best
}
