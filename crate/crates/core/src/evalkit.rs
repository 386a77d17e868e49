//! Accuracy evaluation against the exact integer product.
//!
//! Monte Carlo runs split the sample stream into fixed-size chunks. Chunk `i`
//! draws from a ChaCha8 generator seeded with the run seed on stream `i`, and
//! chunk results are merged in chunk order, so a report depends only on
//! `(design, samples, seed)` and never on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::mrsd::{random_number, MrsdNumber};
use crate::tree::{max_product_magnitude, MultiplierDesign, Scratch};
use crate::{Error, Result};

/// Samples per independently seeded chunk.
pub const CHUNK: u64 = 4096;

/// Histogram bins over relative error in `[-1, 1]`, centered on multiples of 0.01.
pub const HISTOGRAM_BINS: usize = 201;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    MonteCarlo,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<u64>,
    /// Relative errors below -1, also counted in the first bin.
    pub below: u64,
    /// Relative errors above 1, also counted in the last bin.
    pub above: u64,
}

impl Default for Histogram {
    fn default() -> Self {
        Histogram {
            bins: vec![0; HISTOGRAM_BINS],
            below: 0,
            above: 0,
        }
    }
}

impl Histogram {
    pub fn bin_center(i: usize) -> f64 {
        -1.0 + 0.01 * i as f64
    }

    fn push(&mut self, re: f64) {
        let idx = ((re + 1.0) * 100.0).round();
        if re < -1.0 {
            self.below += 1;
        } else if re > 1.0 {
            self.above += 1;
        }
        let idx = idx.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize;
        self.bins[idx] += 1;
    }

    fn merge(&mut self, o: &Histogram) {
        for (a, b) in self.bins.iter_mut().zip(&o.bins) {
            *a += b;
        }
        self.below += o.below;
        self.above += o.above;
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    /// Bin counts without the clamped out-of-range samples.
    pub fn in_range(&self) -> Vec<u64> {
        let mut bins = self.bins.clone();
        bins[0] -= self.below;
        bins[HISTOGRAM_BINS - 1] -= self.above;
        bins
    }

    /// Center of the most populated bin among in-range samples (lowest index
    /// on ties).
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .in_range()
            .into_iter()
            .enumerate()
            .fold(
                (0, 0),
                |best, (i, c)| if c > best.1 { (i, c) } else { best },
            );
        Self::bin_center(i)
    }
}

/// Accuracy metrics of one evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub mode: EvalMode,
    pub digits: usize,
    pub border: u32,
    pub seed: Option<u64>,
    pub samples: u64,
    /// Samples with a non-zero exact product; the relative metrics average over these.
    pub relative_samples: u64,
    pub skipped_zero_exact: u64,
    pub mred: f64,
    pub mared: f64,
    pub nmed_signed: f64,
    pub nmed_abs: f64,
    /// Divisor of the NMED metrics: the largest operand magnitude, squared.
    pub nmed_normalizer: i128,
    pub min_error: i128,
    pub max_error: i128,
    pub max_abs_relative_error: f64,
    pub histogram: Histogram,
}

impl ErrorReport {
    /// Mean error distance, signed and absolute, before normalization.
    pub fn mean_error(&self) -> f64 {
        self.nmed_signed * self.nmed_normalizer as f64
    }
}

pub fn histogram(report: &ErrorReport) -> Vec<(f64, u64)> {
    report
        .histogram
        .bins
        .iter()
        .enumerate()
        .map(|(i, &c)| (Histogram::bin_center(i), c))
        .collect()
}

/// Neumaier-compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, o: CompensatedSum) {
        self.add(o.sum);
        self.add(o.comp);
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Debug, Default)]
struct Accumulator {
    samples: u64,
    relative: u64,
    skipped: u64,
    re: CompensatedSum,
    abs_re: CompensatedSum,
    err: i128,
    abs_err: i128,
    min_err: Option<i128>,
    max_err: Option<i128>,
    max_abs_re: f64,
    hist: Histogram,
}

impl Accumulator {
    fn push(&mut self, approx: i128, exact: i128) {
        let e = approx - exact;
        self.samples += 1;
        self.err += e;
        self.abs_err += e.abs();
        self.min_err = Some(self.min_err.map_or(e, |m| m.min(e)));
        self.max_err = Some(self.max_err.map_or(e, |m| m.max(e)));
        if exact == 0 {
            self.skipped += 1;
            return;
        }
        let re = e as f64 / exact as f64;
        self.relative += 1;
        self.re.add(re);
        self.abs_re.add(re.abs());
        self.max_abs_re = self.max_abs_re.max(re.abs());
        self.hist.push(re);
    }

    fn merge(&mut self, o: &Accumulator) {
        self.samples += o.samples;
        self.relative += o.relative;
        self.skipped += o.skipped;
        self.re.merge(o.re);
        self.abs_re.merge(o.abs_re);
        self.err += o.err;
        self.abs_err += o.abs_err;
        self.min_err = match (self.min_err, o.min_err) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.max_err = match (self.max_err, o.max_err) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.max_abs_re = self.max_abs_re.max(o.max_abs_re);
        self.hist.merge(&o.hist);
    }

    fn report(self, design: &MultiplierDesign, mode: EvalMode, seed: Option<u64>) -> ErrorReport {
        let norm = max_product_magnitude(design.digits()).expect("valid width");
        let rel = |s: CompensatedSum| {
            if self.relative == 0 {
                0.0
            } else {
                s.value() / self.relative as f64
            }
        };
        let nmed = |s: i128| s as f64 / (self.samples as f64 * norm as f64);
        ErrorReport {
            mode,
            digits: design.digits(),
            border: design.plan().border,
            seed,
            samples: self.samples,
            relative_samples: self.relative,
            skipped_zero_exact: self.skipped,
            mred: rel(self.re),
            mared: rel(self.abs_re),
            nmed_signed: nmed(self.err),
            nmed_abs: nmed(self.abs_err),
            nmed_normalizer: norm,
            min_error: self.min_err.unwrap_or(0),
            max_error: self.max_err.unwrap_or(0),
            max_abs_relative_error: self.max_abs_re,
            histogram: self.hist,
        }
    }
}

fn exact_product(a: &MrsdNumber, b: &MrsdNumber) -> i128 {
    a.value_i128().expect("operand fits i128") * b.value_i128().expect("operand fits i128")
}

fn run_chunk(design: &MultiplierDesign, seed: u64, chunk: u64, count: u64) -> Accumulator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut scratch = Scratch::default();
    let mut acc = Accumulator::default();
    let n = design.digits();
    for _ in 0..count {
        let a = random_number(n, &mut rng);
        let b = random_number(n, &mut rng);
        let approx = design.run(&a, &b, &mut scratch);
        acc.push(approx, exact_product(&a, &b));
    }
    acc
}

/// Monte Carlo accuracy estimate over `samples` random operand pairs.
///
/// `workers` caps the thread count; `None` uses the global rayon pool. The
/// report is identical for every worker count.
pub fn run_monte_carlo(
    design: &MultiplierDesign,
    samples: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<ErrorReport> {
    if samples == 0 {
        return Err(Error::Parse("sample count must be at least 1".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    let work = || -> Vec<Accumulator> {
        (0..chunks)
            .into_par_iter()
            .map(|i| run_chunk(design, seed, i, CHUNK.min(samples - i * CHUNK)))
            .collect()
    };
    let parts = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Io(std::io::Error::other(e)))?
            .install(work),
        None => work(),
    };
    let mut total = Accumulator::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.report(design, EvalMode::MonteCarlo, Some(seed)))
}

/// Exact metrics over all 1024 operand pairs of a 1-digit design.
pub fn run_exhaustive(design: &MultiplierDesign) -> Result<ErrorReport> {
    if design.digits() != 1 {
        return Err(Error::ExhaustiveWidth(design.digits()));
    }
    let mut acc = Accumulator::default();
    let mut scratch = Scratch::default();
    for x in -16..=15 {
        let a = MrsdNumber::from_digit_values(&[x])?;
        for y in -16..=15 {
            let b = MrsdNumber::from_digit_values(&[y])?;
            acc.push(design.run(&a, &b, &mut scratch), (x * y) as i128);
        }
    }
    Ok(acc.report(design, EvalMode::Exhaustive, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{derive_default_library, CellLibrary};
    use crate::dse::{plan_design, plan_exact};
    use crate::tree::build;
    use std::sync::OnceLock;

    fn lib() -> &'static CellLibrary {
        static LIB: OnceLock<CellLibrary> = OnceLock::new();
        LIB.get_or_init(derive_default_library)
    }

    fn design(n: usize, b: u32) -> MultiplierDesign {
        build(&plan_design(n, b, lib()).unwrap(), lib()).unwrap()
    }

    #[test]
    fn exact_design_has_zero_metrics() {
        let d = build(&plan_exact(2, lib()).unwrap(), lib()).unwrap();
        let r = run_monte_carlo(&d, 5000, 1, None).unwrap();
        assert_eq!(
            (r.mred, r.mared, r.nmed_signed, r.nmed_abs),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(r.histogram.bins[100], r.relative_samples);
        assert_eq!(r.histogram.mode(), 0.0);
        let r = run_exhaustive(&build(&plan_exact(1, lib()).unwrap(), lib()).unwrap()).unwrap();
        assert_eq!((r.mred, r.mared, r.nmed_abs), (0.0, 0.0, 0.0));
    }

    #[test]
    fn exhaustive_counts_zero_products() {
        let r = run_exhaustive(&design(1, 6)).unwrap();
        assert_eq!(r.samples, 1024);
        assert_eq!(r.skipped_zero_exact, 63);
        assert_eq!(r.histogram.total(), 1024 - 63);
    }

    #[test]
    fn exhaustive_needs_one_digit() {
        assert!(matches!(
            run_exhaustive(&design(2, 6)),
            Err(Error::ExhaustiveWidth(2))
        ));
    }

    #[test]
    fn exhaustive_matches_direct_enumeration() {
        let d = design(1, 7);
        let r = run_exhaustive(&d).unwrap();
        let (mut re, mut are, mut err, mut n) = (0.0, 0.0, 0i128, 0u32);
        for x in -16..=15 {
            for y in -16..=15 {
                let a = MrsdNumber::from_digit_values(&[x]).unwrap();
                let b = MrsdNumber::from_digit_values(&[y]).unwrap();
                let (_, v) = d.evaluate(&a, &b).unwrap();
                let exact = (x * y) as i128;
                err += v - exact;
                if exact != 0 {
                    let e = (v - exact) as f64 / exact as f64;
                    re += e;
                    are += e.abs();
                    n += 1;
                }
            }
        }
        assert!(r.mared > 0.0);
        assert!((r.mred - re / n as f64).abs() < 1e-12);
        assert!((r.mared - are / n as f64).abs() < 1e-12);
        assert!((r.nmed_signed - err as f64 / (1024.0 * 256.0)).abs() < 1e-12);
    }

    #[test]
    fn metric_identities() {
        for b in [5, 7, 9] {
            let r = run_monte_carlo(&design(2, b), 20_000, 3, None).unwrap();
            assert!(r.mred.abs() <= r.mared);
            assert!(r.nmed_signed.abs() <= r.nmed_abs);
            assert_eq!(r.nmed_normalizer, 272 * 272);
            assert_eq!(r.histogram.total(), r.relative_samples);
            assert_eq!(r.relative_samples + r.skipped_zero_exact, r.samples);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let d = design(2, 9);
        let one = run_monte_carlo(&d, 30_000, 77, Some(1)).unwrap();
        let four = run_monte_carlo(&d, 30_000, 77, Some(4)).unwrap();
        let any = run_monte_carlo(&d, 30_000, 77, None).unwrap();
        assert_eq!(one, four);
        assert_eq!(one, any);
        assert_ne!(one, run_monte_carlo(&d, 30_000, 78, None).unwrap());
    }

    #[test]
    fn monte_carlo_converges_to_exhaustive() {
        let d = design(1, 7);
        let ex = run_exhaustive(&d).unwrap();
        let mc = run_monte_carlo(&d, 1_000_000, 12, None).unwrap();
        // Population spread of |RE| and RE from the exhaustive enumeration.
        let mut sq = 0.0;
        let mut sq_abs = 0.0;
        let mut scratch = Scratch::default();
        for x in -16..=15 {
            for y in -16..=15 {
                let exact = (x * y) as i128;
                if exact == 0 {
                    continue;
                }
                let a = MrsdNumber::from_digit_values(&[x]).unwrap();
                let b = MrsdNumber::from_digit_values(&[y]).unwrap();
                let re = (d.run(&a, &b, &mut scratch) - exact) as f64 / exact as f64;
                sq += (re - ex.mred).powi(2);
                sq_abs += (re.abs() - ex.mared).powi(2);
            }
        }
        let n = mc.relative_samples as f64;
        let se = (sq / ex.relative_samples as f64 / n).sqrt();
        let se_abs = (sq_abs / ex.relative_samples as f64 / n).sqrt();
        assert!(
            (mc.mred - ex.mred).abs() <= 3.0 * se,
            "{} vs {}",
            mc.mred,
            ex.mred
        );
        assert!(
            (mc.mared - ex.mared).abs() <= 3.0 * se_abs,
            "{} vs {}",
            mc.mared,
            ex.mared
        );
    }

    #[test]
    fn histogram_edges() {
        let mut h = Histogram::default();
        h.push(0.0);
        h.push(-1.0);
        h.push(1.0);
        h.push(-3.0);
        h.push(2.5);
        h.push(0.004);
        h.push(-0.006);
        assert_eq!(h.bins[100], 2);
        assert_eq!(h.bins[99], 1);
        assert_eq!(h.bins[0], 2);
        assert_eq!(h.bins[200], 2);
        assert_eq!((h.below, h.above), (1, 1));
        assert_eq!(h.total(), 7);
        assert_eq!(h.mode(), 0.0);
    }

    #[test]
    fn overflow_does_not_set_the_mode() {
        let mut h = Histogram::default();
        for _ in 0..5 {
            h.push(4.0);
            h.push(-7.0);
        }
        h.push(0.31);
        h.push(0.31);
        assert_eq!(h.bins[200], 5);
        assert_eq!(h.in_range()[200], 0);
        assert!((h.mode() - 0.31).abs() < 1e-9);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(run_monte_carlo(&design(1, 3), 0, 1, None).is_err());
    }
}
