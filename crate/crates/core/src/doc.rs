//! On-disk documents: cell libraries, designs, statistics and reports.
//!
//! JSON documents carry a `schema` field; CSV files start with a
//! `# <schema>` line followed by a header row. Output is byte-stable for a
//! given input: maps are ordered and floats use Rust's shortest round-trip
//! formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cells::{CellKind, CellLibrary, CellSpec};
use crate::dse::{DesignPlan, StagePlan};
use crate::evalkit::{ErrorReport, Histogram};
use crate::mrsd::Polarity;
use crate::tree::{build, DesignStats, MultiplierDesign};
use crate::units::Eighths;
use crate::{Error, Result};

pub const LIBRARY_SCHEMA: &str = "amrmul.cells/v1";
pub const DESIGN_SCHEMA: &str = "amrmul.design/v1";
pub const STATS_SCHEMA: &str = "amrmul.stats/v1";
pub const REPORT_SCHEMA: &str = "amrmul.report/v1";
pub const HISTOGRAM_SCHEMA: &str = "amrmul.histogram/v1";
pub const SWEEP_SCHEMA: &str = "amrmul.sweep/v1";

fn check_schema(found: &str, expected: &'static str) -> Result<()> {
    if found != expected {
        return Err(Error::Schema {
            found: found.to_string(),
            expected,
        });
    }
    Ok(())
}

fn polarity_list(s: &str) -> Result<Vec<Polarity>> {
    s.chars()
        .map(|c| match c {
            'P' => Ok(Polarity::Posibit),
            'N' => Ok(Polarity::Negabit),
            _ => Err(Error::Parse(s.to_string())),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDoc {
    pub name: CellKind,
    /// Input polarities as a string such as `"PPN"`.
    pub inputs: String,
    pub sum: Polarity,
    pub carry: Polarity,
    /// Stored `[sum, carry]` per input row. Row `r` sets input `i` to bit `i` of `r`.
    pub table: Vec<[u8; 2]>,
    pub mean_error: Eighths,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LibraryDoc {
    pub schema: String,
    pub cells: Vec<CellDoc>,
}

impl LibraryDoc {
    pub fn from_library(lib: &CellLibrary) -> Self {
        LibraryDoc {
            schema: LIBRARY_SCHEMA.to_string(),
            cells: lib
                .cells()
                .iter()
                .map(|c| CellDoc {
                    name: c.kind,
                    inputs: crate::cells::polarity_string(&c.inputs),
                    sum: c.sum,
                    carry: c.carry,
                    table: c.table.iter().map(|&(s, k)| [s as u8, k as u8]).collect(),
                    mean_error: c.mean_error(),
                })
                .collect(),
        }
    }

    /// Rebuilds the library, rejecting any cell whose declared mean error
    /// differs from the mean of its table.
    pub fn to_library(&self) -> Result<CellLibrary> {
        check_schema(&self.schema, LIBRARY_SCHEMA)?;
        let mut cells = Vec::with_capacity(self.cells.len());
        for d in &self.cells {
            if d.table.iter().flatten().any(|&b| b > 1) {
                return Err(Error::Library(format!(
                    "{}: table entries must be 0 or 1",
                    d.name
                )));
            }
            let spec = CellSpec {
                kind: d.name,
                inputs: polarity_list(&d.inputs)?,
                sum: d.sum,
                carry: d.carry,
                table: d.table.iter().map(|&[s, c]| (s == 1, c == 1)).collect(),
            };
            if !d.name.is_approximate() {
                return Err(Error::Library(format!(
                    "{} is built in and cannot be redefined",
                    d.name
                )));
            }
            if spec.table.len() != 8 || spec.inputs.len() != 3 {
                return Err(Error::Library(format!(
                    "{}: expected 3 inputs and 8 rows",
                    d.name
                )));
            }
            let actual = spec.mean_error();
            if actual != d.mean_error {
                return Err(Error::Library(format!(
                    "{}: declared mean error {} but the table averages {}",
                    d.name, d.mean_error, actual
                )));
            }
            cells.push(spec);
        }
        CellLibrary::from_cells(cells)
    }
}

pub fn library_json(lib: &CellLibrary) -> String {
    serde_json::to_string_pretty(&LibraryDoc::from_library(lib)).expect("serializable") + "\n"
}

/// Hex SHA-256 of the library document.
pub fn library_digest(lib: &CellLibrary) -> String {
    hex::encode(Sha256::digest(library_json(lib).as_bytes()))
}

pub fn parse_library(text: &str) -> Result<CellLibrary> {
    serde_json::from_str::<LibraryDoc>(text)?.to_library()
}

pub fn read_library(path: &Path) -> Result<CellLibrary> {
    parse_library(&std::fs::read_to_string(path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignDoc {
    pub schema: String,
    pub digits: usize,
    pub border: u32,
    pub library_digest: String,
    pub wiring_digest: String,
    pub library: LibraryDoc,
    pub stages: Vec<StagePlan>,
}

pub fn design_json(design: &MultiplierDesign) -> String {
    let plan = design.plan();
    let doc = DesignDoc {
        schema: DESIGN_SCHEMA.to_string(),
        digits: plan.digits,
        border: plan.border,
        library_digest: library_digest(design.library()),
        wiring_digest: design.wiring_digest(),
        library: LibraryDoc::from_library(design.library()),
        stages: plan.stages.clone(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// Loads a design document, revalidating the library, the plan and the wiring.
pub fn parse_design(text: &str) -> Result<MultiplierDesign> {
    let doc: DesignDoc = serde_json::from_str(text)?;
    check_schema(&doc.schema, DESIGN_SCHEMA)?;
    let lib = doc.library.to_library()?;
    if library_digest(&lib) != doc.library_digest {
        return Err(Error::Design("library digest mismatch".into()));
    }
    let plan = DesignPlan {
        digits: doc.digits,
        border: doc.border,
        stages: doc.stages,
    };
    let design = build(&plan, &lib)?;
    if design.wiring_digest() != doc.wiring_digest {
        return Err(Error::Design("wiring digest mismatch".into()));
    }
    Ok(design)
}

pub fn read_design(path: &Path) -> Result<MultiplierDesign> {
    parse_design(&std::fs::read_to_string(path)?)
}

#[derive(Serialize)]
struct StatsDoc<'a> {
    schema: &'static str,
    library_digest: String,
    #[serde(flatten)]
    stats: &'a DesignStats,
}

pub fn stats_json(stats: &DesignStats, lib: &CellLibrary) -> String {
    let doc = StatsDoc {
        schema: STATS_SCHEMA,
        library_digest: library_digest(lib),
        stats,
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

pub fn stats_csv(stats: &DesignStats) -> String {
    let mut out = format!("# {STATS_SCHEMA}\ncell,count,fa_percent\n");
    for (kind, count) in &stats.counts {
        let pct = stats
            .fa_usage_percent
            .get(kind)
            .map_or(String::new(), |p| p.to_string());
        writeln!(out, "{kind},{count},{pct}").unwrap();
    }
    writeln!(out, "approximate,,{}", stats.approximate_percent).unwrap();
    writeln!(out, "gate_count,{},", stats.gate_count).unwrap();
    writeln!(out, "logic_depth,{},", stats.logic_depth).unwrap();
    out
}

/// Evaluation settings echoed into every report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub samples: u64,
    pub seed: Option<u64>,
    pub exhaustive: bool,
    pub library_digest: String,
    pub wiring_digest: String,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    schema: &'static str,
    config: &'a ReportConfig,
    report: &'a ErrorReport,
}

pub fn report_json(report: &ErrorReport, config: &ReportConfig) -> String {
    let doc = ReportDoc {
        schema: REPORT_SCHEMA,
        config,
        report,
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// One `metric,value` row per metric.
pub fn report_csv(report: &ErrorReport, config: &ReportConfig) -> String {
    let seed = report.seed.map_or(String::new(), |s| s.to_string());
    let mode = serde_json::to_value(report.mode).expect("serializable");
    let rows: Vec<(&str, String)> = vec![
        ("library_digest", config.library_digest.clone()),
        ("wiring_digest", config.wiring_digest.clone()),
        ("mode", mode.as_str().unwrap_or_default().to_string()),
        ("digits", report.digits.to_string()),
        ("border", report.border.to_string()),
        ("seed", seed),
        ("samples", report.samples.to_string()),
        ("relative_samples", report.relative_samples.to_string()),
        ("skipped_zero_exact", report.skipped_zero_exact.to_string()),
        ("mred", format!("{:e}", report.mred)),
        ("mared", format!("{:e}", report.mared)),
        ("nmed_signed", format!("{:e}", report.nmed_signed)),
        ("nmed_abs", format!("{:e}", report.nmed_abs)),
        ("nmed_normalizer", report.nmed_normalizer.to_string()),
        ("min_error", report.min_error.to_string()),
        ("max_error", report.max_error.to_string()),
        (
            "max_abs_relative_error",
            format!("{:e}", report.max_abs_relative_error),
        ),
        ("histogram_below", report.histogram.below.to_string()),
        ("histogram_above", report.histogram.above.to_string()),
    ];
    let mut out = format!("# {REPORT_SCHEMA}\nmetric,value\n");
    for (k, v) in rows {
        writeln!(out, "{k},{v}").unwrap();
    }
    out
}

pub fn histogram_csv(report: &ErrorReport) -> String {
    let mut out = format!("# {HISTOGRAM_SCHEMA}\nbin,center,count\n");
    for (i, &c) in report.histogram.bins.iter().enumerate() {
        writeln!(out, "{i},{:.2},{c}", Histogram::bin_center(i)).unwrap();
    }
    out
}

type Metric = (&'static str, fn(&ErrorReport) -> f64);

/// Metric-versus-border table: one row per metric, one column per border.
pub fn sweep_csv(reports: &[ErrorReport]) -> String {
    let mut by_digits: BTreeMap<usize, Vec<&ErrorReport>> = BTreeMap::new();
    for r in reports {
        by_digits.entry(r.digits).or_default().push(r);
    }
    let mut out = format!("# {SWEEP_SCHEMA}\n");
    for (digits, rs) in by_digits {
        let borders: Vec<String> = rs.iter().map(|r| format!("b{}", r.border)).collect();
        writeln!(out, "digits,metric,{}", borders.join(",")).unwrap();
        let metrics: [Metric; 4] = [
            ("MRED", |r| r.mred),
            ("MARED", |r| r.mared),
            ("NMED", |r| r.nmed_signed),
            ("NMED_ABS", |r| r.nmed_abs),
        ];
        for (name, f) in metrics {
            let vals: Vec<String> = rs.iter().map(|r| format!("{:.2E}", f(r))).collect();
            writeln!(out, "{digits},{name},{}", vals.join(",")).unwrap();
        }
    }
    out
}
