//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cells::{derive_default_library, CellLibrary};
use crate::doc;
use crate::dse::{check_geometry, plan_design};
use crate::evalkit::{run_exhaustive, run_monte_carlo, ErrorReport};
use crate::tree::{build, stats, MultiplierDesign};
use crate::verify;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "amrmul",
    version,
    about = "Approximate radix-16 MRSD multiplier toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Derive (or re-check) the approximate cell library and write it as JSON.
    Cells(CellsArgs),
    /// Plan and build a multiplier, writing the design and its statistics.
    Design(DesignArgs),
    /// Measure the accuracy of a design.
    Eval(EvalArgs),
    /// Design and evaluate a range of borders, writing a metric table.
    Sweep(SweepArgs),
    /// Run the built-in oracle suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct CellsArgs {
    /// Load this library instead of deriving the default one.
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[arg(long, default_value = "cells.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DesignArgs {
    #[arg(long)]
    pub digits: usize,
    #[arg(long)]
    pub border: u32,
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[arg(long, default_value = "design.json")]
    pub out: PathBuf,
    /// Also write cell statistics here.
    #[arg(long)]
    pub stats_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Design file produced by `amrmul design`.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Build a design on the fly instead of loading one.
    #[arg(long, conflicts_with = "design", requires = "border")]
    pub digits: Option<usize>,
    #[arg(long, requires = "digits")]
    pub border: Option<u32>,
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[arg(long, default_value_t = 50_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Enumerate every operand pair (1-digit designs only).
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output path. With CSV a histogram file `<stem>_hist.csv` is written alongside.
    #[arg(long, default_value = "report.csv")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub digits: usize,
    /// Inclusive border range such as `6..10`, or a comma list.
    #[arg(long, default_value = "6..10")]
    pub borders: String,
    #[arg(long)]
    pub library: Option<PathBuf>,
    #[arg(long, default_value_t = 50_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub library: Option<PathBuf>,
}

impl EvalArgs {
    pub fn validate(&self) -> Result<()> {
        if self.design.is_none() && self.digits.is_none() {
            return Err(Error::Parse(
                "eval needs --design or --digits/--border".into(),
            ));
        }
        if let (Some(d), Some(b)) = (self.digits, self.border) {
            check_geometry(d, b)?;
        }
        if !self.exhaustive && self.samples == 0 {
            return Err(Error::Parse("--samples must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Parse("--workers must be at least 1".into()));
        }
        Ok(())
    }
}

impl SweepArgs {
    pub fn border_list(&self) -> Result<Vec<u32>> {
        let bad = || Error::Parse(format!("invalid border list {:?}", self.borders));
        let list: Vec<u32> = if let Some((lo, hi)) = self.borders.split_once("..") {
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
            (lo..=hi).collect()
        } else {
            self.borders
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?
        };
        if list.is_empty() {
            return Err(bad());
        }
        for &b in &list {
            check_geometry(self.digits, b)?;
        }
        Ok(list)
    }
}

fn load_library(path: Option<&Path>) -> Result<CellLibrary> {
    match path {
        Some(p) => doc::read_library(p),
        None => Ok(derive_default_library()),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn echo<T: Serialize>(out: &mut dyn Write, command: &str, args: &T, digest: &str) -> Result<()> {
    let config = serde_json::json!({ "command": command, "args": args, "library_digest": digest });
    writeln!(out, "config {config}")?;
    Ok(())
}

fn evaluate(
    design: &MultiplierDesign,
    exhaustive: bool,
    samples: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<ErrorReport> {
    if exhaustive {
        run_exhaustive(design)
    } else {
        run_monte_carlo(design, samples, seed, workers)
    }
}

fn summary(out: &mut dyn Write, r: &ErrorReport) -> Result<()> {
    writeln!(
        out,
        "N={} b={} samples={} MRED={:.3e} MARED={:.3e} NMED={:.3e}",
        r.digits, r.border, r.samples, r.mred, r.mared, r.nmed_signed
    )?;
    Ok(())
}

/// Runs one command, writing progress to `out`. Returns `Ok(false)` when a
/// verification suite fails.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<bool> {
    match &cli.command {
        Command::Cells(a) => {
            let lib = load_library(a.library.as_deref())?;
            let digest = doc::library_digest(&lib);
            echo(out, "cells", a, &digest)?;
            write_file(&a.out, &doc::library_json(&lib))?;
            for c in lib.cells() {
                writeln!(
                    out,
                    "{} inputs={} mean={} literals={}",
                    c.kind,
                    crate::cells::polarity_string(&c.inputs),
                    c.mean_error(),
                    c.literal_cost()
                )?;
            }
            Ok(true)
        }
        Command::Design(a) => {
            check_geometry(a.digits, a.border)?;
            let lib = load_library(a.library.as_deref())?;
            echo(out, "design", a, &doc::library_digest(&lib))?;
            let design = build(&plan_design(a.digits, a.border, &lib)?, &lib)?;
            write_file(&a.out, &doc::design_json(&design))?;
            let st = stats(&design);
            if let Some(p) = &a.stats_out {
                let text = match a.format {
                    Format::Json => doc::stats_json(&st, &lib),
                    Format::Csv => doc::stats_csv(&st),
                };
                write_file(p, &text)?;
            }
            writeln!(
                out,
                "cells={} approximate={:.1}% gate_count={} depth={} wiring={}",
                design.cells().len(),
                st.approximate_percent,
                st.gate_count,
                st.logic_depth,
                design.wiring_digest()
            )?;
            Ok(true)
        }
        Command::Eval(a) => {
            a.validate()?;
            let design = match (&a.design, a.digits, a.border) {
                (Some(p), _, _) => doc::read_design(p)?,
                (None, Some(d), Some(b)) => {
                    let lib = load_library(a.library.as_deref())?;
                    build(&plan_design(d, b, &lib)?, &lib)?
                }
                _ => unreachable!("validated"),
            };
            let digest = doc::library_digest(design.library());
            echo(out, "eval", a, &digest)?;
            let report = evaluate(&design, a.exhaustive, a.samples, a.seed, a.workers)?;
            let config = doc::ReportConfig {
                samples: report.samples,
                seed: report.seed,
                exhaustive: a.exhaustive,
                library_digest: digest,
                wiring_digest: design.wiring_digest(),
            };
            match a.format {
                Format::Json => write_file(&a.out, &doc::report_json(&report, &config))?,
                Format::Csv => {
                    write_file(&a.out, &doc::report_csv(&report, &config))?;
                    write_file(&sibling(&a.out, "_hist.csv"), &doc::histogram_csv(&report))?;
                }
            }
            summary(out, &report)?;
            Ok(true)
        }
        Command::Sweep(a) => {
            let borders = a.border_list()?;
            if a.samples == 0 {
                return Err(Error::Parse("--samples must be at least 1".into()));
            }
            let lib = load_library(a.library.as_deref())?;
            echo(out, "sweep", a, &doc::library_digest(&lib))?;
            let mut reports = Vec::new();
            for b in borders {
                let design = build(&plan_design(a.digits, b, &lib)?, &lib)?;
                let r = run_monte_carlo(&design, a.samples, a.seed, a.workers)?;
                summary(out, &r)?;
                reports.push(r);
            }
            write_file(&a.out, &doc::sweep_csv(&reports))?;
            Ok(true)
        }
        Command::Verify(a) => {
            let lib = load_library(a.library.as_deref())?;
            echo(out, "verify", a, &doc::library_digest(&lib))?;
            let report = verify::run_all(&lib)?;
            for s in &report.suites {
                let status = if s.passed() { "PASS" } else { "FAIL" };
                writeln!(out, "{status} {} ({} checks)", s.name, s.checks)?;
                for f in &s.failures {
                    writeln!(out, "  {f}")?;
                }
            }
            Ok(report.all_passed())
        }
    }
}
