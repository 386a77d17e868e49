//! Python bindings: `import amrmul`.

use amr::cells::{derive_default_library, CellKind};
use amr::doc;
use amr::dse::{assign_column as assign, plan_design, plan_exact};
use amr::evalkit::{run_exhaustive, run_monte_carlo, ErrorReport};
use amr::mrsd::{self, MrsdNumber};
use amr::tree::{build, stats, MultiplierDesign};
use amr::units::Eighths;
use amrmul_core as amr;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err(e: amr::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn number(values: &[i32]) -> PyResult<MrsdNumber> {
    MrsdNumber::from_digit_values(values).map_err(err)
}

fn eighths(s: &str) -> PyResult<Eighths> {
    s.parse::<Eighths>().map_err(err)
}

/// Smallest and largest value of an `n`-digit number.
#[pyfunction]
fn dynamic_range(n: usize) -> PyResult<(i128, i128)> {
    mrsd::dynamic_range_i128(n).map_err(err)
}

/// Canonical digit values (least significant first) of `value` in `n` digits.
#[pyfunction]
fn encode_value(value: i128, n: usize) -> PyResult<Vec<i32>> {
    Ok(mrsd::encode_i128(value, n).map_err(err)?.digit_values())
}

#[pyfunction]
fn number_value(digits: Vec<i32>) -> PyResult<i128> {
    number(&digits)?
        .value_i128()
        .ok_or_else(|| PyValueError::new_err("value exceeds 128 bits"))
}

/// Uniformly random `n`-digit number from a seeded generator.
#[pyfunction]
#[pyo3(signature = (n, seed, stream = 0))]
fn random_number(n: usize, seed: u64, stream: u64) -> Vec<i32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    mrsd::random_number(n, &mut rng).digit_values()
}

#[pyclass(name = "CellLibrary", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCellLibrary {
    inner: amr::cells::CellLibrary,
}

#[pymethods]
impl PyCellLibrary {
    /// The derived default library.
    #[new]
    fn new() -> Self {
        PyCellLibrary {
            inner: derive_default_library(),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyCellLibrary {
            inner: doc::parse_library(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        doc::library_json(&self.inner)
    }

    fn digest(&self) -> String {
        doc::library_digest(&self.inner)
    }

    fn names(&self) -> Vec<&'static str> {
        self.inner.cells().iter().map(|c| c.kind.name()).collect()
    }

    /// Mean error of a cell as a fraction string such as `"-1/4"`.
    fn mean_error(&self, name: &str) -> PyResult<String> {
        let kind = CellKind::from_name(name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown cell {name}")))?;
        Ok(self.inner.mean_error(kind).to_string())
    }

    /// Stored `(sum, carry)` per input row.
    fn table(&self, name: &str) -> PyResult<Vec<(bool, bool)>> {
        let kind = CellKind::from_name(name)
            .filter(|k| k.is_approximate())
            .ok_or_else(|| PyValueError::new_err(format!("unknown approximate cell {name}")))?;
        Ok(self.inner.get(kind).table.clone())
    }
}

fn library_or_default(library: Option<&PyCellLibrary>) -> amr::cells::CellLibrary {
    library.map_or_else(derive_default_library, |l| l.inner.clone())
}

/// Branch-and-bound assignment for one column. `err_in` is a fraction string.
#[pyfunction]
#[pyo3(signature = (pos, neg, err_in = "0", allow_exact = false, library = None))]
fn assign_column<'py>(
    py: Python<'py>,
    pos: u32,
    neg: u32,
    err_in: &str,
    allow_exact: bool,
    library: Option<&PyCellLibrary>,
) -> PyResult<Bound<'py, PyDict>> {
    let lib = library_or_default(library);
    let a = assign(pos, neg, eighths(err_in)?, allow_exact, &lib);
    let d = PyDict::new(py);
    let cells = PyDict::new(py);
    for (k, n) in a.cells.iter().filter(|&(_, n)| n > 0) {
        cells.set_item(k.name(), n)?;
    }
    d.set_item("cells", cells)?;
    d.set_item("err_out", a.err_out.to_string())?;
    d.set_item(
        "leftover",
        a.leftover.iter().map(|p| p.symbol()).collect::<String>(),
    )?;
    d.set_item("visited", a.stats.visited)?;
    d.set_item("pruned", a.stats.pruned)?;
    Ok(d)
}

fn report_dict<'py>(py: Python<'py>, r: &ErrorReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("samples", r.samples)?;
    d.set_item("relative_samples", r.relative_samples)?;
    d.set_item("mred", r.mred)?;
    d.set_item("mared", r.mared)?;
    d.set_item("nmed", r.nmed_signed)?;
    d.set_item("nmed_abs", r.nmed_abs)?;
    d.set_item("min_error", r.min_error)?;
    d.set_item("max_error", r.max_error)?;
    d.set_item("histogram_mode", r.histogram.mode())?;
    d.set_item("histogram", r.histogram.bins.clone())?;
    Ok(d)
}

#[pyclass(name = "Design", frozen)]
struct PyDesign {
    inner: MultiplierDesign,
}

#[pymethods]
impl PyDesign {
    /// Plans and builds an `digits`-digit multiplier approximated below `border`.
    /// `border = None` gives the exact multiplier.
    #[new]
    #[pyo3(signature = (digits, border = None, library = None))]
    fn new(digits: usize, border: Option<u32>, library: Option<&PyCellLibrary>) -> PyResult<Self> {
        let lib = library_or_default(library);
        let plan = match border {
            Some(b) => plan_design(digits, b, &lib),
            None => plan_exact(digits, &lib),
        }
        .map_err(err)?;
        Ok(PyDesign {
            inner: build(&plan, &lib).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDesign {
            inner: doc::parse_design(text).map_err(err)?,
        })
    }

    #[getter]
    fn digits(&self) -> usize {
        self.inner.digits()
    }

    #[getter]
    fn border(&self) -> u32 {
        self.inner.plan().border
    }

    fn to_json(&self) -> String {
        doc::design_json(&self.inner)
    }

    fn wiring_digest(&self) -> String {
        self.inner.wiring_digest()
    }

    /// Approximate product of two digit lists: `(digits, value)`.
    fn evaluate(&self, a: Vec<i32>, b: Vec<i32>) -> PyResult<(Vec<i32>, i128)> {
        let (x, v) = self
            .inner
            .evaluate(&number(&a)?, &number(&b)?)
            .map_err(err)?;
        Ok((x.digit_values(), v))
    }

    fn stats_json(&self) -> String {
        doc::stats_json(&stats(&self.inner), self.inner.library())
    }

    fn cell_counts(&self) -> Vec<(&'static str, u32)> {
        stats(&self.inner)
            .counts
            .into_iter()
            .map(|(k, n)| (k.name(), n))
            .collect()
    }

    fn gate_count(&self) -> u64 {
        stats(&self.inner).gate_count
    }

    #[pyo3(signature = (samples, seed = 1, workers = None))]
    fn monte_carlo<'py>(
        &self,
        py: Python<'py>,
        samples: u64,
        seed: u64,
        workers: Option<usize>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = py
            .detach(|| run_monte_carlo(&self.inner, samples, seed, workers))
            .map_err(err)?;
        report_dict(py, &r)
    }

    fn exhaustive<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = run_exhaustive(&self.inner).map_err(err)?;
        report_dict(py, &r)
    }
}

#[pymodule]
fn amrmul(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(dynamic_range, m)?)?;
    m.add_function(wrap_pyfunction!(encode_value, m)?)?;
    m.add_function(wrap_pyfunction!(number_value, m)?)?;
    m.add_function(wrap_pyfunction!(random_number, m)?)?;
    m.add_function(wrap_pyfunction!(assign_column, m)?)?;
    m.add_class::<PyCellLibrary>()?;
    m.add_class::<PyDesign>()?;
    Ok(())
}
