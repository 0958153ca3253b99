//! Python module `sigflow`: metrics, point classification, geodesic
//! families, verification suites and scenario runs.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sigflow::families::{launch_family, LaunchParams};
use sigflow::flow::{trace_geodesic, GeodesicTrace, IntegratorConfig, MemberKind, Sense};
use sigflow::scenario::{self, Scenario};
use sigflow::{verify, Direction, Error, Point};

fn err(e: Error) -> PyErr {
    match e {
        Error::Parse(_) | Error::Invalid(_) | Error::Scenario(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn kind_name(k: MemberKind) -> &'static str {
    match k {
        MemberKind::Generic => "generic",
        MemberKind::Isotropic => "isotropic",
        MemberKind::Exceptional => "exceptional",
        MemberKind::Admissible => "admissible",
        MemberKind::Free => "free",
    }
}

fn trace_dict<'py>(py: Python<'py>, g: &GeodesicTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", g.id)?;
    d.set_item("kind", kind_name(g.kind))?;
    d.set_item("x", g.points.iter().map(|p| p.x).collect::<Vec<_>>())?;
    d.set_item("y", g.points.iter().map(|p| p.y).collect::<Vec<_>>())?;
    d.set_item("labels", g.labels.iter().map(|l| l.name()).collect::<Vec<_>>())?;
    d.set_item("label", g.majority_label(0.0).map(|l| l.name()))?;
    if let Some(p) = g.param {
        d.set_item("leaf", p.leaf)?;
        d.set_item("phase", p.phase)?;
        d.set_item("side", p.side)?;
    }
    Ok(d)
}

/// A metric `a dx² + 2b dxdy + c dy²` with expression coefficients.
#[pyclass(name = "Metric", module = "sigflow")]
struct PyMetric(sigflow::Metric);

#[pymethods]
impl PyMetric {
    #[new]
    fn new(a: &str, b: &str, c: &str) -> PyResult<Self> {
        sigflow::Metric::parse(a, b, c).map(PyMetric).map_err(err)
    }

    /// `ω(y − εx²)dx² − ω dy²`.
    #[staticmethod]
    fn normal_form(omega: &str, eps: f64) -> PyResult<Self> {
        let om = sigflow::parse(omega).map_err(|e| err(e.into()))?;
        Ok(PyMetric(sigflow::Metric::normal_form(om, eps)))
    }

    /// Class, `K₁`, admissible directions and spectrum at a discriminant point.
    fn classify<'py>(&self, py: Python<'py>, x: f64, y: f64) -> PyResult<Bound<'py, PyDict>> {
        let pc = sigflow::classify(&self.0, Point::new(x, y)).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("class", pc.class.to_string())?;
        d.set_item("k1", pc.k1)?;
        d.set_item("p0", pc.p0)?;
        let dirs: Vec<(Option<f64>, usize)> = pc.directions.iter().map(|(d, k)| (d.slope(), *k)).collect();
        d.set_item("directions", dirs)?;
        if let Some(sp) = pc.epsilon {
            d.set_item("eps", ((sp.eps1.re, sp.eps1.im), (sp.eps2.re, sp.eps2.im)))?;
        }
        d.set_item("diagnostics", pc.diagnostics)?;
        Ok(d)
    }

    /// The geodesic family leaving a discriminant point.
    #[pyo3(signature = (x, y, leaves=None, phases=None, delta=None, radius=None, admissible=None))]
    #[allow(clippy::too_many_arguments)]
    fn family<'py>(
        &self,
        py: Python<'py>,
        x: f64,
        y: f64,
        leaves: Option<Vec<f64>>,
        phases: Option<usize>,
        delta: Option<f64>,
        radius: Option<f64>,
        admissible: Option<bool>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let q = Point::new(x, y);
        let pc = sigflow::classify(&self.0, q).map_err(err)?;
        let mut p = LaunchParams::default();
        if let Some(l) = leaves {
            p.leaves = l;
        }
        p.phases = phases.unwrap_or(p.phases);
        p.delta = delta.unwrap_or(p.delta);
        p.radius = radius.unwrap_or(p.radius);
        p.admissible = admissible.unwrap_or(p.admissible);
        let fam = py.detach(|| launch_family(&self.0, &pc, &p)).map_err(err)?;
        fam.iter().map(|g| trace_dict(py, g)).collect()
    }

    /// Geodesic through a regular contact element, both senses.
    #[pyo3(signature = (x, y, slope, t_max=10.0))]
    fn geodesic<'py>(&self, py: Python<'py>, x: f64, y: f64, slope: f64, t_max: f64) -> PyResult<Bound<'py, PyDict>> {
        let cfg = IntegratorConfig {
            t_max,
            ..IntegratorConfig::default()
        };
        let g = trace_geodesic(&self.0, Point::new(x, y), Direction::Affine(slope), Sense::Both, &cfg).map_err(err)?;
        trace_dict(py, &g)
    }
}

/// Checks of a verification suite as `(criterion, name, measured, bound, passed)`.
#[pyfunction]
#[pyo3(signature = (suite="all", seed=0))]
fn run_suite(py: Python<'_>, suite: &str, seed: u64) -> PyResult<Vec<(u8, String, f64, f64, bool)>> {
    let checks = py.detach(|| verify::suite(suite, seed)).map_err(err)?;
    Ok(checks
        .into_iter()
        .map(|c| {
            let pass = c.pass();
            (c.criterion, c.name, c.measured, c.bound, pass)
        })
        .collect())
}

/// Runs a scenario file; returns the exit code (0 or 3) and raises on
/// scenario errors.
#[pyfunction]
#[pyo3(signature = (path, out=None, seed=None))]
fn run_scenario(py: Python<'_>, path: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> PyResult<i32> {
    let s = Scenario::load(&path).map_err(err)?;
    let env = std::env::var_os(scenario::OUT_ENV).map(PathBuf::from);
    let dir = scenario::resolve_out(out.as_deref(), &s, env.as_deref());
    Ok(py.detach(|| scenario::run(&s, &dir, seed)).exit_code())
}

#[pymodule]
#[pyo3(name = "sigflow")]
fn sigflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMetric>()?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    Ok(())
}
