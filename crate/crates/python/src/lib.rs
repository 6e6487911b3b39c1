//! Python bindings: grid distributions, the tester, the exact oracle, hard
//! instances and the invariant suites.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ak_closeness::hardness::gen_hard_instance as gen_hard;
use ak_closeness::oracle::{ak_distance_1d, ak_distance_bruteforce};
use ak_closeness::spec_file::{parse_spec, spec_to_string};
use ak_closeness::tester::{ak_closeness_test, kappa as kappa_of, sample_budget as budget_of};
use ak_closeness::verify::{run_suite, Suite};
use ak_closeness::{rng_from_seed, DiscreteGridDistribution, Error, Mode, TesterConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Overflow(_) | Error::CapExceeded(_) | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A nonnegative measure on a finite product grid.
#[pyclass(name = "Distribution", module = "ak_closeness_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: DiscreteGridDistribution,
}

#[pymethods]
impl PyDistribution {
    /// Build from a list of points and matching masses.
    #[new]
    fn new(points: Vec<Vec<f64>>, masses: Vec<f64>) -> PyResult<Self> {
        if points.len() != masses.len() {
            return Err(PyValueError::new_err("points and masses differ in length"));
        }
        let pairs: Vec<(Vec<f64>, f64)> = points.into_iter().zip(masses).collect();
        let inner = DiscreteGridDistribution::from_weighted_points(&pairs).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Parse a JSON distribution document.
    #[staticmethod]
    fn from_spec(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_spec(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn uniform_grid(n: usize, dim: usize) -> PyResult<Self> {
        Ok(Self { inner: DiscreteGridDistribution::uniform_grid(n, dim).map_err(to_py)? })
    }

    fn to_spec(&self) -> String {
        spec_to_string(&self.inner)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn total_mass(&self) -> f64 {
        self.inner.total_mass()
    }

    fn normalized(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.normalized().map_err(to_py)? })
    }

    /// `(point, mass)` pairs with positive mass.
    fn support(&self) -> Vec<(Vec<f64>, f64)> {
        self.inner.support()
    }

    fn __repr__(&self) -> String {
        format!("Distribution(dim={}, support={})", self.inner.dim(), self.inner.support().len())
    }
}

fn config(k: usize, d: usize, eps: f64, mode: &str, seed: u64) -> PyResult<TesterConfig> {
    let mode: Mode = mode.parse().map_err(to_py)?;
    TesterConfig::new(k, d, eps, mode, seed).map_err(to_py)
}

/// Run the tester on two distributions; returns the verdict as a dict.
#[pyfunction]
#[pyo3(signature = (p, q, k, eps = 1.0, seed = 0, mode = "practical"))]
fn closeness_test<'py>(
    py: Python<'py>,
    p: &PyDistribution,
    q: &PyDistribution,
    k: usize,
    eps: f64,
    seed: u64,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    if p.inner.dim() != q.inner.dim() {
        return Err(PyValueError::new_err("p and q differ in dimension"));
    }
    let cfg = config(k, p.inner.dim(), eps, mode, seed)?;
    let (ps, qs) = (p.inner.sampler().map_err(to_py)?, q.inner.sampler().map_err(to_py)?);
    let v = py
        .detach(|| {
            let mut pa = |r: &mut dyn rand::RngCore| Some(ps.sample(r));
            let mut qa = |r: &mut dyn rand::RngCore| Some(qs.sample(r));
            ak_closeness_test(&mut pa, &mut qa, &cfg)
        })
        .map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("reject", v.rejected())?;
    out.set_item("statistic", v.statistic)?;
    out.set_item("threshold", v.threshold)?;
    out.set_item("samples_used", v.samples_used)?;
    out.set_item("kappa", v.kappa)?;
    Ok(out)
}

/// Exact `A_k` distance between the normalized inputs.
#[pyfunction]
fn ak_distance(p: &PyDistribution, q: &PyDistribution, k: usize) -> PyResult<f64> {
    let (p, q) = (p.inner.normalized().map_err(to_py)?, q.inner.normalized().map_err(to_py)?);
    if p.dim() == 1 && q.dim() == 1 {
        return ak_distance_1d(&p, &q, k).map_err(to_py);
    }
    ak_distance_bruteforce(&p, &q, k).map(|(v, _)| v).map_err(to_py)
}

/// Tester sample budget `m` for the given parameters.
#[pyfunction]
#[pyo3(signature = (k, d, eps, mode = "practical"))]
fn sample_budget(k: usize, d: usize, eps: f64, mode: &str) -> PyResult<u64> {
    budget_of(&config(k, d, eps, mode, 0)?).map_err(to_py)
}

/// Accuracy `kappa` handed to the inner tester at budget `m`.
#[pyfunction]
#[pyo3(signature = (k, d, eps, m, mode = "practical"))]
fn kappa(k: usize, d: usize, eps: f64, m: u64, mode: &str) -> PyResult<f64> {
    Ok(kappa_of(&config(k, d, eps, mode, 0)?, m))
}

/// A heavy/light diagonal instance rounded to `resolution` cells per unit:
/// `(p, q, heavy_count, light_count)`.
#[pyfunction]
#[pyo3(signature = (k, m, eps, equal_case, seed = 0, resolution = 16))]
fn gen_hard_instance(
    k: usize,
    m: usize,
    eps: f64,
    equal_case: bool,
    seed: u64,
    resolution: usize,
) -> PyResult<(PyDistribution, PyDistribution, usize, usize)> {
    let inst = gen_hard(k, m, eps, equal_case, &mut rng_from_seed(seed)).map_err(to_py)?;
    let p = inst.p.discretize(resolution).and_then(|d| d.normalized()).map_err(to_py)?;
    let q = inst.q.discretize(resolution).and_then(|d| d.normalized()).map_err(to_py)?;
    Ok((PyDistribution { inner: p }, PyDistribution { inner: q }, inst.heavy_count(), inst.light_count()))
}

/// Run an invariant suite; returns `(passed, report)`.
#[pyfunction]
#[pyo3(signature = (suite, seed = 0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(to_py)?;
    let report = py.detach(|| run_suite(suite, seed)).map_err(to_py)?;
    Ok((report.passed(), report.to_string()))
}

#[pymodule]
pub fn ak_closeness_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(closeness_test, m)?)?;
    m.add_function(wrap_pyfunction!(ak_distance, m)?)?;
    m.add_function(wrap_pyfunction!(sample_budget, m)?)?;
    m.add_function(wrap_pyfunction!(kappa, m)?)?;
    m.add_function(wrap_pyfunction!(gen_hard_instance, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
