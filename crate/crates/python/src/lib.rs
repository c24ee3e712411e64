//! Python bindings for `kfree-core`.
//!
//! Heavy calls release the GIL. A `Sieve` is shared by reference counting,
//! so a `Diffraction` keeps its sieve alive.

use std::sync::Arc;

use kfree_core::asymptotics as asy;
use kfree_core::diffraction::{self, Diffraction as CoreDiffraction, Totals};
use kfree_core::sieve::{self, SieveConfig, SieveTables};
use kfree_core::special::{self, constants::precise_constants};
use kfree_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::OutOfRange { .. } | Error::InvalidArgument(_) | Error::TooFewPoints { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A value with a rigorous bound on its truncation error.
#[pyclass(frozen, name = "TailBounded", module = "kfree")]
#[derive(Clone, Copy)]
struct PyTailBounded {
    #[pyo3(get)]
    value: f64,
    #[pyo3(get)]
    tail: f64,
}

impl From<special::TailBounded> for PyTailBounded {
    fn from(t: special::TailBounded) -> Self {
        Self {
            value: t.value,
            tail: t.tail,
        }
    }
}

impl PyTailBounded {
    fn core(&self) -> special::TailBounded {
        special::TailBounded::new(self.value, self.tail)
    }
}

#[pymethods]
impl PyTailBounded {
    #[new]
    fn new(value: f64, tail: f64) -> PyResult<Self> {
        if !(tail >= 0.0 && tail.is_finite()) {
            return Err(PyValueError::new_err("tail must be finite and nonnegative"));
        }
        Ok(Self { value, tail })
    }

    #[getter]
    fn lower(&self) -> f64 {
        self.value - self.tail
    }

    #[getter]
    fn upper(&self) -> f64 {
        self.value + self.tail
    }

    fn contains(&self, x: f64) -> bool {
        self.core().contains(x)
    }

    fn agrees_with(&self, other: &PyTailBounded) -> bool {
        self.core().agrees_with(&other.core())
    }

    fn __float__(&self) -> f64 {
        self.value
    }

    fn __repr__(&self) -> String {
        format!("TailBounded(value={:e}, tail={:e})", self.value, self.tail)
    }
}

/// Smallest-prime-factor and Möbius tables up to `limit`.
#[pyclass(frozen, name = "Sieve", module = "kfree")]
struct PySieve {
    inner: Arc<SieveTables>,
}

#[pymethods]
impl PySieve {
    #[new]
    fn new(py: Python<'_>, limit: u64) -> PyResult<Self> {
        let inner = py.allow_threads(|| sieve::build_sieve(limit)).map_err(to_py)?;
        Ok(Self { inner: Arc::new(inner) })
    }

    #[getter]
    fn limit(&self) -> u64 {
        self.inner.limit()
    }

    fn mobius(&self, n: u64) -> PyResult<i8> {
        self.inner.mobius(n).map_err(to_py)
    }

    fn is_kfree(&self, n: u64, k: u32) -> PyResult<bool> {
        self.inner.is_kfree(n, k).map_err(to_py)
    }

    fn tau(&self, n: u64) -> PyResult<u64> {
        self.inner.tau(n).map_err(to_py)
    }

    fn spf(&self, n: u64) -> Option<u64> {
        self.inner.spf(n)
    }

    /// `[(p, e), ...]` with `n = prod p^e`.
    fn factorize(&self, n: u64) -> PyResult<Vec<(u64, u32)>> {
        Ok(self.inner.factorize(n).map_err(to_py)?.factors)
    }

    fn g_weight(&self, c: u64, a: u64) -> i8 {
        self.inner.g_weight(c, a)
    }

    fn count_squarefree(&self, py: Python<'_>, x: f64) -> PyResult<u64> {
        py.allow_threads(|| self.inner.count_squarefree(x)).map_err(to_py)
    }

    #[pyo3(signature = (x, a))]
    fn count_squarefree_coprime(&self, py: Python<'_>, x: f64, a: u64) -> PyResult<u64> {
        py.allow_threads(|| self.inner.count_squarefree_coprime(x, a)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Sieve(limit={})", self.inner.limit())
    }
}

/// `xi_k`, `gamma_k`, `c_k` for one `k`.
#[pyclass(frozen, name = "KfreeConstants", module = "kfree")]
struct PyConstants {
    #[pyo3(get)]
    k: u32,
    #[pyo3(get)]
    xi_k: PyTailBounded,
    #[pyo3(get)]
    gamma_k: PyTailBounded,
    #[pyo3(get)]
    c_k: PyTailBounded,
    /// 40-digit decimal strings
    #[pyo3(get)]
    digits: (String, String, String),
}

#[pymethods]
impl PyConstants {
    fn __repr__(&self) -> String {
        format!(
            "KfreeConstants(k={}, xi_k={}, gamma_k={}, c_k={})",
            self.k, self.xi_k.value, self.gamma_k.value, self.c_k.value
        )
    }
}

#[pyfunction]
#[pyo3(signature = (k, tail = 1e-20))]
fn constants(py: Python<'_>, k: u32, tail: f64) -> PyResult<PyConstants> {
    let pc = py.allow_threads(|| precise_constants(k, tail)).map_err(to_py)?;
    let c = pc.to_f64();
    Ok(PyConstants {
        k,
        xi_k: c.xi_k.into(),
        gamma_k: c.gamma_k.into(),
        c_k: c.c_k.into(),
        digits: (pc.xi.digits(40), pc.gamma.digits(40), pc.c.digits(40)),
    })
}

/// `zeta(s)` for real `s > 1`.
#[pyfunction]
#[pyo3(signature = (s, tail = 1e-20))]
fn zeta(s: f64, tail: f64) -> PyResult<PyTailBounded> {
    special::zeta_real(s, tail).map(Into::into).map_err(to_py)
}

/// One intensity value with the method and cutoffs used.
#[pyclass(frozen, name = "IntensityResult", module = "kfree")]
struct PyIntensity {
    inner: diffraction::IntensityResult,
}

#[pymethods]
impl PyIntensity {
    #[getter]
    fn k(&self) -> u32 {
        self.inner.k
    }

    #[getter]
    fn epsilon(&self) -> Option<f64> {
        self.inner.epsilon
    }

    #[getter]
    fn n(&self) -> Option<u64> {
        self.inner.n
    }

    #[getter]
    fn value(&self) -> PyTailBounded {
        self.inner.value.into()
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }

    #[getter]
    fn q_max(&self) -> Option<u64> {
        self.inner.cutoffs.q_max
    }

    #[getter]
    fn t_max(&self) -> Option<u64> {
        self.inner.cutoffs.t_max
    }

    #[getter]
    fn b_max(&self) -> Option<u64> {
        self.inner.cutoffs.b_max
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("records serialise")
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| Self { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "IntensityResult(k={}, method={}, value={:e}, tail={:e})",
            self.inner.k, self.inner.method, self.inner.value.value, self.inner.value.tail
        )
    }
}

/// Log-log least-squares fit `z = A eps^b`.
#[pyclass(frozen, name = "PowerLawFit", module = "kfree")]
struct PyFit {
    inner: asy::PowerLawFit,
}

#[pymethods]
impl PyFit {
    #[getter]
    fn exponent(&self) -> f64 {
        self.inner.exponent
    }

    #[getter]
    fn amplitude(&self) -> f64 {
        self.inner.amplitude()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn points(&self) -> Vec<(f64, f64)> {
        self.inner.points.clone()
    }

    fn amplitude_at_exponent(&self, exponent: f64) -> f64 {
        self.inner.amplitude_at_exponent(exponent)
    }

    fn __repr__(&self) -> String {
        format!("PowerLawFit(exponent={}, amplitude={})", self.inner.exponent, self.inner.amplitude())
    }
}

#[pyfunction]
fn fit_power_law(points: Vec<(f64, f64)>) -> PyResult<PyFit> {
    asy::fit_power_law(&points).map(|inner| PyFit { inner }).map_err(to_py)
}

/// All intensity evaluators for one `k` over a shared sieve.
#[pyclass(frozen, name = "Diffraction", module = "kfree")]
struct PyDiffraction {
    k: u32,
    sieve: Arc<SieveTables>,
    totals: Totals,
}

impl PyDiffraction {
    fn run<T: Send>(
        &self,
        py: Python<'_>,
        f: impl FnOnce(&CoreDiffraction<'_>) -> kfree_core::Result<T> + Send,
    ) -> PyResult<T> {
        py.allow_threads(|| f(&CoreDiffraction::with_totals(self.k, &self.sieve, self.totals)))
            .map_err(to_py)
    }
}

fn wrap(results: Vec<diffraction::IntensityResult>) -> Vec<PyIntensity> {
    results.into_iter().map(|inner| PyIntensity { inner }).collect()
}

#[pymethods]
impl PyDiffraction {
    #[new]
    fn new(py: Python<'_>, k: u32, sieve: &PySieve) -> PyResult<Self> {
        let totals = py.allow_threads(|| Totals::compute(k)).map_err(to_py)?;
        Ok(Self {
            k,
            sieve: Arc::clone(&sieve.inner),
            totals,
        })
    }

    #[getter]
    fn k(&self) -> u32 {
        self.k
    }

    /// `Z_k(eps)` from the Bragg sum over denominators.
    #[pyo3(signature = (epsilon, q_max = None))]
    fn z_direct(&self, py: Python<'_>, epsilon: f64, q_max: Option<u64>) -> PyResult<PyIntensity> {
        self.run(py, |d| d.z_direct(epsilon, q_max)).map(|inner| PyIntensity { inner })
    }

    #[pyo3(signature = (epsilons, q_max = None))]
    fn z_direct_many(&self, py: Python<'_>, epsilons: Vec<f64>, q_max: Option<u64>) -> PyResult<Vec<PyIntensity>> {
        self.run(py, |d| d.z_direct_many(&epsilons, q_max)).map(wrap)
    }

    /// `Z~_k(N)` from its defining q-sum.
    #[pyo3(signature = (n, q_max = None))]
    fn ztilde_definition(&self, py: Python<'_>, n: u64, q_max: Option<u64>) -> PyResult<PyIntensity> {
        self.run(py, |d| d.ztilde_definition(n, q_max)).map(|inner| PyIntensity { inner })
    }

    /// `Z~_k(N)` as `sum_b z_k(Nb)`.
    #[pyo3(signature = (n, b_max = None, t_max = None, tail = None))]
    fn ztilde_via_zk(
        &self,
        py: Python<'_>,
        n: u64,
        b_max: Option<u64>,
        t_max: Option<u64>,
        tail: Option<f64>,
    ) -> PyResult<PyIntensity> {
        let target = tail.unwrap_or(diffraction::DEFAULT_FACTORISED_TARGET);
        self.run(py, |d| d.ztilde_via_zk_target(n, b_max, t_max, target))
            .map(|inner| PyIntensity { inner })
    }

    /// `z_k(c)` from the factorised squarefree tail sum.
    #[pyo3(signature = (c, t_max = None))]
    fn zk_factorised(&self, py: Python<'_>, c: u64, t_max: Option<u64>) -> PyResult<PyTailBounded> {
        self.run(py, |d| d.zk_factorised(c, t_max)).map(Into::into)
    }

    /// `z_k(c)` from its double-sum definition.
    fn zk_definition(&self, py: Python<'_>, c: u64, r_max: u64, d_max: u64) -> PyResult<PyTailBounded> {
        self.run(py, |d| d.zk_definition(c, r_max, d_max)).map(Into::into)
    }

    /// `Z~(N+1) <= Z(eps) <= Z~(N)` with `N = floor(1/eps)`.
    #[pyo3(signature = (epsilon, q_max = None))]
    fn sandwich_check<'py>(&self, py: Python<'py>, epsilon: f64, q_max: Option<u64>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.run(py, |d| d.sandwich_check(epsilon, q_max))?;
        let out = PyDict::new_bound(py);
        out.set_item("n", r.n)?;
        out.set_item("lower", Py::new(py, PyIntensity { inner: r.lower })?)?;
        out.set_item("direct", Py::new(py, PyIntensity { inner: r.direct })?)?;
        out.set_item("upper", Py::new(py, PyIntensity { inner: r.upper })?)?;
        out.set_item("lower_holds", r.lower_holds)?;
        out.set_item("upper_holds", r.upper_holds)?;
        out.set_item("holds", r.verdict())?;
        Ok(out)
    }

    /// Fit `Z_k(eps)` over `epsilons`, returning the fit and the values.
    #[pyo3(signature = (epsilons, q_max = None))]
    fn power_law_fit(
        &self,
        py: Python<'_>,
        epsilons: Vec<f64>,
        q_max: Option<u64>,
    ) -> PyResult<(PyFit, Vec<PyIntensity>)> {
        let (fit, results) = self.run(py, |d| asy::power_law_fit(d, &epsilons, q_max))?;
        Ok((PyFit { inner: fit }, wrap(results)))
    }
}

fn series_dict<'py>(py: Python<'py>, s: asy::ResidualSeries) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new_bound(py);
    out.set_item("max_abs_normalized", s.max_abs_normalized())?;
    out.set_item("top_decade_max", s.top_decade_max())?;
    out.set_item("x", s.x)?;
    out.set_item("main", s.main)?;
    out.set_item("exact", s.exact)?;
    out.set_item("residual", s.residual)?;
    out.set_item("normalized", s.normalized)?;
    Ok(out)
}

/// Squarefree counts coprime to `coprime_to` against their main term.
#[pyfunction]
#[pyo3(signature = (xs, coprime_to = 1))]
fn walfisz_residuals<'py>(py: Python<'py>, xs: Vec<f64>, coprime_to: u64) -> PyResult<Bound<'py, PyDict>> {
    let s = py
        .allow_threads(|| asy::walfisz_residuals(&xs, coprime_to, &SieveConfig::default()))
        .map_err(to_py)?;
    series_dict(py, s)
}

/// `S_k(u)` at each point.
#[pyfunction]
fn weighted_squarefree_sums(py: Python<'_>, sieve: &PySieve, k: u32, points: Vec<f64>) -> PyResult<Vec<f64>> {
    py.allow_threads(|| asy::weighted_squarefree_sums(&sieve.inner, k, &points))
        .map_err(to_py)
}

#[pymodule]
fn kfree(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTailBounded>()?;
    m.add_class::<PySieve>()?;
    m.add_class::<PyConstants>()?;
    m.add_class::<PyIntensity>()?;
    m.add_class::<PyFit>()?;
    m.add_class::<PyDiffraction>()?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(zeta, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(walfisz_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_squarefree_sums, m)?)?;
    m.add("MAX_K", kfree_core::MAX_K)?;
    Ok(())
}
