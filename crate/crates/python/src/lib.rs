//! Python bindings: configuration, experiments, fields and the solvers.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use slipflow::biot_savart::velocity_from_vorticity;
use slipflow::harness::data::family;
use slipflow::harness::report::to_csv;
use slipflow::harness::{run_experiment, ExperimentReport, RunConfig, EXPERIMENTS};
use slipflow::ns::{solve_ns as ns_solve, wall_vorticity_max, NsConfig};
use slipflow::oracle::{solve_stokes_direct, Scheme};
use slipflow::semigroup::{apply_semigroup as semigroup, bc_relative_residual, KernelCache, StokesProblem};
use slipflow::stokes_green::ContourSpec;
use slipflow::{Error, GridSpec, SpectralField};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::InvalidGrid(_) | Error::NonPositiveTime(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Run configuration in the flat `key = value` format.
#[pyclass(name = "Config", module = "slipflow_py", skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: RunConfig::parse(text).map_err(py_err)?,
        })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(py_err)?;
        self.inner.validate().map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn experiment(&self) -> String {
        self.inner.experiment.clone()
    }

    /// Runs the configured experiment.
    fn run(&self, py: Python<'_>) -> PyResult<Report> {
        let cfg = self.inner.clone();
        let inner = py.detach(move || run_experiment(&cfg)).map_err(py_err)?;
        Ok(Report { inner })
    }

    fn __repr__(&self) -> String {
        format!("Config(experiment={:?}, hash={})", self.inner.experiment, self.inner.hash())
    }
}

/// Outcome of one experiment.
#[pyclass(module = "slipflow_py")]
struct Report {
    inner: ExperimentReport,
}

#[pymethods]
impl Report {
    fn passed(&self) -> bool {
        self.inner.passed()
    }

    fn criterion(&self, n: u8) -> Option<bool> {
        self.inner.criterion(n)
    }

    /// `(criterion, name, passed, detail)` tuples.
    fn checks(&self) -> Vec<(u8, String, bool, String)> {
        self.inner
            .checks
            .iter()
            .map(|c| (c.criterion, c.name.clone(), c.passed, c.detail.clone()))
            .collect()
    }

    /// `(name, fitted value, violations)` for every fitted constant.
    fn fits(&self) -> Vec<(String, f64, usize)> {
        self.inner.fits.iter().map(|f| (f.name.clone(), f.value, f.violations)).collect()
    }

    fn curves(&self) -> Vec<(String, Vec<(f64, f64)>)> {
        self.inner.curves.iter().map(|c| (c.name.clone(), c.points.clone())).collect()
    }

    fn to_csv(&self) -> String {
        to_csv(&self.inner.rows)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }
}

/// Vorticity as Fourier modes in `x` sampled on the wall-normal grid.
#[pyclass(name = "Field", module = "slipflow_py", from_py_object)]
#[derive(Clone)]
struct PyField {
    inner: SpectralField,
}

#[pymethods]
impl PyField {
    /// Named initial-data family on the production grid for `nu`.
    #[staticmethod]
    #[pyo3(signature = (name, nu, beta = 1.0, modes = 4, amplitude = 1.0))]
    fn family(name: &str, nu: f64, beta: f64, modes: usize, amplitude: f64) -> PyResult<Self> {
        let grid = Arc::new(GridSpec::default().build(nu).map_err(py_err)?);
        Ok(Self {
            inner: family(name, &grid, modes, nu, beta, amplitude).map_err(py_err)?,
        })
    }

    #[getter]
    fn max_mode(&self) -> usize {
        self.inner.max_mode()
    }

    fn z(&self) -> Vec<f64> {
        self.inner.grid().nodes().to_vec()
    }

    /// Mode `alpha` as `(re, im)` pairs.
    fn mode(&self, alpha: i64) -> PyResult<Vec<(f64, f64)>> {
        if alpha.unsigned_abs() as usize > self.inner.max_mode() {
            return Err(PyValueError::new_err(format!("mode {alpha} outside |alpha| <= {}", self.inner.max_mode())));
        }
        Ok(self.inner.mode(alpha).iter().map(|c| (c.re, c.im)).collect())
    }

    fn l1(&self) -> f64 {
        self.inner.l1()
    }

    fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    fn distance(&self, reference: &PyField) -> f64 {
        self.inner.rel_l1_distance(&reference.inner)
    }

    fn bc_residual(&self, nu: f64, beta: f64) -> f64 {
        bc_relative_residual(&self.inner, nu, beta)
    }

    /// `(u1, u2)` from the Biot-Savart law.
    fn velocity(&self) -> PyResult<(PyField, PyField)> {
        let v = velocity_from_vorticity(&self.inner).map_err(py_err)?;
        Ok((PyField { inner: v.u1 }, PyField { inner: v.u2 }))
    }

    fn wall_max(&self) -> PyResult<f64> {
        wall_vorticity_max(&self.inner).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Field(modes={}, nz={}, l1={:.6e})", self.inner.max_mode(), self.inner.grid().len(), self.inner.l1())
    }
}

fn cache(field: &PyField, nu: f64, beta: f64) -> KernelCache {
    KernelCache::new(nu, beta, field.inner.max_mode(), field.inner.grid().clone(), ContourSpec::production())
}

/// Stokes semigroup `e^{nu t B}` applied to `field`.
#[pyfunction]
fn apply_semigroup(py: Python<'_>, field: PyField, t: f64, nu: f64, beta: f64) -> PyResult<PyField> {
    py.detach(move || {
        let c = cache(&field, nu, beta);
        semigroup(&field.inner, t, &c).map(|inner| PyField { inner })
    })
    .map_err(py_err)
}

/// Navier-Stokes trajectory as `(t, field)` pairs at every step end.
#[pyfunction]
#[pyo3(signature = (field, t_final, nu, beta, dt = 0.025, snapshots = 4))]
fn solve_ns(
    py: Python<'_>,
    field: PyField,
    t_final: f64,
    nu: f64,
    beta: f64,
    dt: f64,
    snapshots: usize,
) -> PyResult<Vec<(f64, PyField)>> {
    py.detach(move || {
        let c = cache(&field, nu, beta);
        let cfg = NsConfig {
            dt,
            snapshots,
            ..NsConfig::default()
        };
        ns_solve(&field.inner, t_final, &c, &cfg)
    })
    .map(|traj| traj.times.into_iter().zip(traj.fields).map(|(t, inner)| (t, PyField { inner })).collect())
    .map_err(py_err)
}

/// Method-of-lines (trapezoidal) Stokes solution at `times`.
#[pyfunction]
#[pyo3(signature = (field, times, nu, beta, dt = 1e-3))]
fn solve_stokes_oracle(py: Python<'_>, field: PyField, times: Vec<f64>, nu: f64, beta: f64, dt: f64) -> PyResult<Vec<PyField>> {
    py.detach(move || {
        let p = StokesProblem {
            omega0: field.inner,
            forcing: None,
            nu,
            beta,
            times,
        };
        solve_stokes_direct(&p, Scheme::Trapezoidal, dt)
    })
    .map(|sol| sol.fields.into_iter().map(|inner| PyField { inner }).collect())
    .map_err(py_err)
}

#[pyfunction]
fn experiments() -> Vec<&'static str> {
    EXPERIMENTS.to_vec()
}

#[pymodule]
fn slipflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<Report>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(apply_semigroup, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ns, m)?)?;
    m.add_function(wrap_pyfunction!(solve_stokes_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(experiments, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
