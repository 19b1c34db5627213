//! Python bindings: monoatomic and diatomic solves, sweeps and checks.
//!
//! Structured results cross the boundary as plain dicts built from the same
//! JSON records the command-line tool writes.

use hartree_core::asymptotics::{self, MeshSpec, SweepReport, SweepSpec};
use hartree_core::checks;
use hartree_core::diatomic::{self, MeshReference, MeshSystem};
use hartree_core::mono::{self, MonoatomicSolution};
use hartree_core::scf::SCFSettings;
use hartree_core::{make_radial_grid, HartreeError, ModelParams, RadialScheme};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use std::path::PathBuf;

fn py_err(e: HartreeError) -> PyErr {
    match e {
        HartreeError::Config(_) | HartreeError::Domain(_) | HartreeError::Precondition(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_dict<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import_bound("json")?.call_method1("loads", (text,))
}

fn settings(tol: f64, mixing: f64, max_iter: usize) -> SCFSettings {
    SCFSettings { tol_residual: tol, mixing, max_iter, ..Default::default() }
}

/// Converged single-center state on a radial grid.
#[pyclass(name = "MonoatomicSolution", module = "hartree")]
pub struct PyMono {
    inner: MonoatomicSolution,
}

#[pymethods]
impl PyMono {
    #[getter]
    fn d(&self) -> usize {
        self.inner.params.d
    }
    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.params.hartree_coupling
    }
    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy_i
    }
    #[getter]
    fn m1(&self) -> f64 {
        self.inner.m1
    }
    #[getter]
    fn m2(&self) -> f64 {
        self.inner.m2
    }
    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn r(&self) -> Vec<f64> {
        self.inner.grid().nodes.clone()
    }
    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u.values.clone()
    }
    #[getter]
    fn vmf(&self) -> Vec<f64> {
        self.inner.vmf.values.clone()
    }

    fn decay_rate(&self) -> f64 {
        self.inner.decay_rate()
    }

    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.summary())
    }

    /// Fits `u ~ A r^{-p} e^{-k r}` on the window `(lo, hi)`.
    fn fit_decay<'py>(&self, py: Python<'py>, lo: f64, hi: f64) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &mono::fit_decay(&self.inner.u, (lo, hi)).map_err(py_err)?)
    }

    fn mean_field_tail<'py>(&self, py: Python<'py>, radii: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &mono::mean_field_tail(&self.inner, &radii).map_err(py_err)?)
    }

    fn __repr__(&self) -> String {
        format!("MonoatomicSolution(d={}, coupling={}, mu={:.10}, I={:.10})", self.d(), self.coupling(), self.inner.mu, self.inner.energy_i)
    }
}

#[pyfunction]
#[pyo3(signature = (d, coupling=1.0, r_max=None, n=3000, tol=1e-9, mixing=0.5, max_iter=200, scheme="graded"))]
#[allow(clippy::too_many_arguments)]
fn solve_monoatomic(
    py: Python<'_>,
    d: usize,
    coupling: f64,
    r_max: Option<f64>,
    n: usize,
    tol: f64,
    mixing: f64,
    max_iter: usize,
    scheme: &str,
) -> PyResult<PyMono> {
    let scheme = match scheme {
        "graded" => RadialScheme::Graded,
        "uniform" => RadialScheme::Uniform,
        other => return Err(PyValueError::new_err(format!("unknown radial scheme {other:?}"))),
    };
    let params = ModelParams::new(d, coupling).map_err(py_err)?;
    let r_max = r_max.unwrap_or(if d == 2 { 60.0 } else { 120.0 });
    let grid = make_radial_grid(r_max, n, d, scheme).map_err(py_err)?;
    let st = settings(tol, mixing, max_iter);
    let inner = py.allow_threads(|| mono::solve_monoatomic(&params, &grid, &st)).map_err(py_err)?;
    Ok(PyMono { inner })
}

/// Two-center mesh with the monoatomic reference solved on it.
#[pyclass(name = "DiatomicSystem", module = "hartree")]
pub struct PyDiatomic {
    params: ModelParams,
    sys: MeshSystem,
    reference: MeshReference,
    settings: SCFSettings,
}

#[pymethods]
impl PyDiatomic {
    #[new]
    #[pyo3(signature = (mono, h, axis_half, transverse, tol=1e-9))]
    fn new(py: Python<'_>, mono: &PyMono, h: f64, axis_half: f64, transverse: f64, tol: f64) -> PyResult<Self> {
        let params = mono.inner.params;
        let mesh = diatomic::diatomic_mesh(params.d, h, axis_half, transverse).map_err(py_err)?;
        let sys = MeshSystem::new(mesh);
        let st = SCFSettings { tol_residual: tol, ..Default::default() };
        let reference = py.allow_threads(|| diatomic::solve_mesh_reference(&sys, &mono.inner, &st)).map_err(py_err)?;
        Ok(Self { params, sys, reference, settings: st })
    }

    /// Multiplier of the monoatomic state on this mesh.
    #[getter]
    fn reference_mu(&self) -> f64 {
        self.reference.mu
    }

    #[getter]
    fn reference_energy(&self) -> f64 {
        self.reference.energy_i
    }

    /// Spacing-compatible separation closest to `l`.
    fn snap(&self, l: f64) -> f64 {
        diatomic::snap_length(&self.sys.mesh, l)
    }

    /// Solves at separation `l`; returns the per-L record.
    fn solve<'py>(&self, py: Python<'py>, l: f64) -> PyResult<Bound<'py, PyAny>> {
        let sol = py
            .allow_threads(|| diatomic::solve_diatomic(&self.params, &self.sys, &self.reference, l, &self.settings))
            .map_err(py_err)?;
        to_dict(py, &sol.record())
    }

    fn interaction_integrals<'py>(&self, py: Python<'py>, l: f64) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &diatomic::interaction_integrals(&self.sys, &self.reference, l).map_err(py_err)?)
    }
}

/// Result of an L-sweep with its fits.
#[pyclass(name = "SweepReport", module = "hartree")]
pub struct PySweep {
    inner: SweepReport,
}

#[pymethods]
impl PySweep {
    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner)
    }

    fn fits<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner.fits)
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        asymptotics::write_csv(&self.inner, &path).map_err(py_err)
    }

    fn write_json(&self, path: PathBuf) -> PyResult<()> {
        asymptotics::write_json(&self.inner, &path).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }
}

#[pyfunction]
#[pyo3(signature = (mono, h, axis_half, transverse, lengths, floor_h=None, tol=1e-8))]
fn run_sweep(
    py: Python<'_>,
    mono: &PyMono,
    h: f64,
    axis_half: f64,
    transverse: f64,
    lengths: Vec<f64>,
    floor_h: Option<f64>,
    tol: f64,
) -> PyResult<PySweep> {
    let spec = SweepSpec {
        mesh: MeshSpec { h, axis_half, transverse },
        lengths,
        settings: SCFSettings { tol_residual: tol, ..Default::default() },
        floor_h,
    };
    let inner = py.allow_threads(|| asymptotics::run_sweep(&mono.inner.params, &mono.inner, &spec)).map_err(py_err)?;
    Ok(PySweep { inner })
}

#[pyfunction]
#[pyo3(signature = (nu, k, d, radii=None))]
fn convolution_decay_check<'py>(py: Python<'py>, nu: f64, k: f64, d: usize, radii: Option<Vec<f64>>) -> PyResult<Bound<'py, PyAny>> {
    let radii = radii.unwrap_or_else(|| checks::default_convolution_radii(nu, 8));
    to_dict(py, &checks::convolution_decay_check(nu, k, d, &radii).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (mono, trials=200, amplitude=0.2, seed=checks::STABILITY_SEED))]
fn stability_check<'py>(py: Python<'py>, mono: &PyMono, trials: usize, amplitude: f64, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &checks::stability_check_seeded(&mono.inner, trials, amplitude, seed).map_err(py_err)?)
}

#[pyfunction]
#[pyo3(signature = (mono, tol=1e-9))]
fn yukawa_gradient_check<'py>(py: Python<'py>, mono: &PyMono, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &checks::yukawa_gradient_check(&mono.inner, tol).map_err(py_err)?)
}

#[pymodule]
fn hartree(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMono>()?;
    m.add_class::<PyDiatomic>()?;
    m.add_class::<PySweep>()?;
    m.add_function(wrap_pyfunction!(solve_monoatomic, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(convolution_decay_check, m)?)?;
    m.add_function(wrap_pyfunction!(stability_check, m)?)?;
    m.add_function(wrap_pyfunction!(yukawa_gradient_check, m)?)?;
    Ok(())
}

/// Registers the module in an embedded interpreter.
pub fn register(py: Python<'_>) -> PyResult<Bound<'_, PyModule>> {
    let m = PyModule::new_bound(py, "hartree")?;
    hartree(&m)?;
    Ok(m)
}
