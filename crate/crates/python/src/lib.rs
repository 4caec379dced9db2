//! Python bindings for the polyscreen solver.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use polyscreen::cli::config::RunConfig;
use polyscreen::cli::decay::{decay_study as run_decay, DecayOptions};
use polyscreen::cli::pipeline::{run_pipeline_on, PipelineOptions};
use polyscreen::direct::{screen_potential as direct_potential, QuadratureOptions, SeparableScreen};
use polyscreen::reference::{error_metrics as metrics, ewald_potential as ewald, EwaldParams};
use polyscreen::screens::{screen_moment as moment, ScreenSolver};
use polyscreen::shortrange::{build_tables, CutoffPolicy, PotentialTable, TableSpec};

create_exception!(polyscreen, PolyscreenError, PyException);

fn err(e: polyscreen::Error) -> PyErr {
    PolyscreenError::new_err(format!("{e} (exit code {})", e.exit_code()))
}

#[pyclass(name = "ChargeSystem", module = "polyscreen")]
#[derive(Clone)]
struct PyChargeSystem {
    inner: polyscreen::ChargeSystem,
}

#[pymethods]
impl PyChargeSystem {
    #[new]
    fn new(positions: Vec<[f64; 3]>, charges: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: polyscreen::ChargeSystem::new(positions, charges).map_err(err)? })
    }

    #[getter]
    fn positions(&self) -> Vec<[f64; 3]> {
        self.inner.positions.clone()
    }

    #[getter]
    fn charges(&self) -> Vec<f64> {
        self.inner.charges.clone()
    }

    fn total_charge(&self) -> f64 {
        self.inner.total_charge()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("ChargeSystem(n={}, total_charge={})", self.inner.len(), self.inner.total_charge())
    }
}

#[pyclass(name = "Mesh", module = "polyscreen")]
struct PyMesh {
    inner: polyscreen::Mesh,
}

#[pymethods]
impl PyMesh {
    #[new]
    #[pyo3(signature = (length, n_el, q, periodic = true))]
    fn new(length: f64, n_el: usize, q: usize, periodic: bool) -> PyResult<Self> {
        let inner = if periodic {
            polyscreen::Mesh::new(length, n_el, q)
        } else {
            polyscreen::Mesh::bounded(length, n_el, q)
        };
        Ok(Self { inner: inner.map_err(err)? })
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn n_el(&self) -> usize {
        self.inner.n_el
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p
    }

    /// Host element and offset from its center.
    fn locate(&self, position: [f64; 3]) -> PyResult<([usize; 3], [f64; 3])> {
        let loc = polyscreen::locate_charge(position, &self.inner).map_err(err)?;
        Ok((loc.element, loc.offset))
    }
}

#[pyclass(name = "RunConfig", module = "polyscreen")]
#[derive(Clone)]
struct PyRunConfig {
    inner: RunConfig,
}

#[pymethods]
impl PyRunConfig {
    /// Defaults, optionally overridden by `key = value` text.
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Self { inner: RunConfig::parse(text).map_err(err)? })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: RunConfig::from_file(&path).map_err(err)? })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        let c = &self.inner;
        d.set_item("n", c.n)?;
        d.set_item("q", c.q)?;
        d.set_item("n_el", c.n_el)?;
        d.set_item("box_length", c.box_length)?;
        d.set_item("sr_block", c.sr_block)?;
        d.set_item("solver_tol", c.solver_tol)?;
        d.set_item("seed", c.seed)?;
        d.set_item("out_prefix", &c.out_prefix)?;
        d.set_item("ewald_a2", c.ewald_a2)?;
        d.set_item("ewald_images", c.ewald_images)?;
        d.set_item("ewald_kmax", c.ewald_kmax)?;
        d.set_item("background_correction", c.background_correction)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("RunConfig(n={}, q={}, n_el={})", self.inner.n, self.inner.q, self.inner.n_el)
    }
}

#[pyclass(name = "PotentialTable", module = "polyscreen")]
struct PyPotentialTable {
    inner: PotentialTable,
}

#[pymethods]
impl PyPotentialTable {
    /// Build basis-screen tables for order `q` and a `block^3` cutoff.
    #[staticmethod]
    #[pyo3(signature = (q, block = 7))]
    fn build(py: Python<'_>, q: usize, block: usize) -> PyResult<Self> {
        let policy = CutoffPolicy::new(block).map_err(err)?;
        let spec = TableSpec::for_policy(q, &policy);
        let inner = py.detach(|| build_tables(&spec)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, q, block = 7))]
    fn load(path: PathBuf, q: usize, block: usize) -> PyResult<Self> {
        let policy = CutoffPolicy::new(block).map_err(err)?;
        let inner = PotentialTable::load(&path, &TableSpec::for_policy(q, &policy)).map_err(err)?;
        Ok(Self { inner })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    #[getter]
    fn q(&self) -> usize {
        self.inner.q()
    }

    #[getter]
    fn n_sc(&self) -> usize {
        self.inner.n_sc()
    }

    #[getter]
    fn max_residual(&self) -> f64 {
        self.inner.max_residual
    }

    /// Basis screen `j` at `y` in units of `h`.
    fn eval_basis(&self, j: usize, y: [f64; 3]) -> PyResult<f64> {
        self.inner.eval_basis(j, y).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (n, seed = 1, length = 1.0))]
fn generate_biased_cubes(n: usize, seed: u64, length: f64) -> PyResult<PyChargeSystem> {
    Ok(PyChargeSystem { inner: polyscreen::cli::generate::generate_biased_cubes(n, seed, length).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (charges, length = 1.0, a2 = 6.25, n_images = 2, k_max = 4, background = false))]
fn ewald_potential(
    py: Python<'_>,
    charges: &PyChargeSystem,
    length: f64,
    a2: f64,
    n_images: usize,
    k_max: usize,
    background: bool,
) -> PyResult<Vec<f64>> {
    let p = EwaldParams { a2, n_images, k_max, background };
    let sys = charges.inner.clone();
    py.detach(|| ewald(&sys, length, &p)).map_err(err)
}

/// Gauge-aligned relative errors: `{rms_rel, max_rel, gauge_shift, excluded}`.
#[pyfunction]
fn error_metrics<'py>(py: Python<'py>, phi: Vec<f64>, oracle: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let (rep, _) = metrics(&phi, &oracle).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rms_rel", rep.rms_rel)?;
    d.set_item("max_rel", rep.max_rel)?;
    d.set_item("gauge_shift", rep.gauge_shift)?;
    d.set_item("excluded", rep.excluded)?;
    Ok(d)
}

/// Screen coefficients in x-fastest node order.
#[pyfunction]
fn screen_coefficients(q: usize, h: f64, delta: [f64; 3]) -> PyResult<Vec<f64>> {
    let solver = ScreenSolver::new(q, h).map_err(err)?;
    Ok(polyscreen::screens::solve_screen_fast(delta, &solver).map_err(err)?.c)
}

/// `(l, m, n)`-moment of a screen about its charge.
#[pyfunction]
fn screen_moment(q: usize, h: f64, delta: [f64; 3], exps: [usize; 3]) -> PyResult<f64> {
    let solver = ScreenSolver::new(q, h).map_err(err)?;
    let s = polyscreen::screens::solve_screen_fast(delta, &solver).map_err(err)?;
    Ok(moment(&s, solver.basis(), exps))
}

/// Screen potential of a unit charge by adaptive quadrature; `y` is
/// measured from the host element center.
#[pyfunction]
fn screen_potential(q: usize, h: f64, delta: [f64; 3], y: [f64; 3]) -> PyResult<f64> {
    let solver = ScreenSolver::new(q, h).map_err(err)?;
    Ok(direct_potential(&SeparableScreen::new(&solver, delta), y, &QuadratureOptions::default()))
}

/// Run the pipeline on `charges` (or the configured generator) and return
/// the potentials and solve diagnostics.
#[pyfunction]
#[pyo3(signature = (config, charges = None, tables = None, oracle = true))]
fn run_pipeline<'py>(
    py: Python<'py>,
    config: &PyRunConfig,
    charges: Option<&PyChargeSystem>,
    tables: Option<&PyPotentialTable>,
    oracle: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let sys = match charges {
        Some(c) => c.inner.clone(),
        None => polyscreen::cli::generate::generate_biased_cubes(cfg.n, cfg.seed, cfg.box_length).map_err(err)?,
    };
    let opts = PipelineOptions { oracle, ..Default::default() };
    let t = tables.map(|t| &t.inner);
    let res = py.detach(|| run_pipeline_on(sys, &cfg, &opts, t)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("phi_total", res.phi_total)?;
    d.set_item("phi_smooth", res.phi_smooth)?;
    d.set_item("phi_short", res.phi_short)?;
    d.set_item("phi_ewald", res.phi_ewald)?;
    if let Some(s) = res.solve {
        d.set_item("solver_iterations", s.iterations)?;
        d.set_item("achieved_residual", s.relative_residual)?;
    }
    d.set_item("gauge_constant", res.gauge_constant)?;
    if let Some(e) = res.error {
        d.set_item("rms_rel", e.rms_rel)?;
        d.set_item("max_rel", e.max_rel)?;
    }
    Ok(d)
}

/// Short-range decay study by direct quadrature; one dict per order.
#[pyfunction]
#[pyo3(signature = (qs, n_directions = 42, n_offsets = 84, seed = 2024))]
fn decay_study<'py>(
    py: Python<'py>,
    qs: Vec<usize>,
    n_directions: usize,
    n_offsets: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let opts = DecayOptions { qs, n_directions, n_offsets, seed, ..Default::default() };
    let curves = py.detach(|| run_decay(&opts)).map_err(err)?;
    curves
        .into_iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("q", c.q)?;
            d.set_item("radii", c.radii)?;
            d.set_item("max_abs", c.max_abs)?;
            d.set_item("slope", c.slope)?;
            d.set_item("expected_slope", c.expected_slope)?;
            d.set_item("onset", c.onset)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "polyscreen")]
fn polyscreen_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", polyscreen::VERSION)?;
    m.add("PolyscreenError", m.py().get_type::<PolyscreenError>())?;
    m.add_class::<PyChargeSystem>()?;
    m.add_class::<PyMesh>()?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyPotentialTable>()?;
    m.add_function(wrap_pyfunction!(generate_biased_cubes, m)?)?;
    m.add_function(wrap_pyfunction!(ewald_potential, m)?)?;
    m.add_function(wrap_pyfunction!(error_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(screen_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(screen_moment, m)?)?;
    m.add_function(wrap_pyfunction!(screen_potential, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(decay_study, m)?)?;
    Ok(())
}
