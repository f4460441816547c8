//! Python bindings: instances, generation, solving, validation and the
//! enumeration oracle.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use evcts::instance::{self as inst, synth};
use evcts::oracle;
use evcts::search::{self, PfihStrategy, RunStatus, SolverConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Instance", module = "evcts")]
#[derive(Clone)]
struct PyInstance {
    inner: inst::Instance,
}

#[pymethods]
impl PyInstance {
    /// Parses the native text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        inst::parse_instance(text)
            .map(|inner| PyInstance { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Self::parse(&text)
    }

    /// Parses a Schneider-layout file, keeping the first `customers`.
    #[staticmethod]
    #[pyo3(signature = (text, name, customers=None, vehicles=None))]
    fn parse_schneider(text: &str, name: &str, customers: Option<usize>, vehicles: Option<usize>) -> PyResult<Self> {
        inst::parse_schneider(text, name, customers, vehicles)
            .map(|inner| PyInstance { inner })
            .map_err(value_err)
    }

    /// The fixed four-customer toy instance.
    #[staticmethod]
    fn toy() -> Self {
        PyInstance { inner: synth::toy_t1() }
    }

    fn to_text(&self) -> String {
        inst::write_instance(&self.inner)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn vehicles(&self) -> usize {
        self.inner.vehicles
    }

    #[getter]
    fn num_customers(&self) -> usize {
        self.inner.num_customers()
    }

    #[getter]
    fn num_slots(&self) -> usize {
        self.inner.slots().count()
    }

    /// Id of the return depot copy.
    #[getter]
    fn end_depot(&self) -> usize {
        self.inner.end_depot()
    }

    /// Copy with every slot capacity set to `cap`.
    fn with_slot_capacity(&self, cap: u32) -> Self {
        PyInstance {
            inner: self.inner.with_slot_capacity(cap),
        }
    }

    /// Expands stations into charging slots, `fraction` of them open.
    fn generate(&self, fraction: f64, seed: u64) -> PyResult<Self> {
        inst::generate_instance(&self.inner, fraction, seed)
            .map(|g| PyInstance { inner: g.instance })
            .map_err(value_err)
    }

    /// Checks routes against every constraint. Returns
    /// `(passed, cost, first failure or None)`.
    fn validate(&self, routes: Vec<Vec<usize>>) -> (bool, f64, Option<String>) {
        let r = inst::validate_solution(&self.inner, &routes);
        (r.passed(), r.cost, r.first_failure().map(|(_, what)| what))
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance({:?}, customers={}, slots={}, vehicles={})",
            self.inner.name,
            self.inner.num_customers(),
            self.inner.slots().count(),
            self.inner.vehicles
        )
    }
}

#[pyclass(name = "Report", module = "evcts")]
struct PyReport {
    inner: search::RunReport,
}

fn py_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "None".to_string(), |x| x.to_string())
}

fn status_name(s: RunStatus) -> &'static str {
    match s {
        RunStatus::Optimal => "optimal",
        RunStatus::Infeasible => "infeasible",
        RunStatus::TimeLimit => "time_limit",
        RunStatus::NodeLimit => "node_limit",
        RunStatus::Incomplete => "incomplete",
    }
}

#[pymethods]
impl PyReport {
    #[getter]
    fn status(&self) -> &'static str {
        status_name(self.inner.status)
    }

    #[getter]
    fn primal(&self) -> Option<f64> {
        self.inner.primal
    }

    #[getter]
    fn dual(&self) -> Option<f64> {
        self.inner.dual
    }

    #[getter]
    fn gap(&self) -> Option<f64> {
        self.inner.gap
    }

    #[getter]
    fn root_primal(&self) -> Option<f64> {
        self.inner.root.primal
    }

    #[getter]
    fn root_dual(&self) -> Option<f64> {
        self.inner.root.dual
    }

    #[getter]
    fn root_gap(&self) -> Option<f64> {
        self.inner.root.gap
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.inner.nodes
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time
    }

    #[getter]
    fn time_pfih(&self) -> Option<f64> {
        self.inner.time_pfih
    }

    #[getter]
    fn routes(&self) -> Vec<Vec<usize>> {
        self.inner.routes.clone()
    }

    #[getter]
    fn cuts(&self) -> Vec<Vec<usize>> {
        self.inner.cuts.iter().map(|c| c.customers.clone()).collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn csv_row(&self) -> String {
        self.inner.csv_row()
    }

    fn __repr__(&self) -> String {
        format!(
            "Report({:?}, status={}, primal={}, dual={}, nodes={})",
            self.inner.instance,
            status_name(self.inner.status),
            py_opt(self.inner.primal),
            py_opt(self.inner.dual),
            self.inner.nodes
        )
    }
}

/// Solves with branch-price-and-cut. `pfih` is one of off, during, before,
/// after; `time_limit` is in solver-clock seconds.
#[pyfunction]
#[pyo3(signature = (instance, pfih="off", cuts=true, time_limit=3600.0, seed=0, ng=8, max_nodes=100_000))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    instance: &PyInstance,
    pfih: &str,
    cuts: bool,
    time_limit: f64,
    seed: u64,
    ng: usize,
    max_nodes: usize,
) -> PyResult<PyReport> {
    let pfih: PfihStrategy = pfih.parse().map_err(PyValueError::new_err)?;
    let cfg = SolverConfig {
        pfih,
        cuts,
        time_limit,
        seed,
        ng_size: ng,
        max_nodes,
        ..SolverConfig::default()
    };
    cfg.check().map_err(PyValueError::new_err)?;
    let inst = instance.inner.clone();
    let inner = py.allow_threads(move || search::solve(&inst, &inst.name, &cfg));
    Ok(PyReport { inner })
}

/// Optimum by route enumeration, for tiny instances only. Returns
/// `(value, routes)` or `None` when infeasible.
#[pyfunction]
fn solve_exact(instance: &PyInstance) -> PyResult<Option<(f64, Vec<Vec<usize>>)>> {
    match oracle::solve_exact_tiny(&instance.inner) {
        Ok(s) => Ok(Some((s.value, s.routes))),
        Err(oracle::OracleError::Infeasible) => Ok(None),
        Err(e) => Err(value_err(e)),
    }
}

/// Parses a solution file body into routes.
#[pyfunction]
fn parse_solution(text: &str) -> PyResult<Vec<Vec<usize>>> {
    inst::parse_solution(text).map_err(value_err)
}

/// Random tiny instance in which every customer can be served.
#[pyfunction]
#[pyo3(signature = (seed, customers=5, chargers=1, slots_per_charger=2, vehicles=3))]
fn tiny_instance(
    seed: u64,
    customers: usize,
    chargers: usize,
    slots_per_charger: usize,
    vehicles: usize,
) -> PyInstance {
    let spec = synth::TinySpec {
        customers,
        chargers,
        slots_per_charger,
        vehicles,
    };
    PyInstance {
        inner: synth::tiny_reachable_instance(seed, spec),
    }
}

#[pymodule]
#[pyo3(name = "evcts")]
fn evcts_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(solve_exact, m)?)?;
    m.add_function(wrap_pyfunction!(parse_solution, m)?)?;
    m.add_function(wrap_pyfunction!(tiny_instance, m)?)?;
    m.add("CSV_HEADER", search::CSV_HEADER)?;
    Ok(())
}
