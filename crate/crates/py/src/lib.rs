use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spin_collapse::automaton::{random_history, ObserverAutomaton};
use spin_collapse::bloch::{self, Outcome};
use spin_collapse::entropy;
use spin_collapse::pfn::{self, BoolExpr, Measure, ProbabilityMethod, TruthTable};
use spin_collapse::solver::{self, Method, SolverConfig};

fn err(e: spin_collapse::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Measurement axis in the canonical chart `[0, pi)^2`.
#[pyclass(frozen, name = "Axis")]
#[derive(Clone)]
struct PyAxis(bloch::Axis);

#[pymethods]
impl PyAxis {
    #[new]
    fn new(theta: f64, phi: f64) -> PyResult<Self> {
        bloch::canonicalize_axis(theta, phi).map(PyAxis).map_err(err)
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.0.theta()
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.0.phi()
    }

    #[getter]
    fn labels_swapped(&self) -> bool {
        self.0.labels_swapped()
    }

    fn bloch(&self) -> (f64, f64, f64) {
        let v = bloch::axis_to_bloch(&self.0);
        (v.x, v.y, v.z)
    }

    fn __repr__(&self) -> String {
        format!("Axis(theta={}, phi={})", self.0.theta(), self.0.phi())
    }
}

/// Pure spin state `sqrt(rho)|0> + sqrt(1-rho) e^{i tau}|1>`.
#[pyclass(frozen, name = "SpinState")]
#[derive(Clone)]
struct PySpinState(bloch::SpinState);

#[pymethods]
impl PySpinState {
    #[new]
    fn new(rho: f64, tau: f64) -> PyResult<Self> {
        bloch::SpinState::new(rho, tau).map(PySpinState).map_err(err)
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.0.tau()
    }

    fn bloch(&self) -> (f64, f64, f64) {
        let v = bloch::state_to_bloch(&self.0);
        (v.x, v.y, v.z)
    }

    /// Probability of the up outcome along `axis`.
    fn up_probability(&self, axis: &PyAxis) -> f64 {
        bloch::up_overlap_prob(&axis.0, &self.0)
    }

    fn __repr__(&self) -> String {
        format!("SpinState(rho={}, tau={})", self.0.rho(), self.0.tau())
    }
}

#[pyclass(frozen, name = "Solution")]
struct PySolution(solver::SolveReport);

#[pymethods]
impl PySolution {
    #[getter]
    fn status(&self) -> String {
        format!("{:?}", self.0.solution.status)
    }

    #[getter]
    fn axis_f(&self) -> PyAxis {
        PyAxis(self.0.solution.axis_f)
    }

    #[getter]
    fn s_i(&self) -> f64 {
        self.0.solution.s_i.value()
    }

    #[getter]
    fn s_f(&self) -> f64 {
        self.0.solution.s_f.value()
    }

    #[getter]
    fn s_up(&self) -> f64 {
        self.0.solution.s_up.value()
    }

    /// `None` unless both routes ran.
    #[getter]
    fn methods_agree(&self) -> Option<bool> {
        self.0.agreement.as_ref().map(|a| a.agree)
    }

    #[getter]
    fn candidates<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.solution.candidates)
    }

    #[getter]
    fn components(&self) -> usize {
        self.0.solution.curves.len()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0)
    }

    fn __repr__(&self) -> String {
        let s = &self.0.solution;
        format!("Solution(status={:?}, axis_f={}, s_up={})", s.status, s.axis_f, s.s_up.value())
    }
}

/// Entropy-constrained collapse of `state` measured along `axis`.
#[pyfunction]
#[pyo3(signature = (axis, state, method = "grid", grid_n = 1024))]
fn solve(axis: &PyAxis, state: &PySpinState, method: &str, grid_n: usize) -> PyResult<PySolution> {
    let cfg = SolverConfig {
        method: method.parse::<Method>().map_err(err)?,
        grid_n,
        ..SolverConfig::default()
    };
    solver::solve(&axis.0, &state.0, &cfg).map(PySolution).map_err(err)
}

/// Binary entropy in nats.
#[pyfunction]
fn binary_entropy(p: f64) -> PyResult<f64> {
    entropy::binary_entropy(p).map(|e| e.value()).map_err(err)
}

/// The two probabilities `(p, 1 - p)` with binary entropy `s`, smaller first.
#[pyfunction]
fn entropy_inverse(s: f64) -> PyResult<(f64, f64)> {
    entropy::entropy_pair_solutions_value(s).map_err(err)
}

/// A boolean P function over the current projection and `depth` past steps.
#[pyclass(frozen, name = "Expr")]
#[derive(Clone)]
struct PyExpr {
    expr: BoolExpr,
    depth: usize,
}

#[pymethods]
impl PyExpr {
    #[new]
    #[pyo3(signature = (text, depth = 0))]
    fn new(text: &str, depth: usize) -> PyResult<Self> {
        let expr = pfn::parse_expr(text, depth).map_err(err)?;
        Ok(PyExpr { expr, depth })
    }

    #[getter]
    fn depth(&self) -> usize {
        self.depth
    }

    fn truth_table(&self) -> PyResult<String> {
        pfn::to_truth_table(&self.expr, self.depth).map(|t| t.to_hex()).map_err(err)
    }

    fn dnf(&self) -> PyResult<String> {
        let t = pfn::to_truth_table(&self.expr, self.depth).map_err(err)?;
        Ok(pfn::to_dnf(&t).to_string())
    }

    fn cnf(&self) -> PyResult<String> {
        let t = pfn::to_truth_table(&self.expr, self.depth).map_err(err)?;
        Ok(pfn::to_cnf(&t).to_string())
    }

    /// Up-outcome probability. Analytic unless `samples` is given.
    #[pyo3(signature = (measure = "chart", samples = None, seed = 0))]
    fn probability(&self, measure: &str, samples: Option<u64>, seed: u64) -> PyResult<f64> {
        let measure = measure.parse::<Measure>().map_err(err)?;
        let method = match samples {
            Some(samples) => ProbabilityMethod::MonteCarlo { samples, seed },
            None => ProbabilityMethod::Analytic,
        };
        pfn::outcome_probability(&self.expr, measure, method)
            .map(|p| p.probability)
            .map_err(err)
    }

    fn __str__(&self) -> String {
        self.expr.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?}, depth={})", self.expr.to_string(), self.depth)
    }
}

/// DNF of a hex truth table at memory depth `depth`.
#[pyfunction]
#[pyo3(signature = (hex, depth = 0))]
fn table_dnf(hex: &str, depth: usize) -> PyResult<String> {
    let t = TruthTable::from_hex(depth, hex).map_err(err)?;
    Ok(pfn::to_dnf(&t).to_string())
}

/// CNF of a hex truth table at memory depth `depth`.
#[pyfunction]
#[pyo3(signature = (hex, depth = 0))]
fn table_cnf(hex: &str, depth: usize) -> PyResult<String> {
    let t = TruthTable::from_hex(depth, hex).map_err(err)?;
    Ok(pfn::to_cnf(&t).to_string())
}

#[pyclass(name = "Automaton")]
struct PyAutomaton(ObserverAutomaton);

#[pymethods]
impl PyAutomaton {
    /// `history` seeds the memory window, most recent first, as
    /// `(xi, eta, up)` triples. With `history_seed` it is drawn at random.
    #[new]
    #[pyo3(signature = (axis, pfn, world_id = None, history = None, history_seed = None, grid_n = 1024))]
    fn new(
        axis: &PyAxis,
        pfn: &PyExpr,
        world_id: Option<String>,
        history: Option<Vec<(bool, bool, bool)>>,
        history_seed: Option<u64>,
        grid_n: usize,
    ) -> PyResult<Self> {
        let cfg = SolverConfig {
            grid_n,
            ..SolverConfig::default()
        };
        let id = world_id.unwrap_or_else(|| pfn.expr.to_string());
        let mut m = ObserverAutomaton::new(axis.0, pfn.expr.clone(), pfn.depth, cfg, id).map_err(err)?;
        if pfn.depth > 0 {
            let h = match (history, history_seed) {
                (Some(h), _) => h
                    .into_iter()
                    .map(|(xi, eta, up)| pfn::HistoryEntry::new(xi, eta, Outcome::from_bit(up)))
                    .collect(),
                (None, Some(seed)) => random_history(pfn.depth, seed),
                (None, None) => return Err(PyValueError::new_err("memory depth > 0 needs history or history_seed")),
            };
            m = m.with_history(h).map_err(err)?;
        }
        Ok(PyAutomaton(m))
    }

    #[getter]
    fn axis(&self) -> PyAxis {
        PyAxis(self.0.axis())
    }

    #[getter]
    fn world_id(&self) -> String {
        self.0.world_id().to_string()
    }

    #[getter]
    fn halted(&self) -> Option<String> {
        self.0.halted().map(|r| format!("{r:?}"))
    }

    #[getter]
    fn steps_taken(&self) -> usize {
        self.0.steps_taken()
    }

    /// One step. Returns the output state and the trace record.
    fn step<'py>(&mut self, py: Python<'py>, state: &PySpinState) -> PyResult<(PySpinState, Bound<'py, PyAny>)> {
        let (out, rec) = self.0.step(&state.0).map_err(err)?;
        Ok((PySpinState(out), to_py(py, &rec)?))
    }

    /// Feeds each output back as the next input. Returns a summary dict with
    /// the JSONL trace under `trace`.
    fn run<'py>(&mut self, py: Python<'py>, state: &PySpinState, max_steps: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = self.0.run(state.0, max_steps).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("steps", r.records.len())?;
        d.set_item("halted", r.halted)?;
        d.set_item("halt_reason", to_py(py, &r.halt_reason)?)?;
        d.set_item("death_step", r.death_step)?;
        d.set_item("trace", r.to_jsonl())?;
        Ok(d)
    }

    fn switch_world(&mut self, pfn: &PyExpr, world_id: String) -> PyResult<()> {
        self.0.switch_world(pfn.expr.clone(), world_id).map_err(err)
    }
}

#[pymodule]
#[pyo3(name = "spin_collapse")]
fn spin_collapse_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAxis>()?;
    m.add_class::<PySpinState>()?;
    m.add_class::<PySolution>()?;
    m.add_class::<PyExpr>()?;
    m.add_class::<PyAutomaton>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(table_dnf, m)?)?;
    m.add_function(wrap_pyfunction!(table_cnf, m)?)?;
    Ok(())
}
