//! Python bindings: the main types and operations, with plain lists for
//! vectors and dicts for results.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use stackopt::follower::{FollowerOracle, Responder, ResponseMode};
use stackopt::geometry::FeasibleSet;
use stackopt::induce::{InduceConfig, InduceResult};
use stackopt::leader::{LeaderOptions, LeaderResult, StackelbergInstance};
use stackopt::preferences::{CostFunction, Valuation};
use stackopt::vector::Vector;
use stackopt::zoo::{ZooConfig, ZooMethod};

fn err(e: stackopt::Error) -> PyErr {
    match e {
        stackopt::Error::DimensionMismatch { .. }
        | stackopt::Error::InvalidParameter(_)
        | stackopt::Error::Domain(_)
        | stackopt::Error::Config(_)
        | stackopt::Error::NotHomogeneous
        | stackopt::Error::NonFinite(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn vec_of(values: Vec<f64>) -> PyResult<Vector> {
    Vector::new(values).map_err(err)
}

#[pyclass(name = "FeasibleSet", skip_from_py_object)]
#[derive(Clone)]
struct PyFeasibleSet {
    inner: FeasibleSet,
}

#[pymethods]
impl PyFeasibleSet {
    #[staticmethod]
    fn box_set(lo: Vec<f64>, hi: Vec<f64>) -> PyResult<Self> {
        Ok(PyFeasibleSet {
            inner: FeasibleSet::axis_box(vec_of(lo)?, vec_of(hi)?).map_err(err)?,
        })
    }

    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        Ok(PyFeasibleSet {
            inner: FeasibleSet::ball(vec_of(center)?, radius).map_err(err)?,
        })
    }

    #[staticmethod]
    fn nonneg_ball(dim: usize, radius: f64) -> PyResult<Self> {
        Ok(PyFeasibleSet {
            inner: FeasibleSet::nonneg_ball(dim, radius).map_err(err)?,
        })
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn project(&self, point: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.project(&vec_of(point)?).map_err(err)?.to_vec())
    }

    #[pyo3(signature = (point, tol = 0.0))]
    fn contains(&self, point: Vec<f64>, tol: f64) -> PyResult<bool> {
        self.inner.contains(&vec_of(point)?, tol).map_err(err)
    }

    fn shrink(&self, delta: f64) -> PyResult<Self> {
        Ok(PyFeasibleSet {
            inner: self.inner.shrink(delta).map_err(err)?,
        })
    }

    fn separating_hyperplane(&self, point: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .separating_hyperplane(&vec_of(point)?)
            .map_err(err)?
            .to_vec())
    }

    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    fn norm_bound(&self) -> f64 {
        self.inner.norm_bound()
    }
}

#[pyclass(name = "Valuation", skip_from_py_object)]
#[derive(Clone)]
struct PyValuation {
    inner: Valuation,
}

#[pymethods]
impl PyValuation {
    #[staticmethod]
    #[pyo3(signature = (weights, rho, beta, region_h = 1.0))]
    fn ces(weights: Vec<f64>, rho: f64, beta: f64, region_h: f64) -> PyResult<Self> {
        Ok(PyValuation {
            inner: Valuation::ces(weights, rho, beta, region_h).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (exponents, region_h = 1.0))]
    fn cobb_douglas(exponents: Vec<f64>, region_h: f64) -> PyResult<Self> {
        Ok(PyValuation {
            inner: Valuation::cobb_douglas(exponents, region_h).map_err(err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (linear, curvature, region_h = 1.0))]
    fn quadratic(linear: Vec<f64>, curvature: f64, region_h: f64) -> PyResult<Self> {
        Ok(PyValuation {
            inner: Valuation::quadratic(vec_of(linear)?, curvature, region_h).map_err(err)?,
        })
    }

    fn with_floor(&self, floor: f64) -> PyResult<Self> {
        Ok(PyValuation {
            inner: self.inner.clone().with_floor(floor).map_err(err)?,
        })
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn floor(&self) -> f64 {
        self.inner.floor()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&vec_of(x)?).map_err(err)
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.gradient(&vec_of(x)?).map_err(err)?.to_vec())
    }

    fn homogeneity_degree(&self) -> PyResult<f64> {
        self.inner.homogeneity_degree().map_err(err)
    }

    fn strong_concavity_constant(&self) -> f64 {
        self.inner.strong_concavity_constant()
    }

    fn holder_constants(&self) -> (f64, f64) {
        self.inner.holder_constants()
    }

    fn lipschitz_bound(&self) -> f64 {
        self.inner.lipschitz_bound()
    }
}

#[pyclass(name = "CostFunction", skip_from_py_object)]
#[derive(Clone)]
struct PyCostFunction {
    inner: CostFunction,
}

#[pymethods]
impl PyCostFunction {
    #[staticmethod]
    fn linear(coeffs: Vec<f64>) -> PyResult<Self> {
        Ok(PyCostFunction {
            inner: CostFunction::linear(vec_of(coeffs)?).map_err(err)?,
        })
    }

    #[staticmethod]
    fn quadratic(coeffs: Vec<f64>, curvature: f64) -> PyResult<Self> {
        Ok(PyCostFunction {
            inner: CostFunction::quadratic(vec_of(coeffs)?, curvature).map_err(err)?,
        })
    }

    fn evaluate(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.evaluate(&vec_of(x)?).map_err(err)
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.gradient(&vec_of(x)?).map_err(err)?.to_vec())
    }
}

#[pyfunction]
fn profit_of_bundle(v: &PyValuation, c: &PyCostFunction, x: Vec<f64>) -> PyResult<f64> {
    stackopt::profit_of_bundle(&v.inner, &c.inner, &vec_of(x)?).map_err(err)
}

fn parse_mode(mode: &str, tol: f64, zeta: f64, nu: f64) -> PyResult<ResponseMode> {
    Ok(match mode {
        "exact" => ResponseMode::Exact { tol },
        "approximate" => ResponseMode::Approximate { zeta },
        "noisy" => ResponseMode::Noisy { nu },
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown response mode '{other}' (exact | approximate | noisy)"
            )))
        }
    })
}

#[pyclass(name = "FollowerOracle")]
struct PyFollowerOracle {
    inner: FollowerOracle,
}

#[pymethods]
impl PyFollowerOracle {
    #[new]
    #[pyo3(signature = (valuation, feasible, mode = "exact", seed = 0, tol = 1e-7, zeta = 1e-6, nu = 0.05, paid = false))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        valuation: &PyValuation,
        feasible: &PyFeasibleSet,
        mode: &str,
        seed: u64,
        tol: f64,
        zeta: f64,
        nu: f64,
        paid: bool,
    ) -> PyResult<Self> {
        let mode = parse_mode(mode, tol, zeta, nu)?;
        let oracle = FollowerOracle::new(
            valuation.inner.clone(),
            feasible.inner.clone(),
            mode,
            seed,
        )
        .map_err(err)?;
        Ok(PyFollowerOracle {
            inner: if paid { oracle.into_paid() } else { oracle },
        })
    }

    fn respond(&mut self, action: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self.inner.respond(&vec_of(action)?).map_err(err)?.to_vec())
    }

    fn query_count(&self) -> u64 {
        self.inner.query_count()
    }

    fn true_best_response(&self, action: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .true_best_response(&vec_of(action)?)
            .map_err(err)?
            .to_vec())
    }
}

fn induce_dict(py: Python<'_>, out: &InduceResult, target: &Vector) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("leader_action", out.leader_action.to_vec())?;
    d.set_item("induced", out.induced.to_vec())?;
    d.set_item("queries", out.queries)?;
    d.set_item("distance", out.induced.dist(target))?;
    Ok(d.into())
}

fn build_induce_config(
    oracle: &FollowerOracle,
    epsilon: f64,
    override_t: Option<usize>,
    override_eta: Option<f64>,
) -> InduceConfig {
    let v = oracle.valuation();
    let (lambda_val, holder_beta) = v.holder_constants();
    InduceConfig::new(
        epsilon,
        lambda_val,
        oracle.feasible().norm_bound(),
        v.strong_concavity_constant(),
    )
    .with_holder_beta(holder_beta)
    .with_overrides(
        Some(override_t.unwrap_or(30_000)),
        override_eta.or(Some(v.strong_concavity_constant())),
    )
}

/// Learn a price vector inducing the target bundle.
#[pyfunction]
#[pyo3(signature = (oracle, target, epsilon, override_t = None, override_eta = None))]
fn learn_price(
    py: Python<'_>,
    oracle: &mut PyFollowerOracle,
    target: Vec<f64>,
    epsilon: f64,
    override_t: Option<usize>,
    override_eta: Option<f64>,
) -> PyResult<Py<PyDict>> {
    let target = vec_of(target)?;
    let cfg = build_induce_config(&oracle.inner, epsilon, override_t, override_eta);
    let out = stackopt::induce::learn_price(&mut oracle.inner, &target, &cfg).map_err(err)?;
    induce_dict(py, &out, &target)
}

/// Ellipsoid variant: logarithmic query counts for noiseless oracles.
#[pyfunction]
#[pyo3(signature = (oracle, target, epsilon, override_t = None))]
fn learn_price_ellipsoid(
    py: Python<'_>,
    oracle: &mut PyFollowerOracle,
    target: Vec<f64>,
    epsilon: f64,
    override_t: Option<usize>,
) -> PyResult<Py<PyDict>> {
    let target = vec_of(target)?;
    let mut cfg = build_induce_config(&oracle.inner, epsilon, None, None);
    cfg.override_t = override_t;
    let out =
        stackopt::ellipsoid::learn_price_ellipsoid(&mut oracle.inner, &target, &cfg).map_err(err)?;
    induce_dict(py, &out, &target)
}

fn leader_dict(py: Python<'_>, out: &LeaderResult) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("leader_action", out.leader_action.to_vec())?;
    d.set_item("induced", out.induced.to_vec())?;
    d.set_item("objective", out.achieved_objective)?;
    d.set_item("follower_queries", out.total_follower_queries)?;
    d.set_item("zoo_queries", out.zoo_queries)?;
    d.set_item("certified", out.certified)?;
    d.set_item("epsilon_used", out.epsilon_used)?;
    Ok(d.into())
}

/// End-to-end profit maximization from revealed responses.
#[pyfunction]
#[pyo3(signature = (valuation, cost, feasible, alpha, seed = 0, epsilon_floor = 5e-3, zoo_budget = 600, override_t = 30_000))]
#[allow(clippy::too_many_arguments)]
fn opro(
    py: Python<'_>,
    valuation: &PyValuation,
    cost: &PyCostFunction,
    feasible: &PyFeasibleSet,
    alpha: f64,
    seed: u64,
    epsilon_floor: f64,
    zoo_budget: usize,
    override_t: usize,
) -> PyResult<Py<PyDict>> {
    let oracle = FollowerOracle::new(
        valuation.inner.clone(),
        feasible.inner.clone(),
        ResponseMode::Exact { tol: 1e-7 },
        seed,
    )
    .map_err(err)?;
    let instance = StackelbergInstance::profit(oracle, cost.inner.clone()).map_err(err)?;
    let opts = LeaderOptions {
        epsilon_floor: Some(epsilon_floor),
        zoo_budget,
        zoo_seed: seed,
        induce_override_t: Some(override_t),
        ..Default::default()
    };
    let out = stackopt::leader::opro_with(instance, alpha, &opts).map_err(err)?;
    leader_dict(py, &out)
}

#[pyclass(name = "RoutingGame")]
struct PyRoutingGame {
    inner: stackopt::routing::RoutingGame,
}

#[pymethods]
impl PyRoutingGame {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyRoutingGame {
            inner: stackopt::routing::parse_game(text).map_err(err)?,
        })
    }

    #[staticmethod]
    fn two_link() -> Self {
        PyRoutingGame {
            inner: stackopt::routing::two_link_game(),
        }
    }

    #[staticmethod]
    fn braess() -> Self {
        PyRoutingGame {
            inner: stackopt::routing::braess_game(),
        }
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    #[pyo3(signature = (tolls, tol = 1e-6))]
    fn wardrop_equilibrium(&self, tolls: Vec<f64>, tol: f64) -> PyResult<Vec<f64>> {
        let flow = stackopt::routing::wardrop_equilibrium(&self.inner, &vec_of(tolls)?, tol)
            .map_err(err)?;
        Ok(flow.edge_flows.to_vec())
    }

    fn social_cost(&self, edge_flows: Vec<f64>) -> PyResult<f64> {
        self.inner.social_cost(&vec_of(edge_flows)?).map_err(err)
    }

    #[pyo3(signature = (target, delta, override_t = 5000, override_eta = None))]
    fn enforce_target_flow(
        &self,
        py: Python<'_>,
        target: Vec<f64>,
        delta: f64,
        override_t: usize,
        override_eta: Option<f64>,
    ) -> PyResult<Py<PyDict>> {
        let target = vec_of(target)?;
        let opts = stackopt::routing::EnforceOptions {
            override_t: Some(override_t),
            override_eta,
            equilibrium_tol: None,
            check_every: 50,
        };
        let out = stackopt::routing::enforce_target_flow(&self.inner, &target, delta, &opts)
            .map_err(err)?;
        induce_dict(py, &out, &target)
    }
}

/// Social cost of the bridge-toll instance at `(tau1, tau2)`.
#[pyfunction]
fn braess_social_cost(tau1: f64, tau2: f64) -> PyResult<f64> {
    stackopt::routing::braess_social_cost(tau1, tau2).map_err(err)
}

/// Zeroth-order minimization of a Python callable over a box.
#[pyfunction]
#[pyo3(signature = (objective, feasible, accuracy, budget = 4000, seed = 0, method = "grid"))]
fn zoo_minimize(
    py: Python<'_>,
    objective: Py<PyAny>,
    feasible: &PyFeasibleSet,
    accuracy: f64,
    budget: usize,
    seed: u64,
    method: &str,
) -> PyResult<Py<PyDict>> {
    let method = match method {
        "grid" => ZooMethod::GridRefine,
        "smoothed" => ZooMethod::SmoothedGradient,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown method '{other}' (grid | smoothed)"
            )))
        }
    };
    let mut failure: Option<PyErr> = None;
    let mut evaluate = |x: &Vector| -> stackopt::Result<f64> {
        Python::attach(|py| {
            let value = objective
                .call1(py, (x.to_vec(),))
                .and_then(|v| v.extract::<f64>(py));
            match value {
                Ok(v) => Ok(v),
                Err(e) => {
                    failure = Some(e);
                    Err(stackopt::Error::Numerical("python objective raised".into()))
                }
            }
        })
    };
    let cfg = ZooConfig::new(accuracy, method, budget, seed);
    let outcome = stackopt::zoo::minimize(&mut evaluate, &feasible.inner, &cfg);
    if let Some(e) = failure {
        return Err(e);
    }
    let outcome = outcome.map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("point", outcome.point.to_vec())?;
    d.set_item("value", outcome.value)?;
    d.set_item("calls", outcome.calls)?;
    d.set_item("certified", outcome.certified)?;
    Ok(d.into())
}

#[pymodule]
fn stackopt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeasibleSet>()?;
    m.add_class::<PyValuation>()?;
    m.add_class::<PyCostFunction>()?;
    m.add_class::<PyFollowerOracle>()?;
    m.add_class::<PyRoutingGame>()?;
    m.add_function(wrap_pyfunction!(profit_of_bundle, m)?)?;
    m.add_function(wrap_pyfunction!(learn_price, m)?)?;
    m.add_function(wrap_pyfunction!(learn_price_ellipsoid, m)?)?;
    m.add_function(wrap_pyfunction!(opro, m)?)?;
    m.add_function(wrap_pyfunction!(braess_social_cost, m)?)?;
    m.add_function(wrap_pyfunction!(zoo_minimize, m)?)?;
    Ok(())
}
