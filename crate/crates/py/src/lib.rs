//! Python bindings. Results come back as plain dicts; points as lists.

#![allow(clippy::too_many_arguments)]

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ssdkit_core as core;
use ssdkit_core::{GraphSampling, SolverConfig, SsdPoint};

create_exception!(ssdkit, NonConvergenceError, PyRuntimeError);

fn err(e: core::Error) -> PyErr {
    match e {
        core::Error::NonConvergence { .. } => NonConvergenceError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn vec(p: &SsdPoint) -> Vec<f64> {
    p.as_slice().to_vec()
}

fn points(ps: Vec<Vec<f64>>) -> Vec<SsdPoint> {
    ps.into_iter().map(SsdPoint::new).collect()
}

fn config(tol: f64, max_iters: usize, seed: u64) -> SolverConfig {
    SolverConfig { tol, max_iters, seed, ..SolverConfig::default() }
}

fn sampling(radius: f64, points: usize) -> GraphSampling {
    GraphSampling { radius, points, ..GraphSampling::default() }
}

#[pyclass(name = "Space", module = "ssdkit")]
struct Space(core::SsdSpace);

#[pymethods]
impl Space {
    #[staticmethod]
    fn hilbert(dim: usize) -> Self {
        Space(core::SsdSpace::hilbert(dim))
    }

    #[staticmethod]
    fn antihilbert(dim: usize) -> Self {
        Space(core::SsdSpace::antihilbert(dim))
    }

    #[staticmethod]
    fn triple() -> Self {
        Space(core::SsdSpace::triple())
    }

    #[staticmethod]
    fn product(n: usize) -> Self {
        Space(core::SsdSpace::product(n))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn pair(&self, b: Vec<f64>, c: Vec<f64>) -> PyResult<f64> {
        self.0.pair(&b, &c).map_err(err)
    }

    fn q(&self, b: Vec<f64>) -> PyResult<f64> {
        self.0.qform(&b).map_err(err)
    }

    fn iota(&self, b: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.iota(&b).map(|p| vec(&p)).map_err(err)
    }

    fn reflect1(&self, b: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.reflect1(&b).map(|p| vec(&p)).map_err(err)
    }

    fn reflect2(&self, b: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.reflect2(&b).map(|p| vec(&p)).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Space({:?})", self.0)
    }
}

#[pyclass(name = "ConvexFunction", module = "ssdkit")]
struct ConvexFunction(core::ConvexFunction);

#[pymethods]
impl ConvexFunction {
    /// `½‖·‖²` on `R^dim`.
    #[staticmethod]
    fn g0(dim: usize) -> Self {
        ConvexFunction(core::ConvexFunction::g0(dim))
    }

    #[staticmethod]
    fn abs() -> Self {
        ConvexFunction(core::ConvexFunction::abs())
    }

    /// `½⟨b, Qb⟩ + ⟨p, b⟩ + r` with `Q` given by rows.
    #[staticmethod]
    #[pyo3(signature = (q, p, r = 0.0))]
    fn quadratic(q: Vec<Vec<f64>>, p: Vec<f64>, r: f64) -> PyResult<Self> {
        let q = core::Quadratic::from_rows(&q, &p, r).map_err(err)?;
        Ok(ConvexFunction(core::ConvexFunction::quadratic(q)))
    }

    #[staticmethod]
    fn max_affine(slopes: Vec<Vec<f64>>, offsets: Vec<f64>) -> PyResult<Self> {
        if slopes.len() != offsets.len() {
            return Err(PyValueError::new_err("slopes and offsets differ in length"));
        }
        let pieces =
            slopes.into_iter().zip(offsets).map(|(slope, offset)| core::convexfun::AffinePiece { slope, offset });
        core::ConvexFunction::max_affine(pieces.collect()).map(ConvexFunction).map_err(err)
    }

    #[staticmethod]
    fn sum(parts: Vec<PyRef<'_, ConvexFunction>>) -> PyResult<Self> {
        core::ConvexFunction::sum(parts.iter().map(|f| f.0.clone()).collect()).map(ConvexFunction).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn __call__(&self, b: Vec<f64>) -> PyResult<f64> {
        self.0.eval(&b).map_err(err)
    }

    fn conjugate(&self) -> PyResult<Self> {
        self.0.conjugate().map(ConvexFunction).map_err(err)
    }

    /// `f^@ = f*∘ι` relative to `space`.
    fn intrinsic_conjugate(&self, space: PyRef<'_, Space>) -> PyResult<Self> {
        core::intrinsic_conjugate(&space.0, &self.0).map(ConvexFunction).map_err(err)
    }
}

#[pyclass(name = "PointSet", module = "ssdkit")]
struct PointSet(core::PointSet);

#[pymethods]
impl PointSet {
    #[new]
    fn new(space: PyRef<'_, Space>, points_: Vec<Vec<f64>>) -> PyResult<Self> {
        core::PointSet::new(space.0, points(points_)).map(PointSet).map_err(err)
    }

    #[staticmethod]
    fn helix(lam: f64, thetas: Vec<f64>) -> PyResult<Self> {
        core::PointSet::helix(lam, &thetas).map(PointSet).map_err(err)
    }

    #[staticmethod]
    fn line(space: PyRef<'_, Space>, direction: Vec<f64>, ts: Vec<f64>) -> PyResult<Self> {
        core::PointSet::line(space.0, &direction, &ts).map(PointSet).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.0.points().iter().map(vec).collect()
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn is_q_positive<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let r = core::is_q_positive(&self.0, tol);
        let d = PyDict::new(py);
        d.set_item("positive", r.positive)?;
        d.set_item("min_pair_value", r.min_pair_value)?;
        d.set_item("witness", r.witness.map(|(a, b)| (vec(&a), vec(&b))))?;
        Ok(d)
    }

    fn fitzpatrick(&self) -> ConvexFunction {
        ConvexFunction(core::fitzpatrick(&self.0))
    }
}

#[pyclass(name = "MonotoneOp", module = "ssdkit")]
struct MonotoneOp(core::MonotoneOp);

#[pymethods]
impl MonotoneOp {
    #[staticmethod]
    fn subdiff(f: PyRef<'_, ConvexFunction>) -> Self {
        MonotoneOp(core::MonotoneOp::subdiff(f.0.clone()))
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        MonotoneOp(core::MonotoneOp::identity(n))
    }

    /// `x ↦ Mx + b` with `M` given by rows.
    #[staticmethod]
    fn affine(m: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Self> {
        core::MonotoneOp::affine_from_rows(&m, &b).map(MonotoneOp).map_err(err)
    }

    #[staticmethod]
    fn graph(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> PyResult<Self> {
        core::MonotoneOp::graph(pairs).map(MonotoneOp).map_err(err)
    }

    #[staticmethod]
    fn sum(ops: Vec<PyRef<'_, MonotoneOp>>) -> PyResult<Self> {
        core::MonotoneOp::sum(ops.iter().map(|o| o.0.clone()).collect()).map(MonotoneOp).map_err(err)
    }

    fn inverse(&self) -> Self {
        MonotoneOp(core::MonotoneOp::inverse(self.0.clone()))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn space(&self) -> Space {
        Space(self.0.space())
    }

    #[pyo3(signature = (radius = 8.0, points = 201))]
    fn fitzpatrick(&self, radius: f64, points: usize) -> PyResult<ConvexFunction> {
        core::fitzpatrick_op(&self.0, &sampling(radius, points)).map(ConvexFunction).map_err(err)
    }
}

fn bc_dict<'py>(py: Python<'py>, r: core::BcReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("holds", r.is_bc)?;
    d.set_item("worst_gap_conj", r.worst_gap_conj)?;
    d.set_item("worst_gap_q", r.worst_gap_q)?;
    d.set_item("failing_point", r.failing_point.as_ref().map(vec))?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (space, f, radius = 4.0, samples = 512, seed = 0, tol = 1e-9))]
fn certify_bc<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, ConvexFunction>,
    radius: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let pts = core::convexfun::default_samples(&space.0, radius, samples, seed);
    bc_dict(py, core::certify_bc(&space.0, &f.0, &pts, tol).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (space, g, radius = 4.0, samples = 512, seed = 0, tol = 1e-9))]
fn certify_tbc<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    g: PyRef<'_, ConvexFunction>,
    radius: f64,
    samples: usize,
    seed: u64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let pts = core::convexfun::default_samples(&space.0, radius, samples, seed);
    bc_dict(py, core::certify_tbc(&space.0, &g.0, &pts, tol).map_err(err)?)
}

/// Splits `c = p − n` with `f(p) = q(p)` and `g(n) = −q(n)`.
#[pyfunction]
#[pyo3(signature = (space, f, g, c, tol = 1e-6, max_iters = 20_000, seed = 0))]
fn posneg_decompose<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, ConvexFunction>,
    g: PyRef<'_, ConvexFunction>,
    c: Vec<f64>,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core::posneg_decompose(&space.0, &f.0, &g.0, &c, &config(tol, max_iters, seed)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("p", vec(&r.p))?;
    d.set_item("n", vec(&r.n))?;
    d.set_item("b", vec(&r.b))?;
    d.set_item("residual", r.residual)?;
    d.set_item("pq_defect", r.pq_defect)?;
    d.set_item("nq_defect", r.nq_defect)?;
    d.set_item("iterations", r.iterations)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (space, f, probes, g = None, tol = 1e-6, max_iters = 20_000, seed = 0))]
fn maximality_check<'py>(
    py: Python<'py>,
    space: PyRef<'_, Space>,
    f: PyRef<'_, ConvexFunction>,
    probes: Vec<Vec<f64>>,
    g: Option<PyRef<'_, ConvexFunction>>,
    tol: f64,
    max_iters: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(tol, max_iters, seed);
    let r = core::maximality_check(&space.0, &f.0, g.as_ref().map(|g| &g.0), &points(probes), &cfg).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item(
        "verdict",
        match r.verdict {
            core::Verdict::ConsistentWithMaximal => "consistent-with-maximal",
            core::Verdict::Refuted => "refuted",
            core::Verdict::Inconclusive => "inconclusive",
        },
    )?;
    d.set_item("samples_tested", r.samples_tested)?;
    d.set_item("max_residual", r.max_residual)?;
    d.set_item("refuting_point", r.refuting_point.as_ref().map(vec))?;
    Ok(d)
}

/// Solves `y* ∈ (S + J)x`.
#[pyfunction]
#[pyo3(signature = (op, y_star, tol = 1e-6))]
fn surjectivity_solve<'py>(
    py: Python<'py>,
    op: PyRef<'_, MonotoneOp>,
    y_star: Vec<f64>,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core::surjectivity_solve(&op.0, &y_star, tol).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("x", r.x)?;
    d.set_item("residual", r.residual)?;
    Ok(d)
}

/// Solves `y* ∈ (S + T)x`.
#[pyfunction]
#[pyo3(signature = (s, t, y_star, tol = 1e-6, max_iters = 20_000, seed = 0, radius = 8.0, points = 201))]
fn sum_surjectivity<'py>(
    py: Python<'py>,
    s: PyRef<'_, MonotoneOp>,
    t: PyRef<'_, MonotoneOp>,
    y_star: Vec<f64>,
    tol: f64,
    max_iters: usize,
    seed: u64,
    radius: f64,
    points: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config(tol, max_iters, seed);
    let r = core::sum_surjectivity(&s.0, &t.0, &y_star, &cfg, &sampling(radius, points)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("x", r.x)?;
    d.set_item("s_star", r.s_star)?;
    d.set_item("t_star", r.t_star)?;
    d.set_item("residual", r.residual)?;
    d.set_item("x_mismatch", r.x_mismatch)?;
    d.set_item("iterations", r.iterations)?;
    Ok(d)
}

/// Solves `x ∈ (I + TS)y`; `branch` is `"primary"` or `"dual"`.
#[pyfunction]
#[pyo3(signature = (s, t, x, branch = "primary", tol = 1e-6, max_iters = 20_000, seed = 0, radius = 8.0, points = 201))]
fn hammerstein_solve<'py>(
    py: Python<'py>,
    s: PyRef<'_, MonotoneOp>,
    t: PyRef<'_, MonotoneOp>,
    x: Vec<f64>,
    branch: &str,
    tol: f64,
    max_iters: usize,
    seed: u64,
    radius: f64,
    points: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let branch = match branch {
        "primary" => core::HammersteinBranch::Primary,
        "dual" => core::HammersteinBranch::Dual,
        other => return Err(PyValueError::new_err(format!("unknown branch {other:?}"))),
    };
    let cfg = config(tol, max_iters, seed);
    let r = core::hammerstein_solve(&s.0, &t.0, &x, &cfg, &sampling(radius, points), branch).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("y", r.y)?;
    d.set_item("y_star", r.y_star)?;
    d.set_item("z", r.z)?;
    d.set_item("defect", r.defects.max())?;
    d.set_item("iterations", r.iterations)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (op, radius = 6.0, points = 2001, tol = 1e-9))]
fn minnorm_surjectivity<'py>(
    py: Python<'py>,
    op: PyRef<'_, MonotoneOp>,
    radius: f64,
    points: usize,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = core::minnorm_surjectivity(&op.0, radius, points, tol, &GraphSampling::default()).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("abs_diff", r.abs_diff)?;
    Ok(d)
}

#[pymodule]
fn ssdkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Space>()?;
    m.add_class::<ConvexFunction>()?;
    m.add_class::<PointSet>()?;
    m.add_class::<MonotoneOp>()?;
    m.add("NonConvergenceError", m.py().get_type::<NonConvergenceError>())?;
    m.add_function(wrap_pyfunction!(certify_bc, m)?)?;
    m.add_function(wrap_pyfunction!(certify_tbc, m)?)?;
    m.add_function(wrap_pyfunction!(posneg_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(maximality_check, m)?)?;
    m.add_function(wrap_pyfunction!(surjectivity_solve, m)?)?;
    m.add_function(wrap_pyfunction!(sum_surjectivity, m)?)?;
    m.add_function(wrap_pyfunction!(hammerstein_solve, m)?)?;
    m.add_function(wrap_pyfunction!(minnorm_surjectivity, m)?)?;
    Ok(())
}
