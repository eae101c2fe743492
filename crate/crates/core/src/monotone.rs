//! Monotone multifunctions on `R^n` with the Euclidean norm.
//!
//! With the Euclidean norm the duality map `J` is the identity, so
//! `(S + J)x ∋ y*` is solved by the resolvent `(I + S)⁻¹ y*`, and graphs live
//! in `product(n)` where monotone sets are exactly the q-positive ones.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::convexfun::{compose_reflection, pq_membership, nq_membership, prox, ConvexFunction, Quadratic};
use crate::decompose::{maximality_check, posneg_decompose, MaximalityReport, SolverConfig};
use crate::error::{check_dim, Error, Result};
use crate::lp::positively_spans;
use crate::qpositive::{fitzpatrick, fitzpatrick_polyline, is_q_positive, PointSet, DEFAULT_QPOS_TOL};
use crate::sampling::cube_grid;
use crate::space::{norm2, sub, SsdPoint, SsdSpace};

const MONOTONE_FLOOR: f64 = -1e-10;
const GRAPH_MATCH_TOL: f64 = 1e-9;
const DR_MAX_ITERS: usize = 20_000;
const MAX_DOMAIN_SAMPLES: usize = 40;

#[derive(Clone, Debug, PartialEq)]
pub enum MonotoneOp {
    /// `∂h`.
    Subdiff(ConvexFunction),
    /// `x ↦ Mx + b` with `M + Mᵀ` positive semidefinite.
    Affine { m: DMatrix<f64>, b: DVector<f64> },
    /// Finite graph `{(x_i, x*_i)}`.
    Graph(Vec<(Vec<f64>, Vec<f64>)>),
    /// Pointwise sum.
    Sum(Vec<MonotoneOp>),
    /// The transposed graph.
    Inverse(Box<MonotoneOp>),
}

impl MonotoneOp {
    pub fn subdiff(h: ConvexFunction) -> Self {
        MonotoneOp::Subdiff(h)
    }

    pub fn identity(n: usize) -> Self {
        MonotoneOp::Affine { m: DMatrix::identity(n, n), b: DVector::zeros(n) }
    }

    pub fn affine(m: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidInput("affine operator matrix must be square".into()));
        }
        check_dim(m.nrows(), b.len())?;
        if m.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let sym = (&m + m.transpose()) * 0.5;
        let min = SymmetricEigen::new(sym).eigenvalues.min();
        if min < MONOTONE_FLOOR {
            return Err(Error::NotMonotone(format!("symmetric part has eigenvalue {min:e}")));
        }
        Ok(MonotoneOp::Affine { m, b })
    }

    pub fn affine_from_rows(m: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let n = b.len();
        check_dim(n, m.len())?;
        for row in m {
            check_dim(n, row.len())?;
        }
        Self::affine(DMatrix::from_fn(n, n, |i, j| m[i][j]), DVector::from_column_slice(b))
    }

    pub fn graph(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let n = pairs.first().ok_or(Error::EmptySet)?.0.len();
        for (x, xs) in &pairs {
            check_dim(n, x.len())?;
            check_dim(n, xs.len())?;
        }
        let op = MonotoneOp::Graph(pairs);
        let report = is_q_positive(&op.graph_points()?, DEFAULT_QPOS_TOL);
        if !report.positive {
            return Err(Error::NotMonotone(format!("pair value {:e}", report.min_pair_value)));
        }
        Ok(op)
    }

    pub fn sum(ops: Vec<MonotoneOp>) -> Result<Self> {
        let n = ops.first().ok_or(Error::EmptySet)?.dim();
        for op in &ops {
            check_dim(n, op.dim())?;
        }
        Ok(MonotoneOp::Sum(ops))
    }

    pub fn inverse(op: MonotoneOp) -> Self {
        match op {
            MonotoneOp::Inverse(inner) => *inner,
            other => MonotoneOp::Inverse(Box::new(other)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            MonotoneOp::Subdiff(h) => h.dim(),
            MonotoneOp::Affine { b, .. } => b.len(),
            MonotoneOp::Graph(pairs) => pairs[0].0.len(),
            MonotoneOp::Sum(ops) => ops[0].dim(),
            MonotoneOp::Inverse(op) => op.dim(),
        }
    }

    pub fn space(&self) -> SsdSpace {
        SsdSpace::product(self.dim())
    }

    /// `(M, b)` when the operator is single-valued affine.
    pub fn as_affine(&self) -> Option<(DMatrix<f64>, DVector<f64>)> {
        match self {
            MonotoneOp::Affine { m, b } => Some((m.clone(), b.clone())),
            MonotoneOp::Subdiff(h) => h.as_quadratic().map(|q| (q.matrix().clone(), q.linear().clone())),
            MonotoneOp::Sum(ops) => {
                let mut acc = ops[0].as_affine()?;
                for op in &ops[1..] {
                    let (m, b) = op.as_affine()?;
                    acc.0 += m;
                    acc.1 += b;
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// Exact graph points for finite graphs, their inverses and sums of those.
    fn graph_points(&self) -> Result<PointSet> {
        let n = self.dim();
        let not_finite = || Error::Unsupported("not a finite graph".into());
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = match self {
            MonotoneOp::Graph(p) => p.clone(),
            MonotoneOp::Inverse(inner) => match inner.as_ref() {
                MonotoneOp::Graph(p) => p.iter().map(|(x, xs)| (xs.clone(), x.clone())).collect(),
                _ => return Err(not_finite()),
            },
            MonotoneOp::Sum(ops) => {
                let mut acc: Vec<(Vec<f64>, Vec<f64>)> = vec![];
                for (k, op) in ops.iter().enumerate() {
                    let set = op.graph_points().map_err(|_| not_finite())?;
                    let pts = set.points().iter().map(|p| (p[..n].to_vec(), p[n..].to_vec()));
                    acc = if k == 0 {
                        pts.collect()
                    } else {
                        let pts: Vec<_> = pts.collect();
                        acc.iter()
                            .flat_map(|(x, y)| {
                                pts.iter()
                                    .filter(move |(u, _)| norm2(&sub(x, u)) <= GRAPH_MATCH_TOL)
                                    .map(move |(_, v)| (x.clone(), y.iter().zip(v).map(|(a, b)| a + b).collect()))
                            })
                            .collect()
                    };
                }
                if acc.is_empty() {
                    return Err(Error::EmptySet);
                }
                acc
            }
            _ => return Err(not_finite()),
        };
        let points = pairs.iter().map(|(x, xs)| SsdPoint::from_blocks(x, xs)).collect();
        PointSet::new(self.space(), points)
    }

    /// The value set `Sx` as a union of boxes.
    pub fn values(&self, x: &[f64]) -> Result<ValueSet> {
        check_dim(self.dim(), x.len())?;
        if let Some((m, b)) = self.as_affine() {
            let y: Vec<f64> = (m * DVector::from_column_slice(x) + b).iter().copied().collect();
            return Ok(ValueSet::point(y));
        }
        match self {
            MonotoneOp::Subdiff(h) => Ok(subdiff_box(h, x)?.map(ValueSet::single).unwrap_or_default()),
            _ if self.graph_points().is_ok() => {
                let n = self.dim();
                let pts = self.graph_points()?;
                let boxes = pts
                    .points()
                    .iter()
                    .filter(|p| norm2(&sub(p.primal(), x)) <= GRAPH_MATCH_TOL)
                    .map(|p| (p[n..].to_vec(), p[n..].to_vec()))
                    .collect();
                Ok(ValueSet { boxes })
            }
            MonotoneOp::Sum(ops) => {
                let mut acc = ValueSet::point(vec![0.0; x.len()]);
                for op in ops {
                    acc = acc.minkowski(&op.values(x)?);
                }
                Ok(acc)
            }
            _ => Err(Error::Unsupported("value sets of inverses of non-graph operators".into())),
        }
    }

    /// `dist(y, Sx)`; for an inverse `T⁻¹` this is `dist(x, Ty)`.
    pub fn inclusion_defect(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim(), y.len())?;
        match self {
            MonotoneOp::Inverse(inner) if !matches!(inner.as_ref(), MonotoneOp::Graph(_)) => {
                inner.inclusion_defect(y, x)
            }
            _ => Ok(self.values(x)?.distance(y)),
        }
    }

    /// `(I + λS)⁻¹ v`.
    pub fn resolvent(&self, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("resolvent step must be positive, got {lambda}")));
        }
        if let Some((m, b)) = self.as_affine() {
            let n = v.len();
            let a = DMatrix::identity(n, n) + m * lambda;
            let rhs = DVector::from_column_slice(v) - b * lambda;
            let x = a.lu().solve(&rhs).ok_or_else(|| Error::NotMonotone("I + λM is singular".into()))?;
            return Ok(x.iter().copied().collect());
        }
        match self {
            MonotoneOp::Subdiff(h) => prox(h, v, lambda),
            MonotoneOp::Graph(pairs) => pairs
                .iter()
                .find(|(x, xs)| {
                    let r: Vec<f64> = x.iter().zip(xs).zip(v).map(|((a, b), c)| a + lambda * b - c).collect();
                    norm2(&r) <= GRAPH_MATCH_TOL * (1.0 + norm2(v))
                })
                .map(|(x, _)| x.clone())
                .ok_or_else(|| Error::Unsupported("finite graph: v is not in the range of I + λS".into())),
            MonotoneOp::Sum(ops) if ops.len() == 1 => ops[0].resolvent(v, lambda),
            MonotoneOp::Sum(ops) if ops.iter().all(|op| matches!(op, MonotoneOp::Subdiff(_))) => {
                let hs = ops
                    .iter()
                    .map(|op| match op {
                        MonotoneOp::Subdiff(h) => h.clone(),
                        _ => unreachable!(),
                    })
                    .collect();
                prox(&ConvexFunction::Sum(hs), v, lambda)
            }
            MonotoneOp::Sum(ops) => douglas_rachford(&ops[0], &MonotoneOp::Sum(ops[1..].to_vec()), v, lambda),
            // Moreau: J_{λT⁻¹}(v) = v − λ J_{T/λ}(v/λ)
            MonotoneOp::Inverse(inner) => {
                let scaled: Vec<f64> = v.iter().map(|t| t / lambda).collect();
                let u = inner.resolvent(&scaled, 1.0 / lambda)?;
                Ok(v.iter().zip(&u).map(|(a, b)| a - lambda * b).collect())
            }
            MonotoneOp::Affine { .. } => unreachable!("handled by as_affine"),
        }
    }
}

/// `(I + λ(A + B))⁻¹ v` by Douglas–Rachford on `A' + B'` with
/// `A' = λA + ½(· − v)`, whose resolvent is `J_{(2λ/3)A}((2w + v)/3)`.
fn douglas_rachford(a: &MonotoneOp, b: &MonotoneOp, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let mu = 2.0 * lambda / 3.0;
    let shifted = |w: &[f64]| -> Vec<f64> { w.iter().zip(v).map(|(w, v)| (2.0 * w + v) / 3.0).collect() };
    let mut w = v.to_vec();
    let scale = 1.0 + norm2(v);
    let mut x = a.resolvent(&shifted(&w), mu)?;
    for _ in 0..DR_MAX_ITERS {
        x = a.resolvent(&shifted(&w), mu)?;
        let reflected: Vec<f64> = x.iter().zip(&w).map(|(x, w)| 2.0 * x - w).collect();
        let y = b.resolvent(&shifted(&reflected), mu)?;
        let gap = norm2(&sub(&y, &x));
        for ((w, y), x) in w.iter_mut().zip(&y).zip(&x) {
            *w += y - x;
        }
        if gap <= 1e-14 * scale {
            return Ok(y);
        }
    }
    Ok(x)
}

/// Subdifferential box for functions whose subdifferential is a box;
/// otherwise a single subgradient. `None` outside the domain.
fn subdiff_box(h: &ConvexFunction, x: &[f64]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    if !h.value(x)?.is_finite() {
        return Ok(None);
    }
    Ok(Some(match h {
        ConvexFunction::MaxAffine(m) if m.dim() == 1 => {
            let active = m.active(x, 1e-12);
            let slopes = active.iter().map(|&i| m.pieces()[i].slope[0]);
            let lo = slopes.clone().fold(f64::INFINITY, f64::min);
            let hi = slopes.fold(f64::NEG_INFINITY, f64::max);
            (vec![lo], vec![hi])
        }
        ConvexFunction::Separable { dim, blocks } => {
            let (mut lo, mut hi) = (vec![0.0; *dim], vec![0.0; *dim]);
            for (coords, f) in blocks {
                let local: Vec<f64> = coords.iter().map(|&i| x[i]).collect();
                let Some((l, u)) = subdiff_box(f, &local)? else { return Ok(None) };
                for (k, &i) in coords.iter().enumerate() {
                    lo[i] = l[k];
                    hi[i] = u[k];
                }
            }
            (lo, hi)
        }
        ConvexFunction::Sum(parts) => {
            let (mut lo, mut hi) = (vec![0.0; x.len()], vec![0.0; x.len()]);
            for f in parts {
                let Some((l, u)) = subdiff_box(f, x)? else { return Ok(None) };
                for i in 0..x.len() {
                    lo[i] += l[i];
                    hi[i] += u[i];
                }
            }
            (lo, hi)
        }
        ConvexFunction::Composed { base, map } => {
            let Some((l, u)) = subdiff_box(base, &map.apply(x))? else { return Ok(None) };
            let a = map.apply_transpose(&l);
            let b = map.apply_transpose(&u);
            (a.iter().zip(&b).map(|(a, b)| a.min(*b)).collect(), a.iter().zip(&b).map(|(a, b)| a.max(*b)).collect())
        }
        _ => {
            let s = h.subgrad(x)?;
            (s.clone(), s)
        }
    }))
}

/// A finite union of axis-aligned boxes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValueSet {
    pub boxes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl ValueSet {
    pub fn point(y: Vec<f64>) -> Self {
        ValueSet { boxes: vec![(y.clone(), y)] }
    }

    fn single(b: (Vec<f64>, Vec<f64>)) -> Self {
        ValueSet { boxes: vec![b] }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Euclidean distance from `y`; `+∞` for the empty set.
    pub fn distance(&self, y: &[f64]) -> f64 {
        self.boxes
            .iter()
            .map(|(lo, hi)| {
                y.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(v, (l, h))| {
                        let d = if v < l { l - v } else if v > h { v - h } else { 0.0 };
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn minkowski(&self, other: &ValueSet) -> ValueSet {
        let mut boxes = Vec::with_capacity(self.boxes.len() * other.boxes.len());
        for (l1, h1) in &self.boxes {
            for (l2, h2) in &other.boxes {
                boxes.push((
                    l1.iter().zip(l2).map(|(a, b)| a + b).collect(),
                    h1.iter().zip(h2).map(|(a, b)| a + b).collect(),
                ));
            }
        }
        ValueSet { boxes }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitzMode {
    /// Chain for one-dimensional operators, points otherwise.
    Auto,
    /// Max-affine function over sampled graph points.
    Points,
    /// Exact Fitzpatrick function of the polygonal graph through the samples (1-D only).
    Chain,
}

/// Graph sampling via the Minty parametrization `x = J_S(v)`, `x* = v − x`,
/// with `v` on a `points`-per-axis grid of `[−radius, radius]^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSampling {
    pub radius: f64,
    pub points: usize,
    pub mode: FitzMode,
}

impl Default for GraphSampling {
    fn default() -> Self {
        GraphSampling { radius: 8.0, points: 201, mode: FitzMode::Auto }
    }
}

/// Points of `G(S)` in `product(n)`: exact for finite graphs, otherwise sampled.
pub fn graph_as_pointset(op: &MonotoneOp, sampling: &GraphSampling) -> Result<PointSet> {
    if let Ok(set) = op.graph_points() {
        return Ok(set);
    }
    let n = op.dim();
    let mut points = cube_grid(n, sampling.radius, sampling.points)
        .into_iter()
        .map(|v| {
            let x = op.resolvent(&v, 1.0)?;
            let xs = sub(&v, &x);
            Ok(SsdPoint::from_blocks(&x, &xs))
        })
        .collect::<Result<Vec<_>>>()?;
    if n == 1 {
        points = insert_corners(op, points);
    }
    PointSet::new(op.space(), points)
}

/// Between consecutive 1-D samples that move in both coordinates, inserts the
/// corner `(x₁, x₂*)` or `(x₂, x₁*)` when it lies on the graph, so that kinks
/// falling between Minty parameters are not replaced by chords.
fn insert_corners(op: &MonotoneOp, points: Vec<SsdPoint>) -> Vec<SsdPoint> {
    let on_graph = |x: f64, xs: f64| op.inclusion_defect(&[x], &[xs]).is_ok_and(|d| d <= 1e-12);
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        out.push(w[0].clone());
        let (a, b) = (&w[0], &w[1]);
        if a[0] == b[0] || a[1] == b[1] {
            continue;
        }
        if on_graph(a[0], b[1]) {
            out.push(SsdPoint::new(vec![a[0], b[1]]));
        } else if on_graph(b[0], a[1]) {
            out.push(SsdPoint::new(vec![b[0], a[1]]));
        }
    }
    out.extend(points.last().cloned());
    out
}

/// Closed-form `φ_S` for `Sx = Mx + b` with `K = M + Mᵀ` positive definite:
/// `φ(x, x*) = ⟨x, b⟩ + ½ wᵀK⁻¹w` with `w = Mᵀx + x* − b`.
fn affine_fitzpatrick(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<Quadratic> {
    let n = b.len();
    let k = m + m.transpose();
    if SymmetricEigen::new(k.clone()).eigenvalues.min() <= 1e-12 * k.amax().max(1.0) {
        return None;
    }
    let kinv = Cholesky::new(k)?.inverse();
    let mut a = DMatrix::zeros(n, 2 * n);
    a.view_mut((0, 0), (n, n)).copy_from(&m.transpose());
    a.view_mut((0, n), (n, n)).fill_with_identity();
    let q = a.transpose() * &kinv * &a;
    let q = (&q + q.transpose()) * 0.5;
    let kb = &kinv * b;
    let mut p = -(a.transpose() * &kb);
    for i in 0..n {
        p[i] += b[i];
    }
    Quadratic::new(q, p, 0.5 * b.dot(&kb)).ok()
}

/// `φ_S = Φ_{G(S)}`: closed form for affine operators with positive definite
/// symmetric part, exact for finite graphs, sampled otherwise.
pub fn fitzpatrick_op(op: &MonotoneOp, sampling: &GraphSampling) -> Result<ConvexFunction> {
    if let MonotoneOp::Inverse(inner) = op {
        if !matches!(inner.as_ref(), MonotoneOp::Graph(_)) {
            return fitzpatrick_op(inner, sampling)?.compose(&op.space().iota_map());
        }
    }
    if let Some((m, b)) = op.as_affine() {
        if let Some(q) = affine_fitzpatrick(&m, &b) {
            return Ok(ConvexFunction::Quadratic(q));
        }
    }
    let set = graph_as_pointset(op, sampling)?;
    if op.graph_points().is_ok() {
        return Ok(fitzpatrick(&set));
    }
    match (sampling.mode, op.dim()) {
        (FitzMode::Points, _) => Ok(fitzpatrick(&set)),
        (FitzMode::Auto | FitzMode::Chain, 1) => fitzpatrick_polyline(&set),
        (FitzMode::Auto, _) => Ok(fitzpatrick(&set)),
        (FitzMode::Chain, n) => Err(Error::Unsupported(format!("chain Fitzpatrick functions need n = 1, got {n}"))),
    }
}

/// The duality map of the Euclidean norm.
pub fn duality_map(x: &[f64]) -> Vec<f64> {
    x.to_vec()
}

/// `(x, x*) ∈ G(J) = P_q(g0)`.
pub fn in_duality_graph(x: &[f64], x_star: &[f64], tol: f64) -> Result<bool> {
    check_dim(x.len(), x_star.len())?;
    let space = SsdSpace::product(x.len());
    pq_membership(&space, &ConvexFunction::g0(space.dim()), &SsdPoint::from_blocks(x, x_star), tol)
}

/// `(x, x*) ∈ G(−J) = N_q(g0)`.
pub fn in_neg_duality_graph(x: &[f64], x_star: &[f64], tol: f64) -> Result<bool> {
    check_dim(x.len(), x_star.len())?;
    let space = SsdSpace::product(x.len());
    nq_membership(&space, &ConvexFunction::g0(space.dim()), &SsdPoint::from_blocks(x, x_star), tol)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurjectivitySolution {
    pub x: Vec<f64>,
    /// `dist(y*, (S + J)x)`.
    pub residual: f64,
}

/// Solves `y* ∈ (S + J)x` through the resolvent `x = (I + S)⁻¹ y*`.
pub fn surjectivity_solve(op: &MonotoneOp, y_star: &[f64], tol: f64) -> Result<SurjectivitySolution> {
    let x = op.resolvent(y_star, 1.0)?;
    let residual = op.inclusion_defect(&x, &sub(y_star, &x))?;
    if !(residual <= tol) {
        return Err(Error::NonConvergence { residual, iterations: 0 });
    }
    Ok(SurjectivitySolution { x, residual })
}

/// Minimum norm of a zero of `S + J`: the unique resolvent zero for operators,
/// a scan of `x* = −x` points for finite graphs.
pub fn minnorm_lhs(op: &MonotoneOp, tol: f64) -> Result<f64> {
    if let Ok(set) = op.graph_points() {
        let n = op.dim();
        return set
            .points()
            .iter()
            .filter(|p| norm2(&p[..n].iter().zip(&p[n..]).map(|(a, b)| a + b).collect::<Vec<_>>()) <= tol)
            .map(|p| norm2(&p[..n]))
            .reduce(f64::min)
            .ok_or_else(|| Error::Unsupported("no graph point satisfies x* = −x".into()));
    }
    Ok(norm2(&op.resolvent(&vec![0.0; op.dim()], 1.0)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumCheckReport {
    /// Whether sampled `D(S) − D(T)` positively spans `R^n`.
    pub qualification: bool,
    pub maximality: MaximalityReport,
}

fn domain_samples(op: &MonotoneOp, sampling: &GraphSampling) -> Result<Vec<Vec<f64>>> {
    let set = graph_as_pointset(op, sampling)?;
    let n = op.dim();
    let pts = set.points();
    let stride = pts.len().div_ceil(MAX_DOMAIN_SAMPLES).max(1);
    Ok(pts.iter().step_by(stride).map(|p| p[..n].to_vec()).collect())
}

/// Domain qualification plus a probe-based maximality check of `S + T`.
pub fn sum_check(
    s: &MonotoneOp,
    t: &MonotoneOp,
    probes: &[SsdPoint],
    cfg: &SolverConfig,
    sampling: &GraphSampling,
) -> Result<SumCheckReport> {
    check_dim(s.dim(), t.dim())?;
    let (ds, dt) = (domain_samples(s, sampling)?, domain_samples(t, sampling)?);
    let diffs: Vec<Vec<f64>> = ds.iter().flat_map(|a| dt.iter().map(move |b| sub(a, b))).collect();
    let qualification = positively_spans(&diffs, s.dim())?;
    let sum = MonotoneOp::Sum(vec![s.clone(), t.clone()]);
    let phi = fitzpatrick_op(&sum, sampling)?;
    let maximality = maximality_check(&sum.space(), &phi, None, probes, cfg)?;
    Ok(SumCheckReport { qualification, maximality })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumSurjectivitySolution {
    pub x: Vec<f64>,
    pub s_star: Vec<f64>,
    pub t_star: Vec<f64>,
    /// `dist(y*, (S + T)x)` when the value sets are computable.
    pub residual: f64,
    /// `‖p_x − n_x‖`: the two primal components agree (`x = s`).
    pub x_mismatch: f64,
    pub iterations: usize,
}

/// Solves `y* ∈ (S + T)x` by decomposing `(0, y*)` with `f = φ_S` and the
/// TBC companion `φ_T∘ρ2`: `p = (x, s*) ∈ G(S)` and `ρ2 n = (x, t*) ∈ G(T)`.
pub fn sum_surjectivity(
    s: &MonotoneOp,
    t: &MonotoneOp,
    y_star: &[f64],
    cfg: &SolverConfig,
    sampling: &GraphSampling,
) -> Result<SumSurjectivitySolution> {
    let n = s.dim();
    check_dim(n, t.dim())?;
    check_dim(n, y_star.len())?;
    let space = s.space();
    let f = fitzpatrick_op(s, sampling)?;
    let g = compose_reflection(&space, &fitzpatrick_op(t, sampling)?, 1)?;
    let c = SsdPoint::from_blocks(&vec![0.0; n], y_star);
    let r = posneg_decompose(&space, &f, &g, &c, cfg)?;
    let x = r.p[..n].to_vec();
    let s_star = r.p[n..].to_vec();
    let t_star: Vec<f64> = r.n[n..].iter().map(|v| -v).collect();
    let residual = MonotoneOp::Sum(vec![s.clone(), t.clone()]).inclusion_defect(&x, y_star)?;
    Ok(SumSurjectivitySolution {
        x_mismatch: norm2(&sub(&r.p[..n], &r.n[..n])),
        x,
        s_star,
        t_star,
        residual,
        iterations: r.iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HammersteinBranch {
    /// `f = φ_S`, `g = φ_{T⁻¹}∘(−ρ2)`, decompose `(x, 0)`.
    Primary,
    /// `f = φ_T`, `g = φ_{S⁻¹}∘ρ2`, decompose `(0, x)`.
    Dual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HammersteinDefects {
    /// `dist(y*, Sy)`.
    pub s: f64,
    /// `dist(z, Ty*)`.
    pub t: f64,
    /// `‖y + z − x‖`.
    pub sum: f64,
}

impl HammersteinDefects {
    pub fn max(&self) -> f64 {
        self.s.max(self.t).max(self.sum)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HammersteinSolution {
    pub y: Vec<f64>,
    pub y_star: Vec<f64>,
    pub z: Vec<f64>,
    pub defects: HammersteinDefects,
    pub iterations: usize,
}

/// Solves `x = y + z` with `y* ∈ Sy` and `z ∈ Ty*`, i.e. `x ∈ (I + TS)y`.
pub fn hammerstein_solve(
    s: &MonotoneOp,
    t: &MonotoneOp,
    x: &[f64],
    cfg: &SolverConfig,
    sampling: &GraphSampling,
    branch: HammersteinBranch,
) -> Result<HammersteinSolution> {
    let n = s.dim();
    check_dim(n, t.dim())?;
    check_dim(n, x.len())?;
    let space = s.space();
    let zeros = vec![0.0; n];
    let (y, y_star, z, iterations) = match branch {
        HammersteinBranch::Primary => {
            let f = fitzpatrick_op(s, sampling)?;
            let g = compose_reflection(&space, &fitzpatrick_op(&MonotoneOp::inverse(t.clone()), sampling)?, -1)?;
            let r = posneg_decompose(&space, &f, &g, &SsdPoint::from_blocks(x, &zeros), cfg)?;
            let z: Vec<f64> = r.n[..n].iter().map(|v| -v).collect();
            (r.p[..n].to_vec(), r.p[n..].to_vec(), z, r.iterations)
        }
        HammersteinBranch::Dual => {
            let f = fitzpatrick_op(t, sampling)?;
            let g = compose_reflection(&space, &fitzpatrick_op(&MonotoneOp::inverse(s.clone()), sampling)?, 1)?;
            let r = posneg_decompose(&space, &f, &g, &SsdPoint::from_blocks(&zeros, x), cfg)?;
            let y: Vec<f64> = r.n[n..].iter().map(|v| -v).collect();
            (y, r.p[..n].to_vec(), r.p[n..].to_vec(), r.iterations)
        }
    };
    let sum: Vec<f64> = y.iter().zip(&z).zip(x).map(|((a, b), c)| a + b - c).collect();
    let defects = HammersteinDefects {
        s: s.inclusion_defect(&y, &y_star)?,
        t: t.inclusion_defect(&y_star, &z)?,
        sum: norm2(&sum),
    };
    Ok(HammersteinSolution { y, y_star, z, defects, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs_op() -> MonotoneOp {
        MonotoneOp::subdiff(ConvexFunction::abs())
    }

    #[test]
    fn soft_threshold_surjectivity() {
        assert_eq!(surjectivity_solve(&abs_op(), &[2.0], 1e-12).unwrap().x, vec![1.0]);
        assert_eq!(surjectivity_solve(&abs_op(), &[0.5], 1e-12).unwrap().x, vec![0.0]);
    }

    #[test]
    fn skew_affine_surjectivity() {
        let op = MonotoneOp::affine_from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]], &[0.0, 0.0]).unwrap();
        let sol = surjectivity_solve(&op, &[1.0, 1.0], 1e-12).unwrap();
        assert!(sol.x[0].abs() < 1e-15 && (sol.x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn non_monotone_inputs_rejected() {
        assert!(MonotoneOp::affine_from_rows(&[vec![-1.0]], &[0.0]).is_err());
        assert!(MonotoneOp::graph(vec![(vec![0.0], vec![1.0]), (vec![1.0], vec![0.0])]).is_err());
    }

    #[test]
    fn identity_fitzpatrick_closed_form() {
        let phi = fitzpatrick_op(&MonotoneOp::identity(1), &GraphSampling::default()).unwrap();
        for (x, xs) in [(1.0, 2.0), (-0.5, 0.25)] {
            assert!((phi.eval(&[x, xs]).unwrap() - (x + xs) * (x + xs) / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn abs_graph_includes_vertical_segment() {
        let set = graph_as_pointset(&abs_op(), &GraphSampling::default()).unwrap();
        assert!(set.points().iter().filter(|p| p[0] == 0.0).count() > 10);
        assert!(set.points().iter().all(|p| {
            if p[0] == 0.0 {
                p[1].abs() <= 1.0
            } else {
                p[1] == p[0].signum()
            }
        }));
    }

    #[test]
    fn resolvent_of_inverse_and_sum() {
        // (∂|·|)⁻¹ at λ = 1: v − prox_{|·|}(v) = clamp(v, −1, 1).
        let inv = MonotoneOp::inverse(abs_op());
        assert!((inv.resolvent(&[3.0], 1.0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((inv.resolvent(&[0.25], 1.0).unwrap()[0] - 0.25).abs() < 1e-15);
        // ∂|·| + skew-free affine via Douglas–Rachford: x + sign(x) + 2x = 7 ⇒ x = 2.
        let sum = MonotoneOp::Sum(vec![abs_op(), MonotoneOp::affine_from_rows(&[vec![2.0]], &[0.0]).unwrap()]);
        assert!((sum.resolvent(&[7.0], 1.0).unwrap()[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duality_graphs() {
        assert!(in_duality_graph(&[1.0, -2.0], &[1.0, -2.0], 1e-12).unwrap());
        assert!(in_neg_duality_graph(&[1.0, -2.0], &[-1.0, 2.0], 1e-12).unwrap());
        assert_eq!(duality_map(&[0.0]), vec![0.0]);
    }
}
