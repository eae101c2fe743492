//! Pos–neg decomposition and the solvers built on it.
//!
//! For a BC-function `f` and a TBC-function `g`, every `c` splits as
//! `c = p − n` with `f(p) = q(p)` and `g(n) = −q(n)`. The split is found by
//! minimizing `F(b) = f_c(b) + g(b)`, whose infimum is known to be 0, and
//! setting `p = c + b`, `n = b`.
//!
//! `F` is minimized by a level-projection subgradient method: each iterate is
//! projected exactly onto the intersection of the most recent linearization cuts
//! `F(b_i) + ⟨s_i, · − b_i⟩ ≤ 0`. With a single cut this is exactly the
//! Polyak step `F(b)/‖s‖²`; extra cuts remove the zig-zag in valleys where a
//! sharp and a smooth summand meet. `F` itself is evaluated as
//! `(f − q)(c + b) + (g + q)(b)` so that values near 0 are free of
//! cancellation.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexfun::{ConvexFunction, Excess};
use crate::error::{check_dim, Error, Result};
use crate::monotone::{fitzpatrick_op, minnorm_lhs, GraphSampling, MonotoneOp};
use crate::sampling::halton_ball;
use crate::space::{add, dot, norm2, SsdPoint, SsdSpace};

const BACKTRACKS: usize = 60;
const STALL_WINDOW: usize = 400;
const NEWTON_STEPS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Success threshold on the residual `F(b)`.
    pub tol: f64,
    /// Iteration budget per start point.
    pub max_iters: usize,
    /// Quasi-random restarts after the start at `b = 0`.
    pub restarts: usize,
    pub seed: u64,
    /// Restart ball radius; defaults to `4(1 + ‖c‖)`.
    pub radius: Option<f64>,
    /// Number of cuts kept for the level projection (1 = plain Polyak).
    pub bundle: usize,
    /// Iteration continues below `tol` until the residual reaches this value
    /// or stalls, which sharpens the recovered split.
    pub polish: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-6, max_iters: 20_000, restarts: 8, seed: 0, radius: None, bundle: 6, polish: 1e-15 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub p: SsdPoint,
    pub n: SsdPoint,
    pub b: SsdPoint,
    pub residual: f64,
    pub pq_defect: f64,
    pub nq_defect: f64,
    pub iterations: usize,
}

struct Objective {
    ef: Excess,
    eg: Excess,
    c: Vec<f64>,
}

impl Objective {
    fn value(&self, b: &[f64]) -> Result<f64> {
        let v = self.ef.value(&add(b, &self.c))?;
        if v == f64::INFINITY {
            return Ok(v);
        }
        Ok(v + self.eg.value(b)?)
    }

    fn gradient(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut s = self.ef.gradient(&add(b, &self.c))?;
        for (a, v) in s.iter_mut().zip(self.eg.gradient(b)?) {
            *a += v;
        }
        Ok(s)
    }
}

enum Run {
    Converged { b: Vec<f64>, value: f64, iters: usize },
    Stalled { value: f64, iters: usize },
}

struct Cut {
    b: Vec<f64>,
    value: f64,
    s: Vec<f64>,
}

impl Cut {
    /// Rounding-level slack for testing `ℓ(x) ≤ 0`.
    fn rounding(&self, x: &[f64]) -> f64 {
        4.0 * f64::EPSILON * (self.value.abs() + self.s.iter().zip(x).map(|(s, x)| (s * x).abs()).sum::<f64>())
    }

    fn at(&self, x: &[f64]) -> f64 {
        self.value + self.s.iter().zip(x.iter().zip(&self.b)).map(|(s, (x, b))| s * (x - b)).sum::<f64>()
    }
}

/// Exact projection of `x0` onto `{ℓ_i ≤ 0}` by enumerating active sets of the
/// (small) bundle; `None` if no active set satisfies the KKT conditions.
///
/// Each active system is solved through the SVD of the stacked normals rather
/// than their Gram matrix: near a kink the normals are almost antiparallel and
/// squaring their conditioning would destroy the step.
fn project_onto_cuts(x0: &[f64], cuts: &VecDeque<Cut>) -> Option<Vec<f64>> {
    let m = cuts.len();
    let dim = x0.len();
    let viol: Vec<f64> = cuts.iter().map(|c| c.at(x0)).collect();
    let scale = cuts.iter().map(|c| c.value.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut subsets: Vec<u32> = (1..1u32 << m).collect();
    subsets.sort_by_key(|s| s.count_ones());
    for set in subsets {
        let idx: Vec<usize> = (0..m).filter(|i| set & (1 << i) != 0).collect();
        let normals = DMatrix::from_fn(idx.len(), dim, |a, j| cuts[idx[a]].s[j]);
        let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| -viol[i]));
        let svd = normals.clone().svd(true, true);
        let tol = 1e-14 * svd.singular_values.max();
        // minimum-norm step d with S d = −ℓ(x0), and multipliers from d = −Sᵀμ
        let Ok(d) = svd.solve(&rhs, tol) else { continue };
        let Ok(mu) = normals.transpose().svd(true, true).solve(&(-&d), tol) else { continue };
        if mu.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            continue;
        }
        let x: Vec<f64> = x0.iter().zip(d.iter()).map(|(a, b)| a + b).collect();
        // The newest cut is violated at `x0` and must be resolved; older ones
        // only up to what the rounding of `x` allows.
        let newest = &cuts[m - 1];
        if newest.at(&x) <= 0.01 * newest.value && cuts.iter().all(|c| c.at(&x) <= 1e-7 * scale + c.rounding(&x)) {
            return Some(x);
        }
    }
    None
}

fn descend(obj: &Objective, start: Vec<f64>, cfg: &SolverConfig) -> Result<Run> {
    let mut b = start;
    let mut value = obj.value(&b)?;
    if !value.is_finite() {
        return Ok(Run::Stalled { value: f64::INFINITY, iters: 0 });
    }
    let mut best = (value, b.clone());
    let mut last_gain = 0;
    let mut cuts: VecDeque<Cut> = VecDeque::new();
    let target = cfg.polish.min(cfg.tol);
    for k in 0..cfg.max_iters {
        if value < -cfg.tol {
            return Err(Error::NegativeValue { value, point: b });
        }
        if value <= target {
            return Ok(Run::Converged { b, value, iters: k });
        }
        let s = obj.gradient(&b)?;
        let s2 = dot(&s, &s);
        if s2 == 0.0 || !s2.is_finite() {
            if best.0 <= cfg.tol {
                break;
            }
            if s2 == 0.0 {
                return Err(Error::PositiveMinimum { value, point: b });
            }
            return Ok(Run::Stalled { value: best.0, iters: k });
        }
        cuts.push_back(Cut { b: b.clone(), value, s: s.clone() });
        while cuts.len() > cfg.bundle.max(1) {
            cuts.pop_front();
        }
        let mut next = None;
        while cuts.len() > 1 && next.is_none() {
            next = project_onto_cuts(&b, &cuts);
            if next.is_none() {
                cuts.pop_front();
            }
        }
        let mut next = next.unwrap_or_else(|| b.iter().zip(&s).map(|(x, g)| x - value / s2 * g).collect());
        let mut next_value = obj.value(&next)?;
        let mut tries = 0;
        while !next_value.is_finite() && tries < BACKTRACKS {
            for (x, y) in next.iter_mut().zip(&b) {
                *x = 0.5 * (*x + y);
            }
            next_value = obj.value(&next)?;
            tries += 1;
        }
        if !next_value.is_finite() {
            return Ok(Run::Stalled { value: best.0, iters: k });
        }
        b = next;
        value = next_value;
        if value < best.0 {
            if value < best.0 * (1.0 - 1e-3) {
                last_gain = k;
            }
            best = (value, b.clone());
        }
        if best.0 <= cfg.tol && k - last_gain > STALL_WINDOW {
            break;
        }
    }
    if value < -cfg.tol {
        return Err(Error::NegativeValue { value, point: b });
    }
    Ok(if best.0 <= cfg.tol {
        Run::Converged { b: best.1, value: best.0, iters: cfg.max_iters }
    } else {
        Run::Stalled { value: best.0, iters: cfg.max_iters }
    })
}

/// When `F` is quadratic near `b` (globally, or piecewise for chain
/// excesses), least-squares Newton steps land on the minimizer set to rounding
/// accuracy, well below what value-based stopping can resolve (`F ~ dist²`).
/// A step is kept only if `|F|` does not grow beyond the rounding floor.
fn newton_polish(obj: &Objective, mut b: Vec<f64>, mut value: f64) -> Result<(Vec<f64>, f64)> {
    for _ in 0..NEWTON_STEPS {
        let bc = add(&b, &obj.c);
        let (Some(hf), Some(hg)) = (obj.ef.hessian_at(&bc), obj.eg.hessian_at(&b)) else { break };
        let h = hf + hg;
        let grad = DVector::from_vec(obj.gradient(&b)?);
        let tol = 1e-12 * h.amax().max(1.0);
        let Ok(step) = h.svd(true, true).solve(&grad, tol) else { break };
        let next: Vec<f64> = b.iter().zip(step.iter()).map(|(x, d)| x - d).collect();
        let next_value = obj.value(&next)?;
        let floor = 64.0 * f64::EPSILON * (1.0 + dot(&next, &next) + dot(&obj.c, &obj.c));
        if !(next_value.abs() <= value.abs().max(floor)) || next == b {
            break;
        }
        (b, value) = (next, next_value);
    }
    Ok((b, value))
}

/// Splits `c = p − n` with `p ∈ P_q(f)` and `n ∈ N_q(g)`.
///
/// `f` should be BC and `g` TBC. A value of `F` below `−tol` proves that the
/// hypothesis fails and is returned as [`Error::NegativeValue`]; a stationary
/// point with positive value as [`Error::PositiveMinimum`].
pub fn posneg_decompose(
    space: &SsdSpace,
    f: &ConvexFunction,
    g: &ConvexFunction,
    c: &[f64],
    cfg: &SolverConfig,
) -> Result<DecompositionResult> {
    check_dim(space.dim(), f.dim())?;
    check_dim(space.dim(), g.dim())?;
    space.check(c)?;
    if !cfg.tol.is_finite() || cfg.tol <= 0.0 {
        return Err(Error::InvalidInput(format!("solver tol must be positive, got {}", cfg.tol)));
    }
    let obj = Objective { ef: Excess::new(space, f, 1.0), eg: Excess::new(space, g, -1.0), c: c.to_vec() };
    let dim = space.dim();
    let radius = cfg.radius.unwrap_or(4.0 * (1.0 + norm2(c)));
    let mut starts = vec![vec![0.0; dim]];
    starts.extend(halton_ball(dim, radius, cfg.restarts, cfg.seed));
    let mut total = 0;
    let mut best_residual = f64::INFINITY;
    for start in starts {
        match descend(&obj, start, cfg)? {
            Run::Converged { b, value, iters } => {
                total += iters;
                let (b, value) = newton_polish(&obj, b, value)?;
                let p = add(&b, c);
                let pq_defect = obj.ef.value(&p)?.abs();
                let nq_defect = obj.eg.value(&b)?.abs();
                return Ok(DecompositionResult {
                    p: SsdPoint::new(p),
                    n: SsdPoint::new(b.clone()),
                    b: SsdPoint::new(b),
                    residual: value,
                    pq_defect,
                    nq_defect,
                    iterations: total,
                });
            }
            Run::Stalled { value, iters } => {
                total += iters;
                best_residual = best_residual.min(value);
            }
        }
    }
    Err(Error::NonConvergence { residual: best_residual, iterations: total })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWithMaximal,
    Refuted,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalityReport {
    pub samples_tested: usize,
    pub max_residual: f64,
    pub verdict: Verdict,
    pub refuting_point: Option<SsdPoint>,
}

enum ProbeOutcome {
    Ok(f64),
    Refuted(f64),
    Inconclusive(f64),
}

/// Probes the translation criterion `A − N_q(g) = B` at each point.
///
/// `g` defaults to `g0`. The strongest verdict is consistent-with-maximal:
/// finitely many probes never prove maximality.
pub fn maximality_check(
    space: &SsdSpace,
    f: &ConvexFunction,
    g: Option<&ConvexFunction>,
    probes: &[SsdPoint],
    cfg: &SolverConfig,
) -> Result<MaximalityReport> {
    let g0 = ConvexFunction::g0(space.dim());
    let g = g.unwrap_or(&g0);
    let outcomes = probes
        .par_iter()
        .map(|c| match posneg_decompose(space, f, g, c, cfg) {
            Ok(r) => Ok(ProbeOutcome::Ok(r.residual)),
            Err(Error::NegativeValue { value, .. }) => Ok(ProbeOutcome::Refuted(value.abs())),
            Err(Error::PositiveMinimum { value, .. }) => Ok(ProbeOutcome::Refuted(value)),
            Err(Error::NonConvergence { residual, .. }) => Ok(ProbeOutcome::Inconclusive(residual)),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = MaximalityReport {
        samples_tested: probes.len(),
        max_residual: 0.0,
        verdict: Verdict::ConsistentWithMaximal,
        refuting_point: None,
    };
    for (c, o) in probes.iter().zip(outcomes) {
        match o {
            ProbeOutcome::Ok(r) => report.max_residual = report.max_residual.max(r),
            ProbeOutcome::Refuted(r) => {
                report.max_residual = report.max_residual.max(r);
                if report.verdict != Verdict::Refuted {
                    report.verdict = Verdict::Refuted;
                    report.refuting_point = Some(c.clone());
                }
            }
            ProbeOutcome::Inconclusive(r) => {
                report.max_residual = report.max_residual.max(r);
                if report.verdict == Verdict::ConsistentWithMaximal {
                    report.verdict = Verdict::Inconclusive;
                }
            }
        }
    }
    Ok(report)
}

/// `(1/√2) · max(0, sup_b [‖b‖ − √(2φ(b) + ‖b‖²)])` over a `points`-per-axis
/// grid of the cube `[−radius, radius]^{2n}`.
///
/// A radicand below `−tol` means `φ ≥ q` fails and aborts with
/// [`Error::NegativeRadicand`].
pub fn minnorm_rhs(space: &SsdSpace, phi: &ConvexFunction, radius: f64, points: usize, tol: f64) -> Result<f64> {
    if !space.is_product() {
        return Err(Error::WrongSpaceKind { expected: "product", found: space.to_string() });
    }
    check_dim(space.dim(), phi.dim())?;
    if points < 2 || !(radius > 0.0) {
        return Err(Error::InvalidInput("min-norm grid needs >= 2 points and a positive radius".into()));
    }
    let dim = space.dim();
    let total = (points as u128).pow(dim as u32);
    if total > 1u128 << 32 {
        return Err(Error::InvalidInput(format!("min-norm grid with {total} points is too large")));
    }
    let step = 2.0 * radius / (points - 1) as f64;
    let best = (0..total as u64)
        .into_par_iter()
        .map(|flat| {
            let mut rem = flat;
            let mut b = vec![0.0; dim];
            for v in b.iter_mut().rev() {
                *v = -radius + step * (rem % points as u64) as f64;
                rem /= points as u64;
            }
            let nb2 = dot(&b, &b);
            let rad = 2.0 * phi.value(&b)? + nb2;
            if rad < -tol {
                return Err(Error::NegativeRadicand { value: rad });
            }
            Ok(nb2.sqrt() - rad.max(0.0).sqrt())
        })
        .try_reduce(|| f64::NEG_INFINITY, |a, b| Ok(a.max(b)))?;
    Ok(best.max(0.0) / std::f64::consts::SQRT_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinNormEstimate {
    /// `min{‖x‖ : 0 ∈ (S + J)x}` from the resolvent (or a graph scan).
    pub lhs: f64,
    /// The Fitzpatrick-function formula maximized on a grid.
    pub rhs: f64,
    pub abs_diff: f64,
}

/// Both sides of the min-norm formula for `S + J`, computed independently.
pub fn minnorm_surjectivity(
    op: &MonotoneOp,
    radius: f64,
    points: usize,
    tol: f64,
    sampling: &GraphSampling,
) -> Result<MinNormEstimate> {
    let lhs = minnorm_lhs(op, tol)?;
    let phi = fitzpatrick_op(op, sampling)?;
    let rhs = minnorm_rhs(&op.space(), &phi, radius, points, tol)?;
    Ok(MinNormEstimate { lhs, rhs, abs_diff: (lhs - rhs).abs() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexfun::Quadratic;

    fn phi_identity() -> ConvexFunction {
        ConvexFunction::Quadratic(Quadratic::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.0, 0.0], 0.0).unwrap())
    }

    #[test]
    fn worked_product_example() {
        let space = SsdSpace::product(1);
        let r = posneg_decompose(&space, &phi_identity(), &ConvexFunction::g0(2), &[1.0, 0.0], &SolverConfig::default())
            .unwrap();
        assert!((r.p[0] - 0.5).abs() < 1e-6 && (r.p[1] - 0.5).abs() < 1e-6, "{r:?}");
        assert!((r.n[0] + 0.5).abs() < 1e-6 && (r.n[1] - 0.5).abs() < 1e-6);
        assert_eq!(&r.p - &r.n, SsdPoint::from([1.0, 0.0]));
    }

    #[test]
    fn hilbert_g0_split_has_zero_negative_part() {
        let space = SsdSpace::hilbert(2);
        let g0 = ConvexFunction::g0(2);
        let r = posneg_decompose(&space, &g0, &g0, &[3.0, -1.0], &SolverConfig::default()).unwrap();
        assert!(r.n.norm() < 1e-6);
    }

    #[test]
    fn non_bc_function_is_refuted() {
        let space = SsdSpace::product(1);
        let zero = crate::qpositive::fitzpatrick(
            &crate::qpositive::PointSet::new(space, vec![[0.0, 0.0].into()]).unwrap(),
        );
        // (1, 0) = (1, 0) − 0 is a genuine split, (1, 1) has none.
        assert!(posneg_decompose(&space, &zero, &ConvexFunction::g0(2), &[1.0, 0.0], &SolverConfig::default()).is_ok());
        let err = posneg_decompose(&space, &zero, &ConvexFunction::g0(2), &[1.0, 1.0], &SolverConfig::default());
        assert!(matches!(err, Err(Error::NegativeValue { .. })), "{err:?}");
    }

    #[test]
    fn minnorm_rhs_of_shifted_identity() {
        // S x = x − 1: φ(x, x*) = −x + (x + x* + 1)²/4, min-norm zero of S + J is 1/2.
        let space = SsdSpace::product(1);
        let phi = ConvexFunction::Quadratic(
            Quadratic::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[-0.5, 0.5], 0.25).unwrap(),
        );
        let rhs = minnorm_rhs(&space, &phi, 6.0, 401, 1e-9).unwrap();
        assert!((rhs - 0.5).abs() < 2e-2, "{rhs}");
    }
}
