//! Finite q-positive sets and their Fitzpatrick functions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convexfun::{AffinePiece, ConvexFunction, MaxAffine, SegmentChain};
use crate::error::{check_dim, Error, Result};
use crate::space::{sub, SsdPoint, SsdSpace};

pub const DEFAULT_QPOS_TOL: f64 = 1e-10;

/// A nonempty finite set of points of one space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    space: SsdSpace,
    points: Vec<SsdPoint>,
}

impl PointSet {
    pub fn new(space: SsdSpace, points: Vec<SsdPoint>) -> Result<Self> {
        space.validate()?;
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        for p in &points {
            space.check(p)?;
            if !p.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(PointSet { space, points })
    }

    /// `{(cos θ, sin θ, λθ)}` in the triple space.
    pub fn helix(lambda: f64, thetas: &[f64]) -> Result<Self> {
        let points = thetas.iter().map(|t| SsdPoint::new(vec![t.cos(), t.sin(), lambda * t])).collect();
        Self::new(SsdSpace::triple(), points)
    }

    /// `{t · direction}` for the given parameters.
    pub fn line(space: SsdSpace, direction: &[f64], ts: &[f64]) -> Result<Self> {
        space.check(direction)?;
        let points = ts.iter().map(|t| SsdPoint::new(direction.iter().map(|d| t * d).collect())).collect();
        Self::new(space, points)
    }

    pub fn space(&self) -> SsdSpace {
        self.space
    }

    pub fn points(&self) -> &[SsdPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QPositivityReport {
    pub positive: bool,
    pub witness: Option<(SsdPoint, SsdPoint)>,
    pub min_pair_value: f64,
}

/// Exhaustive pairwise scan of `q(b − c)`; the witness is the first argmin in
/// row-major pair order.
pub fn is_q_positive(set: &PointSet, tol: f64) -> QPositivityReport {
    let s = set.space;
    let pts = &set.points;
    let rows: Vec<(f64, usize)> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0, i);
            for j in i + 1..pts.len() {
                let v = s.q_raw(&sub(&pts[i], &pts[j]));
                if v < best.0 {
                    best = (v, j);
                }
            }
            best
        })
        .collect();
    let mut min = (0.0, 0, 0);
    for (i, &(v, j)) in rows.iter().enumerate() {
        if v < min.0 {
            min = (v, i, j);
        }
    }
    let positive = min.0 >= -tol;
    QPositivityReport {
        positive,
        witness: (!positive).then(|| (pts[min.1].clone(), pts[min.2].clone())),
        min_pair_value: min.0,
    }
}

/// `inf_{a ∈ A} q(a − b)`.
pub fn q_defect(set: &PointSet, b: &[f64]) -> Result<f64> {
    set.space.check(b)?;
    Ok(set.points.iter().map(|a| set.space.q_raw(&sub(a, b))).fold(f64::INFINITY, f64::min))
}

/// `Φ_A(b) = max_{a ∈ A} [⌊a, b⌋ − q(a)]` as a max-affine function with slopes `ι(a)`.
pub fn fitzpatrick(set: &PointSet) -> ConvexFunction {
    let s = set.space;
    let pieces = set.points.iter().map(|a| AffinePiece { slope: s.iota_raw(a), offset: -s.q_raw(a) }).collect();
    ConvexFunction::MaxAffine(MaxAffine::new(pieces).expect("point set is nonempty and finite"))
}

/// Fitzpatrick function of the polygonal chain through the points in order.
///
/// Requires every segment direction `d` to satisfy `q(d) ≥ 0`; for a
/// one-dimensional monotone graph listed in graph order this always holds.
pub fn fitzpatrick_polyline(set: &PointSet) -> Result<ConvexFunction> {
    let vertices = set.points.iter().map(|p| p.to_vec()).collect();
    Ok(ConvexFunction::Chain(SegmentChain::new(set.space, vertices)?))
}

/// `q(b) − Φ_A(b)` expressed through Eq. (3): equals `inf q(A − b)`.
pub fn fitzpatrick_via_defect(set: &PointSet, b: &[f64]) -> Result<f64> {
    check_dim(set.space.dim(), b.len())?;
    Ok(set.space.q_raw(b) - q_defect(set, b)?)
}
