use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::space::{sub, SsdSpace};

/// Fitzpatrick function of a polygonal chain `A = [a_0, a_1] ∪ [a_1, a_2] ∪ …`:
/// `Φ_A(b) = sup_{a ∈ A} [⌊a, b⌋ − q(a)]`, evaluated exactly per segment.
///
/// On a segment `a_j + λd` the objective is the concave quadratic
/// `α + βλ − γλ²` with `γ = q(d) ≥ 0` when the chain is q-positive, so the
/// supremum over `λ ∈ [0, 1]` has a closed form. This is exact where a
/// max-affine sampling of the same chain would sag between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentChain {
    space: SsdSpace,
    vertices: Vec<Vec<f64>>,
}

impl SegmentChain {
    pub fn new(space: SsdSpace, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::EmptySet);
        }
        for v in &vertices {
            space.check(v)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        for w in vertices.windows(2) {
            let q = space.q_raw(&sub(&w[1], &w[0]));
            if q < -1e-10 {
                return Err(Error::InvalidInput(format!("chain segment has q(d) = {q:e} < 0")));
            }
        }
        Ok(SegmentChain { space, vertices })
    }

    pub fn space(&self) -> SsdSpace {
        self.space
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Value and a maximizing chain point.
    pub fn eval_with_argmax(&self, b: &[f64]) -> (f64, Vec<f64>) {
        let s = &self.space;
        let first = &self.vertices[0];
        let mut best = (s.pair_raw(first, b) - s.q_raw(first), first.clone());
        for w in self.vertices.windows(2) {
            let (a, d) = (&w[0], sub(&w[1], &w[0]));
            let alpha = s.pair_raw(a, b) - s.q_raw(a);
            let beta = s.pair_raw(&d, b) - s.pair_raw(a, &d);
            let gamma = s.q_raw(&d).max(0.0);
            let lambda = if gamma > 0.0 {
                (beta / (2.0 * gamma)).clamp(0.0, 1.0)
            } else if beta > 0.0 {
                1.0
            } else {
                0.0
            };
            let v = alpha + lambda * (beta - gamma * lambda);
            if v > best.0 {
                let point = a.iter().zip(&d).map(|(x, y)| x + lambda * y).collect();
                best = (v, point);
            }
        }
        best
    }

    pub fn eval(&self, b: &[f64]) -> f64 {
        self.eval_with_argmax(b).0
    }

    /// `Φ_A(b) − q(b) = −min_{a ∈ A} q(a − b)` and `a* − b` for a minimizer,
    /// computed from differences so that it stays accurate near `A`.
    pub(crate) fn excess_with_offset(&self, b: &[f64]) -> (f64, Vec<f64>) {
        let (v, point, _) = self.closest(b);
        (-v, point)
    }

    /// Hessian of the excess on the piece containing `b`: `−Π`, plus
    /// `(Πd)(Πd)ᵀ / 2q(d)` when the minimizer is interior to a segment `d`.
    pub(crate) fn excess_hessian(&self, b: &[f64]) -> DMatrix<f64> {
        let pi = self.space.pairing_matrix();
        let mut h = -&pi;
        if let (_, _, Some(d)) = self.closest(b) {
            let pd = &pi * DVector::from_vec(d.clone());
            h += &pd * pd.transpose() / (2.0 * self.space.q_raw(&d));
        }
        h
    }

    /// `min_{a ∈ A} q(a − b)`, the offset `a* − b`, and the segment direction
    /// when `a*` is interior to a segment with `q(d) > 0`.
    fn closest(&self, b: &[f64]) -> (f64, Vec<f64>, Option<Vec<f64>>) {
        let s = &self.space;
        let first = sub(&self.vertices[0], b);
        let mut best = (s.q_raw(&first), first, None);
        for w in self.vertices.windows(2) {
            let (u, d) = (sub(&w[0], b), sub(&w[1], &w[0]));
            let beta = s.pair_raw(&d, &u);
            let gamma = s.q_raw(&d).max(0.0);
            // q(u + λd) = q(u) + λβ + λ²γ
            let lambda = if gamma > 0.0 {
                (-beta / (2.0 * gamma)).clamp(0.0, 1.0)
            } else if beta < 0.0 {
                1.0
            } else {
                0.0
            };
            let point: Vec<f64> = u.iter().zip(&d).map(|(x, y)| x + lambda * y).collect();
            let v = s.q_raw(&point);
            if v < best.0 {
                let interior = gamma > 0.0 && lambda > 0.0 && lambda < 1.0;
                best = (v, point, interior.then_some(d));
            }
        }
        best
    }

    /// `ι(a*)` for a maximizer `a*`, a subgradient of `Φ_A` at `b`.
    pub fn subgradient(&self, b: &[f64]) -> Vec<f64> {
        self.space.iota_raw(&self.eval_with_argmax(b).1)
    }
}
