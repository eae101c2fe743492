use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lp::{LinearProgram, LpSolution};
use crate::space::dot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub offset: f64,
}

/// `b ↦ max_i [⟨slope_i, b⟩ + offset_i]`, finite everywhere.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxAffine {
    pieces: Vec<AffinePiece>,
    dim: usize,
}

impl MaxAffine {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let dim = pieces.first().ok_or(Error::EmptySet)?.slope.len();
        for p in &pieces {
            check_dim(dim, p.slope.len())?;
            if !p.offset.is_finite() || p.slope.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(MaxAffine { pieces, dim })
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn piece_value(p: &AffinePiece, b: &[f64]) -> f64 {
        dot(&p.slope, b) + p.offset
    }

    pub fn eval(&self, b: &[f64]) -> f64 {
        self.pieces.iter().map(|p| Self::piece_value(p, b)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the first maximizing piece.
    pub fn argmax(&self, b: &[f64]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, p) in self.pieces.iter().enumerate() {
            let v = Self::piece_value(p, b);
            if v > best.1 {
                best = (i, v);
            }
        }
        best.0
    }

    /// Indices of pieces within `tol` of the maximum.
    pub fn active(&self, b: &[f64], tol: f64) -> Vec<usize> {
        let values: Vec<f64> = self.pieces.iter().map(|p| Self::piece_value(p, b)).collect();
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = tol * (1.0 + max.abs());
        (0..values.len()).filter(|&i| values[i] >= max - scale).collect()
    }

    /// Polyhedral conjugate at `y`:
    /// `min Σλ_i(−offset_i)` over `λ ≥ 0, Σλ_i = 1, Σλ_i slope_i = y`;
    /// `+∞` when `y` is outside the convex hull of the slopes.
    pub fn conjugate_at(&self, y: &[f64]) -> Result<f64> {
        check_dim(self.dim, y.len())?;
        let k = self.pieces.len();
        let mut rows: Vec<Vec<f64>> = (0..self.dim).map(|i| self.pieces.iter().map(|p| p.slope[i]).collect()).collect();
        rows.push(vec![1.0; k]);
        let mut rhs = y.to_vec();
        rhs.push(1.0);
        let cost = self.pieces.iter().map(|p| -p.offset).collect();
        match LinearProgram::new(cost, rows, rhs)?.solve()? {
            LpSolution::Optimal { value, .. } => Ok(value),
            LpSolution::Infeasible => Ok(f64::INFINITY),
            LpSolution::Unbounded => Err(Error::Lp("conjugate LP unbounded".into())),
        }
    }

    /// Maps every slope through `map` (used for `b ↦ f(Pb)` with orthogonal `P`).
    pub(crate) fn map_slopes(&self, map: impl Fn(&[f64]) -> Vec<f64>) -> MaxAffine {
        let pieces = self.pieces.iter().map(|p| AffinePiece { slope: map(&p.slope), offset: p.offset }).collect();
        MaxAffine { pieces, dim: self.dim }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abs() -> MaxAffine {
        MaxAffine::new(vec![
            AffinePiece { slope: vec![1.0], offset: 0.0 },
            AffinePiece { slope: vec![-1.0], offset: 0.0 },
        ])
        .unwrap()
    }

    #[test]
    fn absolute_value() {
        assert_eq!(abs().eval(&[-2.0]), 2.0);
        assert_eq!(abs().active(&[0.0], 1e-12).len(), 2);
    }

    #[test]
    fn conjugate_of_absolute_value_is_indicator() {
        let f = abs();
        assert_eq!(f.conjugate_at(&[0.3]).unwrap(), 0.0);
        assert_eq!(f.conjugate_at(&[-1.0]).unwrap(), 0.0);
        assert_eq!(f.conjugate_at(&[1.2]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_empty() {
        assert_eq!(MaxAffine::new(vec![]), Err(Error::EmptySet));
    }
}
