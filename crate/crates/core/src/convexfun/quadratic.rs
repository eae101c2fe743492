use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::space::SignedPermutation;

const PSD_FLOOR: f64 = -1e-10;
const SYMMETRY_TOL: f64 = 1e-12;

/// `b ↦ ½⟨b, Qb⟩ + ⟨p, b⟩ + r` with `Q` symmetric positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    q: DMatrix<f64>,
    p: DVector<f64>,
    r: f64,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>, p: DVector<f64>, r: f64) -> Result<Self> {
        let quad = Self::unchecked(q, p, r)?;
        let min = quad.min_eigenvalue();
        if min < PSD_FLOOR {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(quad)
    }

    /// Builds from row-major data.
    pub fn from_rows(q: &[Vec<f64>], p: &[f64], r: f64) -> Result<Self> {
        let n = p.len();
        check_dim(n, q.len())?;
        for row in q {
            check_dim(n, row.len())?;
        }
        let m = DMatrix::from_fn(n, n, |i, j| q[i][j]);
        Self::new(m, DVector::from_column_slice(p), r)
    }

    /// Symmetric but possibly indefinite; used for excess functions like `f − q`.
    pub(crate) fn unchecked(q: DMatrix<f64>, p: DVector<f64>, r: f64) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::InvalidInput("quadratic matrix must be square".into()));
        }
        check_dim(q.nrows(), p.len())?;
        let scale = q.amax().max(1.0);
        if (&q - q.transpose()).amax() > SYMMETRY_TOL * scale {
            return Err(Error::InvalidInput("quadratic matrix must be symmetric".into()));
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) || !r.is_finite() {
            return Err(Error::NonFinite);
        }
        let q = (&q + q.transpose()) * 0.5;
        Ok(Quadratic { q, p, r })
    }

    pub fn identity(dim: usize) -> Self {
        Quadratic { q: DMatrix::identity(dim, dim), p: DVector::zeros(dim), r: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn constant(&self) -> f64 {
        self.r
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.q.clone()).eigenvalues.min()
    }

    pub fn eval(&self, b: &[f64]) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.q[(i, j)] * b[j];
            }
            acc += b[i] * (0.5 * row + self.p[i]);
        }
        acc + self.r
    }

    pub fn gradient(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.q[(i, j)] * b[j]).sum::<f64>() + self.p[i]).collect()
    }

    /// Closed-form Fenchel conjugate; requires a positive definite matrix.
    pub fn conjugate(&self) -> Result<Quadratic> {
        let chol = nalgebra::Cholesky::new(self.q.clone()).ok_or(Error::SingularQuadratic)?;
        // Reject numerically singular matrices that still factor.
        let eig_min = self.min_eigenvalue();
        if eig_min <= 1e-12 * self.q.amax().max(1.0) {
            return Err(Error::SingularQuadratic);
        }
        let qinv = chol.inverse();
        let qinv_p = &qinv * &self.p;
        let r = 0.5 * self.p.dot(&qinv_p) - self.r;
        Ok(Quadratic { q: qinv, p: -qinv_p, r })
    }

    /// `b ↦ self(P b)`.
    pub fn compose(&self, map: &SignedPermutation) -> Quadratic {
        let m = map.to_matrix();
        let q = m.transpose() * &self.q * &m;
        let p = m.transpose() * &self.p;
        Quadratic { q, p, r: self.r }
    }

    /// `b ↦ self(b + shift) + ⟨tilt, b⟩ + k`.
    pub fn shift_tilt(&self, shift: &[f64], tilt: &[f64], k: f64) -> Quadratic {
        let c = DVector::from_column_slice(shift);
        let p = &self.q * &c + &self.p + DVector::from_column_slice(tilt);
        let r = self.eval(shift) + k;
        Quadratic { q: self.q.clone(), p, r }
    }

    pub fn add(&self, other: &Quadratic) -> Result<Quadratic> {
        check_dim(self.dim(), other.dim())?;
        Ok(Quadratic { q: &self.q + &other.q, p: &self.p + &other.p, r: self.r + other.r })
    }

    /// Adds `scale · ½bᵀMb` for a symmetric `M`.
    pub(crate) fn add_form(&self, m: &DMatrix<f64>, scale: f64) -> Quadratic {
        Quadratic { q: &self.q + m * scale, p: self.p.clone(), r: self.r }
    }

    /// Embeds into a larger space acting on the given coordinates.
    pub(crate) fn embed(&self, coords: &[usize], dim: usize) -> Quadratic {
        let mut q = DMatrix::zeros(dim, dim);
        let mut p = DVector::zeros(dim);
        for (a, &i) in coords.iter().enumerate() {
            p[i] = self.p[a];
            for (b, &j) in coords.iter().enumerate() {
                q[(i, j)] = self.q[(a, b)];
            }
        }
        Quadratic { q, p, r: self.r }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conjugate_of_diag_two() {
        let f = Quadratic::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]], &[0.0, 0.0], 0.0).unwrap();
        let fs = f.conjugate().unwrap();
        assert!((fs.eval(&[1.0, 2.0]) - 0.25 * 5.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_indefinite_and_singular() {
        let bad = Quadratic::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]], &[0.0, 0.0], 0.0);
        assert!(matches!(bad, Err(Error::NotPsd { .. })));
        let singular = Quadratic::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[0.0, 0.0], 0.0).unwrap();
        assert_eq!(singular.conjugate(), Err(Error::SingularQuadratic));
    }

    #[test]
    fn shift_tilt_matches_direct_evaluation() {
        let f = Quadratic::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]], &[0.5, -1.0], 2.0).unwrap();
        let g = f.shift_tilt(&[1.0, -2.0], &[0.25, 0.75], -1.0);
        let b = [0.3, -0.7];
        let direct = f.eval(&[1.3, -2.7]) + 0.25 * 0.3 - 0.75 * 0.7 - 1.0;
        assert!((g.eval(&b) - direct).abs() < 1e-12);
    }
}
