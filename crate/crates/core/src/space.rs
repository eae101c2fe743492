//! Finite-dimensional symmetrically self-dual spaces.
//!
//! Every space here is `R^d` with a symmetric bilinear pairing `⌊b, c⌋`, the
//! Euclidean norm, and a signed coordinate permutation `ι` satisfying
//! `⟨b, ι(c)⟩ = ⌊b, c⌋`. Dual vectors are identified with primal coordinates
//! through `ι`, so there is no separate dual type.

use std::fmt;
use std::ops::{Add, Deref, Index, Mul, Neg, Sub};
use std::slice::SliceIndex;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// The four families of SSDB spaces supported by the toolkit.
///
/// `Product { n }` is `R^n × R^n` with the primal block stored first and the
/// dual block second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SsdSpace {
    /// `⌊b, c⌋ = ⟨b, c⟩`, so `q = ½‖·‖²`.
    Hilbert { dim: usize },
    /// `⌊b, c⌋ = −⟨b, c⟩`, so `q = −½‖·‖²`.
    Antihilbert { dim: usize },
    /// `R^3` with `⌊b, c⌋ = b1c2 + b2c1 + b3c3`.
    Triple,
    /// `E × E*` with `⌊(x,x*), (y,y*)⌋ = ⟨x, y*⟩ + ⟨y, x*⟩`.
    Product { n: usize },
}

impl fmt::Display for SsdSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SsdSpace::Hilbert { dim } => write!(f, "hilbert({dim})"),
            SsdSpace::Antihilbert { dim } => write!(f, "antihilbert({dim})"),
            SsdSpace::Triple => write!(f, "triple"),
            SsdSpace::Product { n } => write!(f, "product({n})"),
        }
    }
}

/// A point of an [`SsdSpace`], stored as flat coordinates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SsdPoint(Vec<f64>);

impl SsdPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        SsdPoint(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        SsdPoint(vec![0.0; dim])
    }

    /// Concatenates a primal and a dual block into a product-space point.
    pub fn from_blocks(x: &[f64], x_star: &[f64]) -> Self {
        let mut v = Vec::with_capacity(x.len() + x_star.len());
        v.extend_from_slice(x);
        v.extend_from_slice(x_star);
        SsdPoint(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Primal block of a product-space point.
    pub fn primal(&self) -> &[f64] {
        &self.0[..self.0.len() / 2]
    }

    /// Dual block of a product-space point.
    pub fn dual(&self) -> &[f64] {
        &self.0[self.0.len() / 2..]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.0)
    }
}

impl Deref for SsdPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<I: SliceIndex<[f64]>> Index<I> for SsdPoint {
    type Output = I::Output;
    fn index(&self, i: I) -> &I::Output {
        &self.0[i]
    }
}

impl From<Vec<f64>> for SsdPoint {
    fn from(v: Vec<f64>) -> Self {
        SsdPoint(v)
    }
}

impl From<&[f64]> for SsdPoint {
    fn from(v: &[f64]) -> Self {
        SsdPoint(v.to_vec())
    }
}

impl<const N: usize> From<[f64; N]> for SsdPoint {
    fn from(v: [f64; N]) -> Self {
        SsdPoint(v.to_vec())
    }
}

impl Add for &SsdPoint {
    type Output = SsdPoint;
    fn add(self, rhs: &SsdPoint) -> SsdPoint {
        SsdPoint(add(&self.0, &rhs.0))
    }
}

impl Sub for &SsdPoint {
    type Output = SsdPoint;
    fn sub(self, rhs: &SsdPoint) -> SsdPoint {
        SsdPoint(sub(&self.0, &rhs.0))
    }
}

impl Neg for &SsdPoint {
    type Output = SsdPoint;
    fn neg(self) -> SsdPoint {
        SsdPoint(self.0.iter().map(|v| -v).collect())
    }
}

impl Mul<f64> for &SsdPoint {
    type Output = SsdPoint;
    fn mul(self, rhs: f64) -> SsdPoint {
        SsdPoint(self.0.iter().map(|v| v * rhs).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// A linear map of the form `out[i] = sign[i] · x[perm[i]]`.
///
/// `ι`, `ρ1`, `ρ2` and their negatives are all of this form, which keeps
/// every composition exact and every map orthogonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    sign: Vec<f64>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, sign: Vec<f64>) -> Result<Self> {
        check_dim(perm.len(), sign.len())?;
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || seen[p] {
                return Err(Error::InvalidInput(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        if sign.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::InvalidInput("signs must be ±1".into()));
        }
        Ok(SignedPermutation { perm, sign })
    }

    pub fn identity(dim: usize) -> Self {
        SignedPermutation { perm: (0..dim).collect(), sign: vec![1.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().zip(&self.sign).map(|(&p, &s)| s * x[p]).collect()
    }

    /// Applies the transpose, which is also the inverse.
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (i, (&p, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            out[p] = s * y[i];
        }
        out
    }

    pub fn transpose(&self) -> SignedPermutation {
        let mut perm = vec![0; self.dim()];
        let mut sign = vec![1.0; self.dim()];
        for (i, (&p, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            perm[p] = i;
            sign[p] = s;
        }
        SignedPermutation { perm, sign }
    }

    /// `self ∘ inner`, i.e. `x ↦ self(inner(x))`.
    pub fn compose(&self, inner: &SignedPermutation) -> SignedPermutation {
        let perm = self.perm.iter().map(|&p| inner.perm[p]).collect();
        let sign = self.perm.iter().zip(&self.sign).map(|(&p, &s)| s * inner.sign[p]).collect();
        SignedPermutation { perm, sign }
    }

    pub fn negated(&self) -> SignedPermutation {
        SignedPermutation { perm: self.perm.clone(), sign: self.sign.iter().map(|s| -s).collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.sign.iter().all(|&s| s == 1.0)
    }

    /// Dense matrix representation (row `i` has `sign[i]` in column `perm[i]`).
    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim(), self.dim());
        for (i, (&p, &s)) in self.perm.iter().zip(&self.sign).enumerate() {
            m[(i, p)] = s;
        }
        m
    }
}

impl SsdSpace {
    pub fn hilbert(dim: usize) -> Self {
        SsdSpace::Hilbert { dim }
    }

    pub fn antihilbert(dim: usize) -> Self {
        SsdSpace::Antihilbert { dim }
    }

    pub fn triple() -> Self {
        SsdSpace::Triple
    }

    pub fn product(n: usize) -> Self {
        SsdSpace::Product { n }
    }

    pub fn dim(&self) -> usize {
        match *self {
            SsdSpace::Hilbert { dim } | SsdSpace::Antihilbert { dim } => dim,
            SsdSpace::Triple => 3,
            SsdSpace::Product { n } => 2 * n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidInput(format!("{self} has dimension zero")));
        }
        Ok(())
    }

    pub fn is_product(&self) -> bool {
        matches!(self, SsdSpace::Product { .. })
    }

    pub fn check(&self, b: &[f64]) -> Result<()> {
        check_dim(self.dim(), b.len())
    }

    /// The isometry `ι` as a signed permutation of coordinates.
    pub fn iota_map(&self) -> SignedPermutation {
        let d = self.dim();
        match *self {
            SsdSpace::Hilbert { .. } => SignedPermutation::identity(d),
            SsdSpace::Antihilbert { .. } => SignedPermutation::identity(d).negated(),
            SsdSpace::Triple => SignedPermutation { perm: vec![1, 0, 2], sign: vec![1.0; 3] },
            SsdSpace::Product { n } => SignedPermutation {
                perm: (n..2 * n).chain(0..n).collect(),
                sign: vec![1.0; d],
            },
        }
    }

    /// `⌊b, c⌋` without dimension checks.
    pub(crate) fn pair_raw(&self, b: &[f64], c: &[f64]) -> f64 {
        match *self {
            SsdSpace::Hilbert { .. } => dot(b, c),
            SsdSpace::Antihilbert { .. } => -dot(b, c),
            SsdSpace::Triple => b[0] * c[1] + b[1] * c[0] + b[2] * c[2],
            SsdSpace::Product { n } => dot(&b[..n], &c[n..]) + dot(&c[..n], &b[n..]),
        }
    }

    /// `q(b) = ½⌊b, b⌋` without dimension checks.
    pub(crate) fn q_raw(&self, b: &[f64]) -> f64 {
        match *self {
            SsdSpace::Hilbert { .. } => 0.5 * dot(b, b),
            SsdSpace::Antihilbert { .. } => -0.5 * dot(b, b),
            SsdSpace::Triple => b[0] * b[1] + 0.5 * b[2] * b[2],
            SsdSpace::Product { n } => dot(&b[..n], &b[n..]),
        }
    }

    pub(crate) fn iota_raw(&self, b: &[f64]) -> Vec<f64> {
        match *self {
            SsdSpace::Hilbert { .. } => b.to_vec(),
            SsdSpace::Antihilbert { .. } => b.iter().map(|v| -v).collect(),
            SsdSpace::Triple => vec![b[1], b[0], b[2]],
            SsdSpace::Product { n } => b[n..].iter().chain(&b[..n]).copied().collect(),
        }
    }

    /// The symmetric bilinear form `⌊b, c⌋`.
    pub fn pair(&self, b: &[f64], c: &[f64]) -> Result<f64> {
        self.check(b)?;
        self.check(c)?;
        Ok(self.pair_raw(b, c))
    }

    /// The quadratic form `q(b) = ½⌊b, b⌋`.
    pub fn qform(&self, b: &[f64]) -> Result<f64> {
        self.check(b)?;
        Ok(self.q_raw(b))
    }

    pub fn iota(&self, b: &[f64]) -> Result<SsdPoint> {
        self.check(b)?;
        Ok(SsdPoint(self.iota_raw(b)))
    }

    /// Euclidean norm; on product spaces this is `√(‖x‖² + ‖x*‖²)`.
    pub fn norm(&self, b: &[f64]) -> Result<f64> {
        self.check(b)?;
        Ok(norm2(b))
    }

    fn require_product(&self) -> Result<usize> {
        match *self {
            SsdSpace::Product { n } => Ok(n),
            other => Err(Error::WrongSpaceKind { expected: "product", found: other.to_string() }),
        }
    }

    /// `ρ1(x, x*) = (−x, x*)` as a signed permutation.
    pub fn reflect1_map(&self) -> Result<SignedPermutation> {
        let n = self.require_product()?;
        let sign = (0..2 * n).map(|i| if i < n { -1.0 } else { 1.0 }).collect();
        Ok(SignedPermutation { perm: (0..2 * n).collect(), sign })
    }

    /// `ρ2(x, x*) = (x, −x*)` as a signed permutation.
    pub fn reflect2_map(&self) -> Result<SignedPermutation> {
        let n = self.require_product()?;
        let sign = (0..2 * n).map(|i| if i < n { 1.0 } else { -1.0 }).collect();
        Ok(SignedPermutation { perm: (0..2 * n).collect(), sign })
    }

    pub fn reflect1(&self, b: &[f64]) -> Result<SsdPoint> {
        let map = self.reflect1_map()?;
        self.check(b)?;
        Ok(SsdPoint(map.apply(b)))
    }

    pub fn reflect2(&self, b: &[f64]) -> Result<SsdPoint> {
        let map = self.reflect2_map()?;
        self.check(b)?;
        Ok(SsdPoint(map.apply(b)))
    }

    /// The symmetric matrix `Π` with `⌊b, c⌋ = bᵀΠc` (also the matrix of `ι`).
    pub fn pairing_matrix(&self) -> nalgebra::DMatrix<f64> {
        self.iota_map().to_matrix()
    }
}

/// The bilinear form `b1c2 + b2c3 + b3c1` on `R^3`.
///
/// It is not symmetric, so `R^3` with this form is not an SSD space; it is kept
/// as a negative fixture for symmetry checks.
pub fn cyclic_form_r3(b: &[f64], c: &[f64]) -> f64 {
    b[0] * c[1] + b[1] * c[2] + b[2] * c[0]
}

/// Largest `|form(b, c) − form(c, b)|` over the given pairs.
pub fn symmetry_defect<F>(form: F, pairs: &[(Vec<f64>, Vec<f64>)]) -> f64
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    pairs.iter().map(|(b, c)| (form(b, c) - form(c, b)).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triple_pairing_basis() {
        let s = SsdSpace::triple();
        assert_eq!(s.pair(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(s.qform(&[1.0, -1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(s.norm(&[1.0, -1.0, 2.0]).unwrap(), 6f64.sqrt());
    }

    #[test]
    fn product_pairing_and_iota() {
        let s = SsdSpace::product(1);
        assert_eq!(s.pair(&[2.0, 3.0], &[5.0, 7.0]).unwrap(), 29.0);
        assert_eq!(s.iota(&[3.0, 4.0]).unwrap().as_slice(), &[4.0, 3.0]);
        assert_eq!(s.norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(s.qform(&[3.0, 4.0]).unwrap(), 12.0);
    }

    #[test]
    fn iota_of_simple_kinds() {
        let b = [1.5, -2.0];
        assert_eq!(SsdSpace::hilbert(2).iota(&b).unwrap().as_slice(), &b);
        assert_eq!(SsdSpace::antihilbert(2).iota(&b).unwrap().as_slice(), &[-1.5, 2.0]);
        assert!(SsdSpace::antihilbert(2).qform(&b).unwrap() < 0.0);
    }

    #[test]
    fn reflections() {
        let s = SsdSpace::product(1);
        assert_eq!(s.reflect1(&[2.0, 3.0]).unwrap().as_slice(), &[-2.0, 3.0]);
        let b = [1.0, 2.0];
        let twice = s.reflect2(&s.reflect2(&b).unwrap()).unwrap();
        assert_eq!(twice.as_slice(), &b);
        let lhs = s.pair(&s.reflect2(&[1.0, 2.0]).unwrap(), &s.reflect2(&[3.0, 4.0]).unwrap()).unwrap();
        assert_eq!(lhs, -10.0);
        assert_eq!(s.pair(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 10.0);
        assert!(matches!(SsdSpace::triple().reflect1(&[0.0; 3]), Err(Error::WrongSpaceKind { .. })));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = SsdSpace::triple().pair(&[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 3, found: 2 });
    }

    #[test]
    fn signed_permutation_algebra() {
        let s = SsdSpace::product(2);
        let iota = s.iota_map();
        let r2 = s.reflect2_map().unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(iota.compose(&r2).apply(&x), iota.apply(&r2.apply(&x)));
        assert_eq!(r2.transpose().apply(&r2.apply(&x)), x.to_vec());
        assert_eq!(iota.apply_transpose(&iota.apply(&x)), x.to_vec());
        let m = iota.to_matrix();
        assert_eq!(m, s.pairing_matrix());
        assert!(SignedPermutation::new(vec![0, 0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn cyclic_form_is_not_symmetric() {
        let pairs = vec![(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0])];
        assert_eq!(symmetry_defect(cyclic_form_r3, &pairs), 1.0);
    }
}
