//! Proper convex functions closed under the SSD calculus.
//!
//! Translation and composition with signed permutations are kept as lazy
//! wrappers so that conjugates follow the algebraic identities
//! `(f_c)^@ = (f^@)_c` and `(f∘P)* = f*∘P` instead of fresh transforms.

mod certify;
mod episum;
mod gap;
mod grid;
mod max_affine;
mod prox;
mod quadratic;
mod segments;

pub use certify::{
    certify_bc, certify_tbc, default_samples, nq_membership, pq_membership, BcReport, DEFAULT_CERT_SAMPLES,
    DEFAULT_MEMBERSHIP_TOL,
};
pub use episum::{partial_episum, PartialEpisum};
pub(crate) use gap::Excess;
pub use grid::{GridAxis, GridFunction};
pub use max_affine::{AffinePiece, MaxAffine};
pub use prox::prox;
pub use quadratic::Quadratic;
pub use segments::SegmentChain;

use crate::error::{check_dim, Error, Result};
use crate::space::{add, SignedPermutation, SsdPoint, SsdSpace};

#[derive(Clone, Debug, PartialEq)]
pub enum ConvexFunction {
    Quadratic(Quadratic),
    /// `g0 = ½‖·‖²`.
    HalfSquaredNorm { dim: usize },
    MaxAffine(MaxAffine),
    /// Fenchel conjugate of a max-affine function, evaluated by linear programming.
    PolyhedralConjugate(MaxAffine),
    Grid(GridFunction),
    /// Fitzpatrick function of a q-positive polygonal chain.
    Chain(SegmentChain),
    /// `f_c = f(· + c) − ⌊·, c⌋ − q(c)`.
    Translated { space: SsdSpace, base: Box<ConvexFunction>, shift: SsdPoint },
    /// `b ↦ base(map(b))`; covers `f∘ι` and `g∘(±ρ2)`.
    Composed { base: Box<ConvexFunction>, map: SignedPermutation },
    Sum(Vec<ConvexFunction>),
    /// `b ↦ Σ f_k(b[coords_k])` over disjoint coordinate blocks.
    Separable { dim: usize, blocks: Vec<(Vec<usize>, ConvexFunction)> },
    PartialEpisum(Box<PartialEpisum>),
}

impl ConvexFunction {
    pub fn quadratic(q: Quadratic) -> Self {
        ConvexFunction::Quadratic(q)
    }

    pub fn g0(dim: usize) -> Self {
        ConvexFunction::HalfSquaredNorm { dim }
    }

    pub fn max_affine(pieces: Vec<AffinePiece>) -> Result<Self> {
        Ok(ConvexFunction::MaxAffine(MaxAffine::new(pieces)?))
    }

    /// `|·|` on `R`.
    pub fn abs() -> Self {
        ConvexFunction::MaxAffine(
            MaxAffine::new(vec![
                AffinePiece { slope: vec![1.0], offset: 0.0 },
                AffinePiece { slope: vec![-1.0], offset: 0.0 },
            ])
            .expect("two pieces"),
        )
    }

    pub fn sum(parts: Vec<ConvexFunction>) -> Result<Self> {
        let dim = parts.first().ok_or(Error::EmptySet)?.dim();
        for p in &parts {
            check_dim(dim, p.dim())?;
        }
        Ok(ConvexFunction::Sum(parts))
    }

    pub fn separable(blocks: Vec<(Vec<usize>, ConvexFunction)>) -> Result<Self> {
        let dim: usize = blocks.iter().map(|(c, _)| c.len()).sum();
        let mut seen = vec![false; dim];
        for (coords, f) in &blocks {
            check_dim(coords.len(), f.dim())?;
            for &i in coords {
                if i >= dim || seen[i] {
                    return Err(Error::InvalidInput("separable blocks must partition the coordinates".into()));
                }
                seen[i] = true;
            }
        }
        Ok(ConvexFunction::Separable { dim, blocks })
    }

    /// The same one-dimensional function applied to every coordinate.
    pub fn componentwise(f: ConvexFunction, dim: usize) -> Result<Self> {
        check_dim(1, f.dim())?;
        Self::separable((0..dim).map(|i| (vec![i], f.clone())).collect())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Quadratic(q) => q.dim(),
            ConvexFunction::HalfSquaredNorm { dim } | ConvexFunction::Separable { dim, .. } => *dim,
            ConvexFunction::MaxAffine(m) | ConvexFunction::PolyhedralConjugate(m) => m.dim(),
            ConvexFunction::Grid(g) => g.dim(),
            ConvexFunction::Chain(c) => c.dim(),
            ConvexFunction::Translated { space, .. } => space.dim(),
            ConvexFunction::Composed { map, .. } => map.dim(),
            ConvexFunction::Sum(parts) => parts[0].dim(),
            ConvexFunction::PartialEpisum(e) => 2 * e.n(),
        }
    }

    pub fn eval(&self, b: &[f64]) -> Result<f64> {
        check_dim(self.dim(), b.len())?;
        self.value(b)
    }

    pub(crate) fn value(&self, b: &[f64]) -> Result<f64> {
        Ok(match self {
            ConvexFunction::Quadratic(q) => q.eval(b),
            ConvexFunction::HalfSquaredNorm { .. } => 0.5 * b.iter().map(|v| v * v).sum::<f64>(),
            ConvexFunction::MaxAffine(m) => m.eval(b),
            ConvexFunction::PolyhedralConjugate(m) => m.conjugate_at(b)?,
            ConvexFunction::Grid(g) => g.eval(b),
            ConvexFunction::Chain(c) => c.eval(b),
            ConvexFunction::Translated { space, base, shift } => {
                let v = base.value(&add(b, shift))?;
                v - space.pair_raw(b, shift) - space.q_raw(shift)
            }
            ConvexFunction::Composed { base, map } => base.value(&map.apply(b))?,
            ConvexFunction::Sum(parts) => {
                let mut acc = 0.0;
                for p in parts {
                    acc += p.value(b)?;
                }
                acc
            }
            ConvexFunction::Separable { blocks, .. } => {
                let mut acc = 0.0;
                for (coords, f) in blocks {
                    acc += f.value(&gather(b, coords))?;
                }
                acc
            }
            ConvexFunction::PartialEpisum(e) => e.eval_with_split(b)?.0,
        })
    }

    /// One subgradient at a point where the function is finite.
    pub fn subgradient(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), b.len())?;
        self.subgrad(b)
    }

    pub(crate) fn subgrad(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            ConvexFunction::Quadratic(q) => Ok(q.gradient(b)),
            ConvexFunction::HalfSquaredNorm { .. } => Ok(b.to_vec()),
            ConvexFunction::MaxAffine(m) => Ok(m.pieces()[m.argmax(b)].slope.clone()),
            ConvexFunction::PolyhedralConjugate(_) => {
                Err(Error::Unsupported("subgradients of polyhedral conjugates".into()))
            }
            ConvexFunction::Grid(g) => g
                .gradient(b)
                .ok_or_else(|| Error::Unsupported("subgradient outside the grid box".into())),
            ConvexFunction::Chain(c) => Ok(c.subgradient(b)),
            ConvexFunction::Translated { space, base, shift } => {
                let s = base.subgrad(&add(b, shift))?;
                let ic = space.iota_raw(shift);
                Ok(s.iter().zip(&ic).map(|(a, c)| a - c).collect())
            }
            ConvexFunction::Composed { base, map } => Ok(map.apply_transpose(&base.subgrad(&map.apply(b))?)),
            ConvexFunction::Sum(parts) => {
                let mut acc = vec![0.0; b.len()];
                for p in parts {
                    for (a, v) in acc.iter_mut().zip(p.subgrad(b)?) {
                        *a += v;
                    }
                }
                Ok(acc)
            }
            ConvexFunction::Separable { dim, blocks } => {
                let mut out = vec![0.0; *dim];
                for (coords, f) in blocks {
                    for (&i, v) in coords.iter().zip(f.subgrad(&gather(b, coords))?) {
                        out[i] = v;
                    }
                }
                Ok(out)
            }
            ConvexFunction::PartialEpisum(e) => e.subgradient(b),
        }
    }

    /// The representation as a single quadratic, when one exists.
    pub fn as_quadratic(&self) -> Option<Quadratic> {
        match self {
            ConvexFunction::Quadratic(q) => Some(q.clone()),
            ConvexFunction::HalfSquaredNorm { dim } => Some(Quadratic::identity(*dim)),
            ConvexFunction::Composed { base, map } => Some(base.as_quadratic()?.compose(map)),
            ConvexFunction::Translated { space, base, shift } => {
                let tilt: Vec<f64> = space.iota_raw(shift).iter().map(|v| -v).collect();
                Some(base.as_quadratic()?.shift_tilt(shift, &tilt, -space.q_raw(shift)))
            }
            ConvexFunction::Sum(parts) => {
                let mut acc = parts[0].as_quadratic()?;
                for p in &parts[1..] {
                    acc = acc.add(&p.as_quadratic()?).ok()?;
                }
                Some(acc)
            }
            ConvexFunction::Separable { dim, blocks } => {
                let mut acc: Option<Quadratic> = None;
                for (coords, f) in blocks {
                    let e = f.as_quadratic()?.embed(coords, *dim);
                    acc = Some(match acc {
                        None => e,
                        Some(a) => a.add(&e).ok()?,
                    });
                }
                acc
            }
            _ => None,
        }
    }

    /// `b ↦ self(map(b))`, simplified where the variant allows.
    pub fn compose(&self, map: &SignedPermutation) -> Result<ConvexFunction> {
        check_dim(self.dim(), map.dim())?;
        if map.is_identity() {
            return Ok(self.clone());
        }
        Ok(match self {
            ConvexFunction::Quadratic(q) => ConvexFunction::Quadratic(q.compose(map)),
            ConvexFunction::HalfSquaredNorm { .. } => self.clone(),
            ConvexFunction::MaxAffine(m) => ConvexFunction::MaxAffine(m.map_slopes(|s| map.apply_transpose(s))),
            ConvexFunction::Composed { base, map: inner } => {
                let combined = inner.compose(map);
                if combined.is_identity() {
                    (**base).clone()
                } else {
                    ConvexFunction::Composed { base: base.clone(), map: combined }
                }
            }
            _ => ConvexFunction::Composed { base: Box::new(self.clone()), map: map.clone() },
        })
    }

    /// Fenchel conjugate `f*(y) = sup_x [⟨x, y⟩ − f(x)]`.
    pub fn conjugate(&self) -> Result<ConvexFunction> {
        match self {
            // An affine function is a one-piece max-affine function.
            ConvexFunction::Quadratic(q) if q.matrix().iter().all(|v| *v == 0.0) => {
                let piece = AffinePiece { slope: q.linear().iter().copied().collect(), offset: q.constant() };
                Ok(ConvexFunction::PolyhedralConjugate(MaxAffine::new(vec![piece])?))
            }
            ConvexFunction::Quadratic(q) => Ok(ConvexFunction::Quadratic(q.conjugate()?)),
            ConvexFunction::HalfSquaredNorm { .. } => Ok(self.clone()),
            ConvexFunction::MaxAffine(m) => Ok(ConvexFunction::PolyhedralConjugate(m.clone())),
            ConvexFunction::PolyhedralConjugate(m) => Ok(ConvexFunction::MaxAffine(m.clone())),
            ConvexFunction::Grid(g) => Ok(ConvexFunction::Grid(g.conjugate()?)),
            ConvexFunction::Chain(_) => Err(Error::NotRepresentable(
                "conjugate of a chain Fitzpatrick function; use a max-affine sampling".into(),
            )),
            // f* = f^@ ∘ ι because ι is an involution on every supported space.
            ConvexFunction::Translated { space, .. } => {
                intrinsic_conjugate(space, self)?.compose(&space.iota_map())
            }
            ConvexFunction::PartialEpisum(e) => {
                let space = SsdSpace::product(e.n());
                intrinsic_conjugate(&space, self)?.compose(&space.iota_map())
            }
            ConvexFunction::Composed { base, map } => base.conjugate()?.compose(map),
            ConvexFunction::Sum(_) => match self.as_quadratic() {
                Some(q) => Ok(ConvexFunction::Quadratic(q.conjugate()?)),
                None => Err(Error::NotRepresentable("conjugate of a non-quadratic sum".into())),
            },
            ConvexFunction::Separable { blocks, .. } => {
                let blocks = blocks
                    .iter()
                    .map(|(c, f)| Ok((c.clone(), f.conjugate()?)))
                    .collect::<Result<Vec<_>>>()?;
                ConvexFunction::separable(blocks)
            }
        }
    }
}

fn gather(b: &[f64], coords: &[usize]) -> Vec<f64> {
    coords.iter().map(|&i| b[i]).collect()
}

/// `f^@(c) = sup_b [⌊b, c⌋ − f(b)] = f*(ι c)`.
pub fn intrinsic_conjugate(space: &SsdSpace, f: &ConvexFunction) -> Result<ConvexFunction> {
    check_dim(space.dim(), f.dim())?;
    match f {
        ConvexFunction::HalfSquaredNorm { .. } => Ok(f.clone()),
        ConvexFunction::Translated { space: s, base, shift } if s == space => Ok(ConvexFunction::Translated {
            space: *space,
            base: Box::new(intrinsic_conjugate(space, base)?),
            shift: shift.clone(),
        }),
        ConvexFunction::PartialEpisum(e) if *space == SsdSpace::product(e.n()) => {
            Ok(ConvexFunction::PartialEpisum(Box::new(e.intrinsic_conjugate()?)))
        }
        _ => f.conjugate()?.compose(&space.iota_map()),
    }
}

/// `f_c = f(· + c) − ⌊·, c⌋ − q(c)`.
pub fn translate(space: &SsdSpace, f: &ConvexFunction, c: &[f64]) -> Result<ConvexFunction> {
    check_dim(space.dim(), f.dim())?;
    space.check(c)?;
    if c.iter().all(|v| *v == 0.0) {
        return Ok(f.clone());
    }
    Ok(ConvexFunction::Translated { space: *space, base: Box::new(f.clone()), shift: SsdPoint::from(c) })
}

/// `g∘ρ2` for `sign = 1`, `g∘(−ρ2)` for `sign = −1`, on a product space.
pub fn compose_reflection(space: &SsdSpace, g: &ConvexFunction, sign: i32) -> Result<ConvexFunction> {
    let rho = space.reflect2_map()?;
    let map = match sign {
        1 => rho,
        -1 => rho.negated(),
        _ => return Err(Error::InvalidInput(format!("reflection sign must be ±1, got {sign}"))),
    };
    g.compose(&map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn spec_evaluations() {
        assert_eq!(ConvexFunction::g0(2).eval(&[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(ConvexFunction::abs().eval(&[-2.0]).unwrap(), 2.0);
        let id = ConvexFunction::Quadratic(Quadratic::identity(3));
        assert!(close(id.eval(&[1.0, 2.0, 2.0]).unwrap(), 4.5, 1e-15));
        assert!(id.eval(&[1.0]).is_err());
    }

    #[test]
    fn intrinsic_conjugate_of_product_half_norm() {
        let space = SsdSpace::product(1);
        let f = ConvexFunction::Quadratic(Quadratic::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 0.0], 0.0).unwrap());
        let fa = intrinsic_conjugate(&space, &f).unwrap();
        for b in [[1.0, 2.0], [-0.5, 3.0]] {
            assert!(close(fa.eval(&b).unwrap(), f.eval(&b).unwrap(), 1e-14));
        }
    }

    #[test]
    fn translated_intrinsic_conjugate_identity() {
        // (f_c)^@(b) = f^@(b + c) − ⌊c, b⌋ − q(c)
        let space = SsdSpace::product(1);
        let f = ConvexFunction::Quadratic(
            Quadratic::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.0, 0.0], 0.0).unwrap(),
        );
        let f = ConvexFunction::sum(vec![f, ConvexFunction::g0(2)]).unwrap();
        let c = [0.7, -1.2];
        let fc = translate(&space, &f, &c).unwrap();
        let lhs = intrinsic_conjugate(&space, &fc).unwrap();
        let fa = intrinsic_conjugate(&space, &f).unwrap();
        for b in [[0.1, 0.2], [2.0, -1.0]] {
            let bc = [b[0] + c[0], b[1] + c[1]];
            let rhs = fa.eval(&bc).unwrap() - space.pair(&c, &b).unwrap() - space.qform(&c).unwrap();
            assert!(close(lhs.eval(&b).unwrap(), rhs, 1e-12));
        }
    }

    #[test]
    fn compose_simplifies_involutions() {
        let space = SsdSpace::product(2);
        let g = ConvexFunction::abs();
        let g = ConvexFunction::componentwise(g, 4).unwrap();
        let r = compose_reflection(&space, &g, 1).unwrap();
        let back = r.compose(&space.reflect2_map().unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(compose_reflection(&SsdSpace::hilbert(2), &ConvexFunction::g0(2), 1).is_err());
    }

    #[test]
    fn max_affine_conjugate_round_trip() {
        let f = ConvexFunction::abs();
        let fs = f.conjugate().unwrap();
        assert_eq!(fs.eval(&[0.5]).unwrap(), 0.0);
        assert_eq!(fs.eval(&[1.5]).unwrap(), f64::INFINITY);
        assert_eq!(fs.conjugate().unwrap(), f);
    }

    #[test]
    fn translated_quadratic_collapses() {
        let space = SsdSpace::triple();
        let f = ConvexFunction::g0(3);
        let c = [1.0, -2.0, 0.5];
        let fc = translate(&space, &f, &c).unwrap();
        let q = fc.as_quadratic().unwrap();
        for b in [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]] {
            assert!(close(q.eval(&b), fc.eval(&b).unwrap(), 1e-12));
        }
    }
}
