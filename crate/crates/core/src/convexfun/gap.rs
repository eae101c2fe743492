//! Accurate evaluation of `f − q` and `g + q`.
//!
//! Near `P_q(f)` the difference `f(b) − q(b)` is a small number obtained from
//! two large ones. When `f` is quadratic the form `Q − Π` is assembled once so
//! the difference is evaluated without cancellation; translations and
//! q-preserving (or q-reversing) compositions are pushed through exactly.

use nalgebra::DMatrix;

use super::{ConvexFunction, Quadratic, SegmentChain};
use crate::error::Result;
use crate::space::{add, SignedPermutation, SsdSpace};

#[derive(Clone, Debug)]
pub(crate) enum Excess {
    Quad(Quadratic),
    Shift { inner: Box<Excess>, shift: Vec<f64> },
    Mapped { inner: Box<Excess>, map: SignedPermutation },
    /// `Φ_A − q` for a chain `A`, by Eq. (3).
    Chain(SegmentChain),
    Generic { f: ConvexFunction, space: SsdSpace, sign: f64 },
}

/// `Some(ε)` when `q∘P = ε q`.
fn q_scaling(space: &SsdSpace, map: &SignedPermutation) -> Option<f64> {
    let pi = space.pairing_matrix();
    let m = map.to_matrix();
    let pulled: DMatrix<f64> = m.transpose() * &pi * &m;
    if pulled == pi {
        Some(1.0)
    } else if pulled == -pi {
        Some(-1.0)
    } else {
        None
    }
}

impl Excess {
    /// Represents `f − sign·q`.
    pub(crate) fn new(space: &SsdSpace, f: &ConvexFunction, sign: f64) -> Excess {
        if let Some(q) = f.as_quadratic() {
            return Excess::Quad(q.add_form(&space.pairing_matrix(), -sign));
        }
        match f {
            ConvexFunction::Chain(chain) if chain.space() == *space && sign == 1.0 => Excess::Chain(chain.clone()),
            // f_c − q = (f − q)(· + c)
            ConvexFunction::Translated { space: s, base, shift } if s == space && sign == 1.0 => Excess::Shift {
                inner: Box::new(Excess::new(space, base, sign)),
                shift: shift.to_vec(),
            },
            ConvexFunction::Composed { base, map } => match q_scaling(space, map) {
                Some(eps) => Excess::Mapped { inner: Box::new(Excess::new(space, base, sign * eps)), map: map.clone() },
                None => Excess::Generic { f: f.clone(), space: *space, sign },
            },
            _ => Excess::Generic { f: f.clone(), space: *space, sign },
        }
    }

    pub(crate) fn value(&self, b: &[f64]) -> Result<f64> {
        match self {
            Excess::Quad(q) => Ok(q.eval(b)),
            Excess::Shift { inner, shift } => inner.value(&add(b, shift)),
            Excess::Mapped { inner, map } => inner.value(&map.apply(b)),
            Excess::Chain(chain) => Ok(chain.excess_with_offset(b).0),
            Excess::Generic { f, space, sign } => {
                let v = f.value(b)?;
                Ok(if v.is_finite() { v - sign * space.q_raw(b) } else { v })
            }
        }
    }

    /// The Hessian at `b` when the excess is quadratic on a neighbourhood
    /// piece (everywhere for `Quad`, piecewise for `Chain`).
    pub(crate) fn hessian_at(&self, b: &[f64]) -> Option<DMatrix<f64>> {
        match self {
            Excess::Quad(q) => Some(q.matrix().clone()),
            Excess::Shift { inner, shift } => inner.hessian_at(&add(b, shift)),
            Excess::Mapped { inner, map } => {
                let m = map.to_matrix();
                Some(m.transpose() * inner.hessian_at(&map.apply(b))? * m)
            }
            Excess::Chain(chain) => Some(chain.excess_hessian(b)),
            Excess::Generic { .. } => None,
        }
    }

    pub(crate) fn gradient(&self, b: &[f64]) -> Result<Vec<f64>> {
        match self {
            Excess::Quad(q) => Ok(q.gradient(b)),
            Excess::Shift { inner, shift } => inner.gradient(&add(b, shift)),
            Excess::Mapped { inner, map } => Ok(map.apply_transpose(&inner.gradient(&map.apply(b))?)),
            Excess::Chain(chain) => Ok(chain.space().iota_raw(&chain.excess_with_offset(b).1)),
            Excess::Generic { f, space, sign } => {
                let s = f.subgrad(b)?;
                let ib = space.iota_raw(b);
                Ok(s.iter().zip(&ib).map(|(a, c)| a - sign * c).collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gap_has_no_cancellation() {
        let space = SsdSpace::product(1);
        let phi = ConvexFunction::Quadratic(
            Quadratic::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]], &[0.0, 0.0], 0.0).unwrap(),
        );
        let e = Excess::new(&space, &phi, 1.0);
        // (x + x*)²/4 − x x* = (x − x*)²/4
        let b = [1e8, 1e8 + 1.0];
        assert!((e.value(&b).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn reflected_gap_flips_sign() {
        let space = SsdSpace::product(1);
        let g = ConvexFunction::abs();
        let g = ConvexFunction::componentwise(g, 2).unwrap();
        let gr = g.compose(&space.reflect2_map().unwrap()).unwrap();
        let e = Excess::new(&space, &gr, -1.0);
        for b in [[1.0, 2.0], [-0.3, 0.7]] {
            let direct = gr.eval(&b).unwrap() + space.qform(&b).unwrap();
            assert!((e.value(&b).unwrap() - direct).abs() < 1e-14);
        }
    }
}
