use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{intrinsic_conjugate, ConvexFunction, Excess};
use crate::error::{check_dim, Error, Result};
use crate::sampling::SampleBox;
use crate::space::{SsdPoint, SsdSpace};

pub const DEFAULT_CERT_SAMPLES: usize = 512;
pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

/// Outcome of a sampled BC (or TBC) certification.
///
/// For [`certify_tbc`] the fields carry the twisted gaps `g^@(−b) − g(b)` and
/// `g(b) + q(b)`, and `is_bc` reads as "is TBC".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcReport {
    pub is_bc: bool,
    pub worst_gap_conj: f64,
    pub worst_gap_q: f64,
    pub failing_point: Option<SsdPoint>,
}

/// `count` quasi-random points in the cube `[−radius, radius]^dim`.
pub fn default_samples(space: &SsdSpace, radius: f64, count: usize, seed: u64) -> Vec<SsdPoint> {
    SampleBox::cube(space.dim(), radius).halton_points(count, seed).into_iter().map(SsdPoint::new).collect()
}

fn gap(upper: f64, lower: f64) -> f64 {
    if upper == f64::INFINITY && lower == f64::INFINITY {
        0.0
    } else {
        upper - lower
    }
}

fn certify(
    space: &SsdSpace,
    f: &ConvexFunction,
    samples: &[SsdPoint],
    tol: f64,
    twisted: bool,
) -> Result<BcReport> {
    check_dim(space.dim(), f.dim())?;
    if samples.is_empty() {
        return Err(Error::EmptySet);
    }
    for s in samples {
        space.check(s)?;
    }
    let conj = intrinsic_conjugate(space, f)?;
    let excess = Excess::new(space, f, if twisted { -1.0 } else { 1.0 });
    let gaps = samples
        .par_iter()
        .map(|b| {
            let at = if twisted { (-b).into_vec() } else { b.to_vec() };
            let fb = f.value(b)?;
            Ok((gap(conj.value(&at)?, fb), excess.value(b)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let mut worst = (f64::INFINITY, f64::INFINITY);
    let mut failing = None;
    let mut failing_depth = f64::INFINITY;
    for (b, &(gc, gq)) in samples.iter().zip(&gaps) {
        worst.0 = worst.0.min(gc);
        worst.1 = worst.1.min(gq);
        let depth = gc.min(gq);
        if depth < -tol && depth < failing_depth {
            failing_depth = depth;
            failing = Some(b.clone());
        }
    }
    Ok(BcReport { is_bc: failing.is_none(), worst_gap_conj: worst.0, worst_gap_q: worst.1, failing_point: failing })
}

/// Checks `f^@(b) ≥ f(b) ≥ q(b)` (up to `tol`) at every sample.
///
/// A passing report certifies only the sampled points.
pub fn certify_bc(space: &SsdSpace, f: &ConvexFunction, samples: &[SsdPoint], tol: f64) -> Result<BcReport> {
    certify(space, f, samples, tol, false)
}

/// Checks `g^@(−b) ≥ g(b) ≥ −q(b)` (up to `tol`) at every sample.
pub fn certify_tbc(space: &SsdSpace, g: &ConvexFunction, samples: &[SsdPoint], tol: f64) -> Result<BcReport> {
    certify(space, g, samples, tol, true)
}

/// `|f(b) − q(b)| ≤ tol`, i.e. `b ∈ P_q(f)`.
pub fn pq_membership(space: &SsdSpace, f: &ConvexFunction, b: &[f64], tol: f64) -> Result<bool> {
    check_dim(space.dim(), f.dim())?;
    space.check(b)?;
    Ok(Excess::new(space, f, 1.0).value(b)?.abs() <= tol)
}

/// `|g(b) + q(b)| ≤ tol`, i.e. `b ∈ N_q(g)`.
pub fn nq_membership(space: &SsdSpace, g: &ConvexFunction, b: &[f64], tol: f64) -> Result<bool> {
    check_dim(space.dim(), g.dim())?;
    space.check(b)?;
    Ok(Excess::new(space, g, -1.0).value(b)?.abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convexfun::Quadratic;

    #[test]
    fn g0_is_bc_and_tbc() {
        for space in [SsdSpace::product(2), SsdSpace::triple(), SsdSpace::hilbert(3)] {
            let g0 = ConvexFunction::g0(space.dim());
            let samples = default_samples(&space, 3.0, 128, 0);
            let bc = certify_bc(&space, &g0, &samples, 1e-9).unwrap();
            let tbc = certify_tbc(&space, &g0, &samples, 1e-9).unwrap();
            assert!(bc.is_bc && tbc.is_bc, "{space}");
            assert!(bc.worst_gap_conj.abs() < 1e-12);
        }
    }

    #[test]
    fn constant_below_q_fails() {
        let space = SsdSpace::product(1);
        let f = ConvexFunction::Quadratic(Quadratic::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]], &[0.0, 0.0], -1.0).unwrap());
        let r = certify_bc(&space, &f, &[SsdPoint::from([1.0, 1.0])], 1e-9).unwrap();
        assert!(!r.is_bc);
        assert_eq!(r.failing_point, Some(SsdPoint::from([1.0, 1.0])));
        assert_eq!(r.worst_gap_q, -2.0);
    }

    #[test]
    fn memberships_of_g0() {
        let p = SsdSpace::product(1);
        let g0 = ConvexFunction::g0(2);
        assert!(pq_membership(&p, &g0, &[1.0, 1.0], 1e-12).unwrap());
        assert!(nq_membership(&p, &g0, &[1.0, -1.0], 1e-12).unwrap());
        assert!(!nq_membership(&p, &g0, &[1.0, 1.0], 1e-12).unwrap());
        let t = SsdSpace::triple();
        assert!(nq_membership(&t, &ConvexFunction::g0(3), &[1.0, -1.0, 0.0], 1e-12).unwrap());
    }
}
