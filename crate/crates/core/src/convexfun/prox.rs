use nalgebra::{DMatrix, DVector};

use super::{ConvexFunction, MaxAffine};
use crate::error::{check_dim, Error, Result};
use crate::space::norm2;

const BISECTION_ITERS: usize = 200;
const FALLBACK_ITERS: usize = 100_000;
const FALLBACK_GRAD_TOL: f64 = 1e-8;

/// `prox_{λf}(v) = argmin_u [f(u) + ‖u − v‖²/(2λ)]`.
///
/// Closed forms cover quadratics, `g0`, one-dimensional max-affine functions
/// and separable or permuted combinations of those. Other one-dimensional
/// functions are handled by bisection on the subgradient of the strongly
/// convex objective; the n-dimensional fallback is a diminishing-step
/// subgradient method.
pub fn prox(f: &ConvexFunction, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_dim(f.dim(), v.len())?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("prox step must be positive, got {lambda}")));
    }
    if let Some(q) = f.as_quadratic() {
        let n = v.len();
        let a = DMatrix::identity(n, n) + q.matrix() * lambda;
        let rhs = DVector::from_column_slice(v) - q.linear() * lambda;
        let u = a.lu().solve(&rhs).ok_or(Error::SingularQuadratic)?;
        return Ok(u.iter().copied().collect());
    }
    match f {
        ConvexFunction::Composed { base, map } => Ok(map.apply_transpose(&prox(base, &map.apply(v), lambda)?)),
        ConvexFunction::Separable { dim, blocks } => {
            let mut out = vec![0.0; *dim];
            for (coords, g) in blocks {
                let local: Vec<f64> = coords.iter().map(|&i| v[i]).collect();
                for (&i, u) in coords.iter().zip(prox(g, &local, lambda)?) {
                    out[i] = u;
                }
            }
            Ok(out)
        }
        ConvexFunction::Sum(parts) if same_blocks(parts) => {
            let ConvexFunction::Separable { dim, blocks } = &parts[0] else { unreachable!() };
            let merged = (0..blocks.len())
                .map(|k| {
                    let pieces = parts
                        .iter()
                        .map(|p| match p {
                            ConvexFunction::Separable { blocks, .. } => blocks[k].1.clone(),
                            _ => unreachable!(),
                        })
                        .collect();
                    (blocks[k].0.clone(), ConvexFunction::Sum(pieces))
                })
                .collect();
            prox(&ConvexFunction::Separable { dim: *dim, blocks: merged }, v, lambda)
        }
        ConvexFunction::MaxAffine(m) if m.dim() == 1 => Ok(vec![prox_max_affine_1d(m, v[0], lambda)]),
        _ if v.len() == 1 => Ok(vec![prox_bisection_1d(f, v[0], lambda)?]),
        _ => prox_subgradient(f, v, lambda),
    }
}

fn same_blocks(parts: &[ConvexFunction]) -> bool {
    let coords = |p: &ConvexFunction| match p {
        ConvexFunction::Separable { blocks, .. } => Some(blocks.iter().map(|b| b.0.clone()).collect::<Vec<_>>()),
        _ => None,
    };
    match coords(&parts[0]) {
        Some(c) => parts[1..].iter().all(|p| coords(p).as_ref() == Some(&c)),
        None => false,
    }
}

/// Exact prox of a one-dimensional max-affine function via its upper envelope.
fn prox_max_affine_1d(m: &MaxAffine, v: f64, lambda: f64) -> f64 {
    let mut lines: Vec<(f64, f64)> = m.pieces().iter().map(|p| (p.slope[0], p.offset)).collect();
    lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    lines.dedup_by(|b, a| a.0 == b.0);
    let cross = |a: (f64, f64), b: (f64, f64)| (a.1 - b.1) / (b.0 - a.0);
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for l in lines {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if cross(a, l) <= cross(a, b) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(l);
    }
    for j in 0..hull.len() {
        let left = if j == 0 { f64::NEG_INFINITY } else { cross(hull[j - 1], hull[j]) };
        let right = if j + 1 == hull.len() { f64::INFINITY } else { cross(hull[j], hull[j + 1]) };
        let u = v - lambda * hull[j].0;
        if u >= left && u <= right {
            return u;
        }
        if j > 0 && v - lambda * hull[j].0 <= left && left <= v - lambda * hull[j - 1].0 {
            return left;
        }
    }
    // Unreachable for a nonempty envelope; the last piece covers +∞.
    v - lambda * hull[hull.len() - 1].0
}

fn prox_bisection_1d(f: &ConvexFunction, v: f64, lambda: f64) -> Result<f64> {
    let dpsi = |u: f64| -> Result<f64> { Ok(f.subgrad(&[u])?[0] + (u - v) / lambda) };
    let (mut a, mut b) = if f.value(&[v])?.is_finite() {
        let s = f.subgrad(&[v])?[0];
        if s == 0.0 {
            return Ok(v);
        }
        let far = v - lambda * s;
        if s > 0.0 {
            (far, v)
        } else {
            (v, far)
        }
    } else if let ConvexFunction::Grid(g) = f {
        (g.axes()[0].lo, g.axes()[0].hi)
    } else {
        return Err(Error::Unsupported("prox at a point outside the domain".into()));
    };
    if dpsi(a)? > 0.0 {
        return Ok(a);
    }
    if dpsi(b)? < 0.0 {
        return Ok(b);
    }
    for _ in 0..BISECTION_ITERS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if dpsi(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn prox_subgradient(f: &ConvexFunction, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let objective = |u: &[f64]| -> Result<f64> {
        let d: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(f.value(u)? + d / (2.0 * lambda))
    };
    let mut u = v.to_vec();
    let mut best = (objective(&u)?, u.clone());
    if !best.0.is_finite() {
        return Err(Error::Unsupported("prox at a point outside the domain".into()));
    }
    for k in 0..FALLBACK_ITERS {
        let s = f.subgrad(&u)?;
        let g: Vec<f64> = s.iter().zip(u.iter().zip(v)).map(|(s, (a, b))| s + (a - b) / lambda).collect();
        if norm2(&g) <= FALLBACK_GRAD_TOL {
            return Ok(u);
        }
        let step = lambda / (k as f64 + 1.0);
        for (ui, gi) in u.iter_mut().zip(&g) {
            *ui -= step * gi;
        }
        let val = objective(&u)?;
        if val < best.0 {
            best = (val, u.clone());
        }
    }
    Ok(best.1)
}
