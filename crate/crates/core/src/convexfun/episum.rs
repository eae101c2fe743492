use nalgebra::{Cholesky, DVector};

use super::{intrinsic_conjugate, ConvexFunction};
use crate::error::{check_dim, Error, Result};
use crate::space::SsdSpace;

const GOLDEN_ITERS: usize = 120;
const SWEEPS: usize = 60;

/// `h(x, x*) = inf { f(x, s*) + g(x, t*) : s* + t* = x* }` on `product(n)`.
///
/// The inner minimum is solved in closed form when both summands are
/// quadratic. Otherwise each coordinate of `s*` is scanned on `resolution`
/// points over `[center − radius, center + radius]` (with `center = x*/2`) and
/// refined by golden-section search; cyclic sweeps handle `n > 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialEpisum {
    n: usize,
    f: ConvexFunction,
    g: ConvexFunction,
    resolution: usize,
    radius: f64,
}

/// Builds the partial episum of two functions on `product(n)`.
pub fn partial_episum(
    space: &SsdSpace,
    f: &ConvexFunction,
    g: &ConvexFunction,
    resolution: usize,
    radius: f64,
) -> Result<ConvexFunction> {
    let SsdSpace::Product { n } = *space else {
        return Err(Error::WrongSpaceKind { expected: "product", found: space.to_string() });
    };
    Ok(ConvexFunction::PartialEpisum(Box::new(PartialEpisum::new(n, f.clone(), g.clone(), resolution, radius)?)))
}

impl PartialEpisum {
    pub fn new(n: usize, f: ConvexFunction, g: ConvexFunction, resolution: usize, radius: f64) -> Result<Self> {
        check_dim(2 * n, f.dim())?;
        check_dim(2 * n, g.dim())?;
        if resolution < 3 || !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput("episum needs resolution >= 3 and a positive radius".into()));
        }
        Ok(PartialEpisum { n, f, g, resolution, radius })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `h^@ = min over splits of f^@ + g^@`.
    pub(crate) fn intrinsic_conjugate(&self) -> Result<PartialEpisum> {
        let space = SsdSpace::product(self.n);
        Ok(PartialEpisum {
            n: self.n,
            f: intrinsic_conjugate(&space, &self.f)?,
            g: intrinsic_conjugate(&space, &self.g)?,
            resolution: self.resolution,
            radius: self.radius,
        })
    }

    fn split_value(&self, x: &[f64], xs: &[f64], s: &[f64]) -> Result<f64> {
        let mut a = x.to_vec();
        a.extend_from_slice(s);
        let fa = self.f.value(&a)?;
        if fa == f64::INFINITY {
            return Ok(fa);
        }
        let mut c = x.to_vec();
        c.extend(xs.iter().zip(s).map(|(t, u)| t - u));
        Ok(fa + self.g.value(&c)?)
    }

    fn closed_form_split(&self, x: &[f64], xs: &[f64]) -> Option<Vec<f64>> {
        let (qf, qg) = (self.f.as_quadratic()?, self.g.as_quadratic()?);
        let n = self.n;
        let h = qf.matrix().view((n, n), (n, n)) + qg.matrix().view((n, n), (n, n));
        let chol = Cholesky::new(h.into_owned())?;
        // φ(s) = f(x, s) + g(x, x* − s); φ'(0) = ∇₂f(x, 0) − ∇₂g(x, x*).
        let mut a = x.to_vec();
        a.extend(std::iter::repeat_n(0.0, n));
        let mut c = x.to_vec();
        c.extend_from_slice(xs);
        let gf = qf.gradient(&a);
        let gg = qg.gradient(&c);
        let d0 = DVector::from_iterator(n, (0..n).map(|i| gf[n + i] - gg[n + i]));
        Some((-chol.solve(&d0)).iter().copied().collect())
    }

    fn minimize_coordinate(&self, x: &[f64], xs: &[f64], s: &mut [f64], k: usize, center: f64) -> Result<f64> {
        let (lo, hi) = (center - self.radius, center + self.radius);
        let m = self.resolution;
        let step = (hi - lo) / (m - 1) as f64;
        let eval = |t: f64, s: &mut [f64]| -> Result<f64> {
            s[k] = t;
            self.split_value(x, xs, s)
        };
        let mut best = (0, f64::INFINITY);
        let mut vals = Vec::with_capacity(m);
        for i in 0..m {
            let v = eval(lo + step * i as f64, s)?;
            vals.push(v);
            if v < best.1 {
                best = (i, v);
            }
        }
        if best.1 == f64::INFINITY {
            s[k] = center;
            return Ok(f64::INFINITY);
        }
        let i = best.0;
        if (i == 0 || i == m - 1) && vals.iter().filter(|v| v.is_finite()).count() > 1 {
            let inner = if i == 0 { vals[1] } else { vals[m - 2] };
            if inner > best.1 {
                return Err(Error::InnerDivergence(format!(
                    "inner minimum on the boundary of [{lo}, {hi}]; enlarge the radius"
                )));
            }
        }
        let (mut a, mut b) = (lo + step * i.saturating_sub(1) as f64, lo + step * (i + 1).min(m - 1) as f64);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - r * (b - a);
        let mut d = a + r * (b - a);
        let (mut fc, mut fd) = (eval(c, s)?, eval(d, s)?);
        for _ in 0..GOLDEN_ITERS {
            if fc <= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = eval(c, s)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = eval(d, s)?;
            }
            if b - a <= 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        let (t, v) = if fc <= fd { (c, fc) } else { (d, fd) };
        let (t, v) = if best.1 < v { (lo + step * i as f64, best.1) } else { (t, v) };
        s[k] = t;
        Ok(v)
    }

    /// Value of `h` together with the minimizing `s*`.
    pub fn eval_with_split(&self, b: &[f64]) -> Result<(f64, Vec<f64>)> {
        check_dim(2 * self.n, b.len())?;
        let (x, xs) = b.split_at(self.n);
        if let Some(s) = self.closed_form_split(x, xs) {
            return Ok((self.split_value(x, xs, &s)?, s));
        }
        let mut s: Vec<f64> = xs.iter().map(|v| 0.5 * v).collect();
        let mut value = self.split_value(x, xs, &s)?;
        for _ in 0..SWEEPS {
            let before = value;
            for k in 0..self.n {
                let center = if value.is_finite() { s[k] } else { 0.5 * xs[k] };
                value = self.minimize_coordinate(x, xs, &mut s, k, center)?;
            }
            if self.n == 1 || (before - value).abs() <= 1e-15 * (1.0 + value.abs()) {
                break;
            }
        }
        Ok((value, s))
    }

    pub(crate) fn subgradient(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (_, s) = self.eval_with_split(b)?;
        let n = self.n;
        let (x, xs) = b.split_at(n);
        let mut a = x.to_vec();
        a.extend_from_slice(&s);
        let mut c = x.to_vec();
        c.extend(xs.iter().zip(&s).map(|(t, u)| t - u));
        let (sf, sg) = (self.f.subgrad(&a)?, self.g.subgrad(&c)?);
        let mut out: Vec<f64> = (0..n).map(|i| sf[i] + sg[i]).collect();
        out.extend((0..n).map(|i| 0.5 * (sf[n + i] + sg[n + i])));
        Ok(out)
    }
}
