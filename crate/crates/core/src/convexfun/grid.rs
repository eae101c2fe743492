use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::legendre::legendre_1d;
use crate::sampling::linspace;

/// `n` equally spaced nodes on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo || n < 2 {
            return Err(Error::InvalidInput(format!("bad grid axis [{lo}, {hi}] with {n} nodes")));
        }
        Ok(GridAxis { lo, hi, n })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }

    /// Cell index and local coordinate in `[0, 1]`, or `None` outside the axis.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let slack = 1e-12 * (self.hi - self.lo);
        if !(x >= self.lo - slack && x <= self.hi + slack) {
            return None;
        }
        let t = ((x - self.lo) / self.step()).clamp(0.0, (self.n - 1) as f64);
        let i = (t.floor() as usize).min(self.n - 2);
        Some((i, t - i as f64))
    }
}

/// Multilinear interpolant of samples on a tensor grid, `+∞` outside the box.
///
/// Values are stored row-major: the last axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    axes: Vec<GridAxis>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(axes: Vec<GridAxis>, values: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one axis".into()));
        }
        for a in &axes {
            GridAxis::new(a.lo, a.hi, a.n)?;
        }
        check_dim(axes.iter().map(|a| a.n).product(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(GridFunction { axes, values })
    }

    /// Samples `f` at every node.
    pub fn sample(axes: Vec<GridAxis>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let nodes: Vec<Vec<f64>> = axes.iter().map(|a| a.nodes()).collect();
        let total: usize = axes.iter().map(|a| a.n).product();
        let mut values = Vec::with_capacity(total);
        let mut point = vec![0.0; axes.len()];
        for flat in 0..total {
            let mut rem = flat;
            for k in (0..axes.len()).rev() {
                point[k] = nodes[k][rem % axes[k].n];
                rem /= axes[k].n;
            }
            values.push(f(&point));
        }
        Self::new(axes, values)
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for k in (0..self.dim().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.axes[k + 1].n;
        }
        s
    }

    fn cell(&self, b: &[f64]) -> Option<Vec<(usize, f64)>> {
        self.axes.iter().zip(b).map(|(a, &x)| a.locate(x)).collect()
    }

    pub fn eval(&self, b: &[f64]) -> f64 {
        let Some(cell) = self.cell(b) else {
            return f64::INFINITY;
        };
        let strides = self.strides();
        let d = self.dim();
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut idx = 0;
            for k in 0..d {
                let (i, t) = cell[k];
                let up = corner >> k & 1 == 1;
                w *= if up { t } else { 1.0 - t };
                idx += (i + up as usize) * strides[k];
            }
            if w != 0.0 {
                acc += w * self.values[idx];
            }
        }
        acc
    }

    /// Gradient of the interpolant (one-sided at cell faces); `None` outside the box.
    pub fn gradient(&self, b: &[f64]) -> Option<Vec<f64>> {
        let cell = self.cell(b)?;
        let strides = self.strides();
        let d = self.dim();
        let mut g = vec![0.0; d];
        for corner in 0..(1usize << d) {
            let mut idx = 0;
            for k in 0..d {
                idx += (cell[k].0 + (corner >> k & 1)) * strides[k];
            }
            let v = self.values[idx];
            for (j, gj) in g.iter_mut().enumerate() {
                let mut w = 1.0;
                for k in 0..d {
                    let up = corner >> k & 1 == 1;
                    let t = cell[k].1;
                    w *= if k == j {
                        if up {
                            1.0 / self.axes[k].step()
                        } else {
                            -1.0 / self.axes[k].step()
                        }
                    } else if up {
                        t
                    } else {
                        1.0 - t
                    };
                }
                *gj += w * v;
            }
        }
        Some(g)
    }

    /// Default dual box: per axis, the range of finite-difference slopes.
    pub fn default_dual_axes(&self) -> Vec<GridAxis> {
        let strides = self.strides();
        (0..self.dim())
            .map(|k| {
                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                let h = self.axes[k].step();
                for flat in 0..self.values.len() {
                    let i = flat / strides[k] % self.axes[k].n;
                    if i + 1 < self.axes[k].n {
                        let s = (self.values[flat + strides[k]] - self.values[flat]) / h;
                        lo = lo.min(s);
                        hi = hi.max(s);
                    }
                }
                if hi - lo < 1e-9 {
                    lo -= 1.0;
                    hi += 1.0;
                }
                GridAxis { lo, hi, n: self.axes[k].n }
            })
            .collect()
    }

    /// Discrete Legendre transform onto `dual`, one axis at a time.
    pub fn conjugate_on(&self, dual: &[GridAxis]) -> Result<GridFunction> {
        check_dim(self.dim(), dual.len())?;
        let mut shape: Vec<usize> = self.axes.iter().map(|a| a.n).collect();
        // V_0 = −f; V_k replaces axis k by its dual via V_k = max_x [x y − (−V_{k−1})].
        let mut data: Vec<f64> = self.values.iter().map(|v| -v).collect();
        for k in 0..self.dim() {
            let xs = self.axes[k].nodes();
            let ys = dual[k].nodes();
            let outer: usize = shape[..k].iter().product();
            let inner: usize = shape[k + 1..].iter().product();
            let (n_in, n_out) = (shape[k], dual[k].n);
            let mut next = vec![0.0; outer * n_out * inner];
            let mut fiber = vec![0.0; n_in];
            for o in 0..outer {
                for i in 0..inner {
                    for (j, f) in fiber.iter_mut().enumerate() {
                        *f = -data[(o * n_in + j) * inner + i];
                    }
                    for (j, v) in legendre_1d(&xs, &fiber, &ys).into_iter().enumerate() {
                        next[(o * n_out + j) * inner + i] = v;
                    }
                }
            }
            data = next;
            shape[k] = n_out;
        }
        GridFunction::new(dual.to_vec(), data)
    }

    pub fn conjugate(&self) -> Result<GridFunction> {
        self.conjugate_on(&self.default_dual_axes())
    }
}
