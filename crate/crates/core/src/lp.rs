//! Dense two-phase simplex for small linear programs in standard form
//!
//! `min cᵀx  s.t.  Ax = b, x ≥ 0`
//!
//! Bland's rule is used for both the entering and the leaving variable, so the
//! method terminates on degenerate problems. Sizes here are desk scale: a few
//! rows and at most a few thousand columns.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Clone, Debug, PartialEq)]
pub enum LpSolution {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// A standard-form linear program with dense row-major constraints.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        let f = self.obj[col];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations; columns `>= allowed` never enter.
    fn iterate(&mut self, allowed: usize, pivots: &mut usize) -> Result<bool> {
        let rhs = self.rhs_col();
        loop {
            let Some(col) = (0..allowed).find(|&j| self.obj[j] < -PIVOT_EPS) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col] > PIVOT_EPS {
                    let ratio = row[rhs] / row[col];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false);
            };
            self.pivot(r, col);
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Err(Error::Lp("pivot limit exceeded".into()));
            }
        }
    }
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if rows.len() != rhs.len() {
            return Err(Error::Lp(format!("{} rows but {} right-hand sides", rows.len(), rhs.len())));
        }
        if rows.iter().any(|r| r.len() != cost.len()) {
            return Err(Error::Lp("row length differs from number of variables".into()));
        }
        Ok(LinearProgram { cost, rows, rhs })
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.cost.len();
        let m = self.rows.len();
        let width = n + m + 1;
        let mut rows = Vec::with_capacity(m);
        for (i, (row, &b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let mut t = vec![0.0; width];
            for (j, v) in row.iter().enumerate() {
                t[j] = sign * v;
            }
            t[n + i] = 1.0;
            t[width - 1] = sign * b;
            rows.push(t);
        }
        let mut obj = vec![0.0; width];
        for row in &rows {
            for j in 0..n {
                obj[j] -= row[j];
            }
            obj[width - 1] -= row[width - 1];
        }
        let mut tab = Tableau { rows, obj, basis: (n..n + m).collect(), width };
        let mut pivots = 0;

        tab.iterate(n + m, &mut pivots)?;
        let infeasibility = -tab.obj[width - 1];
        if infeasibility > FEASIBILITY_TOL * (1.0 + self.rhs.iter().map(|v| v.abs()).sum::<f64>()) {
            return Ok(LpSolution::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= n {
                if let Some(col) = (0..n).find(|&j| tab.rows[r][j].abs() > 1e-9) {
                    tab.pivot(r, col);
                }
            }
        }

        let mut obj = vec![0.0; width];
        obj[..n].copy_from_slice(&self.cost);
        for (r, &bv) in tab.basis.iter().enumerate() {
            let cb = if bv < n { self.cost[bv] } else { 0.0 };
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(&tab.rows[r]) {
                    *o -= cb * v;
                }
            }
        }
        // Basic columns must have zero reduced cost.
        for &bv in &tab.basis {
            obj[bv] = 0.0;
        }
        tab.obj = obj;
        if !tab.iterate(n, &mut pivots)? {
            return Ok(LpSolution::Unbounded);
        }
        let mut x = vec![0.0; n];
        for (r, &bv) in tab.basis.iter().enumerate() {
            if bv < n {
                x[bv] = tab.rows[r][width - 1].max(0.0);
            }
        }
        let value = self.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution::Optimal { x, value })
    }
}

/// Whether `target` lies in the closed convex cone generated by `generators`.
pub fn in_conic_hull(generators: &[Vec<f64>], target: &[f64]) -> Result<bool> {
    let dim = target.len();
    let rows = (0..dim).map(|i| generators.iter().map(|g| g[i]).collect()).collect();
    let lp = LinearProgram::new(vec![0.0; generators.len()], rows, target.to_vec())?;
    Ok(!matches!(lp.solve()?, LpSolution::Infeasible))
}

/// Whether the generators positively span `R^dim`, i.e. their conic hull is
/// the whole space. Checked by testing `±e_i` for every axis.
pub fn positively_spans(generators: &[Vec<f64>], dim: usize) -> Result<bool> {
    if generators.is_empty() {
        return Ok(false);
    }
    for i in 0..dim {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            if !in_conic_hull(generators, &e)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
