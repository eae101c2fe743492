//! Deterministic sample generators: Halton sequences and uniform grids.

use serde::{Deserialize, Serialize};

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// A scrambled-by-offset Halton sequence in `[0, 1)^dim`.
///
/// `seed` shifts the starting index so different seeds give disjoint prefixes.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    index: u64,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
        Halton { dim, index: 1 + seed.wrapping_mul(7919) % 1_000_003 }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let i = self.index;
        self.index += 1;
        (0..self.dim).map(|k| radical_inverse(i, PRIMES[k])).collect()
    }
}

/// An axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SampleBox {
    pub fn cube(dim: usize, radius: f64) -> Self {
        SampleBox { lo: vec![-radius; dim], hi: vec![radius; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// `count` quasi-random points in the box.
    pub fn halton_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut h = Halton::new(self.dim(), seed);
        (0..count)
            .map(|_| {
                h.next_point()
                    .iter()
                    .zip(self.lo.iter().zip(&self.hi))
                    .map(|(u, (lo, hi))| lo + u * (hi - lo))
                    .collect()
            })
            .collect()
    }
}

/// `count` quasi-random points in the Euclidean ball of the given radius.
pub fn halton_ball(dim: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let cube = SampleBox::cube(dim, radius);
    let mut out = Vec::with_capacity(count);
    let mut h = Halton::new(dim, seed);
    while out.len() < count {
        let u = h.next_point();
        let p: Vec<f64> = u.iter().zip(&cube.lo).map(|(u, lo)| lo + u * 2.0 * radius).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            out.push(p);
        }
    }
    out
}

/// `n` equally spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let h = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo + h * i as f64 }).collect()
        }
    }
}

/// Cartesian grid of `n` points per axis over the cube `[-radius, radius]^dim`.
pub fn cube_grid(dim: usize, radius: f64, n: usize) -> Vec<Vec<f64>> {
    let axis = linspace(-radius, radius, n);
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two_prefix() {
        let v: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn box_and_ball_samples_stay_inside() {
        let b = SampleBox { lo: vec![-1.0, 2.0], hi: vec![1.0, 3.0] };
        for p in b.halton_points(100, 3) {
            assert!(p[0] >= -1.0 && p[0] <= 1.0 && p[1] >= 2.0 && p[1] <= 3.0);
        }
        for p in halton_ball(3, 2.0, 50, 1) {
            assert!(p.iter().map(|v| v * v).sum::<f64>() <= 4.0);
        }
    }

    #[test]
    fn grids() {
        assert_eq!(linspace(-1.0, 1.0, 5), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(cube_grid(2, 1.0, 3).len(), 9);
    }
}
