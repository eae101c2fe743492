//! Linear-time discrete Legendre transform.
//!
//! For samples `(x_i, f_i)` with sorted `x` and sorted dual abscissae `y_j`,
//! computes `max_i [x_i y_j − f_i]` for every `j` in `O(n + m)`: the lower
//! convex hull of the samples is built once, and the maximizing hull vertex is
//! nondecreasing in `y`.

/// Discrete conjugate of the sampled function on sorted `ys`.
///
/// `xs` must be strictly increasing and `ys` nondecreasing. Infinite sample
/// values are ignored; if every value is infinite the result is `−∞`.
pub fn legendre_1d(xs: &[f64], fs: &[f64], ys: &[f64]) -> Vec<f64> {
    debug_assert_eq!(xs.len(), fs.len());
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        if !fs[i].is_finite() {
            continue;
        }
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b when it lies on or above the chord from a to i.
            let lhs = (fs[b] - fs[a]) * (xs[i] - xs[a]);
            let rhs = (fs[i] - fs[a]) * (xs[b] - xs[a]);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    if hull.is_empty() {
        return vec![f64::NEG_INFINITY; ys.len()];
    }
    let mut out = Vec::with_capacity(ys.len());
    let mut k = 0;
    for &y in ys {
        // Advance while the next hull edge has slope below y.
        while k + 1 < hull.len() {
            let (a, b) = (hull[k], hull[k + 1]);
            let slope = (fs[b] - fs[a]) / (xs[b] - xs[a]);
            if slope < y {
                k += 1;
            } else {
                break;
            }
        }
        let i = hull[k];
        out.push(xs[i] * y - fs[i]);
    }
    out
}
