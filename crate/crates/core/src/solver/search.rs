//! One-dimensional root bracketing and maximization helpers.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Root of `g` on `[lo, hi]` by bisection, given `g(lo) > 0 > g(hi)`.
///
/// Runs until the bracket stops shrinking in floating point or its width
/// drops below `x_tol`. Returns the midpoint and the iteration count.
pub fn bisect_decreasing<G>(
    routine: &'static str,
    mut g: G,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    max_iter: usize,
) -> Result<(f64, usize)>
where
    G: FnMut(f64) -> Result<f64>,
{
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::NotBracketed {
            routine,
            lo,
            hi,
            g_lo,
            g_hi,
        });
    }
    for it in 1..=max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= x_tol {
            return Ok((mid, it));
        }
        let gm = g(mid)?;
        if gm > 0.0 {
            lo = mid;
        } else if gm < 0.0 {
            hi = mid;
        } else {
            return Ok((mid, it));
        }
    }
    Err(Error::NoConvergence {
        routine,
        iterations: max_iter,
    })
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > x_tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Scans `n` evenly spaced interior points of `(lo, hi)`, then refines the
/// best one by golden section over its two neighbouring cells.
pub fn grid_golden_max<F>(mut f: F, lo: f64, hi: f64, n: usize, x_tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let n = n.max(3);
    let step = (hi - lo) / (n + 1) as f64;
    let mut best = (lo + step, f64::NEG_INFINITY);
    let mut best_i = 1;
    for i in 1..=n {
        let x = lo + step * i as f64;
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
            best_i = i;
        }
    }
    let a = lo + step * (best_i - 1) as f64;
    let b = lo + step * (best_i + 1) as f64;
    let refined = golden_max(&mut f, a, b, x_tol);
    if refined.1 >= best.1 {
        refined
    } else {
        best
    }
}
