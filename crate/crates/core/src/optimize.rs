//! One-dimensional maximisation and boundary search.

use crate::error::{Error, Result};

/// 1/φ.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

const COARSE_POINTS: usize = 25;
const DENSE_POINTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// The coarse scan saw more than one local maximum.
    pub fell_back: bool,
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `xtol`. Deterministic: the same
/// inputs always produce the same sequence of evaluations.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > xtol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d)?;
        }
    }
    // Compare the surviving interior points with the bracket ends so a
    // maximum sitting on the boundary is pinned there.
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
        }
    }
    Ok(best)
}

fn count_local_maxima(values: &[f64]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right
        })
        .count()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Maximise `f` over a positive bracket, searching in log space.
///
/// A coarse log-spaced scan locates the best cell; golden section refines it to
/// `rel_tol` relative accuracy. If the scan shows several local maxima the
/// function is not unimodal on the bracket: the scan is repeated on a dense
/// grid before refinement and the event is logged.
pub fn maximize_log<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::domain(format!("invalid search bracket [{lo}, {hi}]")));
    }
    let mut grid = log_grid(lo, hi, COARSE_POINTS);
    let mut values = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    let fell_back = count_local_maxima(&values) > 1;
    if fell_back {
        log::debug!("objective not unimodal on [{lo}, {hi}]; using a dense grid");
        grid = log_grid(lo, hi, DENSE_POINTS);
        values = grid.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
    }
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v > values[b] { i } else { b });
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(grid.len() - 1)];
    let (u, value) = golden_section_max(|u| f(u.exp()), left.ln(), right.ln(), rel_tol)?;
    let x = u.exp().clamp(lo, hi);
    Ok(if value >= values[best] {
        Maximum { x, value, fell_back }
    } else {
        Maximum {
            x: grid[best],
            value: values[best],
            fell_back,
        }
    })
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, given `pred(lo)` and
/// `!pred(hi)`; bisection down to `tol`.
pub fn bisect_last_true<F>(mut pred: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<bool>,
{
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
