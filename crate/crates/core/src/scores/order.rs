//! Order-statistic index arithmetic.

/// Relative slack when rounding products such as `(l + 1) * (1 - alpha)` to
/// integer ranks. `10.0 * (1.0 - 0.1)` is not exactly 9 in binary floating
/// point; without the slack its ceiling would jump to 10.
const RANK_SLACK: f64 = 1e-9;

fn snap(x: f64) -> Option<f64> {
    let r = x.round();
    ((x - r).abs() <= RANK_SLACK * x.abs().max(1.0)).then_some(r)
}

/// `ceil(x)` with values within rounding noise of an integer snapped to it.
pub fn ceil_rank(x: f64) -> i64 {
    snap(x).unwrap_or_else(|| x.ceil()) as i64
}

/// `floor(x)` with values within rounding noise of an integer snapped to it.
pub fn floor_rank(x: f64) -> i64 {
    snap(x).unwrap_or_else(|| x.floor()) as i64
}

/// `k`-th smallest (1-based) of an ascending slice; `-inf` below the range
/// and `+inf` above it.
pub fn kth_smallest(sorted: &[f64], k: i64) -> f64 {
    if k < 1 {
        f64::NEG_INFINITY
    } else if k as usize > sorted.len() {
        f64::INFINITY
    } else {
        sorted[k as usize - 1]
    }
}

pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Jackknife+ quantiles of `values` at level `alpha`.
///
/// Lower is the `floor(alpha (n+1))`-th smallest value (`-inf` when that rank
/// is 0); upper is the `ceil((1-alpha)(n+1))`-th smallest (`+inf` when the
/// rank exceeds `n`).
pub fn jk_quantiles(values: &[f64], alpha: f64) -> (f64, f64) {
    let v = sorted(values);
    let n1 = (v.len() + 1) as f64;
    (
        kth_smallest(&v, floor_rank(alpha * n1)),
        kth_smallest(&v, ceil_rank((1.0 - alpha) * n1)),
    )
}
