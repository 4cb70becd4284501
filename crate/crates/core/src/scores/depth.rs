//! Conformity ranking: the `D_max` conformity measure, extended quantiles and
//! axis-aligned bounding boxes.

use super::{score_fun, Modulation};
use crate::data::MultiCurve;
use crate::error::{Error, Result};

/// Inverse of the sup-modulated score; `+inf` for a zero residual.
pub fn conformity_max(residual: &MultiCurve, s: &Modulation) -> Result<f64> {
    let score = score_fun(residual, &s.values)?;
    Ok(if score == 0.0 {
        f64::INFINITY
    } else {
        1.0 / score
    })
}

/// Scores are compared after rounding to 12 significant digits, so values
/// that differ only by floating-point noise (a bound and its mirror image
/// about the center, say) tie and fall back to input order.
pub(crate) fn ranking_key(score: f64) -> f64 {
    if score == 0.0 || !score.is_finite() {
        return score;
    }
    format!("{score:.11e}").parse().unwrap_or(score)
}

fn difference(a: &MultiCurve, b: &MultiCurve) -> Result<MultiCurve> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!(
            "{} components vs {}",
            a.len(),
            b.len()
        )));
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            if x.len() != y.len() {
                return Err(Error::GridMismatch(format!(
                    "component length {} vs {}",
                    x.len(),
                    y.len()
                )));
            }
            Ok(x.iter().zip(y).map(|(u, v)| u - v).collect())
        })
        .collect()
}

/// Indices (ascending) of the `k` points most conformal with respect to
/// `center` under modulation `s`.
///
/// Ranking uses [`conformity_max`] of `point - center`; ties keep the point
/// that comes first in `points`.
pub fn extended_quantile(
    points: &[MultiCurve],
    k: usize,
    s: &Modulation,
    center: &MultiCurve,
) -> Result<Vec<usize>> {
    if k == 0 || k > points.len() {
        return Err(Error::BadLevel { k, n: points.len() });
    }
    let conformity = points
        .iter()
        .map(|p| {
            let score = score_fun(&difference(p, center)?, &s.values)?;
            let key = ranking_key(score);
            Ok(if key == 0.0 { f64::INFINITY } else { 1.0 / key })
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    // stable: equal conformity keeps input order
    order.sort_by(|&a, &b| conformity[b].total_cmp(&conformity[a]));
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

/// Componentwise (pointwise, for curves) minimum and maximum.
pub fn bounding_box(points: &[MultiCurve]) -> Result<(MultiCurve, MultiCurve)> {
    let first = points.first().ok_or(Error::EmptySet)?;
    let mut lo = first.clone();
    let mut up = first.clone();
    for p in &points[1..] {
        difference(p, first)?;
        for (j, comp) in p.iter().enumerate() {
            for (t, &v) in comp.iter().enumerate() {
                lo[j][t] = lo[j][t].min(v);
                up[j][t] = up[j][t].max(v);
            }
        }
    }
    Ok((lo, up))
}

/// Pointwise median; even counts average the two middle values.
pub fn median_curve(points: &[MultiCurve]) -> Result<MultiCurve> {
    let first = points.first().ok_or(Error::EmptySet)?;
    let mut out = first.clone();
    let mut buf = Vec::with_capacity(points.len());
    for (j, comp) in first.iter().enumerate() {
        for t in 0..comp.len() {
            buf.clear();
            buf.extend(points.iter().map(|p| p[j][t]));
            buf.sort_by(f64::total_cmp);
            let m = buf.len();
            out[j][t] = if m % 2 == 1 {
                buf[m / 2]
            } else {
                0.5 * (buf[m / 2 - 1] + buf[m / 2])
            };
        }
    }
    Ok(out)
}
