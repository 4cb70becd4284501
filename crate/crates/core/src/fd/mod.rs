//! Prediction bands for multivariate functional responses evaluated on
//! grids.
//!
//! Covariates are given per observation as a list of curves; a length-1 curve
//! is a scalar covariate. When covariates are omitted every observation has
//! none. When test covariates are omitted the methods fall back to the mean
//! curve model (see each function).

mod jackplus;
mod msplit;
mod split;

use crate::data::{FunctionalDataset, MultiCurve};
use crate::error::{Error, Result};

pub use jackplus::{jackplus_fd, FdJackplusOutput};
pub use msplit::{msplit_fd, pool_bounds, FdMsplitConfig, FdMsplitOutput, PooledBounds};
pub use split::{split_fd, FdSplitConfig, FdSplitOutput};

/// Training covariates, or `n` empty covariate lists when absent.
pub(crate) fn resolve_covariates(
    ds: &FunctionalDataset,
    x: Option<&[MultiCurve]>,
) -> Result<Vec<MultiCurve>> {
    match x {
        None => Ok(vec![Vec::new(); ds.n()]),
        Some(x) => {
            if x.len() != ds.n() {
                return Err(Error::DimensionMismatch {
                    x_rows: x.len(),
                    y_rows: ds.n(),
                });
            }
            check_covariates(x, x.first().map_or(0, |o| o.len()), "x")?;
            Ok(x.to_vec())
        }
    }
}

pub(crate) fn check_covariates(x: &[MultiCurve], p: usize, what: &'static str) -> Result<()> {
    for (i, obs) in x.iter().enumerate() {
        if obs.len() != p {
            return Err(Error::GridMismatch(format!(
                "{what} row {i} has {} covariates, expected {p}",
                obs.len()
            )));
        }
        for (j, c) in obs.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::GridMismatch(format!(
                    "{what} row {i} covariate {j} is empty"
                )));
            }
            if let Some(t) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what,
                    row: i,
                    col: t,
                });
            }
        }
    }
    Ok(())
}

pub(crate) fn select(curves: &[MultiCurve], idx: &[usize]) -> Vec<MultiCurve> {
    idx.iter().map(|&i| curves[i].clone()).collect()
}

/// `a - b` pointwise.
pub(crate) fn curve_diff(a: &MultiCurve, b: &MultiCurve) -> MultiCurve {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect())
        .collect()
}

pub(crate) fn check_predictions(
    pred: &[MultiCurve],
    grids: &[Vec<f64>],
    rows: usize,
) -> Result<()> {
    if pred.len() != rows {
        return Err(Error::Model(format!(
            "model returned {} curves for {rows} rows",
            pred.len()
        )));
    }
    for p in pred {
        crate::data::check_curve_shape(p, grids)?;
    }
    Ok(())
}
