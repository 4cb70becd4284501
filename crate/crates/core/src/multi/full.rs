use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{check_test_features, residuals, row_vec, stack_rows};
use crate::data::{candidate_at, PValueSurface, TabularDataset};
use crate::error::{check_alpha, Error, Result};
use crate::regression::Regressor;
use crate::scores::{
    fit_modulation, point_grids, residual_covariance, rows_as_curves, score_multi, ModulationKind,
    ScoreKind,
};

/// Settings for full conformal prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct FullConfig {
    pub alpha: f64,
    pub score: ScoreKind,
    /// `identity` or `st-dev`.
    pub s_type: ModulationKind,
    pub num_grid_pts_dim: usize,
    pub grid_factor: f64,
    /// Largest candidate grid accepted.
    pub max_candidates: usize,
}

impl Default for FullConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            score: ScoreKind::L2,
            s_type: ModulationKind::StDev,
            num_grid_pts_dim: 100,
            grid_factor: 1.25,
            max_candidates: 1_000_000,
        }
    }
}

/// Candidate axes: `num` evenly spaced points on `[-f m_k, f m_k]` with
/// `m_k = max_i |y_ik|`.
pub fn grid_axes(y: &DMatrix<f64>, num: usize, factor: f64) -> Vec<Vec<f64>> {
    y.column_iter()
        .map(|c| {
            let half = factor * c.amax();
            let lo = -half;
            let step = 2.0 * half / (num - 1) as f64;
            (0..num).map(|i| lo + step * i as f64).collect()
        })
        .collect()
}

/// Full-conformal p-value of candidate response `y_new` at `x_new`.
///
/// Refits `model` on the data augmented with `(x_new, y_new)` and returns the
/// fraction of the `n + 1` augmented scores at least as large as the
/// candidate's own score. Modulation and covariance are fitted on the
/// augmented residuals.
pub fn candidate_pvalue<M: Regressor + ?Sized>(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    x_new: &[f64],
    y_new: &[f64],
    model: &M,
    score: ScoreKind,
    s_type: ModulationKind,
) -> Result<f64> {
    let n = y.nrows();
    let q = y.ncols();
    let xa = stack_rows(x, &DMatrix::from_row_slice(1, x.ncols(), x_new));
    let ya = stack_rows(y, &DMatrix::from_row_slice(1, q, y_new));
    let fit = model.fit(&xa, &ya)?;
    let r = residuals(&ya, &fit.predict(&xa)?);
    let (s, inv) = if score == ScoreKind::Mahalanobis {
        (vec![1.0; q], Some(residual_covariance(&r)?.1))
    } else {
        let m = fit_modulation(s_type, &rows_as_curves(&r), 0.0, &point_grids(q))?;
        (m.scalars(), None)
    };
    let scores = (0..=n)
        .map(|i| score_multi(score, &row_vec(&r, i), &s, inv.as_ref()))
        .collect::<Result<Vec<f64>>>()?;
    let own = scores[n];
    let count = scores.iter().filter(|&&v| v >= own).count();
    Ok(count as f64 / (n + 1) as f64)
}

/// Full conformal p-value surfaces, one per row of `x0`.
///
/// The region at level `alpha` is the set of candidates with p-value above
/// `alpha`; see [`PValueSurface::members`].
pub fn full<M: Regressor + ?Sized>(
    ds: &TabularDataset,
    x0: &DMatrix<f64>,
    model: &M,
    cfg: &FullConfig,
) -> Result<Vec<PValueSurface>> {
    check_alpha(cfg.alpha)?;
    if cfg.s_type == ModulationKind::AlphaMax {
        return Err(Error::UnsupportedModulation("alpha-max"));
    }
    if cfg.num_grid_pts_dim < 2 {
        return Err(Error::BadGrid(format!(
            "need at least 2 points per dimension, got {}",
            cfg.num_grid_pts_dim
        )));
    }
    if !(cfg.grid_factor.is_finite() && cfg.grid_factor > 0.0) {
        return Err(Error::BadGrid(format!(
            "grid factor must be positive, got {}",
            cfg.grid_factor
        )));
    }
    check_test_features(x0, ds.p())?;
    let q = ds.q() as u32;
    let candidates = (cfg.num_grid_pts_dim as u128)
        .checked_pow(q)
        .unwrap_or(u128::MAX);
    if candidates > cfg.max_candidates as u128 {
        return Err(Error::GridExplosion {
            candidates,
            cap: cfg.max_candidates,
        });
    }
    let axes = grid_axes(ds.y(), cfg.num_grid_pts_dim, cfg.grid_factor);
    let pred = model.fit(ds.x(), ds.y())?.predict(x0)?;
    (0..x0.nrows())
        .map(|t| {
            let x_new = row_vec(x0, t);
            let pvals = (0..candidates as usize)
                .into_par_iter()
                .map(|c| {
                    let y_new = candidate_at(&axes, c);
                    candidate_pvalue(ds.x(), ds.y(), &x_new, &y_new, model, cfg.score, cfg.s_type)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(PValueSurface {
                x0: x_new,
                pred: row_vec(&pred, t),
                axes: axes.clone(),
                pvals,
                n: ds.n(),
            })
        })
        .collect()
}
