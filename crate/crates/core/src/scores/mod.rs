//! Nonconformity scores and modulation functions.
//!
//! Residuals are handled in one shape for both response types: a
//! [`MultiCurve`] with one vector per component. Multivariate residuals use
//! length-1 vectors, for which every grid integral degenerates to the plain
//! value and the sup over the grid to the single entry.

mod depth;
mod order;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{check_curve_shape, MultiCurve};
use crate::error::{check_alpha, Error, Result};

pub use depth::{bounding_box, conformity_max, extended_quantile, median_curve};
pub(crate) use order::sorted;
pub use order::{ceil_rank, floor_rank, jk_quantiles, kth_smallest};

/// Lower clamp for every fitted modulation value.
pub const MODULATION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    L2,
    Mahalanobis,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModulationKind {
    Identity,
    StDev,
    AlphaMax,
}

impl ModulationKind {
    pub fn name(self) -> &'static str {
        match self {
            ModulationKind::Identity => "identity",
            ModulationKind::StDev => "st-dev",
            ModulationKind::AlphaMax => "alpha-max",
        }
    }
}

/// Positive per-component (per-grid-point) residual scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation {
    pub kind: ModulationKind,
    pub values: MultiCurve,
}

impl Modulation {
    pub fn identity(grids: &[Vec<f64>]) -> Self {
        Self {
            kind: ModulationKind::Identity,
            values: grids.iter().map(|g| vec![1.0; g.len()]).collect(),
        }
    }

    pub fn identity_multi(q: usize) -> Self {
        Self {
            kind: ModulationKind::Identity,
            values: vec![vec![1.0]; q],
        }
    }

    /// Scalar values, one per component (multivariate responses).
    pub fn scalars(&self) -> Vec<f64> {
        self.values.iter().map(|c| c[0]).collect()
    }
}

/// Single-point grids for `q` multivariate components.
pub fn point_grids(q: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0]; q]
}

/// Rows of an `n x q` matrix as length-1-component curves.
pub fn rows_as_curves(m: &DMatrix<f64>) -> Vec<MultiCurve> {
    m.row_iter()
        .map(|r| r.iter().map(|&v| vec![v]).collect())
        .collect()
}

fn check_modulation(s: &[f64]) -> Result<()> {
    if s.iter().all(|v| *v > 0.0 && v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonPositiveModulation)
    }
}

/// Multivariate nonconformity score of one residual vector.
///
/// `l2` is `||r / s||`, `max` is `max_j |r_j| / s_j`, and `mahalanobis` is
/// the unmodulated quadratic form `r' S^-1 r`.
pub fn score_multi(
    kind: ScoreKind,
    residual: &[f64],
    s: &[f64],
    cov_inv: Option<&DMatrix<f64>>,
) -> Result<f64> {
    match kind {
        ScoreKind::Mahalanobis => {
            let inv = cov_inv.ok_or(Error::MissingCovariance)?;
            let q = residual.len();
            if inv.shape() != (q, q) {
                return Err(Error::GridMismatch(format!(
                    "covariance is {:?}, residual has {q} components",
                    inv.shape()
                )));
            }
            let mut acc = 0.0;
            for i in 0..q {
                for j in 0..q {
                    acc += residual[i] * inv[(i, j)] * residual[j];
                }
            }
            Ok(acc.max(0.0))
        }
        ScoreKind::L2 | ScoreKind::Max => {
            if s.len() != residual.len() {
                return Err(Error::GridMismatch(format!(
                    "{} modulation values for {} components",
                    s.len(),
                    residual.len()
                )));
            }
            check_modulation(s)?;
            let scaled = residual.iter().zip(s).map(|(r, s)| (r / s).abs());
            Ok(if kind == ScoreKind::L2 {
                scaled.map(|v| v * v).sum::<f64>().sqrt()
            } else {
                scaled.fold(0.0, f64::max)
            })
        }
    }
}

/// Sup over components and grid points of `|r_j(t)| / s_j(t)`.
pub fn score_fun(residual: &MultiCurve, s: &MultiCurve) -> Result<f64> {
    if residual.len() != s.len() || residual.iter().zip(s).any(|(r, m)| r.len() != m.len()) {
        return Err(Error::GridMismatch(
            "residual and modulation shapes differ".into(),
        ));
    }
    let mut best = 0.0f64;
    for (r, m) in residual.iter().zip(s) {
        check_modulation(m)?;
        for (v, w) in r.iter().zip(m) {
            best = best.max((v / w).abs());
        }
    }
    Ok(best)
}

/// Trapezoidal integral of `values` over `grid`; a single point integrates
/// to its value.
pub fn integrate(values: &[f64], grid: &[f64]) -> f64 {
    if values.len() == 1 {
        return values[0];
    }
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Intermediate quantities of the alpha-max modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaMaxFit {
    /// Rank of `gamma` among the sup-scores, clamped to `m`.
    pub rank: usize,
    pub gamma: f64,
    /// Indices of residuals whose sup-score is at most `gamma`.
    pub kept: Vec<usize>,
    /// Pointwise max of `|r|` over the kept residuals.
    pub envelope: MultiCurve,
    /// Sum over components of the integral of `envelope`.
    pub normalizer: f64,
}

/// Computes the alpha-max envelope and normalizer from residuals.
///
/// `gamma` is the `ceil((m+1)(1-alpha))`-th smallest sup-score; when that
/// rank exceeds `m` the largest sup-score is used.
pub fn alpha_max_fit(
    residuals: &[MultiCurve],
    alpha: f64,
    grids: &[Vec<f64>],
) -> Result<AlphaMaxFit> {
    check_alpha(alpha)?;
    let m = residuals.len();
    if m == 0 {
        return Err(Error::TooFewResiduals { needed: 1, got: 0 });
    }
    let sups: Vec<f64> = residuals
        .iter()
        .map(|r| r.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())))
        .collect();
    let rank = ceil_rank((m as f64 + 1.0) * (1.0 - alpha)).clamp(1, m as i64) as usize;
    let gamma = sorted(&sups)[rank - 1];
    let kept: Vec<usize> = (0..m).filter(|&h| sups[h] <= gamma).collect();
    let mut envelope: MultiCurve = grids.iter().map(|g| vec![0.0; g.len()]).collect();
    for &h in &kept {
        for (e, r) in envelope.iter_mut().zip(&residuals[h]) {
            for (a, v) in e.iter_mut().zip(r) {
                *a = a.max(v.abs());
            }
        }
    }
    let normalizer = envelope
        .iter()
        .zip(grids)
        .map(|(e, g)| integrate(e, g))
        .sum();
    Ok(AlphaMaxFit {
        rank,
        gamma,
        kept,
        envelope,
        normalizer,
    })
}

/// Fits a modulation from a set of residuals on `grids`.
pub fn fit_modulation(
    kind: ModulationKind,
    residuals: &[MultiCurve],
    alpha: f64,
    grids: &[Vec<f64>],
) -> Result<Modulation> {
    for r in residuals {
        check_curve_shape(r, grids)?;
    }
    let values = match kind {
        ModulationKind::Identity => return Ok(Modulation::identity(grids)),
        ModulationKind::StDev => {
            let m = residuals.len();
            if m < 2 {
                return Err(Error::TooFewResiduals { needed: 2, got: m });
            }
            pointwise_sd(residuals, grids)
        }
        ModulationKind::AlphaMax => {
            let fit = alpha_max_fit(residuals, alpha, grids)?;
            let norm = fit.normalizer;
            fit.envelope
                .into_iter()
                .map(|e| {
                    e.into_iter()
                        .map(|v| if norm > 0.0 { v / norm } else { 0.0 })
                        .collect()
                })
                .collect()
        }
    };
    Ok(Modulation {
        kind,
        values: floor_values(values),
    })
}

fn floor_values(values: MultiCurve) -> MultiCurve {
    values
        .into_iter()
        .map(|c| c.into_iter().map(|v| v.max(MODULATION_FLOOR)).collect())
        .collect()
}

fn pointwise_sd(residuals: &[MultiCurve], grids: &[Vec<f64>]) -> MultiCurve {
    let m = residuals.len() as f64;
    grids
        .iter()
        .enumerate()
        .map(|(j, g)| {
            (0..g.len())
                .map(|t| {
                    let mean = residuals.iter().map(|r| r[j][t]).sum::<f64>() / m;
                    let ss: f64 = residuals.iter().map(|r| (r[j][t] - mean).powi(2)).sum();
                    (ss / (m - 1.0)).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Pointwise sample standard deviation over the finite entries of `points`,
/// floored; 1 where fewer than two entries are finite.
pub(crate) fn finite_spread(points: &[MultiCurve]) -> Modulation {
    let first = &points[0];
    let values = first
        .iter()
        .enumerate()
        .map(|(j, comp)| {
            (0..comp.len())
                .map(|t| {
                    let v: Vec<f64> = points
                        .iter()
                        .map(|p| p[j][t])
                        .filter(|v| v.is_finite())
                        .collect();
                    if v.len() < 2 {
                        return 1.0;
                    }
                    let mean = v.iter().sum::<f64>() / v.len() as f64;
                    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
                    (ss / (v.len() as f64 - 1.0)).sqrt().max(MODULATION_FLOOR)
                })
                .collect()
        })
        .collect();
    Modulation {
        kind: ModulationKind::StDev,
        values,
    }
}

/// Sample covariance of residual rows (`m x q`) and its inverse.
///
/// When the covariance is not positive definite, `eps * I` is added with
/// `eps = 1e-8 * trace / q` (at least `1e-12`), growing tenfold until a
/// Cholesky factorization succeeds.
pub fn residual_covariance(residuals: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, q) = residuals.shape();
    if m < 2 {
        return Err(Error::TooFewResiduals { needed: 2, got: m });
    }
    let means: Vec<f64> = residuals.column_iter().map(|c| c.mean()).collect();
    let centered = DMatrix::from_fn(m, q, |i, j| residuals[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered / (m as f64 - 1.0);
    if let Some(ch) = cov.clone().cholesky() {
        return Ok((cov, ch.inverse()));
    }
    let mut eps = (1e-8 * cov.trace() / q as f64).max(1e-12);
    for _ in 0..40 {
        let reg = &cov + DMatrix::identity(q, q) * eps;
        if let Some(ch) = reg.clone().cholesky() {
            return Ok((reg, ch.inverse()));
        }
        eps *= 10.0;
    }
    Err(Error::Model(
        "residual covariance could not be regularized".into(),
    ))
}
