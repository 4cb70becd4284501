use rayon::prelude::*;

use super::split::{split_core, FdSplitConfig, FdSplitOutput, Target};
use super::{check_covariates, resolve_covariates};
use crate::data::{FunctionalBand, FunctionalDataset, Method, MultiCurve};
use crate::error::Result;
use crate::multi::{derive_seeds, inner_level, kept_count, rho_for, Randomization};
use crate::regression::{mean_model_fd, FunctionalRegressor};
use crate::scores::{bounding_box, extended_quantile, finite_spread, median_curve};

/// Multi-split settings for functional responses; `base` carries the outer
/// `alpha` and the split controls.
#[derive(Debug, Clone, PartialEq)]
pub struct FdMsplitConfig {
    pub b: usize,
    pub tau: f64,
    pub lambda: f64,
    pub rho: Vec<f64>,
    pub base: FdSplitConfig,
}

impl Default for FdMsplitConfig {
    fn default() -> Self {
        Self {
            b: 50,
            tau: 0.5,
            lambda: 0.0,
            rho: Vec::new(),
            base: FdSplitConfig::default(),
        }
    }
}

impl FdMsplitConfig {
    pub fn inner_alpha(&self) -> Result<f64> {
        inner_level(self.base.alpha, self.tau, self.lambda, self.b)
    }

    fn replicates(&self) -> Result<Vec<FdSplitConfig>> {
        let inner = self.inner_alpha()?;
        let seeds = derive_seeds(self.base.seed, self.b);
        let rand_seeds = match self.base.randomization {
            Randomization::Seeded(s) => derive_seeds(Some(s), self.b),
            _ => vec![None; self.b],
        };
        (0..self.b)
            .map(|b| {
                Ok(FdSplitConfig {
                    alpha: inner,
                    rho: rho_for(&self.rho, self.base.rho, b, self.b)?,
                    seed: seeds[b],
                    randomization: rand_seeds[b]
                        .map_or(self.base.randomization, Randomization::Seeded),
                    ..self.base.clone()
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct FdMsplitOutput {
    pub bands: Vec<FunctionalBand>,
    pub inner_alpha: f64,
    /// Replicate bands, `[replicate][test point]`.
    pub replicates: Vec<Vec<FunctionalBand>>,
}

/// Aggregate of pooled replicate bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledBounds {
    pub lo: MultiCurve,
    pub up: MultiCurve,
    /// Indices into the pooled list `[lo_1, up_1, lo_2, up_2, ...]`.
    pub kept: Vec<usize>,
}

/// Pools replicate bounds as `[lo_1, up_1, lo_2, up_2, ...]`, keeps the `k`
/// most conformal around `center` (modulated by the pointwise spread of the
/// finite pooled values) and returns their pointwise bounding box.
pub fn pool_bounds(
    bounds: &[(MultiCurve, MultiCurve)],
    center: &MultiCurve,
    k: usize,
) -> Result<PooledBounds> {
    let pooled: Vec<MultiCurve> = bounds
        .iter()
        .flat_map(|(l, u)| [l.clone(), u.clone()])
        .collect();
    if pooled.is_empty() {
        return Err(crate::Error::EmptySet);
    }
    let s = finite_spread(&pooled);
    let kept = extended_quantile(&pooled, k, &s, center)?;
    let chosen: Vec<MultiCurve> = kept.iter().map(|&i| pooled[i].clone()).collect();
    let (lo, up) = bounding_box(&chosen)?;
    Ok(PooledBounds { lo, up, kept })
}

/// Multi-split bands for functional responses.
///
/// Runs `B` functional split replicates at the inner level, pools their `2B`
/// bound curves, ranks them around the pointwise median of the replicate
/// predictions (scaled by the pointwise spread of the pooled bounds), drops the
/// `ceil(2 tau B) - 1` least conformal and returns the pointwise bounding box
/// of the rest. Without `x0` the
/// mean curve model is used and a single band is returned.
pub fn msplit_fd<M: FunctionalRegressor + ?Sized>(
    ds: &FunctionalDataset,
    x: Option<&[MultiCurve]>,
    x0: Option<&[MultiCurve]>,
    model: &M,
    cfg: &FdMsplitConfig,
) -> Result<FdMsplitOutput> {
    let inner_alpha = cfg.inner_alpha()?;
    let xs = resolve_covariates(ds, x)?;
    let empty_x0 = [Vec::new()];
    let reps = cfg.replicates()?;
    let outs = match x0 {
        Some(x0) => {
            check_covariates(x0, xs.first().map_or(0, |o| o.len()), "x0")?;
            reps.par_iter()
                .map(|c| split_core(ds, &xs, Target::Rows(x0), model, c))
                .collect::<Result<Vec<FdSplitOutput>>>()?
        }
        None => {
            let none = vec![Vec::new(); ds.n()];
            let mean = mean_model_fd();
            reps.par_iter()
                .map(|c| split_core(ds, &none, Target::Rows(&empty_x0), &mean, c))
                .collect::<Result<Vec<FdSplitOutput>>>()?
        }
    };
    let k = kept_count(cfg.tau, cfg.b);
    if cfg.b == 1 {
        log::warn!("msplit_fd with B = 1 reduces to a single split");
    } else if k == 1 {
        log::warn!("msplit_fd keeps a single bound curve; the band has zero width");
    }
    let n0 = outs[0].bands.len();
    let bands = (0..n0)
        .map(|t| {
            let preds: Vec<MultiCurve> = outs
                .iter()
                .map(|o| {
                    o.bands[t]
                        .pred
                        .clone()
                        .expect("split bands carry predictions")
                })
                .collect();
            let center = median_curve(&preds)?;
            let bounds: Vec<(MultiCurve, MultiCurve)> = outs
                .iter()
                .map(|o| (o.bands[t].lo.clone(), o.bands[t].up.clone()))
                .collect();
            let pooled = pool_bounds(&bounds, &center, k)?;
            let (lo, up) = (pooled.lo, pooled.up);
            Ok(FunctionalBand {
                grids: ds.grids().to_vec(),
                lo,
                up,
                pred: Some(center),
                alpha: cfg.base.alpha,
                method: Method::Msplit,
                at_index: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FdMsplitOutput {
        bands,
        inner_alpha,
        replicates: outs.into_iter().map(|o| o.bands).collect(),
    })
}
