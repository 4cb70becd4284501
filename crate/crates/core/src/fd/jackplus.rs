use rayon::prelude::*;

use super::{check_covariates, check_predictions, curve_diff, resolve_covariates};
use crate::data::{FunctionalBand, FunctionalDataset, Method, MultiCurve};
use crate::error::{check_alpha, Result};
use crate::regression::{mean_model_fd, FunctionalRegressor};
use crate::scores::{
    bounding_box, ceil_rank, extended_quantile, fit_modulation, median_curve, Modulation,
    ModulationKind,
};

#[derive(Debug, Clone)]
pub struct FdJackplusOutput {
    pub bands: Vec<FunctionalBand>,
    /// Standard deviation of the signed leave-one-out residual curves, used
    /// to rank candidates.
    pub modulation: Modulation,
}

/// Jackknife+ bands for functional responses.
///
/// Builds the `2n` candidate curves `mu_{-i}(x0) -+ |R_i|` (pointwise absolute
/// leave-one-out residuals), keeps the `ceil((1-alpha) 2n)` most conformal
/// around their pointwise median and returns their pointwise bounding box.
/// Without `x0` the mean curve model is used and a single band is returned.
pub fn jackplus_fd<M: FunctionalRegressor + ?Sized>(
    ds: &FunctionalDataset,
    x: Option<&[MultiCurve]>,
    x0: Option<&[MultiCurve]>,
    model: &M,
    alpha: f64,
) -> Result<FdJackplusOutput> {
    check_alpha(alpha)?;
    let xs = resolve_covariates(ds, x)?;
    match x0 {
        Some(x0) => {
            check_covariates(x0, xs.first().map_or(0, |o| o.len()), "x0")?;
            jackplus_core(ds, &xs, x0, model, alpha)
        }
        None => {
            let empty = vec![Vec::new(); ds.n()];
            jackplus_core(ds, &empty, &[Vec::new()], &mean_model_fd(), alpha)
        }
    }
}

struct Loo {
    residual: MultiCurve,
    at_test: Vec<MultiCurve>,
}

fn jackplus_core<M: FunctionalRegressor + ?Sized>(
    ds: &FunctionalDataset,
    xs: &[MultiCurve],
    x0: &[MultiCurve],
    model: &M,
    alpha: f64,
) -> Result<FdJackplusOutput> {
    let n = ds.n();
    let grids = ds.grids();
    let loo = (0..n)
        .into_par_iter()
        .map(|i| {
            let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let xi = super::select(xs, &keep);
            let yi = ds.select(&keep);
            let fit = model.fit(&xi, &yi, grids)?;
            let mut rows = vec![xs[i].clone()];
            rows.extend_from_slice(x0);
            let mut pred = fit.predict(&rows)?;
            check_predictions(&pred, grids, rows.len())?;
            let own = pred.remove(0);
            Ok(Loo {
                residual: curve_diff(&ds.y()[i], &own),
                at_test: pred,
            })
        })
        .collect::<Result<Vec<Loo>>>()?;
    let signed: Vec<MultiCurve> = loo.iter().map(|l| l.residual.clone()).collect();
    let s = fit_modulation(ModulationKind::StDev, &signed, alpha, grids)?;
    let full = model.fit(xs, ds.y(), grids)?.predict(x0)?;
    check_predictions(&full, grids, x0.len())?;
    let k = ceil_rank((1.0 - alpha) * (2 * n) as f64).clamp(1, 2 * n as i64) as usize;

    let bands = full
        .into_iter()
        .enumerate()
        .map(|(t, pred)| {
            let mut cands: Vec<MultiCurve> = Vec::with_capacity(2 * n);
            for sign in [-1.0, 1.0] {
                for l in &loo {
                    cands.push(
                        l.at_test[t]
                            .iter()
                            .zip(&l.residual)
                            .map(|(m, r)| {
                                m.iter().zip(r).map(|(a, b)| a + sign * b.abs()).collect()
                            })
                            .collect(),
                    );
                }
            }
            let center = median_curve(&cands)?;
            let kept = extended_quantile(&cands, k, &s, &center)?;
            let chosen: Vec<MultiCurve> = kept.iter().map(|&i| cands[i].clone()).collect();
            let (lo, up) = bounding_box(&chosen)?;
            Ok(FunctionalBand {
                grids: grids.to_vec(),
                lo,
                up,
                pred: Some(pred),
                alpha,
                method: Method::Jackplus,
                at_index: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FdJackplusOutput {
        bands,
        modulation: s,
    })
}
