use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{check_test_features, residuals, row_vec, stack_rows};
use crate::data::{Method, MultiCurve, PredictionRegion, RegionShape, TabularDataset};
use crate::error::{check_alpha, Result};
use crate::regression::Regressor;
use crate::scores::{
    bounding_box, ceil_rank, extended_quantile, fit_modulation, jk_quantiles, median_curve,
    point_grids, ModulationKind,
};

#[derive(Debug, Clone)]
pub struct JackplusOutput {
    /// Prediction of the model trained on all rows.
    pub pred: Vec<Vec<f64>>,
    pub regions: Vec<PredictionRegion>,
    /// Signed leave-one-out residuals (`n x q`).
    pub loo_residuals: Vec<Vec<f64>>,
}

struct Loo {
    residual: Vec<f64>,
    /// Leave-one-out predictions at every test row.
    at_test: Vec<Vec<f64>>,
}

/// Jackknife+ prediction regions.
///
/// With `q = 1` this is the classical interval built from the lower and upper
/// jackknife+ quantiles of `mu_{-i}(x0) -+ |R_i|`. With `q > 1` the `2n`
/// candidates `mu_{-i}(x0) - |R_i|` and `mu_{-i}(x0) + |R_i|` are ranked by
/// the modulated max score around their componentwise median, the
/// `ceil((1-alpha) 2n)` most conformal are kept, and the region is their
/// bounding box. The modulation is the standard deviation of the signed
/// leave-one-out residuals.
pub fn jackplus<M: Regressor + ?Sized>(
    ds: &TabularDataset,
    x0: &DMatrix<f64>,
    model: &M,
    alpha: f64,
) -> Result<JackplusOutput> {
    check_alpha(alpha)?;
    check_test_features(x0, ds.p())?;
    let n = ds.n();
    let q = ds.q();
    let loo = (0..n)
        .into_par_iter()
        .map(|i| {
            let (xi, yi) = ds.without_row(i);
            let fit = model.fit(&xi, &yi)?;
            let (xo, yo) = ds.rows(&[i]);
            let pred = fit.predict(&stack_rows(&xo, x0))?;
            let r = residuals(&yo, &pred.rows(0, 1).into_owned());
            Ok(Loo {
                residual: row_vec(&r, 0),
                at_test: (1..pred.nrows()).map(|t| row_vec(&pred, t)).collect(),
            })
        })
        .collect::<Result<Vec<Loo>>>()?;
    let full_pred = model.fit(ds.x(), ds.y())?.predict(x0)?;
    let pred: Vec<Vec<f64>> = (0..x0.nrows()).map(|t| row_vec(&full_pred, t)).collect();

    let regions = if q == 1 {
        (0..x0.nrows())
            .map(|t| univariate(&loo, t, alpha, pred[t][0]))
            .collect()
    } else {
        let signed: Vec<MultiCurve> = loo
            .iter()
            .map(|l| l.residual.iter().map(|&v| vec![v]).collect())
            .collect();
        let s = fit_modulation(ModulationKind::StDev, &signed, alpha, &point_grids(q))?;
        let k = ceil_rank((1.0 - alpha) * (2 * n) as f64).clamp(1, 2 * n as i64) as usize;
        (0..x0.nrows())
            .map(|t| {
                let mut cands: Vec<MultiCurve> = Vec::with_capacity(2 * n);
                for sign in [-1.0, 1.0] {
                    for l in &loo {
                        cands.push(
                            l.at_test[t]
                                .iter()
                                .zip(&l.residual)
                                .map(|(m, r)| vec![m + sign * r.abs()])
                                .collect(),
                        );
                    }
                }
                let center = median_curve(&cands)?;
                let kept = extended_quantile(&cands, k, &s, &center)?;
                let chosen: Vec<MultiCurve> = kept.iter().map(|&i| cands[i].clone()).collect();
                let (lo, up) = bounding_box(&chosen)?;
                Ok(PredictionRegion::boxed(
                    lo.into_iter().map(|c| c[0]).collect(),
                    up.into_iter().map(|c| c[0]).collect(),
                    alpha,
                    Method::Jackplus,
                ))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(JackplusOutput {
        pred,
        regions,
        loo_residuals: loo.into_iter().map(|l| l.residual).collect(),
    })
}

fn univariate(loo: &[Loo], t: usize, alpha: f64, pred: f64) -> PredictionRegion {
    let lower: Vec<f64> = loo
        .iter()
        .map(|l| l.at_test[t][0] - l.residual[0].abs())
        .collect();
    let upper: Vec<f64> = loo
        .iter()
        .map(|l| l.at_test[t][0] + l.residual[0].abs())
        .collect();
    let (lo, _) = jk_quantiles(&lower, alpha);
    let (_, up) = jk_quantiles(&upper, alpha);
    if lo > up {
        // possible only for alpha above 1/2
        return PredictionRegion {
            lo: vec![pred],
            up: vec![pred],
            alpha,
            method: Method::Jackplus,
            shape: RegionShape::Intervals(Vec::new()),
        };
    }
    PredictionRegion::boxed(vec![lo], vec![up], alpha, Method::Jackplus)
}
