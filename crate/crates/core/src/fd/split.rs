use super::{check_covariates, check_predictions, curve_diff, resolve_covariates, select};
use crate::data::{
    make_split, FunctionalBand, FunctionalDataset, Method, MultiCurve, SplitIndices,
};
use crate::error::{check_alpha, Error, Result};
use crate::multi::{split_rank, Randomization};
use crate::regression::{mean_model_fd, FunctionalRegressor};
use crate::scores::{fit_modulation, kth_smallest, score_fun, sorted, Modulation, ModulationKind};

#[derive(Debug, Clone, PartialEq)]
pub struct FdSplitConfig {
    pub alpha: f64,
    pub s_type: ModulationKind,
    pub rho: f64,
    pub seed: Option<u64>,
    /// 0-based training indices; overrides `rho` and `seed`.
    pub explicit: Option<Vec<usize>>,
    pub randomization: Randomization,
}

impl Default for FdSplitConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            s_type: ModulationKind::StDev,
            rho: 0.5,
            seed: None,
            explicit: None,
            randomization: Randomization::Off,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FdSplitOutput {
    pub bands: Vec<FunctionalBand>,
    pub split: SplitIndices,
    pub modulation: Modulation,
    pub k: i64,
    pub d: f64,
    pub tau: Option<f64>,
}

pub(crate) enum Target<'a> {
    Rows(&'a [MultiCurve]),
    Calibration,
}

/// Split conformal bands for functional responses.
///
/// Scores are `max_j max_t |r_j(t)| / s_j(t)` with the modulation fitted on
/// training residuals; the band is `pred_j(t) +- d s_j(t)`. Without `x0` the
/// mean curve model is used and one band is reported per calibration curve,
/// tagged with its index.
pub fn split_fd<M: FunctionalRegressor + ?Sized>(
    ds: &FunctionalDataset,
    x: Option<&[MultiCurve]>,
    x0: Option<&[MultiCurve]>,
    model: &M,
    cfg: &FdSplitConfig,
) -> Result<FdSplitOutput> {
    let xs = resolve_covariates(ds, x)?;
    match x0 {
        Some(x0) => split_core(ds, &xs, Target::Rows(x0), model, cfg),
        None => split_core(ds, &xs, Target::Calibration, &mean_model_fd(), cfg),
    }
}

pub(crate) fn split_core<M: FunctionalRegressor + ?Sized>(
    ds: &FunctionalDataset,
    xs: &[MultiCurve],
    target: Target<'_>,
    model: &M,
    cfg: &FdSplitConfig,
) -> Result<FdSplitOutput> {
    check_alpha(cfg.alpha)?;
    if let Target::Rows(x0) = target {
        check_covariates(x0, xs.first().map_or(0, |o| o.len()), "x0")?;
    }
    let grids = ds.grids();
    let idx = make_split(ds.n(), cfg.rho, cfg.seed, cfg.explicit.as_deref())?;
    if idx.calib.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let x1 = select(xs, &idx.train);
    let y1 = ds.select(&idx.train);
    let fit = model.fit(&x1, &y1, grids)?;
    let p1 = fit.predict(&x1)?;
    check_predictions(&p1, grids, y1.len())?;
    let r1: Vec<MultiCurve> = y1.iter().zip(&p1).map(|(y, p)| curve_diff(y, p)).collect();
    let modulation = fit_modulation(cfg.s_type, &r1, cfg.alpha, grids)?;

    let x2 = select(xs, &idx.calib);
    let y2 = ds.select(&idx.calib);
    let p2 = fit.predict(&x2)?;
    check_predictions(&p2, grids, y2.len())?;
    let scores = y2
        .iter()
        .zip(&p2)
        .map(|(y, p)| score_fun(&curve_diff(y, p), &modulation.values))
        .collect::<Result<Vec<f64>>>()?;
    let scores = sorted(&scores);
    let tau = cfg.randomization.tau();
    let k = split_rank(idx.l(), cfg.alpha, tau);
    let d = kth_smallest(&scores, k);

    let (preds, at): (Vec<MultiCurve>, Vec<Option<usize>>) = match target {
        Target::Rows(x0) => {
            let p0 = fit.predict(x0)?;
            check_predictions(&p0, grids, x0.len())?;
            let n0 = p0.len();
            (p0, vec![None; n0])
        }
        Target::Calibration => (p2, idx.calib.iter().map(|&i| Some(i)).collect()),
    };
    let bands = preds
        .into_iter()
        .zip(at)
        .map(|(pred, at_index)| band_around(pred, &modulation, d, cfg.alpha, grids, at_index))
        .collect();
    log::debug!("split_fd: m={} l={} k={k} d={d}", idx.m(), idx.l());
    Ok(FdSplitOutput {
        bands,
        split: idx,
        modulation,
        k,
        d,
        tau,
    })
}

fn band_around(
    pred: MultiCurve,
    s: &Modulation,
    d: f64,
    alpha: f64,
    grids: &[Vec<f64>],
    at_index: Option<usize>,
) -> FunctionalBand {
    let shift = |sign: f64| -> MultiCurve {
        pred.iter()
            .zip(&s.values)
            .map(|(c, sc)| c.iter().zip(sc).map(|(m, v)| m + sign * d * v).collect())
            .collect()
    };
    FunctionalBand {
        grids: grids.to_vec(),
        lo: shift(-1.0),
        up: shift(1.0),
        pred: Some(pred),
        alpha,
        method: Method::Split,
        at_index,
    }
}
