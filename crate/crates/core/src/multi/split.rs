use nalgebra::DMatrix;

use super::{check_test_features, residuals, row_vec, SplitConfig};
use crate::data::{
    make_split, Method, PredictionRegion, RegionShape, SplitIndices, TabularDataset,
};
use crate::error::{check_alpha, Error, Result};
use crate::regression::{Fitted, Regressor};
use crate::scores::{
    ceil_rank, fit_modulation, kth_smallest, point_grids, residual_covariance, rows_as_curves,
    score_multi, sorted, Modulation, ScoreKind, MODULATION_FLOOR,
};

/// Result of one split-conformal run.
#[derive(Debug, Clone)]
pub struct SplitOutput {
    /// Model prediction at each test row (`n0 x q`).
    pub pred: Vec<Vec<f64>>,
    pub regions: Vec<PredictionRegion>,
    pub split: SplitIndices,
    pub modulation: Modulation,
    /// Rank used for `d`, before range checks.
    pub k: i64,
    /// Calibration-score radius; `+inf` when `k` exceeds the calibration size.
    pub d: f64,
    /// Smoothing draw, when randomized.
    pub tau: Option<f64>,
}

/// Rank of the calibration score used as radius.
///
/// Classical: `ceil((l+1)(1-alpha))`. Smoothed: `ceil(l + tau - (l+1) alpha)`,
/// raised to at least 1. The two agree at `tau = 1`.
pub fn split_rank(l: usize, alpha: f64, tau: Option<f64>) -> i64 {
    let l1 = l as f64 + 1.0;
    match tau {
        None => ceil_rank(l1 * (1.0 - alpha)),
        Some(t) => ceil_rank(l as f64 + t - l1 * alpha).max(1),
    }
}

struct Scaler {
    s: Vec<f64>,
    cov: Option<(DMatrix<f64>, DMatrix<f64>)>,
    mad: Option<Box<dyn Fitted>>,
}

impl Scaler {
    /// Per-component residual divisors at the rows of `x`.
    fn divisors(&self, x: &DMatrix<f64>, score: ScoreKind) -> Result<Vec<Vec<f64>>> {
        let base = if score == ScoreKind::Mahalanobis {
            vec![1.0; self.s.len()]
        } else {
            self.s.clone()
        };
        match &self.mad {
            None => Ok(vec![base; x.nrows()]),
            Some(fit) => {
                let m = fit.predict(x)?;
                Ok((0..x.nrows())
                    .map(|i| {
                        base.iter()
                            .enumerate()
                            .map(|(j, b)| b * m[(i, j)].abs().max(MODULATION_FLOOR))
                            .collect()
                    })
                    .collect())
            }
        }
    }

    fn score(&self, score: ScoreKind, r: &[f64], div: &[f64]) -> Result<f64> {
        match score {
            ScoreKind::Mahalanobis => {
                let scaled: Vec<f64> = r.iter().zip(div).map(|(a, b)| a / b).collect();
                let inv = self.cov.as_ref().map(|c| &c.1);
                score_multi(score, &scaled, div, inv)
            }
            _ => score_multi(score, r, div, None),
        }
    }
}

/// Split conformal prediction regions at every row of `x0`.
///
/// Trains once on the training part, fits the modulation (and the Mahalanobis
/// covariance) on training residuals, and takes the radius `d` as the
/// `k`-th smallest calibration score. For `max` the region is the box
/// `pred_j +- d s_j`; for `l2` and `mahalanobis` it is the ball / ellipsoid of
/// radius `d`, stored with its circumscribing box.
pub fn split<M: Regressor + ?Sized>(
    ds: &TabularDataset,
    x0: &DMatrix<f64>,
    model: &M,
    cfg: &SplitConfig,
) -> Result<SplitOutput> {
    check_alpha(cfg.alpha)?;
    check_test_features(x0, ds.p())?;
    let q = ds.q();
    let idx = make_split(ds.n(), cfg.rho, cfg.seed, cfg.explicit.as_deref())?;
    if idx.calib.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let (x1, y1) = ds.rows(&idx.train);
    let fit = model.fit(&x1, &y1)?;
    let r1 = residuals(&y1, &fit.predict(&x1)?);

    let modulation = if cfg.score == ScoreKind::Mahalanobis {
        Modulation::identity_multi(q)
    } else {
        fit_modulation(cfg.s_type, &rows_as_curves(&r1), cfg.alpha, &point_grids(q))?
    };
    let cov = if cfg.score == ScoreKind::Mahalanobis {
        Some(residual_covariance(&r1)?)
    } else {
        None
    };
    let mad = match &cfg.mad {
        Some(m) => Some(m.fit(&x1, &r1.abs())?),
        None => None,
    };
    let scaler = Scaler {
        s: modulation.scalars(),
        cov,
        mad,
    };

    let (x2, y2) = ds.rows(&idx.calib);
    let r2 = residuals(&y2, &fit.predict(&x2)?);
    let div2 = scaler.divisors(&x2, cfg.score)?;
    let scores = (0..r2.nrows())
        .map(|i| scaler.score(cfg.score, &row_vec(&r2, i), &div2[i]))
        .collect::<Result<Vec<f64>>>()?;
    let scores = sorted(&scores);

    let tau = cfg.randomization.tau();
    let k = split_rank(idx.l(), cfg.alpha, tau);
    let d = kth_smallest(&scores, k);

    let pred0 = fit.predict(x0)?;
    let div0 = scaler.divisors(x0, cfg.score)?;
    let regions = (0..x0.nrows())
        .map(|i| region_for(&row_vec(&pred0, i), &div0[i], d, cfg, &scaler))
        .collect();
    log::debug!("split: m={} l={} k={k} d={d} tau={tau:?}", idx.m(), idx.l());
    Ok(SplitOutput {
        pred: (0..x0.nrows()).map(|i| row_vec(&pred0, i)).collect(),
        regions,
        split: idx,
        modulation,
        k,
        d,
        tau,
    })
}

fn region_for(
    center: &[f64],
    div: &[f64],
    d: f64,
    cfg: &SplitConfig,
    scaler: &Scaler,
) -> PredictionRegion {
    let q = center.len();
    let half: Vec<f64> = match cfg.score {
        ScoreKind::Max | ScoreKind::L2 => div.iter().map(|c| d * c).collect(),
        ScoreKind::Mahalanobis => {
            let cov = &scaler.cov.as_ref().expect("covariance fitted").0;
            (0..q).map(|j| (d * cov[(j, j)]).sqrt() * div[j]).collect()
        }
    };
    let lo: Vec<f64> = center.iter().zip(&half).map(|(c, h)| c - h).collect();
    let up: Vec<f64> = center.iter().zip(&half).map(|(c, h)| c + h).collect();
    let shape = if !d.is_finite() || cfg.score == ScoreKind::Max {
        RegionShape::Box
    } else {
        let precision = match cfg.score {
            ScoreKind::L2 => (0..q)
                .map(|i| {
                    (0..q)
                        .map(|j| if i == j { 1.0 / (div[i] * div[i]) } else { 0.0 })
                        .collect()
                })
                .collect(),
            _ => {
                let inv = &scaler.cov.as_ref().expect("covariance fitted").1;
                (0..q)
                    .map(|i| (0..q).map(|j| inv[(i, j)] / (div[i] * div[j])).collect())
                    .collect()
            }
        };
        let radius = if cfg.score == ScoreKind::L2 { d * d } else { d };
        RegionShape::Ellipsoid {
            center: center.to_vec(),
            precision,
            radius,
        }
    };
    PredictionRegion {
        lo,
        up,
        alpha: cfg.alpha,
        method: Method::Split,
        shape,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{validate_tabular, RegionSize};
    use crate::multi::Randomization;
    use crate::regression::mean_model;
    use crate::scores::ModulationKind;

    /// Two training zeros followed by calibration residuals 1..9.
    fn toy() -> TabularDataset {
        let mut y = vec![0.0, 0.0];
        y.extend((1..=9).map(f64::from));
        validate_tabular(DMatrix::zeros(11, 0), DMatrix::from_column_slice(11, 1, &y)).unwrap()
    }

    fn toy_cfg() -> SplitConfig {
        SplitConfig {
            alpha: 0.1,
            s_type: ModulationKind::Identity,
            explicit: Some(vec![0, 1]),
            ..SplitConfig::default()
        }
    }

    #[test]
    fn hand_computed_order_statistic() {
        let out = split(&toy(), &DMatrix::zeros(1, 0), &mean_model(), &toy_cfg()).unwrap();
        assert_eq!(out.k, 9);
        assert_eq!(out.d, 9.0);
        assert_eq!(out.regions[0].lo, vec![-9.0]);
        assert_eq!(out.regions[0].up, vec![9.0]);
    }

    #[test]
    fn smoothed_with_unit_tau_is_classical() {
        let ds = toy();
        let x0 = DMatrix::zeros(1, 0);
        let classical = split(&ds, &x0, &mean_model(), &toy_cfg()).unwrap();
        let cfg = SplitConfig {
            randomization: Randomization::Tau(1.0),
            ..toy_cfg()
        };
        let smoothed = split(&ds, &x0, &mean_model(), &cfg).unwrap();
        assert_eq!(classical.regions, smoothed.regions);
        for l in 1..40 {
            for alpha in [0.05, 0.1, 0.2, 0.5] {
                assert_eq!(split_rank(l, alpha, None), split_rank(l, alpha, Some(1.0)));
            }
        }
    }

    #[test]
    fn zero_calibration_residuals_collapse() {
        let ds =
            validate_tabular(DMatrix::zeros(30, 0), DMatrix::from_element(30, 2, 3.0)).unwrap();
        let cfg = SplitConfig {
            seed: Some(4),
            ..SplitConfig::default()
        };
        let out = split(&ds, &DMatrix::zeros(1, 0), &mean_model(), &cfg).unwrap();
        assert_eq!(out.d, 0.0);
        assert_eq!(out.regions[0].lo, vec![3.0, 3.0]);
        assert_eq!(out.regions[0].up, vec![3.0, 3.0]);
        assert_eq!(out.regions[0].size(), 0.0);
    }

    #[test]
    fn rank_overflow_is_unbounded() {
        // l = 3, alpha = 0.1: ceil(4 * 0.9) = 4 > 3
        let ds = validate_tabular(
            DMatrix::zeros(5, 0),
            DMatrix::from_column_slice(5, 1, &[0., 0., 1., 2., 3.]),
        )
        .unwrap();
        let cfg = SplitConfig {
            explicit: Some(vec![0, 1]),
            s_type: ModulationKind::Identity,
            ..SplitConfig::default()
        };
        let out = split(&ds, &DMatrix::zeros(1, 0), &mean_model(), &cfg).unwrap();
        assert_eq!(out.d, f64::INFINITY);
        assert!(!out.regions[0].is_bounded());
    }

    #[test]
    fn rejects_bad_alpha() {
        let cfg = SplitConfig {
            alpha: 1.0,
            ..toy_cfg()
        };
        assert_eq!(
            split(&toy(), &DMatrix::zeros(1, 0), &mean_model(), &cfg).unwrap_err(),
            Error::BadAlpha(1.0)
        );
    }

    #[test]
    fn mahalanobis_region_is_ellipse() {
        let y = DMatrix::from_fn(40, 2, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0 + j as f64);
        let ds = validate_tabular(DMatrix::zeros(40, 0), y).unwrap();
        let cfg = SplitConfig {
            score: ScoreKind::Mahalanobis,
            seed: Some(9),
            ..SplitConfig::default()
        };
        let out = split(&ds, &DMatrix::zeros(1, 0), &mean_model(), &cfg).unwrap();
        let r = &out.regions[0];
        assert!(matches!(r.shape, RegionShape::Ellipsoid { .. }));
        let box_area: f64 = r.lo.iter().zip(&r.up).map(|(l, u)| u - l).product();
        // ellipse fills pi/4 of its circumscribing box at most
        assert!(r.size() <= box_area * std::f64::consts::FRAC_PI_4 + 1e-9);
        assert!(r.contains(&out.pred[0]));
    }
}
