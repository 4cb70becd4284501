use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{derive_seeds, split, Randomization, SplitConfig, SplitOutput};
use crate::data::{Method, MultiCurve, PredictionRegion, RegionShape, TabularDataset};
use crate::error::{check_alpha, Error, Result};
use crate::fd::pool_bounds;
use crate::regression::Regressor;
use crate::scores::{ceil_rank, floor_rank, median_curve};

/// Multi-split settings. `base` supplies the outer `alpha`, the score, the
/// modulation, the base seed and any tie randomization; its `rho` is used
/// when `rho` is empty.
#[derive(Debug, Clone)]
pub struct MsplitConfig {
    pub b: usize,
    pub tau: f64,
    pub lambda: f64,
    /// Training proportion per replicate: empty, one value, or `b` values.
    pub rho: Vec<f64>,
    pub base: SplitConfig,
}

impl Default for MsplitConfig {
    fn default() -> Self {
        Self {
            b: 100,
            tau: 0.1,
            lambda: 0.0,
            rho: Vec::new(),
            base: SplitConfig::default(),
        }
    }
}

impl MsplitConfig {
    /// Level used inside each replicate: `alpha (1 - tau + lambda / B)`.
    pub fn inner_alpha(&self) -> Result<f64> {
        inner_level(self.base.alpha, self.tau, self.lambda, self.b)
    }

    pub(crate) fn rho_at(&self, b: usize) -> Result<f64> {
        rho_for(&self.rho, self.base.rho, b, self.b)
    }

    /// Per-replicate split configurations at the inner level.
    pub(crate) fn replicates(&self) -> Result<Vec<SplitConfig>> {
        let inner = self.inner_alpha()?;
        let seeds = derive_seeds(self.base.seed, self.b);
        let rand_seeds = match self.base.randomization {
            Randomization::Seeded(s) => derive_seeds(Some(s), self.b),
            _ => vec![None; self.b],
        };
        (0..self.b)
            .map(|b| {
                Ok(SplitConfig {
                    alpha: inner,
                    rho: self.rho_at(b)?,
                    seed: seeds[b],
                    randomization: match rand_seeds[b] {
                        Some(s) => Randomization::Seeded(s),
                        None => self.base.randomization,
                    },
                    ..self.base.clone()
                })
            })
            .collect()
    }

    pub(crate) fn kept(&self) -> usize {
        kept_count(self.tau, self.b)
    }
}

#[derive(Debug, Clone)]
pub struct MsplitOutput {
    /// Componentwise median of the replicate predictions.
    pub pred: Vec<Vec<f64>>,
    pub regions: Vec<PredictionRegion>,
    pub inner_alpha: f64,
    /// Replicate regions, `[replicate][test row]`.
    pub replicates: Vec<Vec<PredictionRegion>>,
}

pub(crate) fn inner_level(alpha: f64, tau: f64, lambda: f64, b: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::BadTau(tau));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::BadLambda(lambda));
    }
    if b == 0 {
        return Err(Error::BadReplicates("B must be at least 1".into()));
    }
    let inner = alpha * (1.0 - tau + lambda / b as f64);
    if inner > 0.0 && inner < 1.0 {
        Ok(inner)
    } else {
        Err(Error::BadInnerAlpha(inner))
    }
}

/// Number of pooled bounds kept: all but the `ceil(2 tau B) - 1` least
/// conformal, i.e. those at or above the `ceil(2 tau B)`-th smallest
/// conformity.
pub(crate) fn kept_count(tau: f64, b: usize) -> usize {
    let level = ceil_rank(2.0 * tau * b as f64).clamp(1, 2 * b as i64) as usize;
    2 * b - level + 1
}

pub(crate) fn rho_for(rho: &[f64], fallback: f64, b: usize, count: usize) -> Result<f64> {
    match rho.len() {
        0 => Ok(fallback),
        1 => Ok(rho[0]),
        len if len == count => Ok(rho[b]),
        len => Err(Error::BadReplicates(format!(
            "{len} training proportions for {count} replicates"
        ))),
    }
}

/// Union of the points covered by strictly more than `tau * B` of the closed
/// intervals, as disjoint closed intervals in increasing order.
pub fn msplit_sweep(intervals: &[(f64, f64)], tau: f64) -> Vec<(f64, f64)> {
    let need = floor_rank(tau * intervals.len() as f64) + 1;
    let mut events: Vec<(f64, i64)> = Vec::with_capacity(2 * intervals.len());
    for &(lo, up) in intervals {
        events.push((lo, 1));
        events.push((up, -1));
    }
    // starts before ends at equal positions: intervals are closed
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let mut out = Vec::new();
    let mut count = 0i64;
    let mut open = 0.0;
    for (pos, delta) in events {
        if delta > 0 {
            count += 1;
            if count == need {
                open = pos;
            }
        } else {
            if count == need {
                out.push((open, pos));
            }
            count -= 1;
        }
    }
    out
}

/// Multi-split conformal prediction regions.
///
/// Runs `B` split-conformal replicates at the inner level. For `q = 1` the
/// region is the set covered by more than `tau B` replicate intervals, which
/// may be a union of intervals (or empty). For `q > 1` the `2B` replicate
/// bounds are pooled and ranked by the max score around the median replicate
/// prediction (scaled by the spread of the pooled bounds); the
/// `ceil(2 tau B) - 1` least conformal are dropped and the rest boxed.
pub fn msplit<M: Regressor + ?Sized>(
    ds: &TabularDataset,
    x0: &DMatrix<f64>,
    model: &M,
    cfg: &MsplitConfig,
) -> Result<MsplitOutput> {
    let inner_alpha = cfg.inner_alpha()?;
    let reps = cfg.replicates()?;
    let outs = reps
        .par_iter()
        .map(|c| split(ds, x0, model, c))
        .collect::<Result<Vec<SplitOutput>>>()?;
    let alpha = cfg.base.alpha;
    let q = ds.q();
    let k = cfg.kept();
    if cfg.b == 1 {
        log::warn!("msplit with B = 1 reduces to a single split");
    } else if k == 1 {
        log::warn!("msplit keeps a single pooled bound; the region has zero width");
    }
    let mut pred = Vec::with_capacity(x0.nrows());
    let mut regions = Vec::with_capacity(x0.nrows());
    for t in 0..x0.nrows() {
        let preds: Vec<MultiCurve> = outs
            .iter()
            .map(|o| o.pred[t].iter().map(|&v| vec![v]).collect())
            .collect();
        let center = median_curve(&preds)?;
        let center: Vec<f64> = center.into_iter().map(|c| c[0]).collect();
        let region = if q == 1 {
            let ivs: Vec<(f64, f64)> = outs
                .iter()
                .map(|o| (o.regions[t].lo[0], o.regions[t].up[0]))
                .collect();
            let pieces = msplit_sweep(&ivs, cfg.tau);
            let (lo, up) = match (pieces.first(), pieces.last()) {
                (Some(f), Some(l)) => (f.0, l.1),
                _ => (center[0], center[0]),
            };
            PredictionRegion {
                lo: vec![lo],
                up: vec![up],
                alpha,
                method: Method::Msplit,
                shape: RegionShape::Intervals(pieces),
            }
        } else {
            let as_curve = |v: &[f64]| -> MultiCurve { v.iter().map(|&x| vec![x]).collect() };
            let bounds: Vec<(MultiCurve, MultiCurve)> = outs
                .iter()
                .map(|o| (as_curve(&o.regions[t].lo), as_curve(&o.regions[t].up)))
                .collect();
            let pooled = pool_bounds(&bounds, &as_curve(&center), k)?;
            let (lo, up) = (pooled.lo, pooled.up);
            PredictionRegion::boxed(
                lo.into_iter().map(|c| c[0]).collect(),
                up.into_iter().map(|c| c[0]).collect(),
                alpha,
                Method::Msplit,
            )
        };
        pred.push(center);
        regions.push(region);
    }
    let replicates = outs.into_iter().map(|o| o.regions).collect();
    Ok(MsplitOutput {
        pred,
        regions,
        inner_alpha,
        replicates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate_tabular;
    use crate::regression::ols_model;

    #[test]
    fn sweep_three_intervals() {
        let ivs = [(0.0, 4.0), (1.0, 5.0), (2.0, 6.0)];
        assert_eq!(msplit_sweep(&ivs, 0.5), vec![(1.0, 5.0)]);
        assert_eq!(msplit_sweep(&ivs, 0.1), vec![(0.0, 6.0)]);
        assert_eq!(msplit_sweep(&ivs, 0.7), vec![(2.0, 4.0)]);
    }

    #[test]
    fn sweep_disjoint_union_and_empty() {
        let ivs = [(0.0, 1.0), (0.0, 1.0), (3.0, 4.0), (3.0, 4.0)];
        assert_eq!(msplit_sweep(&ivs, 0.25), vec![(0.0, 1.0), (3.0, 4.0)]);
        assert!(msplit_sweep(&[(0.0, 1.0), (2.0, 3.0)], 0.5).is_empty());
        // touching closed intervals merge
        assert_eq!(
            msplit_sweep(&[(0.0, 1.0), (1.0, 2.0)], 0.4),
            vec![(0.0, 2.0)]
        );
    }

    #[test]
    fn inner_alpha_checks() {
        let cfg = MsplitConfig {
            b: 10,
            tau: 0.5,
            lambda: 1.0,
            ..MsplitConfig::default()
        };
        assert!((cfg.inner_alpha().unwrap() - 0.1 * 0.6).abs() < 1e-15);
        let bad = MsplitConfig {
            lambda: 100.0,
            base: SplitConfig {
                alpha: 0.5,
                ..SplitConfig::default()
            },
            ..cfg.clone()
        };
        assert!(matches!(bad.inner_alpha(), Err(Error::BadInnerAlpha(_))));
        let zero = MsplitConfig {
            b: 0,
            ..cfg.clone()
        };
        assert!(zero.inner_alpha().is_err());
        let tau = MsplitConfig { tau: 1.0, ..cfg };
        assert_eq!(tau.inner_alpha(), Err(Error::BadTau(1.0)));
    }

    #[test]
    fn rho_vector_length() {
        let cfg = MsplitConfig {
            b: 3,
            rho: vec![0.5, 0.6],
            ..MsplitConfig::default()
        };
        assert!(matches!(cfg.replicates(), Err(Error::BadReplicates(_))));
    }

    #[test]
    fn seeded_runs_repeat() {
        let x = DMatrix::from_fn(40, 1, |i, _| i as f64 / 40.0);
        let y = DMatrix::from_fn(40, 2, |i, j| (i as f64 * 0.37 + j as f64).sin());
        let ds = validate_tabular(x, y).unwrap();
        let x0 = DMatrix::from_element(1, 1, 0.5);
        let cfg = MsplitConfig {
            b: 8,
            base: SplitConfig {
                seed: Some(11),
                ..SplitConfig::default()
            },
            ..MsplitConfig::default()
        };
        let a = msplit(&ds, &x0, &ols_model(), &cfg).unwrap();
        let b = msplit(&ds, &x0, &ols_model(), &cfg).unwrap();
        assert_eq!(a.regions, b.regions);
        assert!(a.regions[0]
            .lo
            .iter()
            .zip(&a.regions[0].up)
            .all(|(l, u)| l <= u));
    }
}
