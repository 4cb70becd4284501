use nalgebra::DMatrix;

use super::linear::lstsq_min_norm;
use super::{FunctionalFit, FunctionalRegressor};
use crate::data::MultiCurve;
use crate::error::{Error, Result};

/// Pointwise cross-observation mean curve of each component.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanCurveModel;

pub fn mean_model_fd() -> MeanCurveModel {
    MeanCurveModel
}

struct MeanCurveFit {
    mean: MultiCurve,
}

impl FunctionalRegressor for MeanCurveModel {
    fn fit(
        &self,
        _x: &[MultiCurve],
        y: &[MultiCurve],
        _grids: &[Vec<f64>],
    ) -> Result<Box<dyn FunctionalFit>> {
        let first = y.first().ok_or(Error::EmptyTraining)?;
        let n = y.len() as f64;
        let mut mean: MultiCurve = first.iter().map(|c| vec![0.0; c.len()]).collect();
        for obs in y {
            for (acc, comp) in mean.iter_mut().zip(obs) {
                for (a, v) in acc.iter_mut().zip(comp) {
                    *a += v;
                }
            }
        }
        mean.iter_mut().flatten().for_each(|a| *a /= n);
        Ok(Box::new(MeanCurveFit { mean }))
    }
}

impl FunctionalFit for MeanCurveFit {
    fn predict(&self, x0: &[MultiCurve]) -> Result<Vec<MultiCurve>> {
        Ok(vec![self.mean.clone(); x0.len()])
    }
}

/// Concurrent linear model: at every grid point `s` of response component
/// `k`, `y_k(s) = b0(s) + sum_i b_i(s) x_i(s)`, fitted by least squares
/// independently per grid point.
///
/// Covariate curves must be evaluated on the response grid; a length-1
/// covariate is a scalar and is broadcast along the grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConcurrentModel;

pub fn concurrent_model() -> ConcurrentModel {
    ConcurrentModel
}

struct ConcurrentFit {
    p: usize,
    /// `coef[k][s]` holds `p + 1` coefficients, intercept first.
    coef: Vec<Vec<Vec<f64>>>,
}

fn covariate_at(obs: &MultiCurve, c: usize, s: usize, len: usize) -> Result<f64> {
    let curve = &obs[c];
    match curve.len() {
        1 => Ok(curve[0]),
        l if l == len => Ok(curve[s]),
        l => Err(Error::GridMismatch(format!(
            "covariate {c} has {l} evaluations, response grid has {len}"
        ))),
    }
}

fn covariate_count(x: &[MultiCurve]) -> Result<usize> {
    let p = x.first().map_or(0, |o| o.len());
    if x.iter().any(|o| o.len() != p) {
        return Err(Error::GridMismatch(
            "observations have different covariate counts".into(),
        ));
    }
    Ok(p)
}

impl FunctionalRegressor for ConcurrentModel {
    fn fit(
        &self,
        x: &[MultiCurve],
        y: &[MultiCurve],
        grids: &[Vec<f64>],
    ) -> Result<Box<dyn FunctionalFit>> {
        let n = y.len();
        if n == 0 {
            return Err(Error::EmptyTraining);
        }
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                x_rows: x.len(),
                y_rows: n,
            });
        }
        let p = covariate_count(x)?;
        let mut coef = Vec::with_capacity(grids.len());
        for (k, grid) in grids.iter().enumerate() {
            let len = grid.len();
            let mut per_point = Vec::with_capacity(len);
            for (s, _) in grid.iter().enumerate() {
                let mut design = DMatrix::from_element(n, p + 1, 1.0);
                for (i, obs) in x.iter().enumerate() {
                    for c in 0..p {
                        design[(i, c + 1)] = covariate_at(obs, c, s, len)?;
                    }
                }
                let resp = DMatrix::from_fn(n, 1, |i, _| y[i][k][s]);
                let beta = lstsq_min_norm(&design, &resp)?;
                per_point.push(beta.column(0).iter().copied().collect());
            }
            coef.push(per_point);
        }
        Ok(Box::new(ConcurrentFit { p, coef }))
    }
}

impl FunctionalFit for ConcurrentFit {
    fn predict(&self, x0: &[MultiCurve]) -> Result<Vec<MultiCurve>> {
        x0.iter()
            .map(|obs| {
                if obs.len() != self.p {
                    return Err(Error::GridMismatch(format!(
                        "test point has {} covariates, model was trained on {}",
                        obs.len(),
                        self.p
                    )));
                }
                self.coef
                    .iter()
                    .map(|per_point| {
                        let len = per_point.len();
                        per_point
                            .iter()
                            .enumerate()
                            .map(|(s, b)| {
                                let mut v = b[0];
                                for c in 0..self.p {
                                    v += b[c + 1] * covariate_at(obs, c, s, len)?;
                                }
                                Ok(v)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mean_curve() {
        let y = vec![vec![vec![0.0; 4]], vec![vec![2.0; 4]]];
        let fit = mean_model_fd()
            .fit(&[vec![], vec![]], &y, &[vec![0., 1., 2., 3.]])
            .unwrap();
        assert_eq!(fit.predict(&[vec![]]).unwrap(), vec![vec![vec![1.0; 4]]]);

        let single = vec![vec![vec![1.0, -2.0, 3.0]]];
        let fit = mean_model_fd()
            .fit(&[vec![]], &single, &[vec![0., 1., 2.]])
            .unwrap();
        assert_eq!(fit.predict(&[vec![]]).unwrap()[0], single[0]);

        assert!(matches!(
            mean_model_fd().fit(&[], &[], &[vec![0., 1.]]),
            Err(Error::EmptyTraining)
        ));
    }

    #[test]
    fn concurrent_intercept_only_is_mean() {
        let grids = vec![vec![0., 1., 2.]];
        let y = vec![
            vec![vec![1., 2., 3.]],
            vec![vec![3., 2., 1.]],
            vec![vec![2., 5., 2.]],
        ];
        let x = vec![vec![vec![1.0]]; 3];
        let fit = concurrent_model().fit(&x, &y, &grids).unwrap();
        let p = fit.predict(&[vec![vec![1.0]]]).unwrap();
        for (s, want) in [2.0, 3.0, 2.0].iter().enumerate() {
            assert_abs_diff_eq!(p[0][0][s], *want, epsilon = 1e-12);
        }
    }

    #[test]
    fn concurrent_exact_relation() {
        let grids = vec![vec![0., 0.5, 1.]];
        let x: Vec<MultiCurve> = (0..4)
            .map(|i| vec![vec![i as f64, (i * i) as f64 + 1.0, -(i as f64)]])
            .collect();
        let y: Vec<MultiCurve> = x
            .iter()
            .map(|o| vec![o[0].iter().map(|v| 2.0 * v).collect()])
            .collect();
        let fit = concurrent_model().fit(&x, &y, &grids).unwrap();
        let pred = fit.predict(&x).unwrap();
        for (p, t) in pred.iter().zip(&y) {
            for (a, b) in p[0].iter().zip(&t[0]) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn concurrent_hand_solved_cross_section() {
        let grids = vec![vec![0., 1.]];
        let x: Vec<MultiCurve> = [0., 1., 2.].iter().map(|&v| vec![vec![v, v]]).collect();
        let y: Vec<MultiCurve> = [1., 3., 5.].iter().map(|&v| vec![vec![v, v]]).collect();
        let fit = concurrent_model().fit(&x, &y, &grids).unwrap();
        let p = fit.predict(&[vec![vec![3.0, 3.0]]]).unwrap();
        // beta = (1, 2) at both points
        assert_abs_diff_eq!(p[0][0][0], 7.0, epsilon = 1e-10);
        assert_abs_diff_eq!(p[0][0][1], 7.0, epsilon = 1e-10);
    }

    #[test]
    fn concurrent_grid_mismatch() {
        let grids = vec![vec![0., 1., 2.]];
        let y = vec![vec![vec![0.; 3]]; 2];
        let x = vec![vec![vec![0.; 2]]; 2];
        assert!(matches!(
            concurrent_model().fit(&x, &y, &grids),
            Err(Error::GridMismatch(_))
        ));
    }
}
