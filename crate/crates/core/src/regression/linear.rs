use nalgebra::{DMatrix, DVector};

use super::{Fitted, Regressor};
use crate::error::{Error, Result};

/// Predicts the columnwise training mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanModel;

pub fn mean_model() -> MeanModel {
    MeanModel
}

struct MeanFit {
    mean: DVector<f64>,
}

impl Regressor for MeanModel {
    fn fit(&self, _x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Box<dyn Fitted>> {
        if y.nrows() == 0 {
            return Err(Error::EmptyTraining);
        }
        Ok(Box::new(MeanFit {
            mean: column_means(y),
        }))
    }
}

impl Fitted for MeanFit {
    fn predict(&self, x0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_fn(x0.nrows(), self.mean.len(), |_, j| {
            self.mean[j]
        }))
    }
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        m.ncols(),
        m.column_iter().map(|c| c.sum() / m.nrows() as f64),
    )
}

/// Per-component least squares with an intercept column.
///
/// Rank-deficient designs get the minimum-norm solution.
#[derive(Debug, Clone, Copy, Default)]
pub struct OlsModel;

pub fn ols_model() -> OlsModel {
    OlsModel
}

/// Fitted affine map `y = intercept + x * slopes`.
struct LinearFit {
    intercept: DVector<f64>,
    /// `p x q`
    slopes: DMatrix<f64>,
}

impl Fitted for LinearFit {
    fn predict(&self, x0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x0.ncols() != self.slopes.nrows() {
            return Err(Error::Model(format!(
                "test features have {} columns, model was trained on {}",
                x0.ncols(),
                self.slopes.nrows()
            )));
        }
        let mut out = x0 * &self.slopes;
        for mut row in out.row_iter_mut() {
            row += self.intercept.transpose();
        }
        Ok(out)
    }
}

impl Regressor for OlsModel {
    fn fit(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Box<dyn Fitted>> {
        let (n, p) = x.shape();
        if n == 0 {
            return Err(Error::EmptyTraining);
        }
        let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let beta = lstsq_min_norm(&design, y)?;
        Ok(Box::new(LinearFit {
            intercept: beta.row(0).transpose(),
            slopes: beta.rows(1, p).into_owned(),
        }))
    }
}

/// Minimum-norm least-squares solution of `a * x = b` through the SVD.
///
/// Singular values below `max(rows, cols) * eps * sigma_max` count as zero,
/// which is the usual pseudo-inverse cutoff.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.ncols() == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = a.nrows().max(a.ncols()) as f64 * f64::EPSILON * sigma_max;
    if sigma_max == 0.0 {
        return Ok(DMatrix::zeros(a.ncols(), b.ncols()));
    }
    svd.solve(b, tol).map_err(|e| Error::Model(e.to_string()))
}

/// Ridge regression with an unpenalized intercept; features are not
/// standardized.
#[derive(Debug, Clone, Copy)]
pub struct RidgeModel {
    lambda: f64,
}

pub fn ridge_model(lambda: f64) -> Result<RidgeModel> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::BadLambda(lambda));
    }
    Ok(RidgeModel { lambda })
}

impl RidgeModel {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Regressor for RidgeModel {
    fn fit(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Box<dyn Fitted>> {
        let (n, p) = x.shape();
        if n == 0 {
            return Err(Error::EmptyTraining);
        }
        let x_mean = column_means(x);
        let y_mean = column_means(y);
        // slopes solve the augmented system [Xc; sqrt(lambda) I] b = [yc; 0]
        let root = self.lambda.sqrt();
        let a = DMatrix::from_fn(n + p, p, |i, j| {
            if i < n {
                x[(i, j)] - x_mean[j]
            } else if i - n == j {
                root
            } else {
                0.0
            }
        });
        let b = DMatrix::from_fn(n + p, y.ncols(), |i, j| {
            if i < n {
                y[(i, j)] - y_mean[j]
            } else {
                0.0
            }
        });
        let slopes = lstsq_min_norm(&a, &b)?;
        let intercept = &y_mean - slopes.transpose() * &x_mean;
        Ok(Box::new(LinearFit { intercept, slopes }))
    }
}
