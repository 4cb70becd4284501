//! Regression-model plug-in contract and the built-in models.
//!
//! Conformal methods only need *some* fixed fitting procedure, so they talk to
//! models through two small traits: [`Regressor`] (multivariate responses)
//! and [`FunctionalRegressor`] (grid-evaluated curves). A fit is boxed behind
//! [`Fitted`] / [`FunctionalFit`], which makes it impossible to pair a fit
//! with a different model's predict.
//!
//! Implementations must be deterministic and safe to call from several
//! threads at once: leave-one-out loops and replicate loops fit in parallel.

mod functional;
mod linear;

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::data::MultiCurve;
use crate::error::Result;

pub use functional::{concurrent_model, mean_model_fd, ConcurrentModel, MeanCurveModel};
pub use linear::{
    lstsq_min_norm, mean_model, ols_model, ridge_model, MeanModel, OlsModel, RidgeModel,
};

/// Trains on `n x p` features and `n x q` responses.
pub trait Regressor: Send + Sync {
    fn fit(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Box<dyn Fitted>>;
}

/// Output of [`Regressor::fit`]; predicts one row of `q` responses per test row.
pub trait Fitted: Send + Sync {
    fn predict(&self, x0: &DMatrix<f64>) -> Result<DMatrix<f64>>;
}

/// Trains on per-observation covariate curves (`n` rows of `p` curves, each of
/// grid length or length 1 for a scalar) and response curves on `grids`.
pub trait FunctionalRegressor: Send + Sync {
    fn fit(
        &self,
        x: &[MultiCurve],
        y: &[MultiCurve],
        grids: &[Vec<f64>],
    ) -> Result<Box<dyn FunctionalFit>>;
}

pub trait FunctionalFit: Send + Sync {
    fn predict(&self, x0: &[MultiCurve]) -> Result<Vec<MultiCurve>>;
}

impl<R: Regressor + ?Sized> Regressor for Arc<R> {
    fn fit(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Box<dyn Fitted>> {
        (**self).fit(x, y)
    }
}

impl<R: Regressor + ?Sized> Regressor for &R {
    fn fit(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Box<dyn Fitted>> {
        (**self).fit(x, y)
    }
}

impl<R: FunctionalRegressor + ?Sized> FunctionalRegressor for Arc<R> {
    fn fit(
        &self,
        x: &[MultiCurve],
        y: &[MultiCurve],
        grids: &[Vec<f64>],
    ) -> Result<Box<dyn FunctionalFit>> {
        (**self).fit(x, y, grids)
    }
}

impl<R: FunctionalRegressor + ?Sized> FunctionalRegressor for &R {
    fn fit(
        &self,
        x: &[MultiCurve],
        y: &[MultiCurve],
        grids: &[Vec<f64>],
    ) -> Result<Box<dyn FunctionalFit>> {
        (**self).fit(x, y, grids)
    }
}

type TrainFn<F> = dyn Fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<F> + Send + Sync;
type PredictFn<F> = dyn Fn(&F, &DMatrix<f64>) -> Result<DMatrix<f64>> + Send + Sync;

/// A model assembled from a train closure and a predict closure.
///
/// ```
/// use conformal_core::regression::{ModelSpec, Regressor};
/// use nalgebra::DMatrix;
///
/// // predicts the training maximum of each response column
/// let model = ModelSpec::new(
///     |_x, y| Ok(y.column_iter().map(|c| c.max()).collect::<Vec<f64>>()),
///     |fit, x0| Ok(DMatrix::from_fn(x0.nrows(), fit.len(), |_, j| fit[j])),
/// );
/// let x = DMatrix::zeros(3, 1);
/// let y = DMatrix::from_row_slice(3, 1, &[1.0, 4.0, 2.0]);
/// let pred = model.fit(&x, &y).unwrap().predict(&x).unwrap();
/// assert_eq!(pred[(0, 0)], 4.0);
/// ```
pub struct ModelSpec<F> {
    train: Arc<TrainFn<F>>,
    predict: Arc<PredictFn<F>>,
}

impl<F> Clone for ModelSpec<F> {
    fn clone(&self) -> Self {
        Self {
            train: Arc::clone(&self.train),
            predict: Arc::clone(&self.predict),
        }
    }
}

impl<F: Send + Sync + 'static> ModelSpec<F> {
    pub fn new<T, P>(train: T, predict: P) -> Self
    where
        T: Fn(&DMatrix<f64>, &DMatrix<f64>) -> Result<F> + Send + Sync + 'static,
        P: Fn(&F, &DMatrix<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        Self {
            train: Arc::new(train),
            predict: Arc::new(predict),
        }
    }
}

struct SpecFit<F> {
    params: F,
    predict: Arc<PredictFn<F>>,
}

impl<F: Send + Sync> Fitted for SpecFit<F> {
    fn predict(&self, x0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        (self.predict)(&self.params, x0)
    }
}

impl<F: Send + Sync + 'static> Regressor for ModelSpec<F> {
    fn fit(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Box<dyn Fitted>> {
        let params = (self.train)(x, y)?;
        Ok(Box::new(SpecFit {
            params,
            predict: Arc::clone(&self.predict),
        }))
    }
}
