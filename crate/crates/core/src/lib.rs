//! Conformal prediction regions for regression with multivariate and
//! multivariate functional responses.
//!
//! Four methods are provided for multivariate responses ([`multi`]): full
//! conformal, split conformal (classical and smoothed), jackknife+ and
//! multi-split conformal. Split, jackknife+ and multi-split are also
//! available for curves evaluated on grids ([`fd`]).
//!
//! Every method is generic over the regression model through the traits in
//! [`regression`]; [`scores`] holds the nonconformity scores, modulation
//! functions and the conformity-ranking machinery shared by all methods.
//!
//! ```
//! use conformal_core::data::validate_tabular;
//! use conformal_core::multi::{split, SplitConfig};
//! use conformal_core::regression::ols_model;
//! use nalgebra::DMatrix;
//!
//! let x = DMatrix::from_fn(40, 1, |i, _| i as f64);
//! let y = DMatrix::from_fn(40, 1, |i, _| 2.0 * i as f64 + (i % 3) as f64);
//! let ds = validate_tabular(x, y).unwrap();
//! let x0 = DMatrix::from_element(1, 1, 10.5);
//! let cfg = SplitConfig { seed: Some(1), ..SplitConfig::default() };
//! let out = split(&ds, &x0, &ols_model(), &cfg).unwrap();
//! assert!(out.regions[0].lo[0] <= out.pred[0][0]);
//! ```

pub mod data;
pub mod error;
pub mod fd;
pub mod multi;
pub mod regression;
pub mod scores;

pub use error::{Error, ErrorClass, Result};
