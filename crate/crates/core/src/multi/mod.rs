//! Prediction regions for multivariate (`q >= 1`) responses.

mod full;
mod jackplus;
mod msplit;
mod split;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::regression::Regressor;
use crate::scores::{ModulationKind, ScoreKind};

pub use full::{candidate_pvalue, full, grid_axes, FullConfig};
pub use jackplus::{jackplus, JackplusOutput};
pub(crate) use msplit::{inner_level, kept_count, rho_for};
pub use msplit::{msplit, msplit_sweep, MsplitConfig, MsplitOutput};
pub use split::{split, split_rank, SplitOutput};

/// Tie randomization for split conformal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Randomization {
    /// Classical rank `ceil((l+1)(1-alpha))`.
    Off,
    /// Smoothed rank with `tau ~ U[0,1)` drawn from this seed.
    Seeded(u64),
    /// Smoothed rank with a fixed `tau`.
    Tau(f64),
}

impl Randomization {
    pub(crate) fn tau(self) -> Option<f64> {
        match self {
            Randomization::Off => None,
            Randomization::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed).random::<f64>()),
            Randomization::Tau(t) => Some(t),
        }
    }
}

/// Settings shared by split conformal and each multi-split replicate.
#[derive(Clone)]
pub struct SplitConfig {
    pub alpha: f64,
    pub score: ScoreKind,
    pub s_type: ModulationKind,
    pub rho: f64,
    /// Seed of the random split; `None` draws from OS entropy.
    pub seed: Option<u64>,
    /// 0-based training indices; overrides `rho` and `seed`.
    pub explicit: Option<Vec<usize>>,
    pub randomization: Randomization,
    /// Optional residual scaler trained on absolute training residuals; its
    /// predictions divide residuals on top of the modulation.
    pub mad: Option<Arc<dyn Regressor>>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            score: ScoreKind::L2,
            s_type: ModulationKind::StDev,
            rho: 0.5,
            seed: None,
            explicit: None,
            randomization: Randomization::Off,
            mad: None,
        }
    }
}

impl fmt::Debug for SplitConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitConfig")
            .field("alpha", &self.alpha)
            .field("score", &self.score)
            .field("s_type", &self.s_type)
            .field("rho", &self.rho)
            .field("seed", &self.seed)
            .field("explicit", &self.explicit)
            .field("randomization", &self.randomization)
            .field("mad", &self.mad.is_some())
            .finish()
    }
}

/// Independent seeds for `count` replicates, derived from `base`.
pub(crate) fn derive_seeds(base: Option<u64>, count: usize) -> Vec<Option<u64>> {
    match base {
        Some(s) => {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..count).map(|_| Some(rng.next_u64())).collect()
        }
        None => vec![None; count],
    }
}

pub(crate) fn residuals(y: &DMatrix<f64>, pred: &DMatrix<f64>) -> DMatrix<f64> {
    y - pred
}

pub(crate) fn row_vec(m: &DMatrix<f64>, i: usize) -> Vec<f64> {
    m.row(i).iter().copied().collect()
}

pub(crate) fn stack_rows(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let p = a.ncols();
    DMatrix::from_fn(a.nrows() + b.nrows(), p, |i, j| {
        if i < a.nrows() {
            a[(i, j)]
        } else {
            b[(i - a.nrows(), j)]
        }
    })
}

pub(crate) fn check_test_features(x0: &DMatrix<f64>, p: usize) -> crate::Result<()> {
    if x0.ncols() != p {
        return Err(crate::Error::Model(format!(
            "test features have {} columns, training features have {p}",
            x0.ncols()
        )));
    }
    crate::data::check_finite(x0, "x0")
}
