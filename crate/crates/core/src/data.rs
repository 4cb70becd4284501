//! Datasets, splits, and the region types every method produces.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multivariate functional observation: `q` components, each a vector of
/// evaluations on that component's grid. Multivariate (non-functional)
/// values use length-1 components.
pub type MultiCurve = Vec<Vec<f64>>;

/// `n` observations of `p` features paired with `q` responses.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

/// Validates a feature/response pair.
///
/// `p = 0` is accepted: models that ignore features (the mean model) can be
/// run on response-only data.
pub fn validate_tabular(x: DMatrix<f64>, y: DMatrix<f64>) -> Result<TabularDataset> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            x_rows: x.nrows(),
            y_rows: y.nrows(),
        });
    }
    if y.nrows() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: y.nrows(),
        });
    }
    if y.ncols() == 0 {
        return Err(Error::GridMismatch("response has no columns".into()));
    }
    check_finite(&x, "x")?;
    check_finite(&y, "y")?;
    Ok(TabularDataset { x, y })
}

pub(crate) fn check_finite(m: &DMatrix<f64>, what: &'static str) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite {
                    what,
                    row: r,
                    col: c,
                });
            }
        }
    }
    Ok(())
}

impl TabularDataset {
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.y.ncols()
    }

    /// Rows `idx` of `x` and `y`, in the given order.
    pub fn rows(&self, idx: &[usize]) -> (DMatrix<f64>, DMatrix<f64>) {
        (self.x.select_rows(idx), self.y.select_rows(idx))
    }

    /// Every row except `skip`.
    pub fn without_row(&self, skip: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let keep: Vec<usize> = (0..self.n()).filter(|&i| i != skip).collect();
        self.rows(&keep)
    }
}

/// `n` multivariate functional observations sharing one grid per component.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grids: Vec<Vec<f64>>,
    y: Vec<MultiCurve>,
}

impl FunctionalDataset {
    pub fn new(grids: Vec<Vec<f64>>, y: Vec<MultiCurve>) -> Result<Self> {
        validate_grids(&grids)?;
        if y.len() < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                got: y.len(),
            });
        }
        for (i, obs) in y.iter().enumerate() {
            check_curve_shape(obs, &grids).map_err(|e| match e {
                Error::GridMismatch(m) => Error::GridMismatch(format!("observation {i}: {m}")),
                other => other,
            })?;
            for (j, comp) in obs.iter().enumerate() {
                if comp.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        what: "functional response",
                        row: i,
                        col: j,
                    });
                }
            }
        }
        Ok(Self { grids, y })
    }

    pub fn grids(&self) -> &[Vec<f64>] {
        &self.grids
    }

    pub fn y(&self) -> &[MultiCurve] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn q(&self) -> usize {
        self.grids.len()
    }

    pub fn select(&self, idx: &[usize]) -> Vec<MultiCurve> {
        idx.iter().map(|&i| self.y[i].clone()).collect()
    }
}

pub(crate) fn validate_grids(grids: &[Vec<f64>]) -> Result<()> {
    if grids.is_empty() {
        return Err(Error::GridMismatch("no response components".into()));
    }
    for (j, g) in grids.iter().enumerate() {
        if g.len() < 2 {
            return Err(Error::GridMismatch(format!(
                "grid {j} has {} points, need at least 2",
                g.len()
            )));
        }
        if g.iter().any(|t| !t.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch(format!(
                "grid {j} is not strictly increasing"
            )));
        }
    }
    Ok(())
}

pub(crate) fn check_curve_shape(curve: &MultiCurve, grids: &[Vec<f64>]) -> Result<()> {
    if curve.len() != grids.len() {
        return Err(Error::GridMismatch(format!(
            "{} components, expected {}",
            curve.len(),
            grids.len()
        )));
    }
    for (j, (c, g)) in curve.iter().zip(grids).enumerate() {
        if c.len() != g.len() {
            return Err(Error::GridMismatch(format!(
                "component {j} has {} evaluations, grid has {}",
                c.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// Partition of `0..n` into a training part and a calibration part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub calib: Vec<usize>,
}

impl SplitIndices {
    pub fn m(&self) -> usize {
        self.train.len()
    }

    pub fn l(&self) -> usize {
        self.calib.len()
    }
}

/// Splits `0..n` into training and calibration indices.
///
/// An explicit (0-based) training set takes precedence over the random split.
/// Otherwise the training part has `round(rho * n)` elements, clamped so both
/// parts are nonempty, drawn by a ChaCha8 shuffle seeded with `seed`. Without
/// a seed the split is drawn from OS entropy.
pub fn make_split(
    n: usize,
    rho: f64,
    seed: Option<u64>,
    explicit: Option<&[usize]>,
) -> Result<SplitIndices> {
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    if let Some(train) = explicit {
        return explicit_split(n, train);
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::BadRho(rho));
    }
    let m = ((rho * n as f64).round() as usize).clamp(1, n - 1);
    let mut rng = match seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s),
        None => ChaCha8Rng::from_os_rng(),
    };
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut train = perm[..m].to_vec();
    let mut calib = perm[m..].to_vec();
    train.sort_unstable();
    calib.sort_unstable();
    Ok(SplitIndices { train, calib })
}

fn explicit_split(n: usize, train: &[usize]) -> Result<SplitIndices> {
    let mut in_train = vec![false; n];
    for &i in train {
        if i >= n {
            return Err(Error::BadExplicit(format!("index {i} out of range 0..{n}")));
        }
        if in_train[i] {
            return Err(Error::BadExplicit(format!("index {i} repeated")));
        }
        in_train[i] = true;
    }
    if train.is_empty() || train.len() == n {
        return Err(Error::BadExplicit(format!(
            "training set has {} of {n} indices; both parts must be nonempty",
            train.len()
        )));
    }
    let (tr, ca): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_train[i]);
    Ok(SplitIndices {
        train: tr,
        calib: ca,
    })
}

/// Which procedure produced a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Full,
    Split,
    Msplit,
    Jackplus,
}

/// Exact geometry of a region whose bounding box is stored in
/// [`PredictionRegion::lo`] / [`PredictionRegion::up`].
#[derive(Debug, Clone, PartialEq)]
pub enum RegionShape {
    /// The box itself.
    Box,
    /// `{y : (y - center)' precision (y - center) <= radius}`.
    Ellipsoid {
        center: Vec<f64>,
        precision: Vec<Vec<f64>>,
        radius: f64,
    },
    /// Union of disjoint closed intervals (univariate only). Empty means the
    /// region contains no point.
    Intervals(Vec<(f64, f64)>),
}

/// Prediction region for one multivariate test point.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRegion {
    pub lo: Vec<f64>,
    pub up: Vec<f64>,
    pub alpha: f64,
    pub method: Method,
    pub shape: RegionShape,
}

impl PredictionRegion {
    pub fn boxed(lo: Vec<f64>, up: Vec<f64>, alpha: f64, method: Method) -> Self {
        debug_assert!(lo.iter().zip(&up).all(|(l, u)| l <= u));
        Self {
            lo,
            up,
            alpha,
            method,
            shape: RegionShape::Box,
        }
    }

    pub fn q(&self) -> usize {
        self.lo.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.up).all(|v| v.is_finite())
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.shape, RegionShape::Intervals(p) if p.is_empty())
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        if y.len() != self.q() {
            return false;
        }
        let in_box = y
            .iter()
            .zip(self.lo.iter().zip(&self.up))
            .all(|(v, (l, u))| *l <= *v && *v <= *u);
        if !in_box {
            return false;
        }
        match &self.shape {
            RegionShape::Box => true,
            RegionShape::Ellipsoid {
                center,
                precision,
                radius,
            } => quad_form(precision, center, y) <= *radius,
            RegionShape::Intervals(pieces) => pieces.iter().any(|&(l, u)| l <= y[0] && y[0] <= u),
        }
    }
}

fn quad_form(precision: &[Vec<f64>], center: &[f64], y: &[f64]) -> f64 {
    let r: Vec<f64> = y.iter().zip(center).map(|(a, b)| a - b).collect();
    let mut acc = 0.0;
    for (i, row) in precision.iter().enumerate() {
        for (j, pij) in row.iter().enumerate() {
            acc += r[i] * pij * r[j];
        }
    }
    acc
}

/// Lower/upper bound curves for one functional test point.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalBand {
    pub grids: Vec<Vec<f64>>,
    pub lo: MultiCurve,
    pub up: MultiCurve,
    pub pred: Option<MultiCurve>,
    pub alpha: f64,
    pub method: Method,
    /// Validation index the band is reported at, when no test covariates
    /// were supplied.
    pub at_index: Option<usize>,
}

impl FunctionalBand {
    pub fn q(&self) -> usize {
        self.grids.len()
    }

    /// True when `y` lies inside the band at every grid point.
    pub fn contains(&self, y: &MultiCurve) -> bool {
        y.len() == self.lo.len()
            && y.iter()
                .zip(self.lo.iter().zip(&self.up))
                .all(|(c, (l, u))| {
                    c.len() == l.len()
                        && c.iter()
                            .zip(l.iter().zip(u))
                            .all(|(v, (a, b))| *a <= *v && *v <= *b)
                })
    }
}

/// Full-conformal p-values over a rectangular candidate grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PValueSurface {
    pub x0: Vec<f64>,
    /// Prediction of the model trained on the original data.
    pub pred: Vec<f64>,
    /// Candidate values along each response dimension.
    pub axes: Vec<Vec<f64>>,
    /// One p-value per candidate, row-major with the last axis fastest.
    pub pvals: Vec<f64>,
    /// Training-set size; every p-value is a multiple of `1/(n+1)`.
    pub n: usize,
}

impl PValueSurface {
    pub fn len(&self) -> usize {
        self.pvals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvals.is_empty()
    }

    pub fn candidate(&self, idx: usize) -> Vec<f64> {
        candidate_at(&self.axes, idx)
    }

    /// Candidate indices inside the region at level `alpha`.
    pub fn members(&self, alpha: f64) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.pvals[i] > alpha).collect()
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| if a.len() > 1 { a[1] - a[0] } else { 0.0 })
            .product()
    }

    /// Grid approximation of the region volume at level `alpha`.
    pub fn size_at(&self, alpha: f64) -> f64 {
        self.members(alpha).len() as f64 * self.cell_volume()
    }

    /// Bounding box of the member candidates, if any.
    pub fn hull(&self, alpha: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let members = self.members(alpha);
        let first = self.candidate(*members.first()?);
        let (mut lo, mut up) = (first.clone(), first);
        for &i in &members[1..] {
            for (k, v) in self.candidate(i).into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                up[k] = up[k].max(v);
            }
        }
        Some((lo, up))
    }
}

pub(crate) fn candidate_at(axes: &[Vec<f64>], mut idx: usize) -> Vec<f64> {
    let mut out = vec![0.0; axes.len()];
    for (k, axis) in axes.iter().enumerate().rev() {
        out[k] = axis[idx % axis.len()];
        idx /= axis.len();
    }
    out
}

/// Size of a prediction region.
pub trait RegionSize {
    fn size(&self) -> f64;
}

/// Hyper-rectangle volume (or the exact ellipsoid volume / interval-union
/// length when the shape says so) for multivariate regions.
impl RegionSize for PredictionRegion {
    fn size(&self) -> f64 {
        match &self.shape {
            RegionShape::Box => self.lo.iter().zip(&self.up).map(|(l, u)| u - l).product(),
            RegionShape::Ellipsoid {
                precision, radius, ..
            } => ellipsoid_volume(precision, *radius),
            RegionShape::Intervals(pieces) => pieces.iter().map(|(l, u)| u - l).sum(),
        }
    }
}

/// Mean band width, averaged over grid points and then over components.
impl RegionSize for FunctionalBand {
    fn size(&self) -> f64 {
        let q = self.lo.len() as f64;
        self.lo
            .iter()
            .zip(&self.up)
            .map(|(l, u)| l.iter().zip(u).map(|(a, b)| b - a).sum::<f64>() / l.len() as f64)
            .sum::<f64>()
            / q
    }
}

pub fn region_size<R: RegionSize + ?Sized>(r: &R) -> f64 {
    r.size()
}

fn ellipsoid_volume(precision: &[Vec<f64>], radius: f64) -> f64 {
    let q = precision.len();
    if radius == 0.0 {
        return 0.0;
    }
    if !radius.is_finite() {
        return f64::INFINITY;
    }
    let m = DMatrix::from_fn(q, q, |i, j| precision[i][j]);
    let det = m.determinant();
    unit_ball_volume(q) * radius.powf(q as f64 / 2.0) / det.sqrt()
}

/// Volume of the unit ball in `q` dimensions.
pub fn unit_ball_volume(q: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_q = 2*pi/q * V_{q-2}
    let mut v = [1.0, 2.0];
    for k in 2..=q {
        let next = 2.0 * std::f64::consts::PI / k as f64 * v[k % 2];
        v[k % 2] = next;
    }
    v[q % 2]
}
