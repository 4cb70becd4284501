//! Leave-one-out evaluation: each observation is held out in turn, a region
//! is built at its covariates from the rest, and membership, size and wall
//! time are recorded.

use std::time::Instant;

use conformal_core::data::{region_size, validate_tabular, FunctionalDataset, MultiCurve};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::ingest::{ingest_functional, ingest_tabular};
use crate::output::{num, EVAL_SCHEMA};
use crate::run::{observed_pvalue, run_fd, run_multi, MultiOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fold {
    pub covered: bool,
    pub size: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub coverage: f64,
    pub mean_size: f64,
    pub mean_seconds: f64,
    pub folds: Vec<Fold>,
}

impl MethodSummary {
    fn from_folds(folds: Vec<Fold>) -> Self {
        let n = folds.len() as f64;
        Self {
            coverage: folds.iter().filter(|f| f.covered).count() as f64 / n,
            mean_size: folds.iter().map(|f| f.size).sum::<f64>() / n,
            mean_seconds: folds.iter().map(|f| f.seconds).sum::<f64>() / n,
            folds,
        }
    }
}

fn seconds_since(start: Instant) -> f64 {
    // the clock can report zero for very fast folds on coarse timers
    start.elapsed().as_secs_f64().max(1e-9)
}

fn too_few(n: usize) -> Result<(), CliError> {
    if n < 3 {
        return Err(conformal_core::Error::TooFewRows { needed: 3, got: n }.into());
    }
    Ok(())
}

/// Leave-one-out folds for a multivariate configuration. Test rows in the
/// input are ignored.
pub fn evaluate_multi(cfg: &RunConfig) -> Result<MethodSummary, CliError> {
    let input = ingest_tabular(&cfg.input, &cfg.response)?;
    let ds = input.ds;
    too_few(ds.n())?;
    let mut folds = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let fold = (|| {
            let (x, y) = ds.without_row(i);
            let rest = validate_tabular(x, y)?;
            let x0 = DMatrix::from_fn(1, ds.p(), |_, j| ds.x()[(i, j)]);
            let y0: Vec<f64> = ds.y().row(i).iter().copied().collect();
            let start = Instant::now();
            let outcome = run_multi(cfg, &rest, &x0)?;
            let seconds = seconds_since(start);
            Ok(match outcome {
                MultiOutcome::Full(surfaces) => {
                    let x0_row: Vec<f64> = x0.row(0).iter().copied().collect();
                    let p = observed_pvalue(cfg, &rest, &x0_row, &y0)?;
                    Fold {
                        covered: p > cfg.alpha,
                        size: surfaces[0].size_at(cfg.alpha),
                        seconds,
                    }
                }
                MultiOutcome::Regions { regions, .. } => Fold {
                    covered: regions[0].contains(&y0),
                    size: region_size(&regions[0]),
                    seconds,
                },
            })
        })()
        .map_err(|e: CliError| e.in_fold(i + 1))?;
        folds.push(fold);
    }
    Ok(MethodSummary::from_folds(folds))
}

/// Leave-one-out folds for a functional configuration.
pub fn evaluate_fd(cfg: &RunConfig) -> Result<MethodSummary, CliError> {
    let input = ingest_functional(&cfg.input)?;
    let ds = &input.ds;
    too_few(ds.n())?;
    let mut folds = Vec::with_capacity(ds.n());
    for i in 0..ds.n() {
        let fold = (|| {
            let keep: Vec<usize> = (0..ds.n()).filter(|&r| r != i).collect();
            let rest = FunctionalDataset::new(ds.grids().to_vec(), ds.select(&keep))?;
            let x: Option<Vec<MultiCurve>> = input
                .x
                .as_ref()
                .map(|x| keep.iter().map(|&r| x[r].clone()).collect());
            let x0 = vec![input.x.as_ref().map(|x| x[i].clone()).unwrap_or_default()];
            let start = Instant::now();
            let out = run_fd(cfg, &rest, x.as_deref(), Some(&x0))?;
            let seconds = seconds_since(start);
            Ok(Fold {
                covered: out.bands[0].contains(&ds.y()[i]),
                size: region_size(&out.bands[0]),
                seconds,
            })
        })()
        .map_err(|e: CliError| e.in_fold(i + 1))?;
        folds.push(fold);
    }
    Ok(MethodSummary::from_folds(folds))
}

pub fn evaluate(cfg: &RunConfig) -> Result<MethodSummary, CliError> {
    match cfg.mode {
        Mode::Multi => evaluate_multi(cfg),
        Mode::Fd => evaluate_fd(cfg),
    }
}

/// Report document over several evaluated configurations.
pub fn report(rows: &[(RunConfig, MethodSummary)]) -> Value {
    let methods: Vec<Value> = rows
        .iter()
        .map(|(cfg, s)| {
            json!({
                "method": cfg.method.name(),
                "config": serde_json::to_value(cfg).expect("config serializes"),
                "folds": s.folds.len(),
                "coverage": num(s.coverage),
                "mean_size": num(s.mean_size),
                "mean_time_s": num(s.mean_seconds),
                "per_fold": s.folds.iter().map(|f| json!({
                    "covered": f.covered,
                    "size": num(f.size),
                    "time_s": num(f.seconds),
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({"schema": EVAL_SCHEMA, "methods": methods})
}

/// Plain-text summary table.
pub fn table(rows: &[(RunConfig, MethodSummary)]) -> String {
    let mut out = format!(
        "{:<10} {:>9} {:>14} {:>12}\n",
        "method", "coverage", "mean size", "mean time s"
    );
    for (cfg, s) in rows {
        out.push_str(&format!(
            "{:<10} {:>9.3} {:>14.5} {:>12.6}\n",
            cfg.method.name(),
            s.coverage,
            s.mean_size,
            s.mean_seconds
        ));
    }
    out
}
