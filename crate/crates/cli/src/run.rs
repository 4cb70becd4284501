//! Dispatch from a resolved [`RunConfig`] to the library and assembly of the
//! result document.

use std::path::Path;

use conformal_core::data::{
    region_size, FunctionalBand, FunctionalDataset, MultiCurve, PValueSurface, PredictionRegion,
    TabularDataset,
};
use conformal_core::fd::{jackplus_fd, msplit_fd, split_fd, FdMsplitConfig, FdSplitConfig};
use conformal_core::multi::{
    candidate_pvalue, full, jackplus, msplit, split, FullConfig, MsplitConfig, Randomization,
    SplitConfig,
};
use conformal_core::regression::{
    concurrent_model, mean_model, mean_model_fd, ols_model, ridge_model, FunctionalRegressor,
    Regressor,
};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::config::{MethodName, Mode, ModelName, RunConfig, SType, ScoreArg};
use crate::error::CliError;
use crate::ingest::{ingest_functional, ingest_tabular};
use crate::output::{curves, num, nums, rows, shape, write_json, write_text, RESULT_SCHEMA};

pub enum MultiOutcome {
    Full(Vec<PValueSurface>),
    Regions {
        pred: Vec<Vec<f64>>,
        regions: Vec<PredictionRegion>,
        details: Value,
    },
}

pub struct FdOutcome {
    pub bands: Vec<FunctionalBand>,
    pub details: Value,
}

pub fn multi_model(cfg: &RunConfig) -> Result<Box<dyn Regressor>, CliError> {
    Ok(match cfg.model {
        ModelName::Mean => Box::new(mean_model()),
        ModelName::Ols => Box::new(ols_model()),
        ModelName::Ridge => Box::new(ridge_model(cfg.ridge_lambda.unwrap_or(1.0))?),
        ModelName::Concurrent => {
            return Err(CliError::Usage(
                "the concurrent model applies to fd only".into(),
            ))
        }
    })
}

pub fn fd_model(cfg: &RunConfig) -> Result<Box<dyn FunctionalRegressor>, CliError> {
    Ok(match cfg.model {
        ModelName::Mean => Box::new(mean_model_fd()),
        ModelName::Concurrent => Box::new(concurrent_model()),
        _ => {
            return Err(CliError::Usage(
                "fd supports the mean and concurrent models".into(),
            ))
        }
    })
}

fn explicit(cfg: &RunConfig) -> Option<Vec<usize>> {
    cfg.split
        .as_ref()
        .map(|s| s.iter().map(|i| i - 1).collect())
}

fn randomization(cfg: &RunConfig) -> Randomization {
    match (cfg.randomized, cfg.seed_rand) {
        (true, Some(s)) => Randomization::Seeded(s),
        (true, None) => Randomization::Seeded(0),
        _ => Randomization::Off,
    }
}

fn score(cfg: &RunConfig) -> ScoreArg {
    cfg.score.unwrap_or(ScoreArg::L2)
}

fn s_type(cfg: &RunConfig) -> SType {
    cfg.s_type.unwrap_or(SType::StDev)
}

fn split_config(cfg: &RunConfig) -> SplitConfig {
    SplitConfig {
        alpha: cfg.alpha,
        score: score(cfg).into(),
        s_type: s_type(cfg).into(),
        rho: cfg.rho.first().copied().unwrap_or(0.5),
        seed: cfg.seed,
        explicit: explicit(cfg),
        randomization: randomization(cfg),
        mad: None,
    }
}

fn fd_split_config(cfg: &RunConfig) -> FdSplitConfig {
    FdSplitConfig {
        alpha: cfg.alpha,
        s_type: s_type(cfg).into(),
        rho: cfg.rho.first().copied().unwrap_or(0.5),
        seed: cfg.seed,
        explicit: explicit(cfg),
        randomization: randomization(cfg),
    }
}

pub fn run_multi(
    cfg: &RunConfig,
    ds: &TabularDataset,
    x0: &DMatrix<f64>,
) -> Result<MultiOutcome, CliError> {
    let model = multi_model(cfg)?;
    let model = model.as_ref();
    Ok(match cfg.method {
        MethodName::Full => {
            let fc = FullConfig {
                alpha: cfg.alpha,
                score: score(cfg).into(),
                s_type: s_type(cfg).into(),
                num_grid_pts_dim: cfg.grid_pts.unwrap_or(100),
                grid_factor: cfg.grid_factor.unwrap_or(1.25),
                ..FullConfig::default()
            };
            MultiOutcome::Full(full(ds, x0, model, &fc)?)
        }
        MethodName::Split => {
            let out = split(ds, x0, model, &split_config(cfg))?;
            MultiOutcome::Regions {
                pred: out.pred,
                regions: out.regions,
                details: json!({
                    "k": out.k,
                    "d": num(out.d),
                    "tau": out.tau.map(num),
                    "train": rows(&out.split.train),
                    "calibration": rows(&out.split.calib),
                }),
            }
        }
        MethodName::Msplit => {
            let mc = MsplitConfig {
                b: cfg.b.unwrap_or(100),
                tau: cfg.tau.unwrap_or(0.1),
                lambda: cfg.lambda.unwrap_or(0.0),
                rho: cfg.rho.clone(),
                base: split_config(cfg),
            };
            let out = msplit(ds, x0, model, &mc)?;
            MultiOutcome::Regions {
                pred: out.pred,
                regions: out.regions,
                details: json!({"inner_alpha": num(out.inner_alpha)}),
            }
        }
        MethodName::Jackplus => {
            let out = jackplus(ds, x0, model, cfg.alpha)?;
            MultiOutcome::Regions {
                pred: out.pred,
                regions: out.regions,
                details: json!({}),
            }
        }
    })
}

/// Exact full-conformal p-value of an observed response.
pub fn observed_pvalue(
    cfg: &RunConfig,
    ds: &TabularDataset,
    x0: &[f64],
    y0: &[f64],
) -> Result<f64, CliError> {
    let model = multi_model(cfg)?;
    Ok(candidate_pvalue(
        ds.x(),
        ds.y(),
        x0,
        y0,
        model.as_ref(),
        score(cfg).into(),
        s_type(cfg).into(),
    )?)
}

pub fn run_fd(
    cfg: &RunConfig,
    ds: &FunctionalDataset,
    x: Option<&[MultiCurve]>,
    x0: Option<&[MultiCurve]>,
) -> Result<FdOutcome, CliError> {
    let model = fd_model(cfg)?;
    let model = model.as_ref();
    Ok(match cfg.method {
        MethodName::Full => {
            return Err(CliError::Usage(
                "full conformal is only available for multi".into(),
            ))
        }
        MethodName::Split => {
            let out = split_fd(ds, x, x0, model, &fd_split_config(cfg))?;
            FdOutcome {
                bands: out.bands,
                details: json!({
                    "k": out.k,
                    "d": num(out.d),
                    "tau": out.tau.map(num),
                    "train": rows(&out.split.train),
                    "calibration": rows(&out.split.calib),
                }),
            }
        }
        MethodName::Msplit => {
            let mc = FdMsplitConfig {
                b: cfg.b.unwrap_or(50),
                tau: cfg.tau.unwrap_or(0.5),
                lambda: cfg.lambda.unwrap_or(0.0),
                rho: cfg.rho.clone(),
                base: fd_split_config(cfg),
            };
            let out = msplit_fd(ds, x, x0, model, &mc)?;
            FdOutcome {
                bands: out.bands,
                details: json!({"inner_alpha": num(out.inner_alpha)}),
            }
        }
        MethodName::Jackplus => FdOutcome {
            bands: jackplus_fd(ds, x, x0, model, cfg.alpha)?.bands,
            details: json!({}),
        },
    })
}

fn header(cfg: &RunConfig) -> serde_json::Map<String, Value> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema".into(), json!(RESULT_SCHEMA));
    doc.insert(
        "config".into(),
        serde_json::to_value(cfg).expect("config serializes"),
    );
    doc
}

fn multi_document(cfg: &RunConfig) -> Result<Value, CliError> {
    let input = ingest_tabular(&cfg.input, &cfg.response)?;
    if input.x0.nrows() == 0 {
        return Err(CliError::Usage(format!(
            "{} has no test rows; mark them with is_test=1",
            cfg.input.display()
        )));
    }
    let outcome = run_multi(cfg, &input.ds, &input.x0)?;
    let mut points = Vec::with_capacity(input.x0.nrows());
    let details = match outcome {
        MultiOutcome::Full(surfaces) => {
            for (i, surf) in surfaces.iter().enumerate() {
                let mut point = json!({
                    "x0": nums(&surf.x0),
                    "pred": nums(&surf.pred),
                    "axes": Value::Array(surf.axes.iter().map(|a| nums(a)).collect()),
                    "pvalues": nums(&surf.pvals),
                    "size": num(surf.size_at(cfg.alpha)),
                    "hull": surf.hull(cfg.alpha).map(|(lo, up)| json!({"lo": nums(&lo), "up": nums(&up)})),
                });
                if let Some(y) = &input.y0[i] {
                    let p = observed_pvalue(cfg, &input.ds, &surf.x0, y)?;
                    point["y"] = nums(y);
                    point["pvalue_y"] = num(p);
                    point["covered"] = json!(p > cfg.alpha);
                }
                points.push(point);
            }
            json!({})
        }
        MultiOutcome::Regions {
            pred,
            regions,
            details,
        } => {
            for (i, (p, r)) in pred.iter().zip(&regions).enumerate() {
                let x0: Vec<f64> = input.x0.row(i).iter().copied().collect();
                let mut point = json!({
                    "x0": nums(&x0),
                    "pred": nums(p),
                    "lo": nums(&r.lo),
                    "up": nums(&r.up),
                    "region": shape(r),
                    "size": num(region_size(r)),
                });
                if let Some(y) = &input.y0[i] {
                    point["y"] = nums(y);
                    point["covered"] = json!(r.contains(y));
                }
                points.push(point);
            }
            details
        }
    };
    let mut doc = header(cfg);
    doc.insert("features".into(), json!(input.features));
    doc.insert("responses".into(), json!(input.responses));
    doc.insert("details".into(), details);
    doc.insert("points".into(), Value::Array(points));
    Ok(Value::Object(doc))
}

fn fd_document(cfg: &RunConfig) -> Result<Value, CliError> {
    let input = ingest_functional(&cfg.input)?;
    let x0 = input.x0();
    let outcome = run_fd(cfg, &input.ds, input.x.as_deref(), x0.as_deref())?;
    let points: Vec<Value> = outcome
        .bands
        .iter()
        .enumerate()
        .map(|(i, band)| {
            let mut point = json!({
                "lo": curves(&band.lo),
                "up": curves(&band.up),
                "pred": band.pred.as_ref().map(curves),
                "size": num(region_size(band)),
            });
            let truth = match band.at_index {
                Some(idx) => {
                    point["at_index"] = json!(idx + 1);
                    Some(input.ds.y()[idx].clone())
                }
                None => input.test.get(i).and_then(|t| t.y.clone()),
            };
            if let Some(y) = truth {
                point["covered"] = json!(band.contains(&y));
                point["y"] = curves(&y);
            }
            point
        })
        .collect();
    let mut doc = header(cfg);
    doc.insert(
        "grids".into(),
        Value::Array(input.ds.grids().iter().map(|g| nums(g)).collect()),
    );
    doc.insert("details".into(), outcome.details);
    doc.insert("points".into(), Value::Array(points));
    Ok(Value::Object(doc))
}

/// Runs `cfg` and returns the result document.
pub fn run_document(cfg: &RunConfig) -> Result<Value, CliError> {
    match cfg.mode {
        Mode::Multi => multi_document(cfg),
        Mode::Fd => fd_document(cfg),
    }
}

/// Runs `cfg`, writes the document to `output` and optionally an SVG plot.
pub fn execute(cfg: &RunConfig, output: &Path, plot: Option<&Path>) -> Result<Value, CliError> {
    let doc = run_document(cfg)?;
    write_json(output, &doc)?;
    if let Some(path) = plot {
        write_text(path, &crate::plot::render(&doc)?)?;
    }
    Ok(doc)
}
