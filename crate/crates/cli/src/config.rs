use std::path::PathBuf;

use clap::{Args, ValueEnum};
use conformal_core::scores::{ModulationKind, ScoreKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Multi,
    Fd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Full,
    Split,
    Msplit,
    Jackplus,
}

impl MethodName {
    pub fn name(self) -> &'static str {
        match self {
            MethodName::Full => "full",
            MethodName::Split => "split",
            MethodName::Msplit => "msplit",
            MethodName::Jackplus => "jackplus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Mean,
    Ols,
    Ridge,
    Concurrent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreArg {
    L2,
    Mahalanobis,
    Max,
}

impl From<ScoreArg> for ScoreKind {
    fn from(s: ScoreArg) -> Self {
        match s {
            ScoreArg::L2 => ScoreKind::L2,
            ScoreArg::Mahalanobis => ScoreKind::Mahalanobis,
            ScoreArg::Max => ScoreKind::Max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SType {
    Identity,
    StDev,
    AlphaMax,
}

impl From<SType> for ModulationKind {
    fn from(s: SType) -> Self {
        match s {
            SType::Identity => ModulationKind::Identity,
            SType::StDev => ModulationKind::StDev,
            SType::AlphaMax => ModulationKind::AlphaMax,
        }
    }
}

/// Flags shared by every prediction command.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// CSV (multi) or JSON (fd) input file
    #[arg(long)]
    pub input: PathBuf,
    /// Result file (JSON)
    #[arg(long)]
    pub output: PathBuf,
    /// Optional SVG plot of the result
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Regression model [default: ols for multi, concurrent for fd]
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Penalty for --model ridge [default: 1]
    #[arg(long)]
    pub ridge_lambda: Option<f64>,
    /// Nonconformity score (multi only) [default: l2]
    #[arg(long, value_enum)]
    pub score: Option<ScoreArg>,
    /// Residual modulation [default: st-dev]
    #[arg(long, value_enum)]
    pub s_type: Option<SType>,
    /// Split seed; drawn at random and echoed when absent
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training proportion; msplit accepts one value per replicate
    #[arg(long, num_args = 1..)]
    pub rho: Vec<f64>,
    /// Explicit 1-based training rows, comma separated
    #[arg(long)]
    pub split: Option<String>,
    /// Smoothed (randomized) rank
    #[arg(long)]
    pub randomized: bool,
    /// Seed for the smoothed rank; drawn at random and echoed when absent
    #[arg(long, requires = "randomized")]
    pub seed_rand: Option<u64>,
    /// Replicates for msplit [default: 100 multi, 50 fd]
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// msplit joining level [default: 0.1 multi, 0.5 fd]
    #[arg(long)]
    pub tau: Option<f64>,
    /// msplit smoothing [default: 0]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Candidate points per response dimension for full [default: 100]
    #[arg(long)]
    pub grid_pts: Option<usize>,
    /// Candidate range factor for full [default: 1.25]
    #[arg(long)]
    pub grid_factor: Option<f64>,
    /// Response columns of the CSV input, comma separated [default: last column]
    #[arg(long)]
    pub response: Option<String>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Log seeds and progress to stderr
    #[arg(long)]
    pub verbose: bool,
}

/// Fully resolved run settings, echoed in every result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    pub method: MethodName,
    pub input: PathBuf,
    pub model: ModelName,
    #[serde(default)]
    pub ridge_lambda: Option<f64>,
    pub alpha: f64,
    #[serde(default)]
    pub score: Option<ScoreArg>,
    #[serde(default)]
    pub s_type: Option<SType>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub rho: Vec<f64>,
    #[serde(default)]
    pub split: Option<Vec<usize>>,
    #[serde(default)]
    pub randomized: bool,
    #[serde(default)]
    pub seed_rand: Option<u64>,
    #[serde(default, rename = "B")]
    pub b: Option<usize>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub grid_pts: Option<usize>,
    #[serde(default)]
    pub grid_factor: Option<f64>,
    #[serde(default)]
    pub response: Vec<String>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn reject(present: bool, flag: &str, method: MethodName, mode: Mode) -> Result<(), CliError> {
    if present {
        return Err(usage(format!(
            "{flag} does not apply to {} {}",
            match mode {
                Mode::Multi => "multi",
                Mode::Fd => "fd",
            },
            method.name()
        )));
    }
    Ok(())
}

fn parse_list(raw: &str, what: &str) -> Result<Vec<usize>, CliError> {
    raw.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v),
                _ => Err(usage(format!("{what}: {t:?} is not a 1-based row number"))),
            }
        })
        .collect()
}

impl RunArgs {
    /// Copy with the flags that `method` would reject cleared, so one flag
    /// set can drive several methods.
    pub fn restricted_to(&self, mode: Mode, method: MethodName) -> RunArgs {
        use MethodName::*;
        let mut a = self.clone();
        if !matches!(method, Split | Msplit) {
            a.seed = None;
            a.rho.clear();
            a.split = None;
            a.randomized = false;
            a.seed_rand = None;
        }
        if method != Msplit {
            (a.b, a.tau, a.lambda) = (None, None, None);
        }
        if method != Full {
            (a.grid_pts, a.grid_factor) = (None, None);
        }
        if method == Jackplus || mode == Mode::Fd {
            a.score = None;
        }
        if method == Jackplus {
            a.s_type = None;
        }
        if method == Split && a.rho.len() > 1 {
            a.rho.truncate(1);
        }
        a
    }

    /// Validates flags for `method` and fills in defaults. Missing seeds are
    /// drawn from OS entropy so the echoed configuration reproduces the run.
    pub fn resolve(&self, mode: Mode, method: MethodName) -> Result<RunConfig, CliError> {
        use MethodName::*;
        let split_like = matches!(method, Split | Msplit);
        if mode == Mode::Fd && method == Full {
            return Err(usage("full conformal is only available for multi"));
        }
        reject(!split_like && self.seed.is_some(), "--seed", method, mode)?;
        reject(!split_like && !self.rho.is_empty(), "--rho", method, mode)?;
        reject(!split_like && self.split.is_some(), "--split", method, mode)?;
        reject(!split_like && self.randomized, "--randomized", method, mode)?;
        reject(method != Msplit && self.b.is_some(), "--B", method, mode)?;
        reject(
            method != Msplit && self.tau.is_some(),
            "--tau",
            method,
            mode,
        )?;
        reject(
            method != Msplit && self.lambda.is_some(),
            "--lambda",
            method,
            mode,
        )?;
        reject(
            method != Full && self.grid_pts.is_some(),
            "--grid-pts",
            method,
            mode,
        )?;
        reject(
            method != Full && self.grid_factor.is_some(),
            "--grid-factor",
            method,
            mode,
        )?;
        reject(
            (method == Jackplus || mode == Mode::Fd) && self.score.is_some(),
            "--score",
            method,
            mode,
        )?;
        reject(
            method == Jackplus && self.s_type.is_some(),
            "--s-type",
            method,
            mode,
        )?;
        reject(
            mode == Mode::Fd && self.response.is_some(),
            "--response",
            method,
            mode,
        )?;
        if method == Split && self.rho.len() > 1 {
            return Err(usage("split takes a single --rho value"));
        }

        let model = self.model.unwrap_or(match mode {
            Mode::Multi => ModelName::Ols,
            Mode::Fd => ModelName::Concurrent,
        });
        match (mode, model) {
            (Mode::Multi, ModelName::Concurrent) => {
                return Err(usage("the concurrent model applies to fd only"))
            }
            (Mode::Fd, ModelName::Ols | ModelName::Ridge) => {
                return Err(usage("fd supports the mean and concurrent models"))
            }
            _ => {}
        }
        let ridge_lambda = match (model, self.ridge_lambda) {
            (ModelName::Ridge, l) => Some(l.unwrap_or(1.0)),
            (_, Some(_)) => return Err(usage("--ridge-lambda requires --model ridge")),
            (_, None) => None,
        };

        let msplit_defaults = match mode {
            Mode::Multi => (100, 0.1),
            Mode::Fd => (50, 0.5),
        };
        Ok(RunConfig {
            mode,
            method,
            input: self.input.clone(),
            model,
            ridge_lambda,
            alpha: self.alpha,
            score: match (mode, method) {
                (Mode::Multi, Full | Split | Msplit) => Some(self.score.unwrap_or(ScoreArg::L2)),
                _ => None,
            },
            s_type: match method {
                Jackplus => None,
                _ => Some(self.s_type.unwrap_or(SType::StDev)),
            },
            seed: split_like.then(|| self.seed.unwrap_or_else(rand::random)),
            rho: match method {
                Split | Msplit if self.rho.is_empty() => vec![0.5],
                _ => self.rho.clone(),
            },
            split: self
                .split
                .as_deref()
                .map(|s| parse_list(s, "--split"))
                .transpose()?,
            randomized: self.randomized,
            seed_rand: self
                .randomized
                .then(|| self.seed_rand.unwrap_or_else(rand::random)),
            b: (method == Msplit).then(|| self.b.unwrap_or(msplit_defaults.0)),
            tau: (method == Msplit).then(|| self.tau.unwrap_or(msplit_defaults.1)),
            lambda: (method == Msplit).then(|| self.lambda.unwrap_or(0.0)),
            grid_pts: (method == Full).then(|| self.grid_pts.unwrap_or(100)),
            grid_factor: (method == Full).then(|| self.grid_factor.unwrap_or(1.25)),
            response: self
                .response
                .as_deref()
                .map(|r| r.split(',').map(|c| c.trim().to_string()).collect())
                .unwrap_or_default(),
        })
    }
}
