//! Input readers: delimited text for multivariate data, JSON for curves.

use std::path::Path;

use conformal_core::data::{validate_tabular, FunctionalDataset, MultiCurve, TabularDataset};
use conformal_core::Error;
use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::CliError;

pub const FD_INPUT_SCHEMA: &str = "conformal-fd-input/1";
const TEST_FLAG: &str = "is_test";

#[derive(Debug, Clone)]
pub struct TabularInput {
    pub ds: TabularDataset,
    /// Test feature rows.
    pub x0: DMatrix<f64>,
    /// Observed test responses, when the row carries them.
    pub y0: Vec<Option<Vec<f64>>>,
    pub features: Vec<String>,
    pub responses: Vec<String>,
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64, CliError> {
    raw.trim().parse::<f64>().map_err(|_| CliError::Parse {
        row,
        column: column.to_string(),
        value: raw.to_string(),
    })
}

fn parse_flag(raw: &str, row: usize) -> Result<bool, CliError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        _ => Err(CliError::Parse {
            row,
            column: TEST_FLAG.to_string(),
            value: raw.to_string(),
        }),
    }
}

/// Reads a comma-separated file with a header row. `responses` names the
/// response columns (the last column when empty); an optional `is_test`
/// column marks test rows, whose responses may be left blank. Row numbers in
/// errors count data rows from 1.
pub fn ingest_tabular(path: &Path, responses: &[String]) -> Result<TabularInput, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::io(format!("cannot open {}", path.display()), e))?;
    read_tabular(file, responses)
}

pub fn read_tabular<R: std::io::Read>(
    reader: R,
    responses: &[String],
) -> Result<TabularInput, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let flag_col = header.iter().position(|h| h == TEST_FLAG);
    let data_cols: Vec<usize> = (0..header.len()).filter(|&c| Some(c) != flag_col).collect();

    let resp_cols: Vec<usize> = if responses.is_empty() {
        vec![*data_cols
            .last()
            .ok_or_else(|| CliError::Csv("header has no data columns".into()))?]
    } else {
        responses
            .iter()
            .map(|name| {
                data_cols
                    .iter()
                    .copied()
                    .find(|&c| &header[c] == name)
                    .ok_or_else(|| CliError::MissingColumn(name.clone()))
            })
            .collect::<Result<_, _>>()?
    };
    let feat_cols: Vec<usize> = data_cols
        .iter()
        .copied()
        .filter(|c| !resp_cols.contains(c))
        .collect();

    let (mut x_train, mut y_train, mut x_test, mut y_test) = (vec![], vec![], vec![], vec![]);
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CliError::Csv(format!("row {row}: {e}")))?;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let is_test = match flag_col {
            Some(c) => parse_flag(cell(c), row)?,
            None => false,
        };
        let x: Vec<f64> = feat_cols
            .iter()
            .map(|&c| parse_cell(cell(c), row, &header[c]))
            .collect::<Result<_, _>>()?;
        let blank = resp_cols.iter().all(|&c| cell(c).is_empty());
        if is_test && blank {
            x_test.push(x);
            y_test.push(None);
            continue;
        }
        let y: Vec<f64> = resp_cols
            .iter()
            .map(|&c| parse_cell(cell(c), row, &header[c]))
            .collect::<Result<_, _>>()?;
        if is_test {
            x_test.push(x);
            y_test.push(Some(y));
        } else {
            x_train.push(x);
            y_train.push(y);
        }
    }

    let p = feat_cols.len();
    let q = resp_cols.len();
    let to_matrix =
        |rows: &[Vec<f64>], cols: usize| DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let ds = validate_tabular(to_matrix(&x_train, p), to_matrix(&y_train, q))?;
    let x0 = to_matrix(&x_test, p);
    for (i, row) in x_test.iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "x0",
                row: i,
                col: j,
            }
            .into());
        }
    }
    Ok(TabularInput {
        ds,
        x0,
        y0: y_test,
        features: feat_cols.iter().map(|&c| header[c].clone()).collect(),
        responses: resp_cols.iter().map(|&c| header[c].clone()).collect(),
    })
}

/// A covariate entry: a scalar or a curve on the response grid.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Covariate {
    Scalar(f64),
    Curve(Vec<f64>),
}

impl Covariate {
    fn into_curve(self) -> Vec<f64> {
        match self {
            Covariate::Scalar(v) => vec![v],
            Covariate::Curve(c) => c,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdDocument {
    #[serde(default)]
    schema: Option<String>,
    grids: Vec<Vec<f64>>,
    train: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    x: Option<Vec<Vec<Covariate>>>,
    #[serde(default)]
    test: Vec<FdTestDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FdTestDoc {
    #[serde(default)]
    x: Vec<Covariate>,
    #[serde(default)]
    y: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct FdTest {
    pub x: MultiCurve,
    pub y: Option<MultiCurve>,
}

#[derive(Debug, Clone)]
pub struct FunctionalInput {
    pub ds: FunctionalDataset,
    /// Training covariates, one list of curves per observation.
    pub x: Option<Vec<MultiCurve>>,
    pub test: Vec<FdTest>,
}

impl FunctionalInput {
    /// Test covariates, or `None` when the document has no test entries.
    pub fn x0(&self) -> Option<Vec<MultiCurve>> {
        (!self.test.is_empty()).then(|| self.test.iter().map(|t| t.x.clone()).collect())
    }
}

pub fn ingest_functional(path: &Path) -> Result<FunctionalInput, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    parse_functional(&text)
}

/// Parses the functional input document:
/// `{"schema": "conformal-fd-input/1", "grids": [[t..]; q], "train": [[[v..]; q]; n],
///   "x": [[cov..]; n], "test": [{"x": [cov..], "y": [[v..]; q]}]}`
/// where each covariate is a number or a curve. `schema`, `x` and `test`
/// are optional.
pub fn parse_functional(text: &str) -> Result<FunctionalInput, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: FdDocument = serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })?;
    if let Some(s) = &doc.schema {
        if s != FD_INPUT_SCHEMA {
            return Err(CliError::Schema {
                path: "schema".into(),
                msg: format!("unsupported schema {s:?}, expected {FD_INPUT_SCHEMA:?}"),
            });
        }
    }
    let ds = FunctionalDataset::new(doc.grids, doc.train)?;
    let x: Option<Vec<MultiCurve>> = doc.x.map(|rows| {
        rows.into_iter()
            .map(|r| r.into_iter().map(Covariate::into_curve).collect())
            .collect()
    });
    if let Some(x) = &x {
        if x.len() != ds.n() {
            return Err(Error::DimensionMismatch {
                x_rows: x.len(),
                y_rows: ds.n(),
            }
            .into());
        }
    }
    let mut test = Vec::with_capacity(doc.test.len());
    for (i, t) in doc.test.into_iter().enumerate() {
        let y = t.y;
        if let Some(y) = &y {
            check_curve(y, ds.grids(), &format!("test[{i}].y"))?;
        }
        test.push(FdTest {
            x: t.x.into_iter().map(Covariate::into_curve).collect(),
            y,
        });
    }
    Ok(FunctionalInput { ds, x, test })
}

fn check_curve(y: &MultiCurve, grids: &[Vec<f64>], what: &str) -> Result<(), CliError> {
    if y.len() != grids.len() {
        return Err(Error::GridMismatch(format!(
            "{what} has {} components, expected {}",
            y.len(),
            grids.len()
        ))
        .into());
    }
    for (j, (c, g)) in y.iter().zip(grids).enumerate() {
        if c.len() != g.len() {
            return Err(Error::GridMismatch(format!(
                "{what} component {j} has {} values, grid has {}",
                c.len(),
                g.len()
            ))
            .into());
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::GridMismatch(format!("{what} component {j} is not finite")).into());
        }
    }
    Ok(())
}
