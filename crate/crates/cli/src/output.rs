//! JSON encoding helpers. Non-finite numbers are written as the strings
//! `"Infinity"`, `"-Infinity"` and `"NaN"`.

use std::path::Path;

use conformal_core::data::{MultiCurve, PredictionRegion, RegionShape};
use serde_json::{json, Value};

use crate::error::CliError;

pub const RESULT_SCHEMA: &str = "conformal-result/1";
pub const EVAL_SCHEMA: &str = "conformal-eval/1";

pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        json!("NaN")
    } else if v > 0.0 {
        json!("Infinity")
    } else {
        json!("-Infinity")
    }
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

pub fn curves(c: &MultiCurve) -> Value {
    Value::Array(c.iter().map(|v| nums(v)).collect())
}

/// Inverse of [`num`]; `None` for anything that is not a number.
pub fn read_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "Infinity" => Some(f64::INFINITY),
            "-Infinity" => Some(f64::NEG_INFINITY),
            "NaN" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

pub fn read_nums(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(read_num).collect()
}

pub fn read_curves(v: &Value) -> Option<MultiCurve> {
    v.as_array()?.iter().map(read_nums).collect()
}

pub fn shape(region: &PredictionRegion) -> Value {
    match &region.shape {
        RegionShape::Box => json!({"kind": "box"}),
        RegionShape::Ellipsoid {
            center,
            precision,
            radius,
        } => json!({
            "kind": "ellipsoid",
            "center": nums(center),
            "precision": Value::Array(precision.iter().map(|r| nums(r)).collect()),
            "radius": num(*radius),
        }),
        RegionShape::Intervals(pieces) => json!({
            "kind": "intervals",
            "pieces": Value::Array(pieces.iter().map(|&(l, u)| nums(&[l, u])).collect()),
        }),
    }
}

/// 1-based row numbers as written in documents.
pub fn rows(idx: &[usize]) -> Value {
    Value::Array(idx.iter().map(|&i| json!(i + 1)).collect())
}

pub fn write_json(path: &Path, doc: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).expect("json values always serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Schema {
        path: e.path().to_string(),
        msg: e.inner().to_string(),
    })
}
