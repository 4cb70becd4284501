//! SVG rendering of result documents.
//!
//! Full-conformal results become one p-value heatmap per test point; other
//! multivariate results become per-component interval glyphs; functional
//! results become one band panel per component, stacked vertically.

use std::fmt::Write as _;

use conformal_core::data::MultiCurve;
use serde_json::Value;

use crate::error::CliError;
use crate::output::{read_curves, read_num, read_nums, RESULT_SCHEMA};

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 240.0;
const MARGIN: f64 = 48.0;
const COLUMNS: usize = 3;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn unsupported(msg: impl Into<String>) -> CliError {
    CliError::UnsupportedResult(msg.into())
}

/// Fixed monotone ramp over [0, 1], dark to light.
pub fn ramp(v: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = v.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        Self {
            body: String::new(),
            width,
            height,
        }
    }

    fn push(&mut self, element: String) {
        self.body.push_str("  ");
        self.body.push_str(&element);
        self.body.push('\n');
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\" font-size=\"11\">\n  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn label(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

/// Plot area with data ranges mapped onto it.
struct Panel {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Panel {
    fn at(col: usize, row: usize, xr: (f64, f64), yr: (f64, f64)) -> Self {
        Self {
            x: col as f64 * (PANEL_W + MARGIN) + MARGIN,
            y: row as f64 * (PANEL_H + MARGIN) + MARGIN,
            w: PANEL_W,
            h: PANEL_H,
            xr: widen(xr),
            yr: widen(yr),
        }
    }

    fn px(&self, v: f64) -> f64 {
        let v = v.clamp(self.xr.0, self.xr.1);
        self.x + (v - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, v: f64) -> f64 {
        let v = v.clamp(self.yr.0, self.yr.1);
        self.y + self.h - (v - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn frame(&self, svg: &mut Svg, title: &str) {
        svg.push(format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
            self.x, self.y, self.w, self.h
        ));
        svg.push(format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\">{}</text>",
            self.x,
            self.y - 8.0,
            escape(title)
        ));
        let bottom = self.y + self.h + 14.0;
        svg.push(format!(
            "<text x=\"{:.2}\" y=\"{bottom:.2}\">{}</text>",
            self.x,
            label(self.xr.0)
        ));
        svg.push(format!(
            "<text x=\"{:.2}\" y=\"{bottom:.2}\" text-anchor=\"end\">{}</text>",
            self.x + self.w,
            label(self.xr.1)
        ));
        let left = self.x - 4.0;
        svg.push(format!(
            "<text x=\"{left:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            self.y + self.h,
            label(self.yr.0)
        ));
        svg.push(format!(
            "<text x=\"{left:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            self.y + 10.0,
            label(self.yr.1)
        ));
    }
}

fn widen((lo, hi): (f64, f64)) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn finite_range<'a>(values: impl IntoIterator<Item = &'a f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        })
}

fn path(points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = String::new();
    for (i, (x, y)) in points.into_iter().enumerate() {
        let _ = write!(out, "{}{x:.2},{y:.2}", if i == 0 { "" } else { " " });
    }
    out
}

/// Renders a result document as SVG.
pub fn render(doc: &Value) -> Result<String, CliError> {
    if doc.get("schema").and_then(Value::as_str) != Some(RESULT_SCHEMA) {
        return Err(unsupported("not a conformal result document"));
    }
    let points = doc
        .get("points")
        .and_then(Value::as_array)
        .filter(|p| !p.is_empty())
        .ok_or_else(|| unsupported("result has no points to plot"))?;
    let cfg = &doc["config"];
    let mode = cfg["mode"].as_str().unwrap_or_default();
    let method = cfg["method"].as_str().unwrap_or_default();
    let alpha = read_num(&cfg["alpha"]).unwrap_or(0.1);
    match (mode, method) {
        ("multi", "full") => heatmaps(points, alpha),
        ("multi", _) => intervals(points, method),
        ("fd", _) => bands(points, doc, method),
        _ => Err(unsupported(format!("unknown result kind {mode}/{method}"))),
    }
}

fn heatmaps(points: &[Value], alpha: f64) -> Result<String, CliError> {
    let cols = points.len().min(COLUMNS);
    let rows = points.len().div_ceil(COLUMNS);
    let mut svg = Svg::new(
        cols as f64 * (PANEL_W + MARGIN) + MARGIN,
        rows as f64 * (PANEL_H + MARGIN) + MARGIN,
    );
    for (i, point) in points.iter().enumerate() {
        let axes: Vec<Vec<f64>> = point["axes"]
            .as_array()
            .and_then(|a| a.iter().map(read_nums).collect())
            .ok_or_else(|| unsupported(format!("point {i} has no candidate axes")))?;
        let pvals = read_nums(&point["pvalues"])
            .ok_or_else(|| unsupported(format!("point {i} has no p-values")))?;
        let pred = read_nums(&point["pred"]).unwrap_or_default();
        let truth = read_nums(&point["y"]);
        let (col, row) = (i % COLUMNS, i / COLUMNS);
        let title = format!("test point {}", i + 1);
        match axes.len() {
            1 => {
                let a = &axes[0];
                let panel = Panel::at(col, row, finite_range(a), (0.0, 1.0));
                let step = if a.len() > 1 { a[1] - a[0] } else { 1.0 };
                for (c, (&v, &p)) in a.iter().zip(&pvals).enumerate() {
                    let x0 = panel.px(v - step / 2.0);
                    let x1 = panel.px(v + step / 2.0);
                    svg.push(format!(
                        "<rect x=\"{x0:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"><title>y={} delta={}</title></rect>",
                        panel.py(p),
                        (x1 - x0).max(0.5),
                        panel.py(0.0) - panel.py(p),
                        ramp(p),
                        label(v),
                        label(pvals[c])
                    ));
                }
                svg.push(format!(
                    "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>",
                    panel.px(panel.xr.0),
                    panel.px(panel.xr.1),
                    y = panel.py(alpha)
                ));
                marks(
                    &mut svg,
                    &panel,
                    pred.first().map(|&p| (p, 0.0)),
                    truth.as_ref().map(|t| (t[0], 0.0)),
                );
                panel.frame(&mut svg, &title);
            }
            2 => {
                let (a0, a1) = (&axes[0], &axes[1]);
                let panel = Panel::at(col, row, finite_range(a0), finite_range(a1));
                let s0 = if a0.len() > 1 { a0[1] - a0[0] } else { 1.0 };
                let s1 = if a1.len() > 1 { a1[1] - a1[0] } else { 1.0 };
                for (i0, &u) in a0.iter().enumerate() {
                    for (i1, &v) in a1.iter().enumerate() {
                        let p = pvals[i0 * a1.len() + i1];
                        let x0 = panel.px(u - s0 / 2.0);
                        let y0 = panel.py(v + s1 / 2.0);
                        svg.push(format!(
                            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                            panel.px(u + s0 / 2.0) - x0,
                            panel.py(v - s1 / 2.0) - y0,
                            ramp(p)
                        ));
                    }
                }
                marks(
                    &mut svg,
                    &panel,
                    (pred.len() == 2).then(|| (pred[0], pred[1])),
                    truth.filter(|t| t.len() == 2).map(|t| (t[0], t[1])),
                );
                panel.frame(&mut svg, &title);
            }
            q => {
                return Err(unsupported(format!(
                    "heatmaps need 1 or 2 response dimensions, got {q}"
                )))
            }
        }
    }
    Ok(svg.finish())
}

fn marks(svg: &mut Svg, panel: &Panel, pred: Option<(f64, f64)>, truth: Option<(f64, f64)>) {
    if let Some((u, v)) = pred {
        svg.push(format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"white\" stroke=\"black\"/>",
            panel.px(u),
            panel.py(v)
        ));
    }
    if let Some((u, v)) = truth {
        let (x, y) = (panel.px(u), panel.py(v));
        svg.push(format!(
            "<path d=\"M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}\" stroke=\"#d62728\" stroke-width=\"2\"/>",
            x - 4.0, y - 4.0, x + 4.0, y + 4.0, x - 4.0, y + 4.0, x + 4.0, y - 4.0
        ));
    }
}

fn intervals(points: &[Value], method: &str) -> Result<String, CliError> {
    let lo: Vec<Vec<f64>> = points
        .iter()
        .map(|p| read_nums(&p["lo"]))
        .collect::<Option<_>>()
        .ok_or_else(|| unsupported("points lack lower bounds"))?;
    let up: Vec<Vec<f64>> = points
        .iter()
        .map(|p| read_nums(&p["up"]))
        .collect::<Option<_>>()
        .ok_or_else(|| unsupported("points lack upper bounds"))?;
    let q = lo[0].len();
    let mut svg = Svg::new(
        PANEL_W + 2.0 * MARGIN,
        q as f64 * (PANEL_H + MARGIN) + MARGIN,
    );
    for j in 0..q {
        let mut values: Vec<f64> = Vec::new();
        for (i, p) in points.iter().enumerate() {
            values.extend([lo[i][j], up[i][j]]);
            values.extend(read_nums(&p["pred"]).and_then(|v| v.get(j).copied()));
            values.extend(read_nums(&p["y"]).and_then(|v| v.get(j).copied()));
        }
        let panel = Panel::at(
            0,
            j,
            (0.5, points.len() as f64 + 0.5),
            finite_range(&values),
        );
        for (i, p) in points.iter().enumerate() {
            let x = panel.px(i as f64 + 1.0);
            let pieces: Vec<(f64, f64)> = match p["region"]["kind"].as_str() {
                Some("intervals") => p["region"]["pieces"]
                    .as_array()
                    .map(|a| {
                        a.iter()
                            .filter_map(read_nums)
                            .map(|v| (v[0], v[1]))
                            .collect()
                    })
                    .unwrap_or_default(),
                _ => vec![(lo[i][j], up[i][j])],
            };
            for (a, b) in pieces {
                let dash = if a.is_finite() && b.is_finite() {
                    ""
                } else {
                    " stroke-dasharray=\"3 2\""
                };
                svg.push(format!(
                    "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"2\"{dash}/>",
                    panel.py(a),
                    panel.py(b),
                    PALETTE[0]
                ));
                for v in [a, b].into_iter().filter(|v| v.is_finite()) {
                    svg.push(format!(
                        "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{}\"/>",
                        x - 4.0,
                        x + 4.0,
                        PALETTE[0],
                        y = panel.py(v)
                    ));
                }
            }
            let pred = read_nums(&p["pred"]).and_then(|v| v.get(j).copied());
            let truth = read_nums(&p["y"]).and_then(|v| v.get(j).copied());
            marks(
                &mut svg,
                &panel,
                pred.map(|v| (i as f64 + 1.0, v)),
                truth.map(|v| (i as f64 + 1.0, v)),
            );
        }
        panel.frame(&mut svg, &format!("{method}: component {}", j + 1));
    }
    Ok(svg.finish())
}

/// lo, up, prediction and observed curve of one point.
type BandCurves = (
    MultiCurve,
    MultiCurve,
    Option<MultiCurve>,
    Option<MultiCurve>,
);

fn bands(points: &[Value], doc: &Value, method: &str) -> Result<String, CliError> {
    let grids: Vec<Vec<f64>> = doc["grids"]
        .as_array()
        .and_then(|a| a.iter().map(read_nums).collect())
        .ok_or_else(|| unsupported("functional result lacks grids"))?;
    let parsed: Vec<BandCurves> = points
        .iter()
        .map(|p| {
            Some((
                read_curves(&p["lo"])?,
                read_curves(&p["up"])?,
                read_curves(&p["pred"]),
                read_curves(&p["y"]),
            ))
        })
        .collect::<Option<_>>()
        .ok_or_else(|| unsupported("points lack band curves"))?;
    let mut svg = Svg::new(
        PANEL_W + 2.0 * MARGIN,
        grids.len() as f64 * (PANEL_H + MARGIN) + MARGIN,
    );
    for (j, grid) in grids.iter().enumerate() {
        let mut values = Vec::new();
        for (lo, up, pred, y) in &parsed {
            values.extend(&lo[j]);
            values.extend(&up[j]);
            if let Some(c) = pred {
                values.extend(&c[j]);
            }
            if let Some(c) = y {
                values.extend(&c[j]);
            }
        }
        let panel = Panel::at(0, j, finite_range(grid), finite_range(&values));
        for (i, (lo, up, pred, y)) in parsed.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let outline = path(
                grid.iter()
                    .zip(&lo[j])
                    .map(|(&t, &v)| (panel.px(t), panel.py(v)))
                    .chain(
                        grid.iter()
                            .zip(&up[j])
                            .rev()
                            .map(|(&t, &v)| (panel.px(t), panel.py(v))),
                    ),
            );
            svg.push(format!(
                "<polygon points=\"{outline}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"{color}\" stroke-width=\"0.8\"/>"
            ));
            if let Some(c) = pred {
                svg.push(format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                    path(grid.iter().zip(&c[j]).map(|(&t, &v)| (panel.px(t), panel.py(v))))
                ));
            }
            if let Some(c) = y {
                svg.push(format!(
                    "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\" stroke-dasharray=\"4 2\"/>",
                    path(grid.iter().zip(&c[j]).map(|(&t, &v)| (panel.px(t), panel.py(v))))
                ));
            }
        }
        panel.frame(&mut svg, &format!("{method}: component {}", j + 1));
    }
    Ok(svg.finish())
}
