//! Error metrics, run summaries and plots.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::algebra::rational::{self, Rational};

use crate::bayesopt::Observation;
use crate::neural::Network;
use crate::scenarios::{Dataset, Split};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("relative squared error is undefined for a constant reference series")]
    ConstantTruth,
    #[error("relative absolute error is undefined for a zero reference value")]
    ZeroTruth,
    #[error("non-finite value in a series")]
    NonFinite,
    #[error("series lengths differ: {0} vs {1}")]
    Length(usize, usize),
}

/// `|est − truth| / |truth|`.
pub fn rae(est: f64, truth: f64) -> Result<f64, ReportError> {
    if truth == 0.0 {
        return Err(ReportError::ZeroTruth);
    }
    Ok((est - truth).abs() / truth.abs())
}

fn exact(v: f64) -> Result<Rational, ReportError> {
    rational::from_f64(v).ok_or(ReportError::NonFinite)
}

/// `Σ(pred − truth)² / Σ(truth − mean(truth))²`, evaluated exactly on the
/// binary values and rounded once.
pub fn rse(pred: &[f64], truth: &[f64]) -> Result<f64, ReportError> {
    if pred.len() != truth.len() {
        return Err(ReportError::Length(pred.len(), truth.len()));
    }
    let t: Vec<Rational> = truth.iter().map(|&v| exact(v)).collect::<Result<_, _>>()?;
    let p: Vec<Rational> = pred.iter().map(|&v| exact(v)).collect::<Result<_, _>>()?;
    if t.is_empty() {
        return Err(ReportError::ConstantTruth);
    }
    let mean = t.iter().sum::<Rational>() / Rational::from_integer(t.len().into());
    let num: Rational = p.iter().zip(&t).map(|(a, b)| (a - b) * (a - b)).sum();
    let den: Rational = t.iter().map(|b| (b - &mean) * (b - &mean)).sum();
    if den.is_zero() {
        return Err(ReportError::ConstantTruth);
    }
    Ok(rational::to_f64(&(num / den)))
}

/// One-pass RSE from running sums `n, Σt, Σt², Σ(p − t)²`, kept exact so
/// the result equals [`rse`] bit for bit.
#[derive(Debug, Clone, Default)]
pub struct RseAccumulator {
    n: usize,
    sum: Rational,
    sum_sq: Rational,
    sse: Rational,
    non_finite: bool,
}

impl RseAccumulator {
    pub fn push(&mut self, pred: f64, truth: f64) {
        let (Ok(p), Ok(t)) = (exact(pred), exact(truth)) else {
            self.non_finite = true;
            return;
        };
        self.n += 1;
        self.sse += (&p - &t) * (&p - &t);
        self.sum_sq += &t * &t;
        self.sum += t;
    }

    pub fn finish(&self) -> Result<f64, ReportError> {
        if self.non_finite {
            return Err(ReportError::NonFinite);
        }
        if self.n == 0 {
            return Err(ReportError::ConstantTruth);
        }
        let den = &self.sum_sq - &self.sum * &self.sum / Rational::from_integer(self.n.into());
        if den.is_zero() {
            return Err(ReportError::ConstantTruth);
        }
        Ok(rational::to_f64(&(&self.sse / den)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub target: String,
    pub split: String,
    pub value: f64,
}

/// Everything needed to recompute the metrics of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub mode: String,
    pub sigma: f64,
    pub seed: u64,
    /// Split that selected the checkpoint.
    pub selection: String,
    pub unknown: Vec<String>,
    pub theta_hat: Vec<f64>,
    pub theta_true: Vec<f64>,
    pub val_loss: f64,
    pub best_epoch: usize,
    pub s_star: Option<usize>,
}

fn predict(net: &Network, split: &Split) -> Vec<Vec<f64>> {
    let b = net.forward_batch(&split.times);
    (0..split.len()).map(|d| b.x.column(d).iter().copied().collect()).collect()
}

/// RAE of every unknown parameter, then RSE of every tracked state on the
/// test and validation points, against the noisy data (`test`, `val`) and
/// the noise-free solution (`test_clean`, `val_clean`). A state whose
/// reference series is constant gets `NaN`.
pub fn metrics(summary: &RunSummary, net: &Network, d: &Dataset) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for ((name, est), truth) in summary.unknown.iter().zip(&summary.theta_hat).zip(&summary.theta_true) {
        rows.push(MetricRow { metric: "RAE".into(), target: name.clone(), split: "all".into(), value: rae(*est, *truth).unwrap_or(f64::NAN) });
    }
    for (label, split) in [("test", &d.test), ("val", &d.val)] {
        let pred = predict(net, split);
        for (clean, reference) in [(false, &split.noisy), (true, &split.truth)] {
            for (i, state) in d.state_names.iter().enumerate() {
                let p: Vec<f64> = pred.iter().map(|x| x[i]).collect();
                let t: Vec<f64> = reference.iter().map(|x| x[i]).collect();
                rows.push(MetricRow {
                    metric: "RSE".into(),
                    target: state.clone(),
                    split: if clean { format!("{label}_clean") } else { label.into() },
                    value: rse(&p, &t).unwrap_or(f64::NAN),
                });
            }
        }
    }
    rows
}

pub fn lookup(rows: &[MetricRow], metric: &str, target: &str, split: &str) -> Option<f64> {
    rows.iter().find(|r| r.metric == metric && r.target == target && r.split == split).map(|r| r.value)
}

pub fn write_report_csv(rows: &[MetricRow], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "metric,target,split,value")?;
    for r in rows {
        writeln!(w, "{},{},{},{:?}", r.metric, r.target, r.split, r.value)?;
    }
    Ok(())
}

/// Network predictions next to the noise-free and noisy states.
pub fn write_predictions_csv(net: &Network, d: &Dataset, mut w: impl Write) -> std::io::Result<()> {
    let names = &d.state_names;
    let cols: Vec<String> = ["nn", "truth", "noisy"].iter().flat_map(|p| names.iter().map(move |s| format!("{p}_{s}"))).collect();
    writeln!(w, "split,t,{}", cols.join(","))?;
    for (label, split) in [("val", &d.val), ("test", &d.test)] {
        for (d, x) in predict(net, split).iter().enumerate() {
            let vals: Vec<String> = x.iter().chain(&split.truth[d]).chain(&split.noisy[d]).map(|v| format!("{v:?}")).collect();
            writeln!(w, "{label},{:?},{}", split.times[d], vals.join(","))?;
        }
    }
    Ok(())
}

const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

struct Panel {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let fx = (x - self.xr.0) / (self.xr.1 - self.xr.0).max(1e-300);
        let fy = (y - self.yr.0) / (self.yr.1 - self.yr.0).max(1e-300);
        (self.x0 + fx * self.w, self.y0 + self.h - fy * self.h)
    }

    fn frame(&self, svg: &mut String, title: &str, xlabel: &str) {
        let _ = writeln!(svg, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, self.x0, self.y0, self.w, self.h);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{title}</text>"#, self.x0 + self.w / 2.0, self.y0 - 6.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">{xlabel}</text>"#, self.x0 + self.w / 2.0, self.y0 + self.h + 28.0);
        for (v, anchor, x, y) in [
            (self.xr.0, "start", self.x0, self.y0 + self.h + 14.0),
            (self.xr.1, "end", self.x0 + self.w, self.y0 + self.h + 14.0),
            (self.yr.0, "end", self.x0 - 4.0, self.y0 + self.h),
            (self.yr.1, "end", self.x0 - 4.0, self.y0 + 10.0),
        ] {
            let _ = writeln!(svg, r#"<text x="{x}" y="{y}" font-size="10" text-anchor="{anchor}">{v:.3}</text>"#);
        }
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-9);
    (lo - pad, hi + pad)
}

fn svg_open(w: f64, h: f64) -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n")
}

/// One panel per tracked state: network curve, noise-free test points and
/// noisy training points.
pub fn states_svg(net: &Network, d: &Dataset, horizon: f64) -> String {
    let n = d.state_names.len();
    let (pw, ph) = (300.0, 200.0);
    let mut svg = svg_open(60.0 + n as f64 * (pw + 60.0), ph + 90.0);
    let grid: Vec<f64> = (0..=400).map(|k| horizon * k as f64 / 400.0).collect();
    let b = net.forward_batch(&grid);
    for (i, name) in d.state_names.iter().enumerate() {
        let curve: Vec<f64> = b.x.row(i).iter().copied().collect();
        let yr = range(curve.iter().copied().chain(d.test.truth.iter().map(|x| x[i])).chain(d.train.noisy.iter().map(|x| x[i])));
        let p = Panel { x0: 60.0 + i as f64 * (pw + 60.0), y0: 30.0, w: pw, h: ph, xr: (0.0, horizon), yr };
        p.frame(&mut svg, name, "t");
        let pts: Vec<String> = grid.iter().zip(&curve).map(|(&t, &v)| {
            let (x, y) = p.px(t, v);
            format!("{x:.1},{y:.1}")
        }).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, COLORS[0], pts.join(" "));
        for (t, x) in d.test.times.iter().zip(&d.test.truth) {
            let (cx, cy) = p.px(*t, x[i]);
            let _ = writeln!(svg, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="1.5" fill="black"/>"#);
        }
        for (t, x) in d.train.times.iter().zip(&d.train.noisy) {
            let (cx, cy) = p.px(*t, x[i]);
            let _ = writeln!(svg, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="2.5" fill="none" stroke="{}"/>"#, COLORS[1]);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// `log₁₀ E_val` against each parameter coordinate; the selected sample is
/// highlighted.
pub fn bo_svg(names: &[String], history: &[Observation], best: Option<usize>, box_range: (f64, f64)) -> String {
    let (pw, ph) = (300.0, 200.0);
    let mut svg = svg_open(60.0 + names.len().max(1) as f64 * (pw + 60.0), ph + 90.0);
    let logs: Vec<f64> = history.iter().map(|o| o.value.log10()).collect();
    let yr = range(logs.iter().copied());
    for (j, name) in names.iter().enumerate() {
        let p = Panel { x0: 60.0 + j as f64 * (pw + 60.0), y0: 30.0, w: pw, h: ph, xr: box_range, yr };
        p.frame(&mut svg, "log10 E_val", name);
        for (k, (o, l)) in history.iter().zip(&logs).enumerate() {
            if !l.is_finite() {
                continue;
            }
            let (cx, cy) = p.px(o.x[j], *l);
            let (r, c) = if Some(k) == best { (5.0, COLORS[1]) } else { (3.0, COLORS[0]) };
            let _ = writeln!(svg, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="{r}" fill="{c}"><title>s={}</title></circle>"#, k + 1);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `report.csv`, `predictions.csv` and `states_<scenario>.svg` (plus
/// `bo_<scenario>.svg` when there is a BO history) into `dir`.
pub fn emit_report(
    dir: &Path,
    summary: &RunSummary,
    net: &Network,
    d: &Dataset,
    history: &[Observation],
    box_range: (f64, f64),
    horizon: f64,
) -> std::io::Result<Vec<MetricRow>> {
    let rows = metrics(summary, net, d);
    write_report_csv(&rows, std::io::BufWriter::new(std::fs::File::create(dir.join("report.csv"))?))?;
    write_predictions_csv(net, d, std::io::BufWriter::new(std::fs::File::create(dir.join("predictions.csv"))?))?;
    std::fs::write(dir.join(format!("states_{}.svg", summary.scenario)), states_svg(net, d, horizon))?;
    if !history.is_empty() {
        std::fs::write(dir.join(format!("bo_{}.svg", summary.scenario)), bo_svg(&summary.unknown, history, summary.s_star, box_range))?;
    }
    Ok(rows)
}
