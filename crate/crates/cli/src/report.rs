//! report.json, CSV tables and SVG figures.

use lpkit_core::{Estimate, Result, Verdict};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;

pub const SCHEMA: &str = "lpkit-report/1";

/// One reported quantity. Numbers always travel with an uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metric {
    Num(Estimate),
    Nums(Vec<Estimate>),
    Count(u64),
    Flag(bool),
    Text(String),
}

impl Metric {
    pub fn exact(v: f64) -> Self {
        Metric::Num(Estimate::exact(v))
    }
}

impl From<Estimate> for Metric {
    fn from(e: Estimate) -> Self {
        Metric::Num(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub id: String,
    pub suite: String,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub metrics: BTreeMap<String, Metric>,
}

impl Check {
    pub fn new(suite: &str, id: &str) -> Self {
        Self { id: id.to_string(), suite: suite.to_string(), verdict: Verdict::Pass, note: None, metrics: BTreeMap::new() }
    }

    pub fn metric(mut self, k: &str, m: impl Into<Metric>) -> Self {
        self.metrics.insert(k.to_string(), m.into());
        self
    }

    pub fn num(self, k: &str, v: f64, u: f64) -> Self {
        self.metric(k, Estimate::new(v, u))
    }

    pub fn exact(self, k: &str, v: f64) -> Self {
        self.metric(k, Estimate::exact(v))
    }

    pub fn verdict(mut self, v: Verdict) -> Self {
        self.verdict = v;
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.note = Some(n.into());
        self
    }

    /// A check that could not be carried out for numerical reasons.
    pub fn unresolved(suite: &str, id: &str, err: &lpkit_core::Error) -> Self {
        Self::new(suite, id).verdict(Verdict::Inconclusive).note(err.to_string())
    }
}

impl From<u64> for Metric {
    fn from(v: u64) -> Self {
        Metric::Count(v)
    }
}

impl From<bool> for Metric {
    fn from(v: bool) -> Self {
        Metric::Flag(v)
    }
}

impl From<String> for Metric {
    fn from(v: String) -> Self {
        Metric::Text(v)
    }
}

impl From<Vec<Estimate>> for Metric {
    fn from(v: Vec<Estimate>) -> Self {
        Metric::Nums(v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: &'static str,
    pub suite: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub watermark: Option<String>,
    /// every configuration key in effect
    pub config: BTreeMap<String, String>,
    pub params: serde_json::Value,
    pub plan: serde_json::Value,
    /// pointwise 2^{λn/2} and norm 2^{λn} domination constants
    pub constants: BTreeMap<String, Estimate>,
    pub checks: Vec<Check>,
    pub verdict: Verdict,
    pub files: Vec<String>,
}

impl Report {
    pub fn overall(checks: &[Check]) -> Verdict {
        checks.iter().fold(Verdict::Pass, |v, c| v.and(c.verdict))
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
            Verdict::Inconclusive => 3,
        }
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn write(&self, dir: &Path) -> Result<String> {
        let rel = format!("tables/{}.csv", self.name);
        let mut w = csv::Writer::from_path(dir.join(&rel))?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(rel)
    }
}

/// Shortest round-trip formatting (stable across runs).
pub fn f(v: f64) -> String {
    format!("{v:e}")
}

/// A static log-log line chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// (label, points)
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

impl Figure {
    pub fn svg(&self) -> String {
        let (w, h, m) = (640.0, 420.0, 60.0);
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.1.iter().cloned())
            .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
            .map(|(x, y)| (x.log10(), y.log10()))
            .collect();
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" font-family=\"sans-serif\" font-size=\"12\">\n"
        ));
        out.push_str(&format!("<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"));
        out.push_str(&format!("<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{}</text>\n", w / 2.0, esc(&self.title)));
        if pts.is_empty() {
            out.push_str("</svg>\n");
            return out;
        }
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), (x, y)| (a.min(*x), b.max(*x), c.min(*y), d.max(*y)),
        );
        if x1 - x0 < 1e-9 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-9 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        out.push_str(&format!(
            "<path d=\"M{m} {m} V{} H{}\" fill=\"none\" stroke=\"black\"/>\n",
            h - m,
            w - m
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{} (log10, {:.2} to {:.2})</text>\n",
            w / 2.0,
            h - 20.0,
            esc(&self.x_label),
            x0,
            x1
        ));
        out.push_str(&format!(
            "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{} (log10, {:.2} to {:.2})</text>\n",
            h / 2.0,
            h / 2.0,
            esc(&self.y_label),
            y0,
            y1
        ));
        let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
        for (i, (label, s)) in self.series.iter().enumerate() {
            let c = colors[i % colors.len()];
            let coords: Vec<String> = s
                .iter()
                .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x.log10()), sy(y.log10())))
                .collect();
            if coords.is_empty() {
                continue;
            }
            out.push_str(&format!("<polyline points=\"{}\" fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\"/>\n", coords.join(" ")));
            for p in &coords {
                let (x, y) = p.split_once(',').expect("pair");
                out.push_str(&format!("<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{c}\"/>\n"));
            }
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"{c}\">{}</text>\n",
                w - m - 150.0,
                m + 16.0 * i as f64,
                esc(label)
            ));
        }
        out.push_str("</svg>\n");
        out
    }

    pub fn write(&self, dir: &Path) -> Result<String> {
        let rel = format!("figures/{}.svg", self.name);
        std::fs::write(dir.join(&rel), self.svg())?;
        Ok(rel)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overall_verdict_takes_the_worst() {
        let c = vec![Check::new("a", "x"), Check::new("a", "y").verdict(Verdict::Inconclusive)];
        assert_eq!(Report::overall(&c), Verdict::Inconclusive);
        let c = vec![Check::new("a", "x").verdict(Verdict::Fail), Check::new("a", "y").verdict(Verdict::Inconclusive)];
        assert_eq!(Report::overall(&c), Verdict::Fail);
        assert_eq!(Report::overall(&[]), Verdict::Pass);
    }

    #[test]
    fn svg_is_well_formed_for_empty_and_full_series() {
        let mut fig = Figure { name: "t".into(), title: "a < b".into(), x_label: "d".into(), y_label: "v".into(), series: vec![] };
        assert!(fig.svg().ends_with("</svg>\n"));
        fig.series.push(("s".into(), vec![(1.0, 1.0), (10.0, 0.1), (100.0, 0.0)]));
        let s = fig.svg();
        assert!(s.contains("polyline") && s.contains("a &lt; b"));
    }
}
