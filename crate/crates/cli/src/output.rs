use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Significant decimal digits carried by `bits` binary digits, capped at
/// what an f64 holds.
pub fn digits_for(bits: u32) -> usize {
    ((bits as f64 * std::f64::consts::LOG10_2).floor() as usize).clamp(1, 17)
}

pub fn fmt_num(x: f64, bits: u32) -> String {
    if x.is_finite() {
        format!("{:.*e}", digits_for(bits) - 1, x)
    } else {
        x.to_string()
    }
}

pub fn fmt_opt(x: Option<f64>, bits: u32) -> String {
    x.map_or_else(String::new, |v| fmt_num(v, bits))
}

/// Collects artifacts written under one output directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes through a closure and records the file name.
    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<(), CliError>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::ComputeFailed { context: format!("serializing {name}"), message: e.to_string() })?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

pub fn csv_error(name: &str) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::ComputeFailed { context: format!("writing {name}"), message: e.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    PartialFailure,
}

/// Written last by every run; `config` reproduces the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub status: RunStatus,
    pub failed_points: usize,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))
    }
}

/// One named polyline of an SVG plot.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// A static SVG with one polyline per series, axes at the data bounds and
/// a label per series. Coordinates are printed with fixed decimals so the
/// file is reproducible.
pub fn svg_polylines(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (w, h, pad) = (640.0, 420.0, 60.0);
    let all = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        (x0, x1, y0, y1) = (x0.min(x), x1.max(x), y0.min(y), y1.max(y));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut out = String::new();
    out.push_str(&format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"));
    out.push_str(&format!("<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", w / 2.0, escape(title)));
    out.push_str(&format!(
        "<polyline points=\"{pad},{} {pad},{} {},{}\" fill=\"none\" stroke=\"black\"/>\n",
        pad,
        h - pad,
        w - pad,
        h - pad
    ));
    out.push_str(&format!("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n", w / 2.0, h - 20.0, escape(x_label)));
    out.push_str(&format!("<text x=\"16\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n", h / 2.0, h / 2.0, escape(y_label)));
    for (v, anchor_x, anchor_y) in [(x0, sx(x0), h - pad + 16.0), (x1, sx(x1), h - pad + 16.0)] {
        out.push_str(&format!("<text x=\"{anchor_x:.2}\" y=\"{anchor_y:.2}\" text-anchor=\"middle\" font-size=\"10\">{v:.4}</text>\n"));
    }
    for (v, y) in [(y0, sy(y0)), (y1, sy(y1))] {
        out.push_str(&format!("<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"10\">{v:.4}</text>\n", pad - 4.0, y + 3.0));
    }
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        out.push_str(&format!("<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>\n", pts.join(" ")));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"{colour}\">{}</text>\n",
            w - pad - 100.0,
            pad + 14.0 * i as f64,
            escape(&s.label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_counts() {
        assert_eq!(digits_for(53), 15);
        assert_eq!(digits_for(512), 17);
        assert_eq!(fmt_num(0.5, 53), "5.00000000000000e-1");
        assert_eq!(fmt_num(f64::INFINITY, 512), "inf");
    }

    #[test]
    fn svg_has_one_polyline_per_series_plus_axes() {
        let s = svg_polylines("t", "x", "y", &[Series { label: "a".into(), points: vec![(0.0, 1.0), (1.0, 2.0)] }, Series { label: "b<c".into(), points: vec![(0.5, 1.5)] }]);
        assert_eq!(s.matches("<polyline").count(), 3);
        assert!(s.contains("b&lt;c") && s.ends_with("</svg>\n"));
    }
}
