//! Reporting helpers: atomic file output, curve smoothing, prediction
//! binning and self-contained SVG charts.
//!
//! CSV is always the primary artifact; the SVGs are derived views with no
//! plotting-runtime dependency. All numbers are formatted deterministically
//! so reruns produce byte-identical files.

use std::fs;
use std::io;
use std::path::Path;

/// Write `contents` to `path` via a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp_path = Path::new(&tmp);
    fs::write(tmp_path, contents)?;
    fs::rename(tmp_path, path)?;
    Ok(())
}

/// Centered moving average with edge shrinking; `window = 1` returns the
/// input unchanged. Even windows lean one point to the right.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 || values.is_empty() {
        return values.to_vec();
    }
    let left = (window - 1) / 2;
    let right = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right).min(values.len() - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Per-bin aggregate of predictions grouped by measured value.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedPrediction {
    pub center: f64,
    pub pred_mean: f64,
    pub pred_std: f64,
    pub count: usize,
}

/// Group `predicted` by equal-width bins of `measured` and aggregate each
/// non-empty bin. The top edge is inclusive; empty bins are omitted.
pub fn bin_by_measured(measured: &[f64], predicted: &[f64], bins: usize) -> Vec<BinnedPrediction> {
    assert_eq!(measured.len(), predicted.len());
    if measured.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = measured.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = measured.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        let mean = predicted.iter().sum::<f64>() / predicted.len() as f64;
        let var = predicted.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>()
            / predicted.len() as f64;
        return vec![BinnedPrediction {
            center: lo,
            pred_mean: mean,
            pred_std: var.sqrt(),
            count: predicted.len(),
        }];
    }
    let width = (hi - lo) / bins as f64;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (&m, &p) in measured.iter().zip(predicted) {
        let idx = (((m - lo) / width) as usize).min(bins - 1);
        groups[idx].push(p);
    }
    groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(i, g)| {
            let mean = g.iter().sum::<f64>() / g.len() as f64;
            let var = g.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / g.len() as f64;
            BinnedPrediction {
                center: lo + width * (i as f64 + 0.5),
                pred_mean: mean,
                pred_std: var.sqrt(),
                count: g.len(),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// SVG charts

const CHART_W: f64 = 720.0;
const CHART_H: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

/// One plotted line.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
    pub color: &'a str,
    pub dashed: bool,
}

/// Shaded (x, lo, hi) band, drawn under the series.
pub struct Band {
    pub points: Vec<(f64, f64, f64)>,
    pub color: &'static str,
}

pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    pub band: Option<Band>,
    /// Horizontal reference rule, e.g. a baseline MSE.
    pub hline: Option<(f64, &'a str)>,
}

struct Scale {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Scale {
    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x_min) / (self.x_max - self.x_min) * (CHART_W - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        CHART_H
            - MARGIN_B
            - (v - self.y_min) / (self.y_max - self.y_min) * (CHART_H - MARGIN_T - MARGIN_B)
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let formatted = if v.abs() >= 1000.0 || v.abs() < 0.01 {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    };
    formatted
}

impl Chart<'_> {
    pub fn to_svg(&self) -> String {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                xs.push(x);
                ys.push(y);
            }
        }
        if let Some(band) = &self.band {
            for &(x, lo, hi) in &band.points {
                xs.push(x);
                ys.push(lo);
                ys.push(hi);
            }
        }
        if let Some((y, _)) = self.hline {
            ys.push(y);
        }
        let (x_min, x_max) = padded_range(&xs);
        let (y_min, y_max) = padded_range(&ys);
        let scale = Scale { x_min, x_max, y_min, y_max };

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CHART_W}\" height=\"{CHART_H}\" \
             viewBox=\"0 0 {CHART_W} {CHART_H}\" font-family=\"sans-serif\">\n"
        ));
        svg.push_str(&format!(
            "<rect width=\"{CHART_W}\" height=\"{CHART_H}\" fill=\"white\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
            CHART_W / 2.0,
            xml_escape(self.title)
        ));

        // axes and ticks
        let x0 = MARGIN_L;
        let y0 = CHART_H - MARGIN_B;
        svg.push_str(&format!(
            "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{:.2}\" y2=\"{y0:.2}\" stroke=\"black\"/>\n",
            CHART_W - MARGIN_R
        ));
        svg.push_str(&format!(
            "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{MARGIN_T:.2}\" stroke=\"black\"/>\n"
        ));
        for i in 0..=4 {
            let fx = x_min + (x_max - x_min) * i as f64 / 4.0;
            let px = scale.x(fx);
            svg.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
                y0 + 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"11\">{}</text>\n",
                y0 + 18.0,
                fmt_tick(fx)
            ));
            let fy = y_min + (y_max - y_min) * i as f64 / 4.0;
            let py = scale.y(fy);
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0:.2}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
                x0 - 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
                x0 - 8.0,
                py + 4.0,
                fmt_tick(fy)
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
            (MARGIN_L + CHART_W - MARGIN_R) / 2.0,
            CHART_H - 12.0,
            xml_escape(self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" \
             transform=\"rotate(-90 16 {:.2})\">{}</text>\n",
            (MARGIN_T + CHART_H - MARGIN_B) / 2.0,
            (MARGIN_T + CHART_H - MARGIN_B) / 2.0,
            xml_escape(self.y_label)
        ));

        if let Some(band) = &self.band {
            let mut d = String::new();
            for &(x, lo, _) in &band.points {
                d.push_str(&format!("{:.2},{:.2} ", scale.x(x), scale.y(lo)));
            }
            for &(x, _, hi) in band.points.iter().rev() {
                d.push_str(&format!("{:.2},{:.2} ", scale.x(x), scale.y(hi)));
            }
            svg.push_str(&format!(
                "<polygon points=\"{}\" fill=\"{}\" opacity=\"0.3\"/>\n",
                d.trim_end(),
                band.color
            ));
        }

        if let Some((y, label)) = self.hline {
            let py = scale.y(y);
            svg.push_str(&format!(
                "<line x1=\"{x0:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" \
                 stroke=\"gray\" stroke-dasharray=\"6 3\"/>\n",
                CHART_W - MARGIN_R
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"11\" fill=\"gray\">{}</text>\n",
                CHART_W - MARGIN_R - 4.0,
                py - 5.0,
                xml_escape(label)
            ));
        }

        for s in &self.series {
            let pts: String = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", scale.x(x), scale.y(y)))
                .collect::<Vec<_>>()
                .join(" ");
            let dash = if s.dashed { " stroke-dasharray=\"5 4\"" } else { "" };
            svg.push_str(&format!(
                "<polyline points=\"{pts}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>\n",
                s.color
            ));
            for &(x, y) in &s.points {
                svg.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.4\" fill=\"{}\"/>\n",
                    scale.x(x),
                    scale.y(y),
                    s.color
                ));
            }
        }

        for (i, s) in self.series.iter().enumerate() {
            let ly = MARGIN_T + 14.0 * i as f64 + 8.0;
            let lx = CHART_W - MARGIN_R - 150.0;
            svg.push_str(&format!(
                "<line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{}\" stroke-width=\"1.6\"{}/>\n",
                lx + 22.0,
                s.color,
                if s.dashed { " stroke-dasharray=\"5 4\"" } else { "" }
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>\n",
                lx + 28.0,
                ly + 4.0,
                xml_escape(s.label)
            ));
        }

        svg.push_str("</svg>\n");
        svg
    }
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_average_window_one_is_identity() {
        let v = vec![3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(moving_average(&v, 1), v);
    }

    #[test]
    fn moving_average_window_three_centers() {
        let v = vec![0.0, 3.0, 6.0, 9.0];
        let s = moving_average(&v, 3);
        assert_eq!(s, vec![1.5, 3.0, 6.0, 7.5]);
    }

    #[test]
    fn binning_perfect_predictor_tracks_centers() {
        let measured: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let bins = bin_by_measured(&measured, &measured, 10);
        assert_eq!(bins.len(), 10);
        let half_width = (99.0 - 0.0) / 10.0 / 2.0;
        for b in &bins {
            assert!((b.pred_mean - b.center).abs() <= half_width);
        }
    }

    #[test]
    fn binning_constant_predictor() {
        let measured: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let predicted = vec![7.0; 50];
        for b in bin_by_measured(&measured, &predicted, 5) {
            assert_eq!(b.pred_mean, 7.0);
            assert_eq!(b.pred_std, 0.0);
        }
    }

    #[test]
    fn binning_omits_empty_bins() {
        // two clusters, 20 requested bins: most bins have no members
        let measured = vec![0.0, 0.1, 10.0, 10.1];
        let predicted = vec![1.0, 1.0, 2.0, 2.0];
        let bins = bin_by_measured(&measured, &predicted, 20);
        assert!(bins.len() <= 3);
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 4);
    }

    #[test]
    fn svg_output_is_deterministic_and_well_formed() {
        let chart = Chart {
            title: "test",
            x_label: "x",
            y_label: "y",
            series: vec![Series {
                label: "raw",
                points: vec![(1.0, 2.0), (2.0, 1.0), (3.0, 4.0)],
                color: "steelblue",
                dashed: false,
            }],
            band: None,
            hline: Some((2.0, "baseline")),
        };
        let a = chart.to_svg();
        let b = chart.to_svg();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert!(a.contains("baseline"));
    }

    #[test]
    fn write_atomic_round_trips(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("file.csv");
        write_atomic(&path, "a,b\n1,2\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        assert!(!path.with_extension("csv.tmp").exists());
    }
}
