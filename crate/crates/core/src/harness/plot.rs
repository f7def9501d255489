use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{io_err, read_metrics, HarnessError};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Centered moving average; the window is truncated at both ends.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let (before, after) = ((window - 1) / 2, window / 2);
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(values.len() - 1);
            let s = &values[lo..=hi];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect()
}

/// Affine map from data coordinates to the SVG plot area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AxisMap {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl AxisMap {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        Self {
            x_range: padded_range(xs),
            y_range: padded_range(ys),
        }
    }

    pub fn x(&self, v: f64) -> f64 {
        let (lo, hi) = self.x_range;
        LEFT + (v - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)
    }

    pub fn y(&self, v: f64) -> f64 {
        let (lo, hi) = self.y_range;
        TOP + (hi - v) / (hi - lo) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Data extent, widened by ±1 when degenerate.
fn padded_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn legend_labels(paths: &[PathBuf]) -> Vec<String> {
    let stem = |p: &Path| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
    let stems: Vec<String> = paths.iter().map(|p| stem(p)).collect();
    let unique = stems.iter().collect::<HashSet<_>>().len() == stems.len();
    if unique {
        return stems;
    }
    let parents: Vec<String> = paths
        .iter()
        .map(|p| match p.parent().and_then(|d| d.file_name()) {
            Some(d) => format!("{}/{}", d.to_string_lossy(), stem(p)),
            None => stem(p),
        })
        .collect();
    if parents.iter().collect::<HashSet<_>>().len() == parents.len() {
        parents
    } else {
        paths.iter().map(|p| p.display().to_string()).collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64, span: f64) -> String {
    if span >= 20.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub(crate) fn render_svg(series: &[(String, Vec<(f64, f64)>)]) -> (String, AxisMap) {
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let map = AxisMap::new(pts.clone().map(|p| p.0), pts.map(|p| p.1));
    let mut svg = String::new();
    let w = |svg: &mut String, s: String| {
        svg.push_str(&s);
        svg.push('\n');
    };
    w(&mut svg, format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    ));
    w(&mut svg, format!(r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    w(&mut svg, format!(r#"<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="black"/>"#));
    w(&mut svg, format!(r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#));
    let (xl, xh) = map.x_range;
    let (yl, yh) = map.y_range;
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = xl + f * (xh - xl);
        let px = map.x(xv);
        w(&mut svg, format!(r#"<line x1="{px:.3}" y1="{y1}" x2="{px:.3}" y2="{}" stroke="black"/>"#, y1 + 5.0));
        w(&mut svg, format!(
            r#"<text x="{px:.3}" y="{}" text-anchor="middle">{}</text>"#,
            y1 + 20.0,
            tick_label(xv, xh - xl)
        ));
        let yv = yl + f * (yh - yl);
        let py = map.y(yv);
        w(&mut svg, format!(r#"<line x1="{}" y1="{py:.3}" x2="{x0}" y2="{py:.3}" stroke="black"/>"#, x0 - 5.0));
        w(&mut svg, format!(
            r#"<text x="{}" y="{:.3}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv, yh - yl)
        ));
    }
    w(&mut svg, format!(r#"<text x="{:.1}" y="{}" text-anchor="middle">episode</text>"#, (x0 + x1) / 2.0, HEIGHT - 8.0));
    w(&mut svg, format!(
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">total reward</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut coords = String::new();
        for (k, (x, y)) in pts.iter().enumerate() {
            if k > 0 {
                coords.push(' ');
            }
            let _ = write!(coords, "{:.3},{:.3}", map.x(*x), map.y(*y));
        }
        w(&mut svg, format!(r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>"#));
        let ly = TOP + 10.0 + 18.0 * i as f64;
        w(&mut svg, format!(
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#,
            x1 + 15.0,
            x1 + 35.0
        ));
        w(&mut svg, format!(r#"<text x="{}" y="{}">{}</text>"#, x1 + 40.0, ly + 4.0, escape(label)));
    }
    w(&mut svg, "</svg>".into());
    (svg, map)
}

/// Renders the smoothed total reward of each metrics file as one polyline.
pub fn emit_reward_graph(metrics_paths: &[PathBuf], out_path: &Path, smoothing_window: usize) -> Result<(), HarnessError> {
    if smoothing_window < 1 {
        return Err(HarnessError::Invalid("smoothing window must be >= 1".into()));
    }
    if metrics_paths.is_empty() {
        return Err(HarnessError::Invalid("no metrics files given".into()));
    }
    let labels = legend_labels(metrics_paths);
    let mut series = Vec::with_capacity(metrics_paths.len());
    for (path, label) in metrics_paths.iter().zip(labels) {
        let recs = read_metrics(path)?;
        let raw: Vec<f64> = recs.iter().map(|r| r.total_reward).collect();
        let smooth = moving_average(&raw, smoothing_window);
        let pts = recs.iter().zip(smooth).map(|(r, y)| (r.episode as f64, y)).collect();
        series.push((label, pts));
    }
    let (svg, _) = render_svg(&series);
    std::fs::write(out_path, svg).map_err(io_err(out_path))
}
