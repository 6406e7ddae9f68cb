//! Static SVG figures: line charts (optionally log-y) and scatter plots with
//! contour overlays. Output depends only on the data, so reruns give
//! identical bytes.

use std::fmt::Write as _;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// A line segment in data coordinates.
pub type Segment = [(f64, f64); 2];

#[derive(Clone, Debug, PartialEq)]
pub enum PlotKind {
    Lines {
        x_label: String,
        y_label: String,
        log_y: bool,
        curves: Vec<(String, Vec<(f64, f64)>)>,
    },
    Scatter {
        x_label: String,
        y_label: String,
        points: Vec<(f64, f64)>,
        contours: Vec<Segment>,
        /// Fixed `(lower, upper)` corners; otherwise fitted to the points.
        bounds: Option<([f64; 2], [f64; 2])>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Plot {
    /// File stem of the emitted SVG.
    pub name: String,
    pub title: String,
    pub kind: PlotKind,
}

struct Frame {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    x: (f64, f64),
    y: (f64, f64),
    log_y: bool,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * (self.right - self.left)
    }

    fn py(&self, y: f64) -> f64 {
        let (v, lo, hi) = if self.log_y {
            (y.log10(), self.y.0.log10(), self.y.1.log10())
        } else {
            (y, self.y.0, self.y.1)
        };
        self.bottom - (v - lo) / (hi - lo) * (self.bottom - self.top)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Range of the finite values, widened when empty or degenerate.
fn range(values: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return if log { (0.1, 1.0) } else { (0.0, 1.0) };
    }
    if log {
        let (a, b) = (lo.log10().floor(), hi.log10().ceil());
        let b = if b <= a { a + 1.0 } else { b };
        (10f64.powf(a), 10f64.powf(b))
    } else if hi - lo < 1e-12 * lo.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Roughly `n` round tick positions covering `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let raw = (hi - lo) / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn format_tick(v: f64, step: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.abs() >= 1e5 || v.abs() < 1e-3 {
        return format!("{v:.0e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

fn open_svg(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        f.left,
        f.top,
        f.right - f.left,
        f.bottom - f.top
    );
    let (xt, xs) = linear_ticks(f.x.0, f.x.1, 6);
    for t in xt {
        let x = f.px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.bottom,
            f.bottom + 5.0,
            f.bottom + 20.0,
            format_tick(t, xs)
        );
    }
    let yticks: Vec<(f64, String)> = if f.log_y {
        let (a, b) = (f.y.0.log10().round() as i32, f.y.1.log10().round() as i32);
        (a..=b).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
    } else {
        let (yt, ys) = linear_ticks(f.y.0, f.y.1, 6);
        yt.into_iter().map(|t| (t, format_tick(t, ys))).collect()
    };
    for (t, label) in yticks {
        let y = f.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            f.left - 5.0,
            f.left,
            f.left - 8.0,
            y + 4.0,
            label
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (f.left + f.right) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let cy = (f.top + f.bottom) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="20" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 20 {cy:.2})">{}</text>"#,
        escape(y_label)
    );
}

/// Renders `plot` as an 800×600 SVG document.
pub fn render_svg(plot: &Plot) -> String {
    let mut out = String::new();
    open_svg(&mut out, &plot.title);
    match &plot.kind {
        PlotKind::Lines {
            x_label,
            y_label,
            log_y,
            curves,
        } => {
            let pts = || curves.iter().flat_map(|(_, p)| p.iter());
            let f = Frame {
                left: 80.0,
                right: WIDTH - 190.0,
                top: 45.0,
                bottom: HEIGHT - 60.0,
                x: range(pts().map(|p| p.0), false),
                y: range(pts().map(|p| p.1), *log_y),
                log_y: *log_y,
            };
            axes(&mut out, &f, x_label, y_label);
            for (i, (label, points)) in curves.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                // Non-finite or (on a log axis) non-positive values break the line.
                let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
                for &(x, y) in points {
                    if x.is_finite() && y.is_finite() && (!log_y || y > 0.0) {
                        runs.last_mut().expect("nonempty").push((f.px(x), f.py(y)));
                    } else if !runs.last().expect("nonempty").is_empty() {
                        runs.push(Vec::new());
                    }
                }
                for run in runs.iter().filter(|r| !r.is_empty()) {
                    let mut d = String::new();
                    for (x, y) in run {
                        let _ = write!(d, "{x:.2},{y:.2} ");
                    }
                    let _ = writeln!(
                        out,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                        d.trim_end()
                    );
                }
                let ly = f.top + 10.0 + 20.0 * i as f64;
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                    f.right + 15.0,
                    f.right + 40.0,
                    f.right + 46.0,
                    ly + 4.0,
                    escape(label)
                );
            }
        }
        PlotKind::Scatter {
            x_label,
            y_label,
            points,
            contours,
            bounds,
        } => {
            let (x, y) = match bounds {
                Some((lo, hi)) => ((lo[0], hi[0]), (lo[1], hi[1])),
                None => (
                    range(points.iter().map(|p| p.0), false),
                    range(points.iter().map(|p| p.1), false),
                ),
            };
            let f = Frame {
                left: 80.0,
                right: WIDTH - 40.0,
                top: 45.0,
                bottom: HEIGHT - 60.0,
                x,
                y,
                log_y: false,
            };
            axes(&mut out, &f, x_label, y_label);
            let inside = |(a, b): (f64, f64)| a >= f.x.0 && a <= f.x.1 && b >= f.y.0 && b <= f.y.1;
            for &(a, b) in points.iter().filter(|p| p.0.is_finite() && p.1.is_finite() && inside(**p)) {
                let _ = writeln!(
                    out,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#1f77b4" fill-opacity="0.5"/>"##,
                    f.px(a),
                    f.py(b)
                );
            }
            if !contours.is_empty() {
                let mut d = String::new();
                for [p, q] in contours {
                    let _ = write!(d, "M{:.2},{:.2}L{:.2},{:.2}", f.px(p.0), f.py(p.1), f.px(q.0), f.py(q.1));
                }
                let _ = writeln!(out, r##"<path d="{d}" fill="none" stroke="#444" stroke-width="1"/>"##);
            }
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Marching-squares contour of `grid` at `level`. `grid[j][i]` is the value
/// at `x = lo[0] + i·Δx`, `y = lo[1] + j·Δy` on a regular grid spanning
/// `[lo, hi]`.
pub fn contour_segments(grid: &[Vec<f64>], lo: [f64; 2], hi: [f64; 2], level: f64) -> Vec<Segment> {
    let ny = grid.len();
    let nx = grid.first().map_or(0, Vec::len);
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let dx = (hi[0] - lo[0]) / (nx - 1) as f64;
    let dy = (hi[1] - lo[1]) / (ny - 1) as f64;
    let at = |i: usize, j: usize| (lo[0] + i as f64 * dx, lo[1] + j as f64 * dy);
    // Point on the edge between two corners where the field crosses `level`.
    let cross = |(p, a): ((f64, f64), f64), (q, b): ((f64, f64), f64)| {
        let t = if a == b { 0.5 } else { (level - a) / (b - a) };
        (p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1))
    };
    let mut out = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            // Corners counterclockwise from bottom-left.
            let c = [
                (at(i, j), grid[j][i]),
                (at(i + 1, j), grid[j][i + 1]),
                (at(i + 1, j + 1), grid[j + 1][i + 1]),
                (at(i, j + 1), grid[j + 1][i]),
            ];
            if c.iter().any(|(_, v)| !v.is_finite()) {
                continue;
            }
            let above: Vec<bool> = c.iter().map(|(_, v)| *v >= level).collect();
            let edges: Vec<(f64, f64)> = (0..4)
                .filter(|&e| above[e] != above[(e + 1) % 4])
                .map(|e| cross(c[e], c[(e + 1) % 4]))
                .collect();
            match edges.len() {
                2 => out.push([edges[0], edges[1]]),
                4 => {
                    // Saddle: the cell centre decides which corners connect.
                    let centre = c.iter().map(|(_, v)| v).sum::<f64>() / 4.0;
                    if (centre >= level) == above[0] {
                        out.push([edges[0], edges[1]]);
                        out.push([edges[2], edges[3]]);
                    } else {
                        out.push([edges[3], edges[0]]);
                        out.push([edges[1], edges[2]]);
                    }
                }
                _ => {}
            }
        }
    }
    out
}
