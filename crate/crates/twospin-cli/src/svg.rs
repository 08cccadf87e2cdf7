//! Minimal self-contained SVG line/scatter figures.
//!
//! Hand-rolled on purpose: the plots are a handful of polylines, markers,
//! and reference lines on linear axes, and the output must be a static,
//! dependency-free vector file with deterministic bytes.

use std::fmt::Write as _;

/// Fixed series palette.
pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Pick a palette color by series index.
pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

const FONT: &str = "Helvetica, Arial, sans-serif";

struct LegendEntry {
    label: String,
    color: String,
    dashed: bool,
    marker: bool,
}

/// A single-panel figure with linear axes.
pub struct Figure {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    title: String,
    x_label: String,
    y_label: String,
    body: String,
    legend: Vec<LegendEntry>,
}

/// Round a tick step up to a "nice" value (1, 2, 2.5, or 5 times a power
/// of ten).
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.abs().log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 2.5 {
        2.5
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

/// Tick positions covering `[min, max]` at a nice step.
fn ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    let span = max - min;
    if !(span > 0.0) || !span.is_finite() {
        return vec![min];
    }
    let step = nice_step(span / target as f64);
    let first = (min / step).ceil();
    let last = (max / step).floor();
    let mut out = Vec::new();
    let mut k = first;
    while k <= last + 0.5 {
        out.push(k * step);
        k += 1.0;
    }
    out
}

/// Short decimal label for a tick value.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let mut s = format!("{v:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Figure {
    /// A 720×480 figure mapping the given data ranges onto the plot area.
    pub fn new(title: &str, x_label: &str, y_label: &str, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Figure {
            width: 720.0,
            height: 480.0,
            left: 72.0,
            right: 24.0,
            top: 48.0,
            bottom: 56.0,
            x_range,
            y_range,
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            body: String::new(),
            legend: Vec::new(),
        }
    }

    /// Same, but with the plot-area height chosen so one data unit spans
    /// the same number of pixels on both axes.
    pub fn new_equal_aspect(
        title: &str,
        x_label: &str,
        y_label: &str,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Self {
        let mut fig = Figure::new(title, x_label, y_label, x_range, y_range);
        let inner_w = fig.width - fig.left - fig.right;
        let inner_h = inner_w * (y_range.1 - y_range.0) / (x_range.1 - x_range.0);
        fig.height = inner_h + fig.top + fig.bottom;
        fig
    }

    fn sx(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        self.left + (x - lo) / (hi - lo) * (self.width - self.left - self.right)
    }

    fn sy(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.height - self.bottom - (y - lo) / (hi - lo) * (self.height - self.top - self.bottom)
    }

    fn dash_attr(dashed: bool) -> &'static str {
        if dashed {
            " stroke-dasharray=\"6 4\""
        } else {
            ""
        }
    }

    fn push_legend(&mut self, label: Option<&str>, color: &str, dashed: bool, marker: bool) {
        if let Some(label) = label {
            self.legend.push(LegendEntry {
                label: label.into(),
                color: color.into(),
                dashed,
                marker,
            });
        }
    }

    /// Add a polyline through `pts`.
    pub fn line(&mut self, pts: &[(f64, f64)], label: Option<&str>, color: &str, dashed: bool) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", self.sx(x), self.sy(y));
        }
        let _ = writeln!(
            self.body,
            "  <path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{}/>",
            d.trim_end(),
            Self::dash_attr(dashed),
        );
        self.push_legend(label, color, dashed, false);
    }

    /// Add circular markers at `pts`.
    pub fn markers(&mut self, pts: &[(f64, f64)], label: Option<&str>, color: &str) {
        for &(x, y) in pts {
            let _ = writeln!(
                self.body,
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                self.sx(x),
                self.sy(y),
            );
        }
        self.push_legend(label, color, false, true);
    }

    /// Add a vertical reference line across the plot area.
    pub fn vline(&mut self, x: f64, color: &str, dashed: bool, annotation: Option<&str>) {
        let px = self.sx(x);
        let _ = writeln!(
            self.body,
            "  <line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"1\"{}/>",
            self.sy(self.y_range.1),
            self.sy(self.y_range.0),
            Self::dash_attr(dashed),
        );
        if let Some(text) = annotation {
            let _ = writeln!(
                self.body,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"11\" fill=\"{color}\">{}</text>",
                px + 4.0,
                self.sy(self.y_range.1) + 12.0,
                escape(text),
            );
        }
    }

    /// Render the complete SVG document.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let (w, h) = (self.width, self.height);
        let _ = writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
        );
        let _ = writeln!(out, "  <rect width=\"{w:.0}\" height=\"{h:.0}\" fill=\"#ffffff\"/>");

        // Plot frame and clip region.
        let (px0, py0) = (self.left, self.top);
        let (pw, ph) = (w - self.left - self.right, h - self.top - self.bottom);
        let _ = writeln!(
            out,
            "  <clipPath id=\"plot\"><rect x=\"{px0:.2}\" y=\"{py0:.2}\" width=\"{pw:.2}\" height=\"{ph:.2}\"/></clipPath>"
        );

        // Ticks, grid lines, and labels.
        for t in ticks(self.x_range.0, self.x_range.1, 6) {
            let x = self.sx(t);
            let _ = writeln!(
                out,
                "  <line x1=\"{x:.2}\" y1=\"{py0:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
                py0 + ph
            );
            let _ = writeln!(
                out,
                "  <text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"12\" fill=\"#000000\" text-anchor=\"middle\">{}</text>",
                py0 + ph + 18.0,
                tick_label(t),
            );
        }
        for t in ticks(self.y_range.0, self.y_range.1, 6) {
            let y = self.sy(t);
            let _ = writeln!(
                out,
                "  <line x1=\"{px0:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
                px0 + pw
            );
            let _ = writeln!(
                out,
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"12\" fill=\"#000000\" text-anchor=\"end\">{}</text>",
                px0 - 6.0,
                y + 4.0,
                tick_label(t),
            );
        }
        let _ = writeln!(
            out,
            "  <rect x=\"{px0:.2}\" y=\"{py0:.2}\" width=\"{pw:.2}\" height=\"{ph:.2}\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>"
        );

        // Titles.
        let _ = writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"24\" font-family=\"{FONT}\" font-size=\"15\" fill=\"#000000\" text-anchor=\"middle\" font-weight=\"bold\">{}</text>",
            w / 2.0,
            escape(&self.title),
        );
        let _ = writeln!(
            out,
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"13\" fill=\"#000000\" text-anchor=\"middle\">{}</text>",
            px0 + pw / 2.0,
            h - 14.0,
            escape(&self.x_label),
        );
        let _ = writeln!(
            out,
            "  <text x=\"18\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"13\" fill=\"#000000\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
            py0 + ph / 2.0,
            py0 + ph / 2.0,
            escape(&self.y_label),
        );

        // Data elements.
        let _ = writeln!(out, "  <g clip-path=\"url(#plot)\">");
        out.push_str(&self.body);
        let _ = writeln!(out, "  </g>");

        // Legend (top-right corner of the plot area).
        if !self.legend.is_empty() {
            let lx = px0 + pw - 190.0;
            let mut ly = py0 + 14.0;
            let lh = 18.0 * self.legend.len() as f64 + 10.0;
            let _ = writeln!(
                out,
                "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"182\" height=\"{lh:.2}\" fill=\"#ffffff\" fill-opacity=\"0.85\" stroke=\"#999999\" stroke-width=\"0.5\"/>",
                lx - 6.0,
                ly - 10.0,
            );
            for entry in &self.legend {
                if entry.marker {
                    let _ = writeln!(
                        out,
                        "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>",
                        lx + 12.0,
                        ly,
                        entry.color,
                    );
                } else {
                    let _ = writeln!(
                        out,
                        "  <line x1=\"{lx:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{}\" stroke-width=\"1.8\"{}/>",
                        lx + 24.0,
                        entry.color,
                        Self::dash_attr(entry.dashed),
                    );
                }
                let _ = writeln!(
                    out,
                    "  <text x=\"{:.2}\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"12\" fill=\"#000000\">{}</text>",
                    lx + 30.0,
                    ly + 4.0,
                    escape(&entry.label),
                );
                ly += 18.0;
            }
        }

        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range_with_nice_step() {
        let t = ticks(0.0, 0.31, 6);
        assert!(t.len() >= 4 && t.len() <= 8, "got {t:?}");
        assert!(t[0] >= 0.0 && *t.last().unwrap() <= 0.31);
        let step = t[1] - t[0];
        for pair in t.windows(2) {
            assert!((pair[1] - pair[0] - step).abs() < 1e-12);
        }
    }

    #[test]
    fn tick_labels_are_trimmed() {
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(0.30000000000000004), "0.3");
        assert_eq!(tick_label(2.0), "2");
        assert_eq!(tick_label(-0.05), "-0.05");
    }

    #[test]
    fn render_produces_wellformed_document() {
        let mut fig = Figure::new("Title", "x", "y", (0.0, 1.0), (0.0, 2.0));
        fig.line(&[(0.0, 0.0), (0.5, 1.0), (1.0, 2.0)], Some("series"), color(0), false);
        fig.markers(&[(0.5, 1.0)], None, color(1));
        fig.vline(0.25, "#000000", true, Some("mark"));
        let doc = fig.render();
        assert!(doc.starts_with("<svg"));
        assert!(doc.trim_end().ends_with("</svg>"));
        assert_eq!(doc.matches("<svg").count(), 1);
        assert!(doc.contains("series"));
        // Text elements are the only non-self-closing leaves; they must
        // balance exactly.
        assert_eq!(doc.matches("<text").count(), doc.matches("</text>").count());
        assert_eq!(doc.matches("<g ").count(), doc.matches("</g>").count());
    }

    #[test]
    fn equal_aspect_scales_axes_identically() {
        let fig = Figure::new_equal_aspect("t", "x", "y", (-1.0, 1.0), (0.0, 1.0));
        let dx = fig.sx(1.0) - fig.sx(0.0);
        let dy = fig.sy(0.0) - fig.sy(1.0);
        assert!((dx - dy).abs() < 1e-9);
    }
}
