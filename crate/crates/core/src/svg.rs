//! Small SVG emitters for branch plots and nodal-count scatter plots.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Frame {
    fn tx(&self, x: f64) -> f64 {
        let (a, b, v) = if self.log_x {
            (self.x0.log10(), self.x1.log10(), x.log10())
        } else {
            (self.x0, self.x1, x)
        };
        MARGIN + (v - a) / (b - a).max(f64::MIN_POSITIVE) * (WIDTH - 2.0 * MARGIN)
    }

    fn ty(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN
            - (y - self.y0) / (self.y1 - self.y0).max(f64::MIN_POSITIVE) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        writeln!(
            out,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            t - 20.0,
            escape(title)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0,
            escape(x_label)
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        )
        .unwrap();
        for (v, label) in [(self.x0, self.x0), (self.x1, self.x1)] {
            writeln!(
                out,
                r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
                self.tx(v),
                b + 16.0,
                tick(label)
            )
            .unwrap();
        }
        for v in [self.y0, self.y1] {
            writeln!(
                out,
                r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{}</text>"#,
                l - 6.0,
                self.ty(v) + 4.0,
                tick(v)
            )
            .unwrap();
        }
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn header() -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// One polyline per branch over `xs`, with an optional horizontal rule.
pub struct LineChart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    /// `series[b][t]` pairs with `xs[t]`.
    pub series: Vec<Vec<f64>>,
    pub rule: Option<f64>,
    /// Logarithmic x axis; non-positive x values are skipped.
    pub log_x: bool,
    /// Clip the y range to this window when set.
    pub y_range: Option<(f64, f64)>,
}

impl LineChart<'_> {
    pub fn render(&self) -> String {
        let keep: Vec<usize> = (0..self.xs.len())
            .filter(|&t| !self.log_x || self.xs[t] > 0.0)
            .collect();
        let xs: Vec<f64> = keep.iter().map(|&t| self.xs[t]).collect();
        let (x0, x1) = match (xs.first(), xs.last()) {
            (Some(&a), Some(&b)) if b > a => (a, b),
            (Some(&a), _) => (a, a + 1.0),
            _ => (0.0, 1.0),
        };
        let (y0, y1) = self.y_range.unwrap_or_else(|| {
            let all = self
                .series
                .iter()
                .flat_map(|s| keep.iter().map(move |&t| s[t]));
            let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
                (a.min(v), b.max(v))
            });
            if lo.is_finite() {
                padded(lo, hi)
            } else {
                (0.0, 1.0)
            }
        });
        let frame = Frame {
            x0,
            x1,
            y0,
            y1,
            log_x: self.log_x,
        };
        let mut out = header();
        frame.axes(&mut out, self.title, self.x_label, self.y_label);
        writeln!(out, r#"<clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath>"#, WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN).unwrap();
        out.push_str("<g clip-path=\"url(#plot)\">\n");
        for (b, s) in self.series.iter().enumerate() {
            let pts: Vec<String> = keep
                .iter()
                .map(|&t| format!("{:.2},{:.2}", frame.tx(self.xs[t]), frame.ty(s[t])))
                .collect();
            writeln!(
                out,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
                PALETTE[b % PALETTE.len()],
                pts.join(" ")
            )
            .unwrap();
        }
        if let Some(r) = self.rule {
            let y = frame.ty(r);
            writeln!(out, r#"<line x1="{MARGIN}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="black" stroke-dasharray="6 4"/>"#, WIDTH - MARGIN).unwrap();
        }
        out.push_str("</g>\n</svg>\n");
        out
    }
}

/// Points `(k, ν)` with the line `y = x` and optional horizontal links
/// between points that belong together.
pub struct Scatter<'a> {
    pub title: &'a str,
    pub points: &'a [(f64, f64)],
    /// Index pairs into `points` drawn as horizontal segments.
    pub links: &'a [(usize, usize)],
}

impl Scatter<'_> {
    pub fn render(&self) -> String {
        let max = self
            .points
            .iter()
            .map(|&(x, y)| x.max(y))
            .fold(1.0f64, f64::max);
        let frame = Frame {
            x0: 0.0,
            x1: max + 1.0,
            y0: 0.0,
            y1: max + 1.0,
            log_x: false,
        };
        let mut out = header();
        frame.axes(&mut out, self.title, "k", "nodal domains");
        writeln!(
            out,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red"/>"#,
            frame.tx(0.0),
            frame.ty(0.0),
            frame.tx(max + 1.0),
            frame.ty(max + 1.0)
        )
        .unwrap();
        for &(a, b) in self.links {
            let (p, q) = (self.points[a], self.points[b]);
            writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
                frame.tx(p.0),
                frame.ty(p.1),
                frame.tx(q.0),
                frame.ty(q.1)
            )
            .unwrap();
        }
        for &(x, y) in self.points {
            writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                frame.tx(x),
                frame.ty(y),
                PALETTE[0]
            )
            .unwrap();
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_well_formed() {
        let xs = [0.0, 0.5, 1.0];
        let chart = LineChart {
            title: "a < b",
            x_label: "sigma",
            y_label: "lambda",
            xs: &xs,
            series: vec![vec![0.0, 1.0, 2.0], vec![2.0, 2.0, 2.0]],
            rule: Some(2.0),
            log_x: false,
            y_range: None,
        };
        let svg = chart.render();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn log_axis_skips_zero() {
        let xs = [0.0, 1e-3, 1.0, 1e4];
        let chart = LineChart {
            title: "",
            x_label: "",
            y_label: "",
            xs: &xs,
            series: vec![vec![0.0, 0.1, 1.0, 2.0]],
            rule: None,
            log_x: true,
            y_range: None,
        };
        let svg = chart.render();
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 3);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn scatter_has_reference_line() {
        let pts = [(1.0, 1.0), (2.0, 2.0), (3.0, 2.0)];
        let svg = Scatter {
            title: "scan",
            points: &pts,
            links: &[(1, 2)],
        }
        .render();
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.contains("stroke=\"red\""));
    }
}
