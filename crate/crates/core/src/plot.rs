//! SVG rendering of a detection result: the sampled series with pulse
//! markers, and the IPI series inside its tunnel.

use std::fmt::Write;

use crate::analysis::DetectionResult;
use crate::series::TimeSeries;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Plots {
    pub series_svg: String,
    pub ipi_svg: String,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 1.0, hi + 1.0)
            }
        };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        title
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (left, right) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{left} {top} V{bottom} H{right}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (px, py) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{bottom}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{y_label}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0
    );
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn polyline(frame: &Frame, points: impl Iterator<Item = (f64, f64)>) -> String {
    points
        .map(|(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

/// Series with sample markers and one vertical line per detected pulse.
pub fn render_series_plot(series: &TimeSeries, result: &DetectionResult) -> String {
    let times = series.times();
    let values = series.values();
    let (_, ymax) = range(values.iter().copied());
    let frame = Frame::new((times[0], times[times.len() - 1]), (0.0, ymax * 1.05));
    let mut out = String::new();
    header(&mut out, "LH series and detected pulses");
    axes(&mut out, &frame, "time (min)", "LH (ng/ml)");
    for &p in result.pulses.indexes() {
        let x = frame.px(times[p]);
        let _ = writeln!(
            out,
            r#"<line class="pulse" x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="red"/>"#,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        );
    }
    let _ = writeln!(
        out,
        r#"<polyline class="series" points="{}" fill="none" stroke="steelblue"/>"#,
        polyline(&frame, times.iter().copied().zip(values.iter().copied()))
    );
    for (&t, &v) in times.iter().zip(values) {
        let _ = writeln!(
            out,
            r#"<circle class="sample" cx="{:.2}" cy="{:.2}" r="2" fill="steelblue"/>"#,
            frame.px(t),
            frame.py(v)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// IPI points against pulse time, with the fitted trend (dashed) and the
/// tunnel edges (solid). Outliers are drawn in red.
pub fn render_ipi_plot(result: &DetectionResult) -> String {
    let mut out = String::new();
    header(&mut out, "Interpulse intervals and tunnel");
    let (Some(ipi), false) = (&result.ipi, result.edges.is_empty()) else {
        let _ = writeln!(
            out,
            r#"<text class="annotation" x="{}" y="{}" text-anchor="middle">Fewer than two pulses detected: no interpulse interval to plot</text>"#,
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
        out.push_str("</svg>\n");
        return out;
    };
    let edges = &result.edges;
    let anchors = ipi.anchor_times();
    let (xmin, xmax) = range(anchors.iter().copied());
    let (_, ymax) = range(
        ipi.values()
            .iter()
            .copied()
            .chain(edges.iter().map(|e| e.upper)),
    );
    let (ymin, _) = range(edges.iter().map(|e| e.lower).chain([0.0]));
    let frame = Frame::new((xmin, xmax), (ymin, ymax * 1.05));
    axes(&mut out, &frame, "pulse time (min)", "IPI (min)");

    let (start, end) = (edges[0].time, edges[edges.len() - 1].time);
    for (class, pick) in [
        (
            "tunnel-lower",
            (|e: &crate::tunnel::TunnelPoint| e.lower) as fn(&_) -> f64,
        ),
        ("tunnel-upper", |e| e.upper),
    ] {
        let _ = writeln!(
            out,
            r#"<polyline class="{class}" data-start="{start}" data-end="{end}" points="{}" fill="none" stroke="black"/>"#,
            polyline(&frame, edges.iter().map(|e| (e.time, pick(e))))
        );
    }
    let _ = writeln!(
        out,
        r#"<polyline class="fit" data-start="{start}" data-end="{end}" points="{}" fill="none" stroke="gray" stroke-dasharray="6 4"/>"#,
        polyline(&frame, edges.iter().map(|e| (e.time, e.fit)))
    );
    let outliers = &result.outliers;
    for (j, (&t, &v)) in anchors.iter().zip(ipi.values()).enumerate() {
        let is_outlier = outliers.upper.contains(&j) || outliers.lower.contains(&j);
        let (class, fill, r) = if is_outlier {
            ("ipi outlier", "red", 5)
        } else {
            ("ipi", "blue", 3)
        };
        let title = outliers
            .tag_of(j)
            .map(|tag| format!("<title>{}</title>", tag.as_str()))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}">{title}</circle>"#,
            frame.px(t),
            frame.py(v)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_plots(series: &TimeSeries, result: &DetectionResult) -> Plots {
    Plots {
        series_svg: render_series_plot(series, result),
        ipi_svg: render_ipi_plot(result),
    }
}
