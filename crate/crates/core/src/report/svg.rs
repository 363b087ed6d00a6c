use std::fmt::Write as _;

use super::ReportError;
use crate::curve::ProfileCurve;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Right end of the tau axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauMax {
    Explicit(f64),
    /// This fraction of the largest finite ratio over all curves.
    AutoFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    /// Plot `log2(tau)` on the x axis.
    pub log_scale: bool,
    pub tau_max: TauMax,
    pub width: u32,
    pub height: u32,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Default for PlotSpec {
    fn default() -> Self {
        PlotSpec {
            log_scale: false,
            tau_max: TauMax::AutoFraction(0.6),
            width: 640,
            height: 400,
            title: "Performance profile".into(),
            x_label: "tau".into(),
            y_label: "rho(tau)".into(),
        }
    }
}

/// The tau range shown on the x axis.
///
/// When the auto fraction lands at or below the domain start the axis falls
/// back to the largest breakpoint, and failing that to one unit (or one
/// doubling on a log scale) past the start.
pub fn resolve_tau_range(
    curves: &[(&str, &ProfileCurve)],
    spec: &PlotSpec,
) -> Result<(f64, f64), ReportError> {
    if curves.is_empty() {
        return Err(ReportError::EmptyCurves);
    }
    if spec.log_scale {
        for (name, c) in curves {
            if c.domain_start() <= 0.0 {
                return Err(ReportError::NonPositiveTauOnLogScale((*name).to_string()));
            }
        }
    }
    let start = curves
        .iter()
        .map(|(_, c)| c.domain_start())
        .fold(f64::INFINITY, f64::min);
    let end = match spec.tau_max {
        TauMax::Explicit(t) => {
            if !(t.is_finite() && t > start) {
                return Err(ReportError::InvalidPlotSpec(format!(
                    "tau max {t} must be finite and above the domain start {start}"
                )));
            }
            t
        }
        TauMax::AutoFraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(ReportError::InvalidPlotSpec(format!(
                    "auto fraction {f} must lie in (0, 1]"
                )));
            }
            let max_finite = curves
                .iter()
                .map(|(_, c)| c.max_finite_tau().unwrap_or_else(|| c.max_tau()))
                .fold(f64::NEG_INFINITY, f64::max);
            let max_any = curves
                .iter()
                .map(|(_, c)| c.max_tau())
                .fold(f64::NEG_INFINITY, f64::max);
            let t = f * max_finite;
            if t > start {
                t
            } else if max_any > start {
                max_any
            } else if spec.log_scale {
                2.0 * start
            } else {
                start + 1.0
            }
        }
    };
    Ok((start, end))
}

struct Frame {
    log: bool,
    g0: f64,
    g1: f64,
    left: f64,
    top: f64,
    w: f64,
    h: f64,
    start: f64,
}

impl Frame {
    fn g(&self, tau: f64) -> f64 {
        if self.log {
            tau.log2()
        } else {
            tau
        }
    }

    fn x(&self, tau: f64) -> f64 {
        self.left + (self.g(tau.max(self.start)) - self.g0) / (self.g1 - self.g0) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.top + (1.0 - v) * self.h
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Step points for one curve: horizontal then vertical at each breakpoint,
/// ending with a horizontal run to the right edge.
fn step_points(curve: &ProfileCurve, start: f64, end: f64) -> Vec<(f64, f64)> {
    let mut pts = vec![(start, 0.0)];
    let mut level = 0.0;
    for (tau, v) in curve.breakpoints() {
        if tau > end {
            break;
        }
        let tau = tau.max(start);
        pts.push((tau, level));
        pts.push((tau, v));
        level = v;
    }
    pts.push((end, level));
    pts.dedup();
    pts
}

fn x_ticks(frame: &Frame, end: f64) -> Vec<(f64, String)> {
    if frame.log {
        let lo = frame.g0.ceil() as i64;
        let hi = frame.g1.floor() as i64;
        let span = (hi - lo).max(0) as usize;
        let stride = span / 8 + 1;
        (lo..=hi)
            .step_by(stride)
            .map(|k| (2f64.powi(k as i32), k.to_string()))
            .collect()
    } else {
        (0..=5)
            .map(|i| {
                let tau = frame.start + (end - frame.start) * i as f64 / 5.0;
                (tau, label(tau))
            })
            .collect()
    }
}

/// Renders the curves as an SVG 1.1 document.
///
/// Output depends only on the inputs: coordinates are printed with two
/// decimals and colors are assigned by curve position.
pub fn render_svg(
    curves: &[(&str, &ProfileCurve)],
    spec: &PlotSpec,
) -> Result<String, ReportError> {
    let (start, end) = resolve_tau_range(curves, spec)?;
    let (width, height) = (spec.width as f64, spec.height as f64);
    let w = width - MARGIN_LEFT - MARGIN_RIGHT;
    let h = height - MARGIN_TOP - MARGIN_BOTTOM;
    if w < 50.0 || h < 50.0 {
        return Err(ReportError::InvalidPlotSpec(format!(
            "{}x{} leaves no room for the plot area",
            spec.width, spec.height
        )));
    }
    if spec.log_scale {
        for (name, c) in curves {
            if c.steps().iter().any(|s| s.tau <= 0.0) {
                return Err(ReportError::NonPositiveTauOnLogScale((*name).to_string()));
            }
        }
    }
    let mut frame = Frame {
        log: spec.log_scale,
        g0: 0.0,
        g1: 0.0,
        left: MARGIN_LEFT,
        top: MARGIN_TOP,
        w,
        h,
        start,
    };
    frame.g0 = frame.g(start);
    frame.g1 = frame.g(end);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        spec.width, spec.height, spec.width, spec.height
    );
    let _ = writeln!(
        svg,
        "<desc>tau range [{}, {}]</desc>",
        label(start),
        label(end)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        spec.width, spec.height
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        MARGIN_LEFT + w / 2.0,
        escape(&spec.title)
    );

    // grid and axes
    let _ = writeln!(svg, r##"<g stroke="#dddddd" stroke-width="1">"##);
    for i in 0..=5 {
        let y = frame.y(i as f64 / 5.0);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            MARGIN_LEFT,
            MARGIN_LEFT + w
        );
    }
    let ticks = x_ticks(&frame, end);
    for (tau, _) in &ticks {
        let x = frame.x(*tau);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            MARGIN_TOP,
            MARGIN_TOP + h
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        MARGIN_LEFT, MARGIN_TOP
    );

    let _ = writeln!(svg, r#"<g font-family="sans-serif" font-size="11">"#);
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            frame.y(v) + 4.0,
            label(v)
        );
    }
    for (tau, text) in &ticks {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            frame.x(*tau),
            MARGIN_TOP + h + 16.0,
            text
        );
    }
    let x_label = if spec.log_scale && spec.x_label == "tau" {
        "log2(tau)".to_string()
    } else {
        spec.x_label.clone()
    };
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + w / 2.0,
        height - 12.0,
        escape(&x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + h / 2.0,
        MARGIN_TOP + h / 2.0,
        escape(&spec.y_label)
    );
    let _ = writeln!(svg, "</g>");

    for (i, (name, curve)) in curves.iter().enumerate() {
        let points = step_points(curve, start, end)
            .into_iter()
            .map(|(t, v)| format!("{:.2},{:.2}", frame.x(t), frame.y(v)))
            .collect::<Vec<_>>()
            .join(" ");
        let dash = if i >= PALETTE.len() {
            r#" stroke-dasharray="6,3""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="2"{dash} points="{points}"><title>{}</title></polyline>"#,
            PALETTE[i % PALETTE.len()],
            escape(name)
        );
    }

    let legend_x = MARGIN_LEFT + w + 16.0;
    let _ = writeln!(svg, r#"<g font-family="sans-serif" font-size="12">"#);
    for (i, (name, _)) in curves.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let dash = if i >= PALETTE.len() {
            r#" stroke-dasharray="6,3""#
        } else {
            ""
        };
        let _ = writeln!(
            svg,
            r#"<line x1="{legend_x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"{dash}/>"#,
            legend_x + 24.0,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            legend_x + 30.0,
            y + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_fraction_of_max_finite_ratio() {
        let c = ProfileCurve::from_ratios(&[1.0, 2.0, 20.0, 40.0], Some(40.0));
        let (lo, hi) = resolve_tau_range(&[("c", &c)], &PlotSpec::default()).unwrap();
        assert_eq!((lo, hi), (1.0, 12.0));
    }

    #[test]
    fn degenerate_auto_range_falls_back() {
        let c = ProfileCurve::from_ratios(&[1.0, 1.0], None);
        let (lo, hi) = resolve_tau_range(&[("c", &c)], &PlotSpec::default()).unwrap();
        assert_eq!((lo, hi), (1.0, 2.0));
    }

    #[test]
    fn step_points_are_axis_aligned() {
        let c = ProfileCurve::from_ratios(&[1.0, 2.0, 4.0], None);
        let pts = step_points(&c, 1.0, 3.0);
        assert_eq!(
            pts,
            vec![
                (1.0, 0.0),
                (1.0, 1.0 / 3.0),
                (2.0, 1.0 / 3.0),
                (2.0, 2.0 / 3.0),
                (3.0, 2.0 / 3.0)
            ]
        );
        assert!(pts.windows(2).all(|w| w[0].0 == w[1].0 || w[0].1 == w[1].1));
    }

    #[test]
    fn rejects_bad_specs() {
        let c = ProfileCurve::from_ratios(&[1.0, 3.0], None);
        let bad = |tau_max| PlotSpec {
            tau_max,
            ..PlotSpec::default()
        };
        assert!(render_svg(&[("c", &c)], &bad(TauMax::Explicit(0.5))).is_err());
        assert!(render_svg(&[("c", &c)], &bad(TauMax::AutoFraction(1.5))).is_err());
        assert!(render_svg(&[("c", &c)], &bad(TauMax::AutoFraction(0.0))).is_err());
        assert!(matches!(
            render_svg(&[], &PlotSpec::default()),
            Err(ReportError::EmptyCurves)
        ));
        let tiny = PlotSpec {
            width: 100,
            ..PlotSpec::default()
        };
        assert!(render_svg(&[("c", &c)], &tiny).is_err());
    }

    #[test]
    fn log_scale_rejects_non_positive_tau() {
        let c = ProfileCurve::from_ratios(&[0.0, 1.0], None);
        let spec = PlotSpec {
            log_scale: true,
            ..PlotSpec::default()
        };
        assert!(matches!(
            render_svg(&[("z", &c)], &spec),
            Err(ReportError::NonPositiveTauOnLogScale(name)) if name == "z"
        ));
    }

    #[test]
    fn escapes_labels() {
        let c = ProfileCurve::from_ratios(&[1.0, 2.0], None);
        let svg = render_svg(&[("a<b & \"c\"", &c)], &PlotSpec::default()).unwrap();
        assert!(svg.contains("a&lt;b &amp; &quot;c&quot;"));
    }
}
