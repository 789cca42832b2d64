use std::fmt::Write as _;

use crate::compare::{CurveKind, CurvePoint, ProfileCurve};
use crate::error::{Error, Result};
use crate::model::{CiMethod, ConfidenceInterval};

pub const CSV_HEADER: &str = "x,estimate,ci_lower,ci_upper";

/// One row per grid point; floats in shortest round-trip form.
pub fn emit_plot_data(curve: &ProfileCurve) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (x, p) in curve.xs().iter().zip(curve.points()) {
        let _ = writeln!(out, "{x},{},{},{}", p.estimate, p.ci.lower(), p.ci.upper());
    }
    out
}

/// Reads CSV written by [`emit_plot_data`]. The file does not carry the
/// curve kind, interval level or method, so they are supplied by the caller
/// (zero-width rows become degenerate intervals).
pub fn parse_plot_data(
    text: &str,
    kind: CurveKind,
    label: &str,
    level: f64,
    method: CiMethod,
) -> Result<ProfileCurve> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(Error::schema(
                "line 1",
                format!("expected header `{CSV_HEADER}`, found {:?}", other.unwrap_or("")),
            ))
        }
    }
    let mut xs = Vec::new();
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = format!("line {}", i + 2);
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::schema(at.clone(), e.to_string()))?;
        let [x, estimate, lower, upper] = fields[..] else {
            return Err(Error::schema(at, format!("expected 4 fields, found {}", fields.len())));
        };
        let ci = if lower == upper {
            ConfidenceInterval::degenerate(lower, level)
        } else {
            ConfidenceInterval::new(lower, upper, level, method).map_err(|e| e.rebase(&at))?
        };
        xs.push(x);
        points.push(CurvePoint { estimate, ci });
    }
    ProfileCurve::new(kind, label, xs, points)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: u32,
    pub height: u32,
    pub title: Option<String>,
    pub x_label: Option<String>,
    pub y_label: Option<String>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            width: 640,
            height: 400,
            title: None,
            x_label: None,
            y_label: None,
        }
    }
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf",
];

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 48.0;
const TICKS: usize = 5;

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn tick_label(value: f64) -> String {
    let mag = value.abs();
    if mag != 0.0 && !(1e-3..1e5).contains(&mag) {
        format!("{value:.1e}")
    } else if value.fract() == 0.0 {
        format!("{value:.0}")
    } else {
        format!("{value:.2}")
    }
}

fn expand(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Draws every curve as an estimate polyline over a shaded interval band.
pub fn render_svg(curves: &[ProfileCurve], style: &SvgStyle) -> Result<String> {
    let Some(first) = curves.first() else {
        return Err(Error::EmptyInput("no curves to plot".into()));
    };
    if let Some(other) = curves.iter().find(|c| c.kind() != first.kind()) {
        return Err(Error::MixedCurveKinds(format!("{} and {}", first.kind(), other.kind())));
    }

    let xs = curves.iter().flat_map(|c| c.xs().iter().copied());
    let (x_lo, x_hi) = expand(
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_lo, y_hi) = if first.kind() == CurveKind::PerformanceProfile {
        (0.0, 1.0)
    } else {
        let ys = curves.iter().flat_map(|c| {
            c.points()
                .iter()
                .flat_map(|p| [p.estimate, p.ci.lower(), p.ci.upper()])
        });
        expand(
            ys.clone().fold(f64::INFINITY, f64::min),
            ys.fold(f64::NEG_INFINITY, f64::max),
        )
    };

    let w = f64::from(style.width);
    let h = f64::from(style.height);
    let plot_w = (w - MARGIN_LEFT - MARGIN_RIGHT).max(1.0);
    let plot_h = (h - MARGIN_TOP - MARGIN_BOTTOM).max(1.0);
    let sx = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;
    let bottom = MARGIN_TOP + plot_h;
    let right = MARGIN_LEFT + plot_w;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    if let Some(title) = &style.title {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            MARGIN_LEFT + plot_w / 2.0,
            xml_escape(title)
        );
    }

    out.push_str("<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n");
    let _ = writeln!(out, r#"<line x1="{MARGIN_LEFT:.2}" y1="{bottom:.2}" x2="{right:.2}" y2="{bottom:.2}"/>"#);
    let _ = writeln!(out, r#"<line x1="{MARGIN_LEFT:.2}" y1="{MARGIN_TOP:.2}" x2="{MARGIN_LEFT:.2}" y2="{bottom:.2}"/>"#);
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let (x, y) = (x_lo + f * (x_hi - x_lo), y_lo + f * (y_hi - y_lo));
        let _ = writeln!(out, r#"<line x1="{0:.2}" y1="{bottom:.2}" x2="{0:.2}" y2="{1:.2}"/>"#, sx(x), bottom + 4.0);
        let _ = writeln!(out, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{MARGIN_LEFT:.2}" y2="{1:.2}"/>"#, MARGIN_LEFT - 4.0, sy(y));
    }
    out.push_str("</g>\n<g class=\"tick-labels\" font-family=\"sans-serif\" font-size=\"10\">\n");
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let (x, y) = (x_lo + f * (x_hi - x_lo), y_lo + f * (y_hi - y_lo));
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(x),
            bottom + 16.0,
            tick_label(x)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            sy(y) + 3.0,
            tick_label(y)
        );
    }
    out.push_str("</g>\n");
    let x_label = style.x_label.clone().unwrap_or_else(|| match first.kind() {
        CurveKind::PerformanceProfile => "normalised score (tau)".into(),
        _ => "timesteps".into(),
    });
    let y_label = style.y_label.clone().unwrap_or_else(|| match first.kind() {
        CurveKind::PerformanceProfile => "fraction of runs with score > tau".into(),
        CurveKind::SampleEfficiency => "normalised score".into(),
        CurveKind::IntervalSeries => "return".into(),
    });
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        h - 10.0,
        xml_escape(&x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{0:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {0:.2})">{1}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        xml_escape(&y_label)
    );

    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, "<g class=\"curve\" data-label=\"{}\">", xml_escape(curve.label()));
        if !curve.is_empty() {
            let upper = curve
                .xs()
                .iter()
                .zip(curve.points())
                .map(|(&x, p)| format!("{:.2},{:.2}", sx(x), sy(p.ci.upper())));
            let lower = curve
                .xs()
                .iter()
                .zip(curve.points())
                .rev()
                .map(|(&x, p)| format!("{:.2},{:.2}", sx(x), sy(p.ci.lower())));
            let band: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                band.join(" ")
            );
        }
        let line: Vec<String> = curve
            .xs()
            .iter()
            .zip(curve.points())
            .map(|(&x, p)| format!("{:.2},{:.2}", sx(x), sy(p.estimate)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        out.push_str("</g>\n");
    }

    out.push_str("<g class=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n");
    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_TOP + 8.0 + i as f64 * 18.0;
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            right + 12.0,
            y - 9.0,
            right + 30.0,
            y + 1.0,
            xml_escape(curve.label())
        );
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(kind: CurveKind, label: &str, values: &[(f64, f64, f64, f64)]) -> ProfileCurve {
        let xs = values.iter().map(|v| v.0).collect();
        let points = values
            .iter()
            .map(|&(_, e, l, u)| CurvePoint {
                estimate: e,
                ci: if l == u {
                    ConfidenceInterval::degenerate(l, 0.95)
                } else {
                    ConfidenceInterval::new(l, u, 0.95, CiMethod::StratifiedBootstrap).unwrap()
                },
            })
            .collect();
        ProfileCurve::new(kind, label, xs, points).unwrap()
    }

    #[test]
    fn csv_shapes() {
        let two = curve(CurveKind::SampleEfficiency, "a", &[(0.0, 0.1, 0.0, 0.2), (1.0, 0.5, 0.5, 0.5)]);
        let text = emit_plot_data(&two);
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text.lines().nth(2), Some("1,0.5,0.5,0.5"));
        let empty = curve(CurveKind::SampleEfficiency, "a", &[]);
        assert_eq!(emit_plot_data(&empty), "x,estimate,ci_lower,ci_upper\n");
    }

    #[test]
    fn csv_round_trip() {
        let c = curve(
            CurveKind::SampleEfficiency,
            "a",
            &[(10000.0, 0.1 + 0.2, 0.1, 1.0 / 3.0), (20000.0, 0.7, 0.7, 0.7)],
        );
        let back = parse_plot_data(&emit_plot_data(&c), CurveKind::SampleEfficiency, "a", 0.95, CiMethod::StratifiedBootstrap)
            .unwrap();
        assert_eq!(back, c);
        assert!(parse_plot_data("x,y\n", CurveKind::SampleEfficiency, "a", 0.95, CiMethod::Normal).is_err());
        assert!(parse_plot_data(&format!("{CSV_HEADER}\n1,2,3\n"), CurveKind::SampleEfficiency, "a", 0.95, CiMethod::Normal).is_err());
    }

    #[test]
    fn svg_structure() {
        let flat = curve(CurveKind::SampleEfficiency, "flat", &[(0.0, 0.5, 0.5, 0.5), (1.0, 0.5, 0.5, 0.5)]);
        let svg = render_svg(std::slice::from_ref(&flat), &SvgStyle::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));

        let other = curve(CurveKind::SampleEfficiency, "a<b", &[(0.0, 0.2, 0.1, 0.3)]);
        let svg = render_svg(&[flat.clone(), other.clone()], &SvgStyle::default()).unwrap();
        let legend = svg.split("<g class=\"legend\"").nth(1).unwrap();
        assert_eq!(legend.matches("<text").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg, render_svg(&[flat.clone(), other], &SvgStyle::default()).unwrap());

        let profile = curve(CurveKind::PerformanceProfile, "p", &[(0.0, 1.0, 1.0, 1.0)]);
        assert!(matches!(render_svg(&[flat, profile], &SvgStyle::default()), Err(Error::MixedCurveKinds(_))));
        assert!(render_svg(&[], &SvgStyle::default()).is_err());
    }
}
