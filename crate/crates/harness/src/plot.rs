//! SVG rendering of aggregated series: log-scaled step axis, median line and
//! a min-max band per condition.

use std::fmt::Write as _;
use std::path::Path;

use crate::aggregate::{StepAggregate, Summary};
use crate::error::HarnessError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// One labelled curve: step plus summary per point.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(usize, Summary)>,
}

impl PlotSeries {
    /// Extracts `metric` from aggregates; steps where it is undefined are skipped.
    pub fn from_aggregates(label: &str, aggregates: &[StepAggregate], metric: &str) -> Self {
        Self {
            label: label.to_string(),
            points: aggregates.iter().filter_map(|a| a.metric(metric).map(|s| (a.step, s))).collect(),
        }
    }
}

fn step_x(step: usize) -> f64 {
    (1.0 + step as f64).log10()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the curves as a standalone SVG document.
pub fn render_svg(series: &[PlotSeries], title: &str, y_label: &str) -> Result<String, HarnessError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(HarnessError::Invalid("nothing to plot: empty series".into()));
    }
    let points = series.iter().flat_map(|s| s.points.iter());
    let (mut x_max, mut y_min, mut y_max) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for (step, s) in points {
        x_max = x_max.max(step_x(*step));
        y_min = y_min.min(s.min);
        y_max = y_max.max(s.max);
    }
    if !(y_min.is_finite() && y_max.is_finite()) {
        return Err(HarnessError::Invalid("series contains non-finite values".into()));
    }
    y_min = y_min.min(0.0);
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    if x_max <= 0.0 {
        x_max = 1.0;
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |step: usize| MARGIN_LEFT + step_x(step) / x_max * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );
    // axes
    let (x0, y0, x1, y1) = (MARGIN_LEFT, MARGIN_TOP + plot_h, MARGIN_LEFT + plot_w, MARGIN_TOP);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0:.1} {y1:.1} L{x0:.1} {y0:.1} L{x1:.1} {y0:.1}" fill="none" stroke="black"/>"#
    );
    let mut decade = 1usize;
    while step_x(decade - 1) <= x_max + 1e-12 {
        let x = px(decade - 1);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            decade - 1
        );
        decade *= 10;
    }
    for k in 0..=4 {
        let y = y_min + (y_max - y_min) * k as f64 / 4.0;
        let yy = py(y);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{yy:.1}" x2="{x0:.1}" y2="{yy:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            yy + 4.0,
            format_tick(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Gibbs updates</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    );

    for (k, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = COLORS[k % COLORS.len()];
        let mut band = String::new();
        for (i, (step, p)) in s.points.iter().enumerate() {
            let _ = write!(band, "{}{:.2} {:.2} ", if i == 0 { 'M' } else { 'L' }, px(*step), py(p.max));
        }
        for (step, p) in s.points.iter().rev() {
            let _ = write!(band, "L{:.2} {:.2} ", px(*step), py(p.min));
        }
        band.push('Z');
        let _ = writeln!(svg, r#"<path class="band" d="{band}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#);
        let line: Vec<String> = s.points.iter().map(|(step, p)| format!("{:.2},{:.2}", px(*step), py(p.median))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="median" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * k as f64;
        let lx = MARGIN_LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(y: f64) -> String {
    let s = format!("{y:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn plot(series: &[PlotSeries], title: &str, y_label: &str, path: &Path) -> Result<(), HarnessError> {
    let svg = render_svg(series, title, y_label)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(median: f64, min: f64, max: f64) -> Summary {
        Summary { median, min, max }
    }

    fn one() -> PlotSeries {
        PlotSeries {
            label: "annealer_T2 <a&b>".into(),
            points: vec![
                (0, summary(0.1, 0.0, 0.2)),
                (1, summary(0.4, 0.3, 0.6)),
                (10, summary(0.5, 0.5, 0.5)),
                (110, summary(0.7, 0.6, 0.9)),
            ],
        }
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(render_svg(&[], "t", "y").is_err());
        let empty = PlotSeries {
            label: "x".into(),
            points: vec![],
        };
        assert!(render_svg(&[empty], "t", "y").is_err());
    }

    #[test]
    fn single_series_is_an_svg_document() {
        let svg = render_svg(&[one()], "precision", "precision").unwrap();
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("&lt;a&amp;b&gt;"));
        assert!(!svg.contains("<a&b>"));
    }

    #[test]
    fn band_encloses_median() {
        let svg = render_svg(&[one()], "p", "p").unwrap();
        let attr = |tag: &str, name: &str| -> String {
            let line = svg.lines().find(|l| l.contains(tag)).unwrap();
            let start = line.find(&format!("{name}=\"")).unwrap() + name.len() + 2;
            line[start..start + line[start..].find('"').unwrap()].to_string()
        };
        let coords = |s: &str| -> Vec<(f64, f64)> {
            s.split(|c: char| c == ' ' || c == ',' || c.is_ascii_alphabetic())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().unwrap())
                .collect::<Vec<f64>>()
                .chunks(2)
                .map(|c| (c[0], c[1]))
                .collect()
        };
        let median = coords(&attr("class=\"median\"", "points"));
        let band = coords(&attr("class=\"band\"", "d"));
        let n = median.len();
        let upper = &band[..n];
        let lower: Vec<_> = band[n..].iter().rev().collect();
        for i in 0..n {
            // svg y grows downwards
            assert!(upper[i].1 <= median[i].1 + 1e-9 && median[i].1 <= lower[i].1 + 1e-9);
            assert_eq!(upper[i].0, median[i].0);
        }
    }
}
