//! Minimal standalone SVG line charts.

use std::fmt::Write;

use anyhow::{bail, Result};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const MAX_POINTS: usize = 4000;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: Option<String>,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.5 * lo.abs().max(1.0);
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let step = nice_step(hi - lo);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

/// Renders `plot` as an SVG document: one polyline per series, linear axes, legend.
pub fn render(plot: &PlotSpec) -> Result<String> {
    if plot.series.is_empty() {
        bail!("nothing to plot: no series selected");
    }
    let (mut xlo, mut xhi, mut ylo, mut yhi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for s in &plot.series {
        if s.points.is_empty() {
            bail!("series '{}' is empty", s.label);
        }
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                bail!("series '{}' has a non-finite point ({x}, {y})", s.label);
            }
            xlo = xlo.min(x);
            xhi = xhi.max(x);
            ylo = ylo.min(y);
            yhi = yhi.max(y);
        }
    }
    let (xlo, xhi) = if xhi > xlo {
        (xlo, xhi)
    } else {
        padded(xlo, xhi)
    };
    let (ylo, yhi) = padded(ylo, yhi);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - xlo) / (xhi - xlo) * pw;
    let sy = |y: f64| TOP + (yhi - y) / (yhi - ylo) * ph;

    let mut out = String::new();
    let w = &mut out;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(
        w,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    )?;
    if let Some(t) = &plot.title {
        writeln!(
            w,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(t)
        )?;
    }
    writeln!(
        w,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
    )?;

    let (xt, xd) = ticks(xlo, xhi);
    for v in xt {
        let x = sx(v);
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#444"/>"##,
            TOP + ph,
            TOP + ph + 5.0
        )?;
        writeln!(
            w,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{v:.xd$}</text>"#,
            TOP + ph + 18.0
        )?;
    }
    let (yt, yd) = ticks(ylo, yhi);
    for v in yt {
        let y = sy(v);
        writeln!(
            w,
            r##"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#444"/>"##,
            LEFT - 5.0
        )?;
        writeln!(
            w,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.yd$}</text>"#,
            LEFT - 8.0,
            y + 4.0
        )?;
    }
    writeln!(
        w,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&plot.x_label)
    )?;
    writeln!(
        w,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&plot.y_label)
    )?;

    for (k, s) in plot.series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let stride = s.points.len().div_ceil(MAX_POINTS).max(1);
        let n = s.points.len();
        let pts: Vec<String> = (0..n)
            .filter(|&i| i % stride == 0 || i + 1 == n)
            .map(|i| format!("{:.2},{:.2}", sx(s.points[i].0), sy(s.points[i].1)))
            .collect();
        writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.4" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&s.label)
        )?;
        let ly = TOP + 12.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 14.0;
        writeln!(
            w,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 22.0
        )?;
        writeln!(
            w,
            r#"<text x="{}" y="{}">{}</text>"#,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(series: Vec<Series>) -> PlotSpec {
        PlotSpec {
            title: Some("a < b".into()),
            x_label: "t".into(),
            y_label: "value".into(),
            series,
        }
    }

    fn line(label: &str, points: &[(f64, f64)]) -> Series {
        Series {
            label: label.into(),
            points: points.to_vec(),
        }
    }

    #[test]
    fn two_points_make_one_polyline() {
        let svg = render(&spec(vec![line("s", &[(0.0, 0.0), (1.0, 1.0)])])).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split(' ').count(), 2);
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn output_is_deterministic() {
        let s = spec(vec![
            line("a", &[(0.0, 1.0), (0.5, -2.0), (2.0, 3.0)]),
            line("b", &[(0.0, 0.0), (2.0, 0.0)]),
        ]);
        assert_eq!(render(&s).unwrap(), render(&s).unwrap());
        assert_eq!(render(&s).unwrap().matches("<polyline").count(), 2);
    }

    #[test]
    fn degenerate_ranges_still_render() {
        let svg = render(&spec(vec![line("flat", &[(3.0, 2.0)])])).unwrap();
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(render(&spec(vec![])).is_err());
        assert!(render(&spec(vec![line("e", &[])])).is_err());
        assert!(render(&spec(vec![line("n", &[(0.0, f64::NAN)])])).is_err());
    }

    #[test]
    fn long_series_are_thinned() {
        let pts: Vec<(f64, f64)> = (0..20_000).map(|k| (k as f64, (k as f64).sin())).collect();
        let svg = render(&spec(vec![line("long", &pts)])).unwrap();
        let n = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap()
            .split(' ')
            .count();
        assert!(n <= MAX_POINTS + 1 && n > MAX_POINTS / 2);
    }
}
