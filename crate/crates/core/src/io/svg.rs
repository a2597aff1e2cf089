//! Self-contained SVG figures. Every mark carries `data-*` attributes holding
//! the exact numbers written to the matching CSV.

use std::fmt::Write as _;
use std::path::Path;

use super::container::write_atomic;
use super::table::num;
use super::IoError;

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

/// `(x, y, error)` triples of one line.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistPanel {
    pub title: String,
    pub lo: f64,
    pub hi: f64,
    /// Bin counts per group.
    pub groups: Vec<(String, Vec<usize>)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Plot {
    /// Lines with a shaded `y ± error` band; the point at `base_x` is red.
    Line { title: String, x_label: String, y_label: String, series: Vec<Series>, base_x: Option<f64> },
    /// Grouped bars with error whiskers: `series[s].1[c]` is `(value, error)`
    /// for category `c`.
    Bars { title: String, y_label: String, categories: Vec<String>, series: Vec<(String, Vec<(f64, f64)>)> },
    /// A row of histogram panels.
    Histograms { title: String, panels: Vec<HistPanel> },
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Scale {
    lo: f64,
    hi: f64,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, a: f64, b: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, a, b }
    }

    fn map(&self, v: f64) -> f64 {
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = write!(out, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = write!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
}

fn axes(out: &mut String, xs: &Scale, ys: &Scale, x_label: &str, y_label: &str, x_ticks: bool) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = write!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = write!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let yv = ys.lo + f * (ys.hi - ys.lo);
        let y = ys.map(yv);
        let _ = write!(out, r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/>"#, x0 - 4.0);
        let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 6.0, y + 4.0, tick(yv));
        if x_ticks {
            let xv = xs.lo + f * (xs.hi - xs.lo);
            let x = xs.map(xv);
            let _ = write!(out, r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/>"#, y0 + 4.0);
            let _ = write!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{}</text>"#, y0 + 18.0, tick(xv));
        }
    }
    let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 15.0, esc(x_label));
    let _ = write!(
        out,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        esc(y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 * i as f64;
        let c = PALETTE[i % PALETTE.len()];
        let _ = write!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, W - RIGHT - 150.0, y);
        let _ = write!(out, r#"<text x="{}" y="{}">{}</text>"#, W - RIGHT - 135.0, y + 9.0, esc(name));
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], base_x: Option<f64>) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let (xlo, xhi) = bounds(pts().map(|p| p.0));
    let (ylo, yhi) = bounds(pts().flat_map(|p| [p.1 - p.2, p.1 + p.2]));
    let (xlo, xhi) = if xlo.is_finite() { (xlo, xhi) } else { (0.0, 1.0) };
    let (ylo, yhi) = if ylo.is_finite() { (ylo.min(0.0), yhi) } else { (0.0, 1.0) };
    let xs = Scale::new(xlo, xhi, LEFT, W - RIGHT);
    let ys = Scale::new(ylo, yhi, H - BOTTOM, TOP);
    axes(&mut out, &xs, &ys, x_label, y_label, true);
    for (si, s) in series.iter().enumerate() {
        let c = PALETTE[si % PALETTE.len()];
        if s.points.iter().any(|p| p.2 > 0.0) {
            let upper = s.points.iter().map(|p| format!("{},{}", xs.map(p.0), ys.map(p.1 + p.2)));
            let lower = s.points.iter().rev().map(|p| format!("{},{}", xs.map(p.0), ys.map(p.1 - p.2)));
            let poly: Vec<String> = upper.chain(lower).collect();
            let _ = write!(out, r#"<polygon points="{}" fill="{c}" fill-opacity="0.2" stroke="none"/>"#, poly.join(" "));
        }
        let path: Vec<String> = s.points.iter().map(|p| format!("{},{}", xs.map(p.0), ys.map(p.1))).collect();
        let _ = write!(out, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        for p in &s.points {
            let base = base_x == Some(p.0);
            let (fill, class, r) = if base { ("red", "point base", 5.0) } else { (c, "point", 3.0) };
            let _ = write!(
                out,
                r#"<circle class="{class}" cx="{}" cy="{}" r="{r}" fill="{fill}" data-series="{}" data-x="{}" data-y="{}" data-err="{}"/>"#,
                xs.map(p.0),
                ys.map(p.1),
                esc(&s.name),
                num(p.0),
                num(p.1),
                num(p.2)
            );
        }
    }
    if series.len() > 1 {
        legend(&mut out, &series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    }
    out.push_str("</svg>\n");
    out
}

fn bar_plot(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (lo, hi) = bounds(series.iter().flat_map(|s| s.1.iter().flat_map(|&(v, e)| [v - e, v + e, 0.0])));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    let xs = Scale::new(0.0, 1.0, LEFT, W - RIGHT);
    let ys = Scale::new(lo, hi, H - BOTTOM, TOP);
    axes(&mut out, &xs, &ys, "", y_label, false);
    let slot = (W - RIGHT - LEFT) / categories.len().max(1) as f64;
    let width = slot * 0.8 / series.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let x0 = LEFT + slot * ci as f64 + slot * 0.1;
        let _ = write!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end" transform="rotate(-35 {} {})">{}</text>"#,
            x0 + slot * 0.4,
            H - BOTTOM + 14.0,
            x0 + slot * 0.4,
            H - BOTTOM + 14.0,
            esc(cat)
        );
        for (si, (name, values)) in series.iter().enumerate() {
            let Some(&(v, e)) = values.get(ci) else { continue };
            if !v.is_finite() {
                continue;
            }
            let c = PALETTE[si % PALETTE.len()];
            let x = x0 + width * si as f64;
            let (ya, yb) = (ys.map(v.max(0.0)), ys.map(v.min(0.0)));
            let _ = write!(
                out,
                r#"<rect class="bar" x="{x}" y="{ya}" width="{width}" height="{}" fill="{c}" data-series="{}" data-label="{}" data-y="{}" data-err="{}"/>"#,
                yb - ya,
                esc(name),
                esc(cat),
                num(v),
                num(e)
            );
            if e > 0.0 {
                let xm = x + width / 2.0;
                let _ = write!(out, r#"<line x1="{xm}" y1="{}" x2="{xm}" y2="{}" stroke="black"/>"#, ys.map(v - e), ys.map(v + e));
            }
        }
    }
    if series.len() > 1 {
        legend(&mut out, &series.iter().map(|s| s.0.as_str()).collect::<Vec<_>>());
    }
    out.push_str("</svg>\n");
    out
}

fn histogram_plot(title: &str, panels: &[HistPanel]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let n = panels.len().max(1) as f64;
    let pw = (W - 20.0) / n;
    for (pi, p) in panels.iter().enumerate() {
        let x0 = 10.0 + pw * pi as f64 + 30.0;
        let x1 = 10.0 + pw * (pi + 1) as f64 - 10.0;
        let y0 = H - BOTTOM;
        let max = p.groups.iter().flat_map(|g| g.1.iter()).copied().max().unwrap_or(1).max(1) as f64;
        let _ = write!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, TOP + 5.0, esc(&p.title));
        let _ = write!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
        let _ = write!(out, r#"<text x="{x0}" y="{}">{}</text>"#, y0 + 16.0, tick(p.lo));
        let _ = write!(out, r#"<text x="{x1}" y="{}" text-anchor="end">{}</text>"#, y0 + 16.0, tick(p.hi));
        for (gi, (name, bins)) in p.groups.iter().enumerate() {
            let c = PALETTE[gi % PALETTE.len()];
            let bw = (x1 - x0) / bins.len().max(1) as f64;
            for (bi, &count) in bins.iter().enumerate() {
                let h = (y0 - TOP - 20.0) * count as f64 / max;
                let _ = write!(
                    out,
                    r#"<rect class="bin" x="{}" y="{}" width="{bw}" height="{h}" fill="{c}" fill-opacity="0.5" data-series="{}" data-bin="{bi}" data-y="{count}"/>"#,
                    x0 + bw * bi as f64,
                    y0 - h,
                    esc(name)
                );
            }
        }
    }
    let names: Vec<&str> = panels.first().map(|p| p.groups.iter().map(|g| g.0.as_str()).collect()).unwrap_or_default();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

pub fn render_svg(plot: &Plot) -> String {
    match plot {
        Plot::Line { title, x_label, y_label, series, base_x } => line_plot(title, x_label, y_label, series, *base_x),
        Plot::Bars { title, y_label, categories, series } => bar_plot(title, y_label, categories, series),
        Plot::Histograms { title, panels } => histogram_plot(title, panels),
    }
}

pub fn emit_svg(path: &Path, plot: &Plot) -> Result<(), IoError> {
    Ok(write_atomic(path, render_svg(plot).as_bytes())?)
}

/// Values of attribute `attr` on every element of class `class`, in
/// document order.
pub fn read_marks(svg: &str, class: &str, attr: &str) -> Vec<String> {
    let needle = format!("{attr}=\"");
    svg.split('<')
        .filter(|el| el.contains(&format!("class=\"{class}")))
        .filter_map(|el| {
            let start = el.find(&needle)? + needle.len();
            let end = el[start..].find('"')? + start;
            Some(el[start..end].to_string())
        })
        .collect()
}
