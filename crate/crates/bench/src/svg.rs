//! Minimal self-contained SVG charts. Every file records its data ranges in
//! a leading comment and on the axis labels.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Finite range of `values`, widened when degenerate.
fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn transform(v: f64, log: bool) -> f64 {
    if log {
        if v > 0.0 {
            v.log10()
        } else {
            f64::NAN
        }
    } else {
        v
    }
}

fn tick_label(v: f64, log: bool) -> String {
    let x = if log { 10f64.powf(v) } else { v };
    if x != 0.0 && (x.abs() >= 1e4 || x.abs() < 1e-2) {
        format!("{x:.1e}")
    } else {
        format!("{x:.3}")
    }
}

fn header(out: &mut String, title: &str, comment: &str) {
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(out, "<!-- {} -->", escape(comment)).unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (LEFT + W - RIGHT) / 2.0, escape(title)).unwrap();
}

/// Axis frame with five ticks per axis over the transformed ranges.
fn axes(out: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64), p: &LinePlot) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = LEFT + f * pw;
        let y = TOP + ph - f * ph;
        writeln!(out, r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0).unwrap();
        writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, tick_label(x0 + f * (x1 - x0), p.log_x)).unwrap();
        writeln!(out, r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0).unwrap();
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, tick_label(y0 + f * (y1 - y0), p.log_y)).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, escape(&p.x_label)).unwrap();
    writeln!(out, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0, escape(&p.y_label)).unwrap();
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str, log_x: bool, log_y: bool) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), log_x, log_y, series: Vec::new() }
    }

    pub fn with_series(mut self, name: &str, points: Vec<(f64, f64)>) -> Self {
        self.series.push(Series { name: name.into(), points });
        self
    }

    pub fn render(&self) -> String {
        let tx = |v: f64| transform(v, self.log_x);
        let ty = |v: f64| transform(v, self.log_y);
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let xr = range(all().map(|p| tx(p.0))).unwrap_or((0.0, 1.0));
        let yr = range(all().map(|p| ty(p.1))).unwrap_or((0.0, 1.0));
        let mut out = String::new();
        let comment = format!(
            "{}: x in [{}, {}], y in [{}, {}]{}{}",
            self.title,
            tick_label(xr.0, self.log_x),
            tick_label(xr.1, self.log_x),
            tick_label(yr.0, self.log_y),
            tick_label(yr.1, self.log_y),
            if self.log_x { ", log x" } else { "" },
            if self.log_y { ", log y" } else { "" },
        );
        header(&mut out, &self.title, &comment);
        axes(&mut out, xr, yr, self);
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let px = |v: f64| LEFT + (tx(v) - xr.0) / (xr.1 - xr.0) * pw;
        let py = |v: f64| TOP + ph - (ty(v) - yr.0) / (yr.1 - yr.0) * ph;
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| tx(p.0).is_finite() && ty(p.1).is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
                .collect();
            if !pts.is_empty() {
                writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" ")).unwrap();
                for p in &pts {
                    let (x, y) = p.split_once(',').expect("formatted pair");
                    writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#).unwrap();
                }
            }
            let ly = TOP + 14.0 + 16.0 * i as f64;
            writeln!(out, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, W - RIGHT + 10.0, W - RIGHT + 28.0).unwrap();
            writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, W - RIGHT + 32.0, ly + 4.0, escape(&s.name)).unwrap();
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Grid of colored cells, `values[row][col]` at `(xs[col], ys[row])`; NaN cells are grey.
pub fn heat_grid(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let vr = range(values.iter().flatten().copied()).unwrap_or((0.0, 1.0));
    let mut out = String::new();
    header(&mut out, title, &format!("{title}: {} x {} cells, value in [{}, {}]", ys.len(), xs.len(), vr.0, vr.1));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let cw = pw / xs.len().max(1) as f64;
    let ch = ph / ys.len().max(1) as f64;
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                let t = (v - vr.0) / (vr.1 - vr.0);
                let red = (255.0 * t).round() as u8;
                let blue = (255.0 * (1.0 - t)).round() as u8;
                format!("rgb({red},64,{blue})")
            } else {
                "#cccccc".into()
            };
            let x = LEFT + c as f64 * cw;
            let y = TOP + ph - (r + 1) as f64 * ch;
            writeln!(out, r#"<rect class="cell" x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}"><title>{v}</title></rect>"#).unwrap();
        }
    }
    for (c, x) in xs.iter().enumerate() {
        writeln!(out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{x}</text>"#, LEFT + (c as f64 + 0.5) * cw, TOP + ph + 16.0).unwrap();
    }
    for (r, y) in ys.iter().enumerate() {
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{y}</text>"#, LEFT - 6.0, TOP + ph - (r as f64 + 0.5) * ch + 4.0).unwrap();
    }
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, escape(x_label)).unwrap();
    writeln!(out, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0, escape(y_label)).unwrap();
    writeln!(out, r#"<text x="{}" y="{}">min {:.4}</text>"#, W - RIGHT + 10.0, TOP + 14.0, vr.0).unwrap();
    writeln!(out, r#"<text x="{}" y="{}">max {:.4}</text>"#, W - RIGHT + 10.0, TOP + 30.0, vr.1).unwrap();
    out.push_str("</svg>\n");
    out
}

/// `(label, median, boxes)`, boxes as `(lower, upper)` from the widest inward.
pub type LetterGroup = (String, f64, Vec<(f64, f64)>);

/// Nested letter-value boxes per group, plus the median.
pub fn letter_values(title: &str, y_label: &str, groups: &[LetterGroup]) -> String {
    let yr = range(groups.iter().flat_map(|g| g.2.iter().flat_map(|b| [b.0, b.1]).chain([g.1]))).unwrap_or((0.0, 1.0));
    let mut out = String::new();
    header(&mut out, title, &format!("{title}: {} groups, value in [{}, {}]", groups.len(), yr.0, yr.1));
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let py = |v: f64| TOP + ph - (v - yr.0) / (yr.1 - yr.0) * ph;
    let gw = pw / groups.len().max(1) as f64;
    writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();
    for i in 0..=4 {
        let v = yr.0 + i as f64 / 4.0 * (yr.1 - yr.0);
        writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, LEFT - 8.0, py(v) + 4.0).unwrap();
    }
    for (g, (name, median, boxes)) in groups.iter().enumerate() {
        let cx = LEFT + (g as f64 + 0.5) * gw;
        let n = boxes.len().max(1) as f64;
        for (d, &(lo, hi)) in boxes.iter().enumerate() {
            let half = 0.4 * gw * (1.0 - d as f64 / (n + 1.0));
            let shade = 200 - (120.0 * d as f64 / n) as i32;
            writeln!(out, r#"<rect class="box" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({shade},{shade},255)" stroke="black" stroke-width="0.5"/>"#, cx - half, py(hi), 2.0 * half, (py(lo) - py(hi)).max(0.5)).unwrap();
        }
        writeln!(out, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#, cx - 0.4 * gw, py(*median), cx + 0.4 * gw, py(*median)).unwrap();
        writeln!(out, r#"<text x="{cx:.2}" y="{}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, escape(name)).unwrap();
    }
    writeln!(out, r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#, TOP + ph / 2.0, TOP + ph / 2.0, escape(y_label)).unwrap();
    out.push_str("</svg>\n");
    out
}
