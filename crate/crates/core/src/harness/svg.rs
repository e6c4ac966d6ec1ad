//! Minimal SVG 1.1 charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, stamp: Option<&str>) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    if let Some(s) = stamp {
        let _ = writeln!(out, "<!-- {} -->", escape(s).replace("--", "- -"));
    }
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        WIDTH / 2.0,
        escape(title)
    );
}

fn plot_w() -> f64 {
    WIDTH - LEFT - RIGHT
}

fn plot_h() -> f64 {
    HEIGHT - TOP - BOTTOM
}

fn legend(out: &mut String, entries: &[(String, &str)]) {
    for (i, (name, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/><text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            y - 10.0,
            x + 18.0,
            y,
            escape(name)
        );
    }
}

pub struct Series {
    pub name: String,
    /// `(category index, y)`; missing categories leave a gap in the marker set.
    pub points: Vec<(usize, f64)>,
}

/// Line chart over categorical x positions with a fixed `[0, 1]` y axis.
pub fn line_chart(title: &str, x_label: &str, categories: &[String], series: &[Series], stamp: Option<&str>) -> String {
    let mut out = String::new();
    header(&mut out, title, stamp);
    let (pw, ph) = (plot_w(), plot_h());
    let x_of = |i: usize| {
        if categories.len() <= 1 {
            LEFT + pw / 2.0
        } else {
            LEFT + pw * i as f64 / (categories.len() - 1) as f64
        }
    };
    let y_of = |v: f64| TOP + ph * (1.0 - v.clamp(0.0, 1.0));
    let _ = writeln!(
        out,
        "<g stroke=\"black\" stroke-width=\"1\"><line x1=\"{LEFT}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\"/><line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{:.1}\"/></g>",
        TOP + ph,
        LEFT + pw,
        TOP + ph,
        TOP + ph
    );
    for t in 0..=5 {
        let v = t as f64 / 5.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.1}</text>",
            LEFT - 6.0,
            y_of(v) + 4.0
        );
    }
    for (i, c) in categories.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            x_of(i),
            TOP + ph + 18.0,
            escape(c)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let mut entries = Vec::new();
    for (s, series) in series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .map(|&(i, v)| format!("{:.2},{:.2}", x_of(i), y_of(v)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline class=\"series\" data-name=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            escape(&series.name),
            pts.join(" ")
        );
        for &(i, v) in &series.points {
            let _ = writeln!(
                out,
                "<circle class=\"marker\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"/>",
                x_of(i),
                y_of(v)
            );
        }
        entries.push((series.name.clone(), color));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Scatter plot of `(x, y, class)` points coloured by class.
pub fn scatter(title: &str, points: &[(f64, f64, u8)], class_names: &[(u8, &str)], stamp: Option<&str>) -> String {
    let mut out = String::new();
    header(&mut out, title, stamp);
    let (pw, ph) = (plot_w(), plot_h());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, _) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
    let (sx, sy) = (span(x0, x1), span(y0, y1));
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw:.1}\" height=\"{ph:.1}\" fill=\"none\" stroke=\"black\"/>"
    );
    let color = |c: u8| {
        class_names
            .iter()
            .position(|&(k, _)| k == c)
            .map_or(PALETTE[7], |i| PALETTE[i % PALETTE.len()])
    };
    for &(x, y, c) in points {
        let _ = writeln!(
            out,
            "<circle class=\"point\" data-class=\"{c}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            LEFT + pw * (x - x0) / sx,
            TOP + ph * (1.0 - (y - y0) / sy),
            color(c)
        );
    }
    let entries: Vec<(String, &str)> = class_names
        .iter()
        .map(|&(c, name)| (format!("{c}: {name}"), color(c)))
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}
