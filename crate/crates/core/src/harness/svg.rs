//! Minimal SVG charts and CSV quoting for report artifacts.

use std::fmt::Write as _;

use crate::calibration::xml_escape;

const PALETTE: [&str; 6] = ["#3b6fb6", "#d9534f", "#5cb85c", "#f0ad4e", "#6f42c1", "#17a2b8"];

/// Quotes a CSV field when it contains a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn header(w: f64, h: f64, title: &str) -> String {
    let mut svg =
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        w / 2.0,
        xml_escape(title)
    )
    .unwrap();
    svg
}

/// Line chart of named `(x, y)` series on shared linear axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, pad) = (480.0, 320.0, 48.0);
    let mut svg = header(w, h, title);
    let points = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    writeln!(
        svg,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    )
    .unwrap();
    for (value, anchor_y) in [(y0, sy(y0)), (y1, sy(y1))] {
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{anchor_y:.2}\" text-anchor=\"end\" font-size=\"10\">{}</text>",
            pad - 4.0,
            format_tick(value)
        )
        .unwrap();
    }
    for (value, anchor_x) in [(x0, sx(x0)), (x1, sx(x1))] {
        writeln!(
            svg,
            "<text x=\"{anchor_x:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>",
            h - pad + 14.0,
            format_tick(value)
        )
        .unwrap();
    }
    writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>",
        w / 2.0,
        h - 8.0,
        xml_escape(x_label)
    )
    .unwrap();
    writeln!(
        svg,
        "<text x=\"12\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\" transform=\"rotate(-90 12 {})\">{}</text>",
        h / 2.0,
        h / 2.0,
        xml_escape(y_label)
    )
    .unwrap();
    for (i, (name, points)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"/>",
            path.join(" ")
        )
        .unwrap();
        for p in &path {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            writeln!(svg, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"2.5\" fill=\"{colour}\"/>").unwrap();
        }
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"{colour}\">{}</text>",
            pad + 6.0,
            pad + 14.0 + 12.0 * i as f64,
            xml_escape(name)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

/// Heat map with one labelled cell per `(row, column)`; missing values are
/// drawn grey. Colour runs from red (most negative) through white to blue.
pub fn heatmap(title: &str, rows: &[String], columns: &[String], values: &[Vec<Option<f64>>]) -> String {
    let cell = 64.0;
    let (left, top) = (140.0, 60.0);
    let w = left + cell * columns.len() as f64 + 20.0;
    let h = top + cell * rows.len() as f64 + 20.0;
    let mut svg = header(w.max(240.0), h, title);
    let scale = values
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1e-12);
    for (j, name) in columns.iter().enumerate() {
        writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>",
            left + cell * (j as f64 + 0.5),
            top - 8.0,
            xml_escape(name)
        )
        .unwrap();
    }
    for (i, name) in rows.iter().enumerate() {
        let y = top + cell * i as f64;
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"10\">{}</text>",
            left - 6.0,
            y + cell / 2.0 + 4.0,
            xml_escape(name)
        )
        .unwrap();
        for (j, value) in values[i].iter().enumerate() {
            let x = left + cell * j as f64;
            let (fill, label) = match value {
                Some(v) => {
                    let t = (v / scale).clamp(-1.0, 1.0);
                    let fade = (255.0 * (1.0 - t.abs())).round() as u8;
                    let fill = if t >= 0.0 {
                        format!("rgb({fade},{fade},255)")
                    } else {
                        format!("rgb(255,{fade},{fade})")
                    };
                    (fill, format!("{v:.3}"))
                }
                None => ("#ccc".to_string(), "n/a".to_string()),
            };
            writeln!(
                svg,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\" stroke=\"#fff\"/>"
            )
            .unwrap();
            writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"10\">{label}</text>",
                x + cell / 2.0,
                y + cell / 2.0 + 4.0
            )
            .unwrap();
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn charts_are_well_formed() {
        let line = line_chart("t <1>", "x", "y", &[("s".into(), vec![(0.0, 1.0), (1.0, 2.0)])]);
        assert!(line.starts_with("<svg") && line.ends_with("</svg>\n"));
        assert!(line.contains("t &lt;1&gt;"));
        let empty = line_chart("t", "x", "y", &[]);
        assert!(empty.ends_with("</svg>\n"));
        let heat = heatmap("h", &["a".into()], &["b".into(), "c".into()], &[vec![Some(0.0), None]]);
        assert!(heat.contains("n/a"));
    }
}
