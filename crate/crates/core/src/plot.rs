//! Small hand-written SVG emitters: line charts for accuracy curves and
//! grayscale heatmaps for attribution maps.

use std::fmt::Write as _;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Shaded x-interval (the training lengths).
    pub shade: Option<(f64, f64)>,
    pub y_range: (f64, f64),
}

impl LinePlot {
    pub fn accuracy(title: &str, x_label: &str) -> Self {
        LinePlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: "accuracy".into(),
            series: Vec::new(),
            shade: None,
            y_range: (0.0, 1.0),
        }
    }

    pub fn to_svg(&self) -> String {
        let (w, h) = (720.0, 440.0);
        let (left, right, top, bottom) = (64.0, 180.0, 40.0, 56.0);
        let (pw, ph) = (w - left - right, h - top - bottom);
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if let Some((a, b)) = self.shade {
            x0 = x0.min(a);
            x1 = x1.max(b);
        }
        if !x0.is_finite() {
            (x0, x1) = (0.0, 1.0);
        }
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        let (y0, y1) = self.y_range;
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + (1.0 - (y.clamp(y0, y1) - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        if let Some((a, b)) = self.shade {
            let _ = writeln!(
                s,
                r##"<rect class="train-window" x="{:.2}" y="{top}" width="{:.2}" height="{ph}" fill="#d0d0d0" fill-opacity="0.5"/>"##,
                sx(a),
                (sx(b) - sx(a)).max(1.0)
            );
        }
        let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for i in 0..=5 {
            let y = y0 + (y1 - y0) * i as f64 / 5.0;
            let py = sy(y);
            let _ = writeln!(s, r##"<line x1="{left}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/>"##, left + pw);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"#, left - 6.0, py + 4.0);
        }
        for i in 0..=6 {
            let x = x0 + (x1 - x0) * i as f64 / 6.0;
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.0}</text>"#, sx(x), top + ph + 18.0);
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 14.0, esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            esc(&self.y_label)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, esc(&self.title));
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, pts.join(" "));
            for &(x, y) in &series.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
            }
            let ly = top + 10.0 + 20.0 * i as f64;
            let lx = left + pw + 14.0;
            let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, lx + 20.0);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, esc(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Grayscale heatmap; values in `[0, 1]`, darker is larger.
pub fn heatmap_svg(values: &[Vec<f64>], row_labels: &[String], col_labels: &[String], title: &str) -> String {
    let rows = values.len();
    let cols = values.first().map_or(0, |r| r.len());
    let cell = 10.0;
    let (left, top) = (70.0, 40.0);
    let w = left + cell * cols as f64 + 20.0;
    let h = top + cell * rows as f64 + 40.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="monospace" font-size="8">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left}" y="16" font-size="12">{}</text>"#, esc(title));
    for (c, label) in col_labels.iter().enumerate() {
        let x = left + cell * c as f64 + cell / 2.0;
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, top - 4.0, esc(label));
    }
    for (r, row) in values.iter().enumerate() {
        let y = top + cell * r as f64;
        if let Some(label) = row_labels.get(r) {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 4.0, y + cell * 0.8, esc(label));
        }
        for (c, &v) in row.iter().enumerate() {
            let g = gray_level(v);
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="rgb({g},{g},{g})"/>"#,
                left + cell * c as f64
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

/// 255 for zero, 0 for one.
pub fn gray_level(v: f64) -> u8 {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    (255.0 - (v * 255.0).round()) as u8
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
