//! Minimal SVG plots derived from the CSV outputs.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
    /// Piecewise constant between consecutive x values; the last y is
    /// ignored.
    Steps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Series {
            label: label.into(),
            points,
            style,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn tx(&self, v: f64) -> Option<f64> {
        let v = if self.log_x { v.log10() } else { v };
        v.is_finite().then_some(v)
    }

    fn ty(&self, v: f64) -> Option<f64> {
        let v = if self.log_y { v.log10() } else { v };
        v.is_finite().then_some(v)
    }

    pub fn to_svg(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter_map(|&(x, y)| Some((self.tx(x)?, self.ty(y)?)))
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 <= 0.0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        let (y0, y1) = (y0 - pad, y1 + pad);
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = x0 + f * (x1 - x0);
            let yv = y0 + f * (y1 - y0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                px(xv),
                TOP + ph + 16.0,
                tick(xv, self.log_x)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                py(yv) + 4.0,
                tick(yv, self.log_y)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        for (k, series) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mapped: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(self.tx(x)?), py(self.ty(y)?))))
                .collect();
            match series.style {
                Style::Markers => {
                    for (x, y) in &mapped {
                        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                    }
                }
                Style::Line | Style::Steps => {
                    let mut d = String::new();
                    for (i, (x, y)) in mapped.iter().enumerate() {
                        if i == 0 {
                            let _ = write!(d, "M{x:.2},{y:.2}");
                        } else if series.style == Style::Steps {
                            let _ = write!(d, " H{x:.2}");
                            if i + 1 < mapped.len() {
                                let _ = write!(d, " V{y:.2}");
                            }
                        } else {
                            let _ = write!(d, " L{x:.2},{y:.2}");
                        }
                    }
                    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
                }
            }
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let lx = LEFT + pw - 150.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                ly - 9.0,
                lx + 14.0,
                ly,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64, log: bool) -> String {
    if log {
        format!("1e{v:.1}")
    } else if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Parses a CSV produced by this crate into its header and rows of fields.
pub fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .map(|h| h.split(',').map(str::to_string).collect())
        .unwrap_or_default();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter()
        .map(|r| r.get(i).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN))
        .collect()
}

fn xy(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    x.iter().cloned().zip(y.iter().cloned()).collect()
}

/// Groups rows by the text in column `key`, keeping first-seen order.
fn groups(rows: &[Vec<String>], key: usize) -> Vec<(String, Vec<Vec<String>>)> {
    let mut out: Vec<(String, Vec<Vec<String>>)> = Vec::new();
    for r in rows {
        let k = r.get(key).cloned().unwrap_or_default();
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(r.clone()),
            None => out.push((k, vec![r.clone()])),
        }
    }
    out
}

/// Plot for a CSV written by this crate, chosen by its header. Returns
/// `None` for schemas without a plot.
pub fn plot_csv(title: &str, csv: &str) -> Option<String> {
    let (header, rows) = parse_csv(csv);
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let plot = match h.as_slice() {
        ["s_over_a", "interval_class", "closed_form", "oracle", "rel_err"] => {
            let mut p = Plot::new(title, "s/a", "|G|").log_x().log_y();
            for (class, g) in groups(&rows, 1) {
                let x = column(&g, 0);
                let closed: Vec<f64> = column(&g, 2).iter().map(|v| v.abs()).collect();
                let oracle: Vec<f64> = column(&g, 3).iter().map(|v| v.abs()).collect();
                p = p
                    .with(Series::new(format!("{class} closed form"), xy(&x, &closed), Style::Line))
                    .with(Series::new(format!("{class} oracle"), xy(&x, &oracle), Style::Markers));
            }
            p
        }
        ["mu_over_M", "quantity", "closed_form", "oracle", "rel_err"] => {
            let mut p = Plot::new(title, "mu/M", "value").log_x().log_y();
            for (q, g) in groups(&rows, 1) {
                let x = column(&g, 0);
                p = p
                    .with(Series::new(q.clone(), xy(&x, &column(&g, 2)), Style::Line))
                    .with(Series::new(format!("{q} oracle"), xy(&x, &column(&g, 3)), Style::Markers));
            }
            p
        }
        ["r", "count", "theory_density"] => {
            let r = column(&rows, 0);
            let counts = column(&rows, 1);
            let total: f64 = counts.iter().sum();
            let width = if r.len() > 1 { r[1] - r[0] } else { 1.0 };
            let density: Vec<f64> = counts.iter().map(|c| c / (total * width)).collect();
            let mut edges: Vec<(f64, f64)> = r.iter().zip(&density).map(|(x, d)| (x - 0.5 * width, *d)).collect();
            if let Some(&(x, d)) = edges.last() {
                edges.push((x + width, d));
            }
            Plot::new(title, "r", "density")
                .with(Series::new("samples", edges, Style::Steps))
                .with(Series::new("theory", xy(&r, &column(&rows, 2)), Style::Line))
        }
        ["order", "mean_disp", "p_exceed_cT", "ci_low", "ci_high"] => {
            let x = column(&rows, 0);
            Plot::new(title, "order", "mean |x| / cT, P(|x| > cT)")
                .with(Series::new("mean displacement", xy(&x, &column(&rows, 1)), Style::Line))
                .with(Series::new("exceedance", xy(&x, &column(&rows, 2)), Style::Markers))
        }
        ["branch", "frequency", "ci_low", "ci_high"] => {
            let numbered: Vec<Vec<String>> = rows.iter().filter(|r| r[0].parse::<f64>().is_ok()).cloned().collect();
            let x = column(&numbered, 0);
            Plot::new(title, "branch", "frequency")
                .with(Series::new("frequency", xy(&x, &column(&numbered, 1)), Style::Markers))
                .with(Series::new("ci low", xy(&x, &column(&numbered, 2)), Style::Markers))
                .with(Series::new("ci high", xy(&x, &column(&numbered, 3)), Style::Markers))
        }
        ["t", "branch", "mean", "std_error", "deviation"] => {
            let mut p = Plot::new(title, "t", "mean normalized weight");
            for (b, g) in groups(&rows, 1) {
                p = p.with(Series::new(format!("branch {b}"), xy(&column(&g, 0), &column(&g, 2)), Style::Line));
            }
            p
        }
        ["t", rest @ ..] if rest.iter().all(|c| c.starts_with('a') || c.starts_with('p')) => {
            let t = column(&rows, 0);
            let mut p = Plot::new(title, "t", "normalized weight");
            for (i, name) in rest.iter().enumerate() {
                if name.starts_with('p') {
                    p = p.with(Series::new(*name, xy(&t, &column(&rows, i + 1)), Style::Line));
                }
            }
            p
        }
        _ => return None,
    };
    Some(plot.to_svg())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_is_well_formed_and_stable() {
        let plot = Plot::new("t <a>", "x", "y")
            .log_y()
            .with(Series::new("a", vec![(0.0, 1.0), (1.0, 10.0), (2.0, 0.0)], Style::Line))
            .with(Series::new("b", vec![(0.5, 2.0)], Style::Markers));
        let svg = plot.to_svg();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("t &lt;a&gt;"));
        assert_eq!(svg, plot.to_svg());
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn csv_round_trip() {
        let (h, rows) = parse_csv("a,b\n1,2\n3,\n");
        assert_eq!(h, vec!["a", "b"]);
        assert_eq!(rows[1], vec!["3", ""]);
    }

    #[test]
    fn known_schemas_get_plots() {
        let hist = "r,count,theory_density\n0.1,5,1.0\n0.3,3,1.0\n";
        assert!(plot_csv("h", hist).unwrap().contains("samples"));
        let ladder = "order,mean_disp,p_exceed_cT,ci_low,ci_high\n1,0.1,0,0,0.01\n";
        assert!(plot_csv("l", ladder).is_some());
        assert!(plot_csv("x", "foo,bar\n1,2\n").is_none());
    }
}
