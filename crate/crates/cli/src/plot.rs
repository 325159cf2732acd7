//! Deterministic SVG line plots and heatmaps rendered from CSV tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};
use crate::output::Table;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const COLORMAP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

/// What to draw from which columns.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotKind {
    /// One polyline per `y` column against `x`.
    Line { x: String, ys: Vec<String> },
    /// Colour map of `z` on the grid of distinct `x` and `y` values.
    Heatmap { x: String, y: String, z: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub kind: PlotKind,
    pub title: String,
}

impl PlotSpec {
    pub fn line(x: &str, ys: &[&str], title: &str) -> Self {
        Self {
            kind: PlotKind::Line {
                x: x.into(),
                ys: ys.iter().map(|s| s.to_string()).collect(),
            },
            title: title.into(),
        }
    }

    pub fn heatmap(x: &str, y: &str, z: &str, title: &str) -> Self {
        Self {
            kind: PlotKind::Heatmap {
                x: x.into(),
                y: y.into(),
                z: z.into(),
            },
            title: title.into(),
        }
    }
}

/// Render the CSV at `csv_path` and write the SVG next to it.
pub fn emit_plot(csv_path: &Path, spec: &PlotSpec) -> CliResult<PathBuf> {
    let table = Table::read_csv(csv_path)?;
    let svg = render(&table, spec)?;
    let path = csv_path.with_extension("svg");
    std::fs::write(&path, svg)?;
    Ok(path)
}

fn column(table: &Table, name: &str) -> CliResult<Vec<f64>> {
    table
        .column(name)
        .ok_or_else(|| CliError::Schema(format!("missing column {name:?}; have {}", table.columns.join(", "))))
}

/// SVG text for `table`.
pub fn render(table: &Table, spec: &PlotSpec) -> CliResult<String> {
    if table.rows.is_empty() {
        return Err(CliError::Schema("table has no rows".into()));
    }
    match &spec.kind {
        PlotKind::Line { x, ys } => {
            let xs = column(table, x)?;
            let series = ys.iter().map(|y| column(table, y)).collect::<CliResult<Vec<_>>>()?;
            Ok(render_line(&xs, ys, &series, x, &spec.title))
        }
        PlotKind::Heatmap { x, y, z } => {
            let (xs, ys, zs) = (column(table, x)?, column(table, y)?, column(table, z)?);
            Ok(render_heatmap(&xs, &ys, &zs, x, y, z, &spec.title))
        }
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        (lo - pad, hi + pad)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, v: f64) -> f64 {
        MARGIN_LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn label(v: f64) -> String {
    let s = format!("{v:.4}");
    let t = s.trim_end_matches('0');
    t.strip_suffix('.').unwrap_or(t).to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn axes(svg: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (y0, y1) = (HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let _ = writeln!(svg, r##"<rect x="{x0}" y="{y1}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000"/>"##, x1 - x0, y0 - y1);
    for k in 0..=4 {
        let xv = f.x.0 + (f.x.1 - f.x.0) * k as f64 / 4.0;
        let px = f.px(xv);
        let _ = writeln!(svg, r##"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{:.2}" stroke="#000000"/>"##, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, label(xv));
        let yv = f.y.0 + (f.y.1 - f.y.0) * k as f64 / 4.0;
        let py = f.py(yv);
        let _ = writeln!(svg, r##"<line x1="{:.2}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="#000000"/>"##, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, label(yv));
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 18.0, escape(x_label));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn render_line(xs: &[f64], names: &[String], series: &[Vec<f64>], x_label: &str, title: &str) -> String {
    let f = Frame {
        x: range(xs.iter().copied()),
        y: range(series.iter().flatten().copied()),
    };
    let mut svg = String::new();
    open(&mut svg, title);
    let y_label = names.join(", ");
    axes(&mut svg, &f, x_label, &y_label);
    for (i, ys) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut points = String::new();
        for (x, y) in xs.iter().zip(ys) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(points, "{:.2},{:.2} ", f.px(*x), f.py(*y));
            }
        }
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, points.trim_end());
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN_RIGHT - 6.0,
            MARGIN_TOP + 16.0 * (i as f64 + 1.0),
            escape(&names[i])
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn distinct(values: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (COLORMAP.len() - 1) as f64;
    let k = (t.floor() as usize).min(COLORMAP.len() - 2);
    let f = t - k as f64;
    let (a, b) = (COLORMAP[k], COLORMAP[k + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn cell_edges(centers: &[f64]) -> Vec<f64> {
    if centers.len() == 1 {
        return vec![centers[0] - 0.5, centers[0] + 0.5];
    }
    let n = centers.len();
    let mut edges = Vec::with_capacity(n + 1);
    edges.push(centers[0] - 0.5 * (centers[1] - centers[0]));
    for w in centers.windows(2) {
        edges.push(0.5 * (w[0] + w[1]));
    }
    edges.push(centers[n - 1] + 0.5 * (centers[n - 1] - centers[n - 2]));
    edges
}

fn render_heatmap(xs: &[f64], ys: &[f64], zs: &[f64], x: &str, y: &str, z: &str, title: &str) -> String {
    let ux = distinct(xs);
    let uy = distinct(ys);
    let (ex, ey) = (cell_edges(&ux), cell_edges(&uy));
    let f = Frame {
        x: (ex[0], ex[ex.len() - 1]),
        y: (ey[0], ey[ey.len() - 1]),
    };
    let (zlo, zhi) = range(zs.iter().copied());
    let mut svg = String::new();
    open(&mut svg, &format!("{title} ({z}: {} to {})", label(zlo), label(zhi)));
    for ((xv, yv), zv) in xs.iter().zip(ys).zip(zs) {
        let (Ok(i), Ok(j)) = (ux.binary_search_by(|p| p.total_cmp(xv)), uy.binary_search_by(|p| p.total_cmp(yv))) else {
            continue;
        };
        let (px0, px1) = (f.px(ex[i]), f.px(ex[i + 1]));
        let (py0, py1) = (f.py(ey[j + 1]), f.py(ey[j]));
        let _ = writeln!(
            svg,
            r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            px1 - px0,
            py1 - py0,
            color((zv - zlo) / (zhi - zlo))
        );
    }
    axes(&mut svg, &f, x, y);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(&["x_GHz", "abs_t"]);
        for k in 0..5 {
            t.push(vec![k as f64, (k as f64 - 2.0).powi(2)]);
        }
        t
    }

    #[test]
    fn line_plot_is_deterministic() {
        let spec = PlotSpec::line("x_GHz", &["abs_t"], "spectrum");
        let a = render(&table(), &spec).unwrap();
        assert_eq!(a, render(&table(), &spec).unwrap());
        assert!(a.contains("viewBox=\"0 0 800 500\""));
        assert!(a.contains("x_GHz"));
        assert!(a.contains("<polyline"));
    }

    #[test]
    fn schema_errors() {
        let spec = PlotSpec::line("x_GHz", &["phase"], "spectrum");
        assert!(matches!(render(&table(), &spec), Err(CliError::Schema(_))));
        let empty = Table::new(&["x_GHz", "abs_t"]);
        assert!(matches!(render(&empty, &PlotSpec::line("x_GHz", &["abs_t"], "t")), Err(CliError::Schema(_))));
    }

    #[test]
    fn heatmap_cells() {
        let mut t = Table::new(&["a", "b", "z"]);
        for i in 0..3 {
            for j in 0..4 {
                t.push(vec![i as f64, j as f64 * 0.5, (i * j) as f64]);
            }
        }
        let svg = render(&t, &PlotSpec::heatmap("a", "b", "z", "map")).unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 12 + 1);
    }
}
