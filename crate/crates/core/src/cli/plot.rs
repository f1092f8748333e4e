//! Static SVG regret plots rendered from a summary CSV.

use std::fmt::Write as _;
use std::path::Path;

/// Columns a summary CSV must carry.
pub const SUMMARY_COLUMNS: [&str; 5] = ["algorithm", "t", "regret_mean", "regret_std", "runs"];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 200.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error("summary CSV is missing columns: {}", missing.join(", "))]
    SchemaMismatch { missing: Vec<String> },
    #[error("summary CSV has no data rows")]
    Empty,
    #[error("malformed summary CSV: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// One curve: group key and its `(t, regret_mean)` points in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub key: String,
    pub points: Vec<(f64, f64)>,
}

/// Groups summary rows by the `algorithm` column, keeping first-seen order.
pub fn read_summary(path: &Path) -> Result<Vec<Series>, PlotError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| PlotError::Parse(e.to_string()))?;
    let headers = reader.headers().map_err(|e| PlotError::Parse(e.to_string()))?.clone();
    let missing: Vec<String> = SUMMARY_COLUMNS
        .iter()
        .filter(|c| !headers.iter().any(|h| h == **c))
        .map(|c| c.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(PlotError::SchemaMismatch { missing });
    }
    let col = |name: &str| headers.iter().position(|h| h == name).expect("checked above");
    let (i_alg, i_t, i_mean) = (col("algorithm"), col("t"), col("regret_mean"));
    let mut series: Vec<Series> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| PlotError::Parse(e.to_string()))?;
        let parse = |i: usize| -> Result<f64, PlotError> {
            record
                .get(i)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| PlotError::Parse(format!("bad number in row {:?}", record.position().map(|p| p.line()))))
        };
        let key = record.get(i_alg).unwrap_or_default().to_string();
        let point = (parse(i_t)?, parse(i_mean)?);
        match series.iter_mut().find(|s| s.key == key) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                key,
                points: vec![point],
            }),
        }
    }
    if series.is_empty() {
        return Err(PlotError::Empty);
    }
    Ok(series)
}

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    (x0, x1, y0, y1)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// SVG document with one polyline and one legend entry per series.
pub fn render_svg(series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN_LEFT, MARGIN_LEFT + plot_w, MARGIN_TOP, MARGIN_TOP + plot_h);
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}"/><line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}"/></g>"#
    );
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(fx),
            bottom + 18.0,
            tick_label(fx)
        );
        let _ = writeln!(
            svg,
            r#"<text class="tick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(fy) + 4.0,
            tick_label(fy)
        );
    }
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line class="zero" x1="{left}" y1="{z:.2}" x2="{right}" y2="{z:.2}" stroke="#bbbbbb" stroke-dasharray="4 3"/>"##,
            z = sy(0.0)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#,
        left + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="ylabel" x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">cumulative regret</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-key="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(&s.key),
            points.join(" ")
        );
        let ly = top + 10.0 + 20.0 * i as f64;
        let lx = right + 20.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.key)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e4) {
        format!("{}", (v * 100.0).round() / 100.0)
    } else {
        format!("{v:.1e}")
    }
}

/// Reads `summary_csv` and writes the plot to `out_svg`. Nothing is written
/// when the CSV is malformed or empty.
pub fn emit_plot(summary_csv: &Path, out_svg: &Path) -> Result<(), PlotError> {
    let series = read_summary(summary_csv)?;
    std::fs::write(out_svg, render_svg(&series))?;
    Ok(())
}
