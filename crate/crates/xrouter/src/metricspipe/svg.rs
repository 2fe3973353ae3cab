//! Minimal self-contained SVG charts. No external plotting dependency; the
//! underlying numbers are embedded as a data table inside the file.

#[derive(Debug, Clone)]
pub struct ChartSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 50.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: [&str; 8] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Multi-series line chart. `hline` draws a labelled horizontal reference
/// line (used for mean-throughput markers).
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[ChartSeries],
    hline: Option<f64>,
) -> String {
    let points: Vec<(f64, f64)> =
        series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (x_min, x_max) = axis_range(points.iter().map(|p| p.0), 0.0);
    let (y_min, y_max) = axis_range(
        points.iter().map(|p| p.1).chain(hline),
        0.0,
    );

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min).max(f64::MIN_POSITIVE) * plot_w;
    let sy = |y: f64| {
        MARGIN_T + plot_h - (y - y_min) / (y_max - y_min).max(f64::MIN_POSITIVE) * plot_h
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));

    // axes
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#333\"/>\n",
        MARGIN_T + plot_h,
        MARGIN_L + plot_w,
        MARGIN_T + plot_h
    ));
    out.push_str(&format!(
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"#333\"/>\n",
        MARGIN_T + plot_h
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    ));

    // tick labels at both ends of each axis
    for (x, anchor) in [(x_min, "start"), (x_max, "end")] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{anchor}\">{}</text>\n",
            sx(x),
            MARGIN_T + plot_h + 18.0,
            fmt_num(x)
        ));
    }
    for y in [y_min, y_max] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            MARGIN_L - 6.0,
            sy(y) + 4.0,
            fmt_num(y)
        ));
    }

    if let Some(h) = hline {
        out.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#888\" \
             stroke-dasharray=\"6 4\"/>\n<text x=\"{2}\" y=\"{3}\" fill=\"#555\">mean {4}</text>\n",
            sy(h),
            MARGIN_L + plot_w,
            MARGIN_L + plot_w + 6.0,
            sy(h) + 4.0,
            fmt_num(h)
        ));
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !s.points.is_empty() {
            let path: Vec<String> =
                s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            out.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>\n",
                path.join(" ")
            ));
            for &(x, y) in &s.points {
                out.push_str(&format!(
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.6\" fill=\"{color}\"/>\n",
                    sx(x),
                    sy(y)
                ));
            }
        }
        let ly = MARGIN_T + 16.0 * i as f64;
        out.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n\
             <text x=\"{}\" y=\"{}\">{}</text>\n",
            MARGIN_L + plot_w + 8.0,
            ly,
            MARGIN_L + plot_w + 22.0,
            ly + 9.0,
            escape(&s.name)
        ));
    }

    out.push_str("<!-- data\n");
    for s in series {
        out.push_str(&format!("series {}\n", s.name));
        for (x, y) in &s.points {
            out.push_str(&format!("{x} {y}\n"));
        }
    }
    out.push_str("-->\n</svg>\n");
    out
}

/// Row-major heatmap with per-cell text; used for sweep reports.
pub fn heatmap(
    title: &str,
    row_labels: &[String],
    col_labels: &[String],
    cells: &[f64],
    cell_text: &[String],
) -> String {
    assert_eq!(cells.len(), row_labels.len() * col_labels.len());
    assert_eq!(cells.len(), cell_text.len());
    let cell_w = 110.0;
    let cell_h = 40.0;
    let left = 170.0;
    let top = 70.0;
    let width = left + cell_w * col_labels.len() as f64 + 20.0;
    let height = top + cell_h * row_labels.len() as f64 + 20.0;

    let lo = cells.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shade = |v: f64| {
        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
        // white to steel blue
        let r = (255.0 - t * 160.0) as u8;
        let g = (255.0 - t * 130.0) as u8;
        let b = (255.0 - t * 75.0) as u8;
        format!("#{r:02x}{g:02x}{b:02x}")
    };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    out.push_str(&format!(
        "<text x=\"{}\" y=\"26\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        width / 2.0,
        escape(title)
    ));
    for (c, label) in col_labels.iter().enumerate() {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            left + cell_w * (c as f64 + 0.5),
            top - 10.0,
            escape(label)
        ));
    }
    for (r, label) in row_labels.iter().enumerate() {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            left - 8.0,
            top + cell_h * (r as f64 + 0.5) + 4.0,
            escape(label)
        ));
        for c in 0..col_labels.len() {
            let i = r * col_labels.len() + c;
            out.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{cell_w}\" height=\"{cell_h}\" fill=\"{}\" \
                 stroke=\"#ccc\"/>\n<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                left + cell_w * c as f64,
                top + cell_h * r as f64,
                shade(cells[i]),
                left + cell_w * (c as f64 + 0.5),
                top + cell_h * (r as f64 + 0.5) + 4.0,
                escape(&cell_text[i])
            ));
        }
    }
    out.push_str("</svg>\n");
    out
}

fn axis_range(values: impl Iterator<Item = f64>, floor: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    lo = lo.min(floor);
    if hi <= lo {
        hi = lo + 1.0;
    }
    (lo, hi)
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
