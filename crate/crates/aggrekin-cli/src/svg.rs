//! Minimal self-contained SVG line charts; no plotting dependency.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn project(&self, v: f64, lo_px: f64, hi_px: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        let span = self.hi - self.lo;
        if span == 0.0 {
            return Some(0.5 * (lo_px + hi_px));
        }
        Some(lo_px + (v - self.lo) / span * (hi_px - lo_px))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..=5)
            .map(|i| {
                let v = self.lo + (self.hi - self.lo) * i as f64 / 5.0;
                let label = if self.log { format!("{:.2e}", 10f64.powf(v)) } else { format!("{v:.3}") };
                (v, label)
            })
            .collect()
    }
}

fn axis_range(values: impl Iterator<Item = f64>, log: bool) -> Axis {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if log && v <= 0.0 {
            continue;
        }
        let v = if log { v.log10() } else { v };
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    Axis { lo, hi, log }
}

/// Render a line chart of the given series. Log axes drop nonpositive points.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
    logx: bool,
    logy: bool,
) -> String {
    let x_axis = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)), logx);
    let y_axis = axis_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)), logy);
    let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
    let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        0.5 * (x0 + x1),
        title
    ));

    // frame
    out.push_str(&format!(
        "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333\"/>\n",
        x1 - x0,
        y0 - y1
    ));

    for (v, label) in x_axis.ticks() {
        let px = x0 + (v - x_axis.lo) / (x_axis.hi - x_axis.lo) * (x1 - x0);
        out.push_str(&format!(
            "<line x1=\"{px:.1}\" y1=\"{y0:.1}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
            y0 + 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{px:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{label}</text>\n",
            y0 + 18.0
        ));
    }
    for (v, label) in y_axis.ticks() {
        let py = y0 + (v - y_axis.lo) / (y_axis.hi - y_axis.lo) * (y1 - y0);
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{x0:.1}\" y2=\"{py:.1}\" stroke=\"#333\"/>\n",
            x0 - 5.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{label}</text>\n",
            x0 - 8.0,
            py + 4.0
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{x_label}</text>\n",
        0.5 * (x0 + x1),
        HEIGHT - 12.0
    ));
    out.push_str(&format!(
        "<text x=\"16\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{y_label}</text>\n",
        0.5 * (y0 + y1),
        0.5 * (y0 + y1)
    ));

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            match (x_axis.project(x, x0, x1), y_axis.project(y, y0, y1)) {
                (Some(px), Some(py)) => {
                    path.push_str(if pen_down { "L" } else { "M" });
                    path.push_str(&format!("{px:.2} {py:.2} "));
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        if !path.is_empty() {
            out.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                path.trim_end()
            ));
        }
        let ly = MARGIN_T + 16.0 * idx as f64 + 12.0;
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            x1 - 120.0,
            x1 - 95.0
        ));
        out.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            x1 - 88.0,
            ly + 4.0,
            s.name
        ));
    }
    out.push_str("</svg>\n");
    out
}
