//! Dependency-free SVG renderings for the report figures: grouped bar
//! charts, stacked bars, line charts, and histograms.

use std::fmt::Write as _;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 160.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 70.0;

const PALETTE: [&str; 8] = [
    "#4878cf", "#d65f5f", "#6acc65", "#b47cc7", "#c4ad66", "#77bedb", "#e08b46", "#8c8c8c",
];

/// One named series of a grouped bar chart, aligned with the categories.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1000.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3}")
    }
}

struct Canvas {
    body: String,
}

impl Canvas {
    fn new(title: &str) -> Canvas {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
        );
        let _ = writeln!(
            body,
            "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
        );
        let _ = writeln!(
            body,
            "<text x=\"{}\" y=\"28\" font-size=\"17\" text-anchor=\"middle\">{}</text>",
            WIDTH / 2.0,
            escape(title)
        );
        Canvas { body }
    }

    fn plot_width(&self) -> f64 {
        WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    }

    fn plot_height(&self) -> f64 {
        HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
    }

    /// Maps a data y to pixel y for the range `[lo, hi]`.
    fn y_px(&self, v: f64, lo: f64, hi: f64) -> f64 {
        let span = (hi - lo).max(1e-12);
        MARGIN_TOP + self.plot_height() * (1.0 - (v - lo) / span)
    }

    fn axes_with_y_ticks(&mut self, lo: f64, hi: f64, y_label: &str) {
        let x0 = MARGIN_LEFT;
        let x1 = WIDTH - MARGIN_RIGHT;
        let y1 = HEIGHT - MARGIN_BOTTOM;
        let _ = writeln!(
            self.body,
            "<line x1=\"{x0}\" y1=\"{MARGIN_TOP}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
        );
        let _ = writeln!(
            self.body,
            "<line x1=\"{x0}\" y1=\"{y1}\" x2=\"{x1}\" y2=\"{y1}\" stroke=\"black\"/>"
        );
        for i in 0..=5 {
            let v = lo + (hi - lo) * f64::from(i) / 5.0;
            let y = self.y_px(v, lo, hi);
            let _ = writeln!(
                self.body,
                "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\"/>",
                x0 - 5.0
            );
            let _ = writeln!(
                self.body,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
                x0 - 9.0,
                y + 4.0,
                fmt_num(v)
            );
        }
        let _ = writeln!(
            self.body,
            "<text x=\"16\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" \
             transform=\"rotate(-90 16 {})\">{}</text>",
            MARGIN_TOP + self.plot_height() / 2.0,
            MARGIN_TOP + self.plot_height() / 2.0,
            escape(y_label)
        );
    }

    fn legend(&mut self, names: &[&str]) {
        let x = WIDTH - MARGIN_RIGHT + 14.0;
        for (i, name) in names.iter().enumerate() {
            let y = MARGIN_TOP + 16.0 * i as f64;
            let _ = writeln!(
                self.body,
                "<rect x=\"{x}\" y=\"{y}\" width=\"11\" height=\"11\" fill=\"{}\"/>",
                PALETTE[i % PALETTE.len()]
            );
            let _ = writeln!(
                self.body,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>",
                x + 16.0,
                y + 9.5,
                escape(name)
            );
        }
    }

    fn no_data(&mut self) {
        let _ = writeln!(
            self.body,
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">no data</text>",
            WIDTH / 2.0,
            HEIGHT / 2.0
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi == lo {
        hi = lo + 1.0;
    }
    let pad = (hi - lo) * 0.06;
    (if lo < 0.0 { lo - pad } else { lo }, hi + pad)
}

/// Grouped bars: one cluster per category, one bar per series. Optional
/// per-bar error half-widths draw as whiskers.
pub fn grouped_bar_chart(
    title: &str,
    categories: &[String],
    series: &[Series],
    errors: Option<&[Vec<f64>]>,
    y_label: &str,
) -> String {
    let mut c = Canvas::new(title);
    if categories.is_empty() || series.is_empty() {
        c.no_data();
        return c.finish();
    }
    let (lo, hi) = value_range(series.iter().flat_map(|s| s.values.iter().copied()));
    c.axes_with_y_ticks(lo, hi, y_label);

    let n_cat = categories.len();
    let n_ser = series.len();
    let cluster = c.plot_width() / n_cat as f64;
    let bar = (cluster * 0.8) / n_ser as f64;
    let zero = c.y_px(0.0, lo, hi);
    for (si, s) in series.iter().enumerate() {
        for (ci, &v) in s.values.iter().enumerate().take(n_cat) {
            let x = MARGIN_LEFT + cluster * ci as f64 + cluster * 0.1 + bar * si as f64;
            let y = c.y_px(v, lo, hi);
            let (top, h) = if v >= 0.0 { (y, zero - y) } else { (zero, y - zero) };
            let _ = writeln!(
                c.body,
                "<rect x=\"{x:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                bar * 0.92,
                h.max(0.0),
                PALETTE[si % PALETTE.len()]
            );
            if let Some(err) = errors.and_then(|e| e.get(si)).and_then(|e| e.get(ci)) {
                let xm = x + bar * 0.46;
                let y_lo = c.y_px(v - err, lo, hi);
                let y_hi = c.y_px(v + err, lo, hi);
                let _ = writeln!(
                    c.body,
                    "<line x1=\"{xm:.2}\" y1=\"{y_lo:.2}\" x2=\"{xm:.2}\" y2=\"{y_hi:.2}\" \
                     stroke=\"black\" stroke-width=\"1\"/>"
                );
            }
        }
    }
    let label_step = n_cat.div_ceil(10);
    for (ci, cat) in categories.iter().enumerate() {
        if ci % label_step != 0 {
            continue;
        }
        let x = MARGIN_LEFT + cluster * (ci as f64 + 0.5);
        let _ = writeln!(
            c.body,
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            escape(cat)
        );
    }
    c.legend(&series.iter().map(|s| s.name.as_str()).collect::<Vec<_>>());
    c.finish()
}

/// Two-segment stacked bars (e.g. within-capacity vs overloaded).
pub fn stacked_bar_chart(
    title: &str,
    categories: &[String],
    bottom: &Series,
    top: &Series,
    y_label: &str,
) -> String {
    let mut c = Canvas::new(title);
    if categories.is_empty() {
        c.no_data();
        return c.finish();
    }
    let totals: Vec<f64> = bottom
        .values
        .iter()
        .zip(&top.values)
        .map(|(a, b)| a + b)
        .collect();
    let (lo, hi) = value_range(totals.iter().copied());
    c.axes_with_y_ticks(lo.min(0.0), hi, y_label);
    let n_cat = categories.len();
    let cluster = c.plot_width() / n_cat as f64;
    let bar = cluster * 0.7;
    for ci in 0..n_cat {
        let x = MARGIN_LEFT + cluster * ci as f64 + cluster * 0.15;
        let b = bottom.values.get(ci).copied().unwrap_or(0.0);
        let t = top.values.get(ci).copied().unwrap_or(0.0);
        let y_b = c.y_px(b, lo.min(0.0), hi);
        let y_t = c.y_px(b + t, lo.min(0.0), hi);
        let zero = c.y_px(0.0, lo.min(0.0), hi);
        let _ = writeln!(
            c.body,
            "<rect x=\"{x:.2}\" y=\"{y_b:.2}\" width=\"{bar:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            (zero - y_b).max(0.0),
            PALETTE[0]
        );
        let _ = writeln!(
            c.body,
            "<rect x=\"{x:.2}\" y=\"{y_t:.2}\" width=\"{bar:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
            (y_b - y_t).max(0.0),
            PALETTE[1]
        );
    }
    let label_step = n_cat.div_ceil(12);
    for (ci, cat) in categories.iter().enumerate() {
        if ci % label_step != 0 {
            continue;
        }
        let x = MARGIN_LEFT + cluster * (ci as f64 + 0.5);
        let _ = writeln!(
            c.body,
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            escape(cat)
        );
    }
    c.legend(&[bottom.name.as_str(), top.name.as_str()]);
    c.finish()
}

/// Polyline chart of `(x, y)` series.
pub fn line_chart(
    title: &str,
    series: &[(String, Vec<(f64, f64)>)],
    x_label: &str,
    y_label: &str,
) -> String {
    let mut c = Canvas::new(title);
    let points: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    if points.is_empty() {
        c.no_data();
        return c.finish();
    }
    let (ylo, yhi) = value_range(points.iter().map(|&(_, y)| y));
    let xlo = points.iter().map(|&(x, _)| x).fold(f64::INFINITY, f64::min);
    let xhi = points.iter().map(|&(x, _)| x).fold(f64::NEG_INFINITY, f64::max);
    let xspan = (xhi - xlo).max(1e-12);
    c.axes_with_y_ticks(ylo, yhi, y_label);
    for i in 0..=5 {
        let v = xlo + xspan * f64::from(i) / 5.0;
        let x = MARGIN_LEFT + c.plot_width() * (v - xlo) / xspan;
        let _ = writeln!(
            c.body,
            "<text x=\"{x:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN_BOTTOM + 18.0,
            fmt_num(v)
        );
    }
    let _ = writeln!(
        c.body,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        MARGIN_LEFT + c.plot_width() / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    for (si, (_, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let path: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                format!(
                    "{:.2},{:.2}",
                    MARGIN_LEFT + c.plot_width() * (x - xlo) / xspan,
                    c.y_px(y, ylo, yhi)
                )
            })
            .collect();
        let _ = writeln!(
            c.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"/>",
            path.join(" "),
            PALETTE[si % PALETTE.len()]
        );
    }
    c.legend(&series.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>());
    c.finish()
}

/// Equal-width histogram of `values`.
pub fn histogram(title: &str, values: &[f64], bins: usize, x_label: &str) -> String {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        let mut c = Canvas::new(title);
        c.no_data();
        return c.finish();
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let mut counts = vec![0u64; bins];
    for v in &finite {
        let b = (((v - lo) / span) * bins as f64) as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let categories: Vec<String> = (0..bins)
        .map(|b| fmt_num(lo + span * (b as f64 + 0.5) / bins as f64))
        .collect();
    let series = [Series {
        name: x_label.to_string(),
        values: counts.iter().map(|&c| c as f64).collect(),
    }];
    grouped_bar_chart(title, &categories, &series, None, "count")
}
