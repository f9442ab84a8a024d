//! Minimal SVG renderings of the CSV outputs.

use std::fmt::Write as _;

use bathdiff_core::experiments::HeatmapResult;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line plot of several series sharing the abscissa `t`.
pub fn line_plot(title: &str, t: &[f64], series: &[(&str, &[f64])]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let (t0, t1) = range(t.iter().copied());
    let (y0, y1) = range(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let (y0, y1) = (y0.min(0.0), y1.max(1.0).min(y1 + 0.05 * (y1 - y0)));
    let px = |x: f64| MARGIN + (x - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for i in 0..=4 {
        let x = t0 + (t1 - t0) * i as f64 / 4.0;
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x:.3}</text>"#,
            px(x),
            HEIGHT - MARGIN + 16.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{y:.3}</text>"#,
            MARGIN - 6.0,
            py(y) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );

    for (k, (name, values)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = t
            .iter()
            .zip(values.iter())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 16.0 + 16.0 * k as f64;
        let lx = WIDTH - MARGIN - 110.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn shade(v: f64) -> String {
    // white to dark red
    let s = v.clamp(0.0, 1.0);
    let r = 255.0 - 100.0 * s;
    let gb = 255.0 * (1.0 - s);
    format!("rgb({:.0},{:.0},{:.0})", r, gb, gb)
}

/// `delta_max` over the `(N_E, n_exc)` plane.
pub fn heatmap_plot(title: &str, result: &HeatmapResult) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let Some(n_min) = result.rows.iter().map(|r| r.n_bath).min() else {
        out.push_str("</svg>\n");
        return out;
    };
    let n_max = result.rows.iter().map(|r| r.n_bath).max().unwrap_or(n_min);
    let peak = result.rows.iter().map(|r| r.delta_max).fold(0.0, f64::max);
    let cols = (n_max - n_min + 1) as f64;
    let rows = (n_max + 1) as f64;
    let cw = (WIDTH - 2.0 * MARGIN - 60.0) / cols;
    let ch = (HEIGHT - 2.0 * MARGIN) / rows;

    for r in &result.rows {
        let x = MARGIN + (r.n_bath - n_min) as f64 * cw;
        let y = HEIGHT - MARGIN - (r.n_exc + 1) as f64 * ch;
        let level = if peak > 0.0 { r.delta_max / peak } else { 0.0 };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"><title>N_E={} n_exc={} delta_max={:.6e}</title></rect>"#,
            shade(level),
            r.n_bath,
            r.n_exc,
            r.delta_max
        );
    }
    for n in n_min..=n_max {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{n}</text>"#,
            MARGIN + (n - n_min) as f64 * cw + cw / 2.0,
            HEIGHT - MARGIN + 16.0
        );
    }
    for k in (0..=n_max).step_by(n_max.div_ceil(8).max(1)) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{k}</text>"#,
            MARGIN - 6.0,
            HEIGHT - MARGIN - k as f64 * ch - ch / 2.0 + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">N_E</text><text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">n_exc</text>"#,
        MARGIN + cols * cw / 2.0,
        HEIGHT - 12.0,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    let bar_x = WIDTH - MARGIN - 30.0;
    for i in 0..20 {
        let level = i as f64 / 19.0;
        let h = (HEIGHT - 2.0 * MARGIN) / 20.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bar_x}" y="{:.2}" width="16" height="{h:.2}" fill="{}"/>"#,
            HEIGHT - MARGIN - (i + 1) as f64 * h,
            shade(level)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">{peak:.3}</text><text x="{}" y="{}">0</text>"#,
        bar_x,
        MARGIN - 6.0,
        bar_x,
        HEIGHT - MARGIN + 16.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use bathdiff_core::experiments::HeatmapRow;

    #[test]
    fn line_plot_has_one_polyline_per_series() {
        let t = [0.0, 1.0, 2.0];
        let a = [0.0, 0.5, 1.0];
        let b = [1.0, 1.0, 1.0];
        let svg = line_plot("x < y", &t, &[("a", &a), ("b", &b)]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("x &lt; y"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn heatmap_plot_has_one_cell_per_row() {
        let rows = (2..=3)
            .flat_map(|n| {
                (0..=n).map(move |k| HeatmapRow {
                    n_bath: n,
                    n_exc: k,
                    delta_max: (n * k) as f64 * 0.01,
                    me2_gap: None,
                })
            })
            .collect();
        let svg = heatmap_plot(
            "sweep",
            &HeatmapResult {
                rows,
                failures: vec![],
            },
        );
        assert_eq!(svg.matches("<title>").count(), 7);
        assert!(heatmap_plot("empty", &HeatmapResult::default()).ends_with("</svg>\n"));
    }
}
