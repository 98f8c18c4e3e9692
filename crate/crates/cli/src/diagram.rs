//! Reliability diagrams: accuracy per confidence bin against the bin
//! center, as a text table and as an SVG chart.

use std::fmt::Write as _;

use crate::report::EvaluationReport;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One row per bin per report. Empty bins show `-` for accuracy.
pub fn text_table(reports: &[EvaluationReport]) -> String {
    let mut out = format!(
        "{:<12} {:>7} {:>9} {:>7} {:>15}\n",
        "pipeline", "center", "accuracy", "count", "mean_confidence"
    );
    for r in reports {
        for b in &r.metrics.bins {
            let acc = b
                .accuracy()
                .map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
            writeln!(
                out,
                "{:<12} {:>7.3} {:>9} {:>7} {:>15.4}",
                r.meta.pipeline, b.center, acc, b.count, b.mean_confidence
            )
            .unwrap();
        }
    }
    out
}

// Plot frame in pixels: confidence 0.5..1 on x, accuracy 0..1 on y.
const W: f64 = 560.0;
const H: f64 = 440.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

fn px(conf: f64) -> f64 {
    LEFT + (conf - 0.5) / 0.5 * (W - LEFT - RIGHT)
}

fn py(acc: f64) -> f64 {
    TOP + (1.0 - acc) * (H - TOP - BOTTOM)
}

/// Markers at (bin center, accuracy) for every non-empty bin, one colour
/// per report, over the `accuracy = confidence` diagonal. Points below the
/// diagonal are over-confident, points above under-confident.
pub fn svg(reports: &[EvaluationReport]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();

    // Axes and ticks.
    let (x0, x1, y0, y1) = (px(0.5), px(1.0), py(0.0), py(1.0));
    writeln!(s, r#"<g stroke="black" stroke-width="1"><line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/><line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/></g>"#).unwrap();
    for i in 0..=5 {
        let c = 0.5 + 0.1 * i as f64;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{c:.1}</text>"#,
            px(c),
            y0 + 16.0
        )
        .unwrap();
    }
    for i in 0..=5 {
        let a = 0.2 * i as f64;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{a:.1}</text>"#,
            x0 - 6.0,
            py(a) + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">confidence</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">accuracy</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    )
    .unwrap();

    // Ideal level.
    writeln!(
        s,
        r#"<line class="ideal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
        px(0.5),
        py(0.5),
        px(1.0),
        py(1.0)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" fill="gray">under-confident</text>"#,
        px(0.53),
        py(0.95)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" fill="gray" text-anchor="end">over-confident</text>"#,
        px(0.97),
        py(0.55)
    )
    .unwrap();

    for (k, r) in reports.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<(f64, f64)> = r
            .metrics
            .bins
            .iter()
            .filter_map(|b| b.accuracy().map(|a| (px(b.center), py(a))))
            .collect();
        writeln!(
            s,
            r#"<g class="series" data-pipeline="{}" fill="{color}" stroke="{color}">"#,
            r.meta.pipeline
        )
        .unwrap();
        if points.len() > 1 {
            let path: Vec<String> = points
                .iter()
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            writeln!(s, r#"<polyline fill="none" points="{}"/>"#, path.join(" ")).unwrap();
        }
        for (x, y) in &points {
            writeln!(
                s,
                r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="4"/>"#
            )
            .unwrap();
        }
        writeln!(s, "</g>").unwrap();

        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = W - RIGHT + 20.0;
        writeln!(
            s,
            r#"<g class="legend"><rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            ly - 10.0,
            lx + 18.0,
            ly,
            r.meta.pipeline
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}
