use std::fmt::Write;

use super::{GroupedBoxplot, PrCurve};
use crate::error::{Error, Result};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Columns `threshold, precision, recall`.
pub fn pr_curve_csv(curve: &PrCurve) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &curve.points {
        w.serialize(p).map_err(|e| Error::invalid(e.to_string()))?;
    }
    finish(w)
}

/// Columns `series, group, count, min, q1, median, q3, max`.
pub fn boxplot_csv(series: &[(String, GroupedBoxplot)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "series", "group", "count", "min", "q1", "median", "q3", "max",
    ])
    .map_err(|e| Error::invalid(e.to_string()))?;
    for (label, stats) in series {
        for (name, s) in [("normal", &stats.normal), ("abnormal", &stats.abnormal)] {
            w.write_record([
                label.clone(),
                name.to_string(),
                s.count.to_string(),
                s.min.to_string(),
                s.q1.to_string(),
                s.median.to_string(),
                s.q3.to_string(),
                s.max.to_string(),
            ])
            .map_err(|e| Error::invalid(e.to_string()))?;
        }
    }
    finish(w)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

const COLORS: [&str; 6] = [
    "steelblue",
    "darkorange",
    "seagreen",
    "crimson",
    "purple",
    "saddlebrown",
];

/// Step plots of precision against recall, one per series, with each
/// series' prevalence as a dashed baseline.
pub fn pr_curve_svg(series: &[(String, PrCurve)], title: &str) -> String {
    const W: f64 = 480.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let x = |r: f64| PAD + r * (W - 2.0 * PAD);
    let y = |p: f64| H - PAD - p * (H - 2.0 * PAD);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{t}</text>"#,
            x(t),
            H - PAD + 14.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{t}</text>"#,
            PAD - 4.0,
            y(t) + 3.0
        );
    }
    for (i, (label, curve)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let base = y(curve.prevalence());
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="{color}" stroke-opacity="0.5" stroke-dasharray="4 3"/>"#,
            x(0.0),
            x(1.0)
        );
        let mut path = format!(
            "M{:.2},{:.2}",
            x(0.0),
            y(curve.points.first().map_or(1.0, |p| p.precision))
        );
        for p in &curve.points {
            let _ = write!(path, " H{:.2} V{:.2}", x(p.recall), y(p.precision));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
        let ly = PAD + 14.0 + 14.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}" font-size="11" text-anchor="end" fill="{color}">{} (AP {:.3})</text>"#,
            W - PAD - 6.0,
            escape(label),
            super::auprc(curve)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">recall</text>"#,
        W / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">precision</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    svg.push_str("</svg>\n");
    svg
}
