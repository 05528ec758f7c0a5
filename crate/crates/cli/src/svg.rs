//! Minimal hand-written SVG for a single ROC curve.

use std::fmt::Write;

use sieve_roc::RocCurve;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 56.0;

fn to_px(p: f64, r: f64) -> (f64, f64) {
    let span = SIZE - 2.0 * MARGIN;
    (MARGIN + p * span, SIZE - MARGIN - r * span)
}

/// ROC curve on the unit square with the chance diagonal. Coordinates are
/// printed with fixed precision so identical curves give identical bytes.
pub fn roc_svg(curve: &RocCurve<f64>) -> String {
    let mut s = String::new();
    let (x0, y0) = to_px(0.0, 0.0);
    let (x1, y1) = to_px(1.0, 1.0);
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    )
    .unwrap();
    for i in 0..=4 {
        let v = i as f64 / 4.0;
        let (x, _) = to_px(v, 0.0);
        let (_, y) = to_px(0.0, v);
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            y0 + 5.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">{v:.2}</text>"#,
            y0 + 20.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{v:.2}</text>"#,
            x0 - 8.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y1:.2}" stroke="gray" stroke-dasharray="4 4"/>"#
    )
    .unwrap();

    let mut points = String::new();
    for (i, &(p, r)) in curve.points.iter().enumerate() {
        let (x, y) = to_px(p, r);
        if i > 0 {
            points.push(' ');
        }
        write!(points, "{x:.2},{y:.2}").unwrap();
    }
    writeln!(
        s,
        r#"<polyline points="{points}" fill="none" stroke="steelblue" stroke-width="2"/>"#
    )
    .unwrap();

    let mid = SIZE / 2.0;
    writeln!(
        s,
        r#"<text x="{mid:.2}" y="{:.2}" font-size="14" text-anchor="middle">False-positive rate</text>"#,
        SIZE - 16.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{mid:.2}" font-size="14" text-anchor="middle" transform="rotate(-90 16 {mid:.2})">True-positive rate</text>"#
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="{mid:.2}" y="28" font-size="14" text-anchor="middle">t = {}, AUC = {:.4}</text>"#,
        curve.t, curve.auc
    )
    .unwrap();
    s.push_str("</svg>\n");
    s
}
