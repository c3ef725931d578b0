use std::fmt::Write as _;

use crate::geometry::VRep;

fn to_csv(header: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(f64::to_string)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is ASCII")
}

/// One row per vertex, columns `x0, x1, …`.
pub fn vertices_csv(region: &VRep) -> String {
    let header = (0..region.dim).map(|i| format!("x{i}")).collect();
    to_csv(header, region.vertices.iter().cloned())
}

/// One row per facet, columns `n0, n1, …, offset` for `n·x ≤ offset`.
pub fn facets_csv(region: &VRep) -> String {
    let mut header: Vec<String> = (0..region.dim).map(|i| format!("n{i}")).collect();
    header.push("offset".into());
    to_csv(
        header,
        region.facets.iter().map(|f| {
            let mut row = f.normal.clone();
            row.push(f.offset);
            row
        }),
    )
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Extreme points of a planar point set in counterclockwise order, starting
/// from the lexicographically smallest.
pub fn polygon_ccw(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in [pts.clone(), pts.iter().rev().copied().collect()] {
        let start = hull.len();
        for p in pass {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= tol {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// The region's shadow on coordinates `(i, j)`: the hull of its vertices'
/// coordinate pairs, counterclockwise.
pub fn shadow(region: &VRep, i: usize, j: usize) -> Vec<[f64; 2]> {
    let pairs: Vec<[f64; 2]> = region.vertices.iter().map(|v| [v[i], v[j]]).collect();
    polygon_ccw(&pairs)
}

/// An SVG drawing of a polygon given counterclockwise, with axis labels and
/// the coordinate range of each axis.
pub fn svg(polygon: &[[f64; 2]], x_label: &str, y_label: &str) -> String {
    const SIZE: f64 = 400.0;
    const MARGIN: f64 = 60.0;
    let lo = |k: usize| polygon.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
    let hi = |k: usize| polygon.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1, y0, y1) = if polygon.is_empty() { (0.0, 1.0, 0.0, 1.0) } else { (lo(0), hi(0), lo(1), hi(1)) };
    let span = |a: f64, b: f64| if b - a > 0.0 { b - a } else { 1.0 };
    let (sx, sy) = (SIZE / span(x0, x1), SIZE / span(y0, y1));
    let px = |x: f64| MARGIN + (x - x0) * sx;
    let py = |y: f64| MARGIN + SIZE - (y - y0) * sy;
    let total = SIZE + 2.0 * MARGIN;

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#);
    let _ = writeln!(out, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#999"/>"##);
    if !polygon.is_empty() {
        let mut d = String::new();
        for (k, p) in polygon.iter().enumerate() {
            let _ = write!(d, "{}{:.3} {:.3} ", if k == 0 { "M" } else { "L" }, px(p[0]), py(p[1]));
        }
        d.push('Z');
        let _ = writeln!(out, r##"<path d="{d}" fill="#8fb3d9" fill-opacity="0.6" stroke="#1f4e79" stroke-width="1.5"/>"##);
    }
    let bottom = MARGIN + SIZE;
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{}" font-size="12">{x0:.4}</text>"#, bottom + 16.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{x1:.4}</text>"#, bottom, bottom + 16.0);
    let _ = writeln!(out, r#"<text x="{}" y="{bottom}" font-size="12" text-anchor="end">{y0:.4}</text>"#, MARGIN - 4.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{y1:.4}</text>"#, MARGIN - 4.0, MARGIN + 12.0);
    let _ =
        writeln!(out, r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{}</text>"#, total / 2.0, bottom + 40.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="20" y="{0}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        total / 2.0,
        escape(y_label)
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
