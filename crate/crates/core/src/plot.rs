//! Log-log convergence plots as self-contained SVG.
//!
//! The output depends only on the table, so identical input gives
//! byte-identical files.

use std::fmt::Write;

use thiserror::Error;

use crate::study::{ConvergenceRow, ConvergenceTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlotError {
    #[error("a plot needs at least two levels, the table has {0}")]
    TooFewLevels(usize),
    #[error("nonpositive value {value} in column {column} cannot go on a log axis")]
    NonPositive { column: &'static str, value: f64 },
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

type Column = (&'static str, fn(&ConvergenceRow) -> f64, &'static str);

const NORMS: [Column; 3] = [
    ("err_u_h1", |r| r.err_u_h1, ""),
    ("err_u_l2", |r| r.err_u_l2, "6 3"),
    ("err_p_l2", |r| r.err_p_l2, "2 3"),
];

/// Corners of a slope triangle in `(log10 h, log10 err)` coordinates: the
/// hypotenuse runs from `anchor` with the given slope over `dx` decades.
pub fn slope_triangle(anchor: (f64, f64), dx: f64, slope: f64) -> [(f64, f64); 3] {
    let (x, y) = anchor;
    [(x, y), (x + dx, y), (x + dx, y + slope * dx)]
}

struct Series {
    label: String,
    colour: &'static str,
    dash: &'static str,
    points: Vec<(f64, f64)>,
}

/// Renders errors against `h_max` with one polyline per space and norm and
/// reference triangles of slope 1 and 2.
pub fn svg_plot(table: &ConvergenceTable) -> Result<String, PlotError> {
    let mut levels: Vec<usize> = table.rows.iter().map(|r| r.level).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.len() < 2 {
        return Err(PlotError::TooFewLevels(levels.len()));
    }
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in &table.rows {
        let k = (r.case.clone(), r.space.clone());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut series = Vec::new();
    for (i, (case, space)) in keys.iter().enumerate() {
        let rows: Vec<&ConvergenceRow> = table.rows.iter().filter(|r| &r.case == case && &r.space == space).collect();
        if rows.iter().any(|r| r.h_max <= 0.0) {
            let value = rows.iter().map(|r| r.h_max).find(|&h| h <= 0.0).unwrap_or(0.0);
            return Err(PlotError::NonPositive { column: "h_max", value });
        }
        for (name, get, dash) in NORMS {
            // an exactly zero column (e.g. pressure of a zero-pressure case)
            // is skipped rather than rejected
            if rows.iter().all(|r| get(r) == 0.0) {
                continue;
            }
            if let Some(r) = rows.iter().find(|r| get(r) <= 0.0) {
                return Err(PlotError::NonPositive { column: name, value: get(r) });
            }
            let label = if keys.len() > 1 && keys.iter().any(|k| &k.0 != case) {
                format!("{case} {space} {name}")
            } else {
                format!("{space} {name}")
            };
            series.push(Series {
                label,
                colour: COLOURS[i % COLOURS.len()],
                dash,
                points: rows.iter().map(|r| (r.h_max.log10(), get(r).log10())).collect(),
            });
        }
    }

    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in series.iter().flat_map(|s| &s.points) {
        x0 = x0.min(p.0);
        x1 = x1.max(p.0);
        y0 = y0.min(p.1);
        y1 = y1.max(p.1);
    }
    // triangles sit below the data at the fine end
    let dx = (0.3 * (x1 - x0)).max(0.1);
    let base = y0 - 0.3 - 2.0 * dx;
    let triangles = [
        (1.0, slope_triangle((x0 + 1.3 * dx, base + dx), dx, 1.0)),
        (2.0, slope_triangle((x0, base), dx, 2.0)),
    ];
    y0 = base;
    let (x0, x1) = (x0 - 0.05 * (x1 - x0).max(0.1), x1 + 0.05 * (x1 - x0).max(0.1));
    let (y0, y1) = (y0.floor(), y1.ceil());
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
    let py = |y: f64| HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    for e in (y0 as i64)..=(y1 as i64) {
        let y = py(e as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let mut hs: Vec<f64> = table.rows.iter().map(|r| r.h_max).collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup_by(|a, b| (*a / *b - 1.0).abs() < 1e-9);
    for h in hs {
        let x = px(h.log10());
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{h:.4}</text>"##,
            HEIGHT - BOTTOM,
            HEIGHT - BOTTOM + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">h_max</text>"#,
        LEFT + 0.5 * (WIDTH - LEFT - RIGHT),
        HEIGHT - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">error</text>"#,
        TOP + 0.5 * (HEIGHT - TOP - BOTTOM),
        TOP + 0.5 * (HEIGHT - TOP - BOTTOM)
    );
    for (slope, tri) in &triangles {
        let pts: Vec<String> = tri.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="slope-{slope}" points="{}" fill="none" stroke="gray"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            pts.join(" "),
            px(tri[2].0) + 4.0,
            py(0.5 * (tri[1].1 + tri[2].1)) + 4.0,
            if *slope == 1.0 { "h" } else { "h²" }
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash = if ser.dash.is_empty() {
            String::new()
        } else {
            format!(r#" stroke-dasharray="{}""#, ser.dash)
        };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
            pts.join(" "),
            ser.colour
        );
        for (x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#, px(*x), py(*y), ser.colour);
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 24.0,
            ser.colour,
            lx + 30.0,
            ly + 4.0,
            ser.label
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(space: &str, level: usize, e: f64) -> ConvergenceRow {
        let h = 0.5f64.powi(level as i32);
        ConvergenceRow {
            case: "cube1".into(),
            space: space.into(),
            level,
            h_max: h,
            n_dof: 10 << level,
            nnz: 100 << level,
            err_u_h1: e * h,
            err_u_l2: e * h * h,
            err_p_l2: e * h,
            rate_h1: None,
            rate_l2: None,
        }
    }

    #[test]
    fn one_level_is_rejected() {
        let mut t = ConvergenceTable::default();
        t.push(row("br", 0, 1.0));
        assert_eq!(svg_plot(&t), Err(PlotError::TooFewLevels(1)));
    }

    #[test]
    fn two_levels_give_segments() {
        let mut t = ConvergenceTable::default();
        t.push(row("br", 0, 1.0));
        t.push(row("br", 1, 1.0));
        let svg = svg_plot(&t).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        for line in svg.lines().filter(|l| l.starts_with("<polyline")) {
            let pts = line.split('"').nth(1).unwrap();
            assert_eq!(pts.split(' ').count(), 2);
        }
        assert_eq!(svg, svg_plot(&t).unwrap());
    }

    #[test]
    fn triangle_slopes() {
        for slope in [1.0, 2.0] {
            let t = slope_triangle((-1.0, -2.0), 0.5, slope);
            assert_eq!((t[2].1 - t[0].1) / (t[2].0 - t[0].0), slope);
            assert_eq!(t[1].1, t[0].1);
        }
    }
}
