//! Small hand-built SVG plots.

use std::fmt::Write as _;

use crate::efficiency::FeasibleRegion;
use crate::harness::TrendReport;
use crate::population::ClusterField;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

const SIZE: f64 = 400.0;
const MARGIN: f64 = 40.0;

fn open(out: &mut String, title: &str) {
    let full = SIZE + 2.0 * MARGIN;
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Scatter of the point field over the unit grid, coloured by cluster.
/// Points outside the frame are drawn hollow.
pub fn cluster_scatter(field: &ClusterField, width: usize, height: usize, title: &str) -> String {
    let mut out = String::new();
    open(&mut out, title);
    let scale = SIZE / width.max(height) as f64;
    let px = |x: f64| MARGIN + x * scale;
    let py = |y: f64| MARGIN + (height as f64 - y) * scale;
    out.push_str(r##"<g stroke="#ddd" stroke-width="0.5">"##);
    out.push('\n');
    for i in 0..=width {
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}"/>"#,
            px(i as f64),
            py(0.0),
            py(height as f64)
        );
    }
    for j in 0..=height {
        let _ = writeln!(
            out,
            r#"<line x1="{1}" y1="{0}" x2="{2}" y2="{0}"/>"#,
            py(j as f64),
            px(0.0),
            px(width as f64)
        );
    }
    out.push_str("</g>\n");
    for p in &field.points {
        let colour = PALETTE[p.cluster % PALETTE.len()];
        let fill = if p.in_frame { colour } else { "none" };
        let _ = writeln!(
            out,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2" fill="{fill}" stroke="{colour}" stroke-width="0.8"/>"#,
            px(p.x),
            py(p.y)
        );
    }
    for &(cx, cy) in &field.centers {
        let (x, y) = (px(cx), py(cy));
        let _ = writeln!(
            out,
            r#"<path d="M{:.3} {:.3}l8 8m0 -8l-8 8" stroke="black" stroke-width="1.5"/>"#,
            x - 4.0,
            y - 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN / 2.0,
        escape(title)
    );
    out.push_str("</svg>\n");
    out
}

/// The `(kappa1, m)` plane with the region `m < N (1 - kappa1)` shaded and
/// the given point marked.
pub fn feasible_region(region: &FeasibleRegion, m: usize) -> String {
    let n = region.population as f64;
    let mut out = String::new();
    open(&mut out, "feasible region");
    let px = |k: f64| MARGIN + k * SIZE;
    let py = |v: f64| MARGIN + SIZE - v / n * SIZE;
    let _ = writeln!(
        out,
        r##"<polygon points="{},{} {},{} {},{}" fill="#9ecae1" stroke="#3182bd"/>"##,
        px(0.0),
        py(0.0),
        px(0.0),
        py(n),
        px(1.0),
        py(0.0)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    let kx = region.kappa1.clamp(0.0, 1.0);
    let _ = writeln!(
        out,
        r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#636363" stroke-dasharray="4 3"/>"##,
        px(kx),
        py(0.0),
        py(n)
    );
    let colour = if region.contains(m) { "#31a354" } else { "#de2d26" };
    let _ = writeln!(
        out,
        r#"<circle cx="{:.3}" cy="{:.3}" r="4" fill="{colour}"/>"#,
        px(kx),
        py(m as f64)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">kappa1</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE + 28.0
    );
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">m</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE / 2.0
    );
    for (v, anchor) in [(0.0, "start"), (1.0, "end")] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="{anchor}">{v}</text>"#,
            px(v),
            MARGIN + SIZE + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{n}</text>"#,
        MARGIN - 4.0,
        py(n) + 4.0
    );
    let label = match region.max_feasible_m {
        Some(top) => format!("kappa1 = {:.4}, feasible m = 1..{top}", region.kappa1),
        None => format!("kappa1 = {:.4}, no feasible m", region.kappa1),
    };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN / 2.0,
        escape(&label)
    );
    out.push_str("</svg>\n");
    out
}

/// Relative precision against the sweep axis.
pub fn trend_plot(trend: &TrendReport) -> String {
    let mut out = String::new();
    open(&mut out, &format!("relative precision vs {}", trend.axis));
    let pts: Vec<(f64, f64)> = trend
        .values
        .iter()
        .zip(&trend.relative_precision)
        .filter_map(|(&x, r)| r.map(|r| (x, r)))
        .collect();
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#
    );
    if !pts.is_empty() {
        let (xmin, xmax) = bounds(pts.iter().map(|p| p.0));
        let (ymin, ymax) = bounds(pts.iter().map(|p| p.1).chain([1.0]));
        let px = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * SIZE;
        let py = |y: f64| MARGIN + SIZE - (y - ymin) / (ymax - ymin) * SIZE;
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{2}" x2="{}" y2="{2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            px(xmin),
            px(xmax),
            py(1.0)
        );
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>"##,
            path.join(" ")
        );
        for &(x, y) in &pts {
            let _ = writeln!(
                out,
                r##"<circle cx="{:.3}" cy="{:.3}" r="3" fill="#1f77b4"/>"##,
                px(x),
                py(y)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text><text x="{}" y="{}" text-anchor="end">{:.3}</text>"#,
            MARGIN - 4.0,
            MARGIN + 4.0,
            ymax,
            MARGIN - 4.0,
            MARGIN + SIZE,
            ymin
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE + 28.0,
        escape(&trend.axis)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">relative precision, {:?}</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN / 2.0,
        trend.verdict
    );
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efficiency::feasible_region as region;
    use crate::population::{generate_cluster_points, ClusterSpec};

    #[test]
    fn scatter_has_one_circle_per_point() {
        let field = generate_cluster_points(&ClusterSpec::paper_default(1.0), 3.into()).unwrap();
        let svg = cluster_scatter(&field, 20, 20, "sd = 1");
        assert_eq!(svg.matches("<circle").count(), field.points.len());
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn region_plot_marks_point() {
        let svg = feasible_region(&region(400, 0.5).unwrap(), 10);
        assert!(svg.contains("#31a354"));
        let svg = feasible_region(&region(400, 0.5).unwrap(), 300);
        assert!(svg.contains("#de2d26"));
    }

    #[test]
    fn trend_plot_skips_undefined() {
        let t = TrendReport::new(
            "vmr",
            vec![1.0, 2.0, 3.0],
            vec![Some(1.1), None, Some(1.3)],
            vec![5; 3],
            vec![0; 3],
        );
        assert_eq!(trend_plot(&t).matches("<circle").count(), 2);
    }
}
