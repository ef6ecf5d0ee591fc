//! CSV and SVG renderings of a sweep.

use std::fmt::Write as _;
use std::path::Path;

use super::sweep::SweepReport;
use crate::error::Result;

pub const CSV_HEADER: &str = "trial,k,L,iters,initial_mse,final_mse,pca_mse,wall_time_ms";

/// One line per row; floats use the shortest round-trip form.
pub fn csv_string(report: &SweepReport) -> String {
    let mut out = String::with_capacity(64 * (report.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{:?},{:?},{:?},{}",
            r.trial,
            r.k,
            r.order,
            r.iterations,
            r.initial_mse,
            r.final_mse,
            r.pca_mse,
            r.wall_time_ms
        );
    }
    out
}

pub fn emit_csv(report: &SweepReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, csv_string(report))?;
    Ok(())
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}

/// Mean final MSE against `k`, one line per filter order, with the PCA mean
/// dashed for reference.
pub fn svg_string(report: &SweepReport) -> String {
    let mut ks: Vec<usize> = report.aggregates.iter().map(|a| a.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut orders: Vec<usize> = report.aggregates.iter().map(|a| a.order).collect();
    orders.sort_unstable();
    orders.dedup();

    let (kmin, kmax) = match (ks.first(), ks.last()) {
        (Some(&a), Some(&b)) if a < b => (a as f64, b as f64),
        (Some(&a), _) => (a as f64 - 1.0, a as f64 + 1.0),
        _ => (0.0, 1.0),
    };
    let ymax = report
        .aggregates
        .iter()
        .flat_map(|a| [a.mean_final, a.mean_pca])
        .filter(|v| v.is_finite())
        .fold(0.0_f64, f64::max);
    let ymax = if ymax > 0.0 { ymax * 1.05 } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |k: f64| LEFT + (k - kmin) / (kmax - kmin) * plot_w;
    let y = |v: f64| TOP + plot_h - v / ymax * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT},{TOP} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    for &k in &ks {
        let px = x(k as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{k}</text>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0
        );
    }
    for i in 0..=5 {
        let v = ymax * i as f64 / 5.0;
        let py = y(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">reduced dimension k</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">mean reconstruction MSE</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    let series = |pick: &dyn Fn(usize) -> Option<f64>| -> String {
        ks.iter()
            .filter_map(|&k| pick(k).map(|v| format!("{:.2},{:.2}", x(k as f64), y(v))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut legend = Vec::new();

    let pca = series(&|k| {
        report
            .aggregates
            .iter()
            .find(|a| a.k == k)
            .map(|a| a.mean_pca)
    });
    if !pca.is_empty() {
        let _ = writeln!(
            s,
            r#"<polyline points="{pca}" fill="none" stroke="black" stroke-dasharray="6 4"/>"#
        );
        legend.push(("PCA".to_string(), "black", true));
    }
    for (i, &order) in orders.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = series(&|k| report.aggregate(k, order).map(|a| a.mean_final));
        let _ = writeln!(
            s,
            r#"<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>"#
        );
        for p in pts.split(' ').filter(|p| !p.is_empty()) {
            let (cx, cy) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        legend.push((format!("L = {order}"), color, false));
    }
    for (i, (label, color, dashed)) in legend.iter().enumerate() {
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 20.0;
        let dash = if *dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(report: &SweepReport, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, svg_string(report))?;
    Ok(())
}
