//! Static SVG line charts of experiment results: x = budget ratio,
//! one polyline per sampler configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use thiserror::Error;

use crate::experiment::ResultRow;

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("no rows to plot")]
    Empty,
    #[error("NRMSE chart needs a single feature, found {0:?}")]
    MixedFeatures(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Nrmse,
    SampleSize,
}

/// A named polyline: `(budget ratio, metric)` points.
pub type Series = (String, Vec<(f64, f64)>);

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Points of each series, sorted by budget ratio.
pub fn series(rows: &[ResultRow], metric: Metric) -> Result<Vec<Series>, ChartError> {
    if rows.is_empty() {
        return Err(ChartError::Empty);
    }
    if metric == Metric::Nrmse {
        let mut features: Vec<String> = rows.iter().map(|r| r.feature.clone()).collect();
        features.sort();
        features.dedup();
        if features.len() > 1 {
            return Err(ChartError::MixedFeatures(features));
        }
    }
    // keep first-seen series order
    let mut order: Vec<String> = Vec::new();
    let mut points: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        let name = r.series();
        let y = match metric {
            Metric::Nrmse => r.nrmse,
            Metric::SampleSize => r.mean_sample_size,
        };
        let entry = points.entry(name.clone()).or_insert_with(|| {
            order.push(name);
            Vec::new()
        });
        // sample size repeats once per feature; keep one point per ratio
        if !entry.iter().any(|&(x, _)| x == r.budget_ratio) {
            entry.push((r.budget_ratio, y));
        }
    }
    Ok(order
        .into_iter()
        .map(|name| {
            let mut pts = points.remove(&name).unwrap_or_default();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            (name, pts)
        })
        .collect())
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo - pad, hi + pad)
    }
}

pub fn emit_chart<W: Write>(
    rows: &[ResultRow],
    metric: Metric,
    mut sink: W,
) -> Result<(), ChartError> {
    let data = series(rows, metric)?;
    let (x_lo, x_hi) = span(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let (_, y_hi) = span(data.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let y_lo = 0.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y_lo) / (y_hi - y_lo).max(f64::MIN_POSITIVE) * plot_h;

    let title = match metric {
        Metric::Nrmse => format!("NRMSE: {}", rows[0].feature),
        Metric::SampleSize => "Average sample size".to_string(),
    };
    let y_label = match metric {
        Metric::Nrmse => "NRMSE",
        Metric::SampleSize => "samples",
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{title}</text>"#,
        LEFT + plot_w / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let x = x_lo + t * (x_hi - x_lo);
        let y = y_lo + t * (y_hi - y_lo);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}%</text>"#,
            sx(x),
            TOP + plot_h + 18.0,
            x * 100.0
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            LEFT + plot_w,
            sy(y),
            sy(y)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#,
            LEFT - 6.0,
            sy(y) + 4.0,
            y
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">query budget / nodes</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{y_label}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (k, (name, pts)) in data.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-name="{name}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            coords.join(" ")
        );
        for &(x, y) in pts {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(x),
                sy(y)
            );
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}">{name}</text>"#,
            lx + 26.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    sink.write_all(svg.as_bytes())?;
    Ok(())
}
