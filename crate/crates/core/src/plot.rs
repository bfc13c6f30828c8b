//! Self-contained SVG line plots of the round series: alive nodes per round
//! and cumulative packets per round, one curve per algorithm averaged over
//! seeds. Coordinates are emitted at full precision so the plotted polylines
//! carry exactly the data written to the CSVs.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::report::RunResult;
use crate::sim::RoundMetrics;

pub const WIDTH: f64 = 860.0;
pub const HEIGHT: f64 = 520.0;
pub const MARGIN_LEFT: f64 = 70.0;
pub const MARGIN_RIGHT: f64 = 30.0;
pub const MARGIN_TOP: f64 = 45.0;
pub const MARGIN_BOTTOM: f64 = 60.0;

const COLORS: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// De-emphasized rendering (thin, translucent), used for per-seed curves.
    pub faint: bool,
}

/// The data rectangle a plot maps onto its pixel area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

pub fn domain_of(series: &[Series]) -> Domain {
    let mut x0 = f64::INFINITY;
    let mut x1 = f64::NEG_INFINITY;
    let mut y1 = f64::NEG_INFINITY;
    for s in series {
        for &x in &s.xs {
            x0 = x0.min(x);
            x1 = x1.max(x);
        }
        for &y in &s.ys {
            y1 = y1.max(y);
        }
    }
    if !x0.is_finite() {
        (x0, x1, y1) = (0.0, 1.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= 0.0 {
        y1 = 1.0;
    }
    Domain { x0, x1, y0: 0.0, y1 }
}

pub fn to_svg_x(domain: &Domain, x: f64) -> f64 {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    MARGIN_LEFT + (x - domain.x0) / (domain.x1 - domain.x0) * plot_w
}

pub fn to_svg_y(domain: &Domain, y: f64) -> f64 {
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    MARGIN_TOP + plot_h - (y - domain.y0) / (domain.y1 - domain.y0) * plot_h
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == v.trunc() {
        format!("{:.0}", v)
    } else {
        format!("{:.2}", v)
    }
}

/// Renders a complete standalone SVG document.
pub fn line_plot_svg(series: &[Series], title: &str, x_label: &str, y_label: &str) -> String {
    let domain = domain_of(series);
    let mut svg = String::new();
    write!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}">"#
    )
    .unwrap();
    svg.push('\n');
    svg.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    svg.push('\n');

    // axes
    let x_axis_y = to_svg_y(&domain, domain.y0);
    let y_axis_x = to_svg_x(&domain, domain.x0);
    let x_end = WIDTH - MARGIN_RIGHT;
    writeln!(
        svg,
        r#"<line x1="{y_axis_x}" y1="{MARGIN_TOP}" x2="{y_axis_x}" y2="{x_axis_y}" stroke="black"/>"#
    )
    .unwrap();
    writeln!(
        svg,
        r#"<line x1="{y_axis_x}" y1="{x_axis_y}" x2="{x_end}" y2="{x_axis_y}" stroke="black"/>"#
    )
    .unwrap();

    // ticks and grid
    let n_ticks = 5;
    for i in 0..=n_ticks {
        let f = i as f64 / n_ticks as f64;
        let xv = domain.x0 + f * (domain.x1 - domain.x0);
        let yv = domain.y0 + f * (domain.y1 - domain.y0);
        let sx = to_svg_x(&domain, xv);
        let sy = to_svg_y(&domain, yv);
        writeln!(
            svg,
            r#"<line x1="{sx}" y1="{x_axis_y}" x2="{sx}" y2="{}" stroke="black"/>"#,
            x_axis_y + 6.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{sx}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            x_axis_y + 20.0,
            fmt_tick(xv)
        )
        .unwrap();
        writeln!(
            svg,
            r#"<line x1="{}" y1="{sy}" x2="{y_axis_x}" y2="{sy}" stroke="black"/>"#,
            y_axis_x - 6.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            y_axis_x - 9.0,
            sy + 4.0,
            fmt_tick(yv)
        )
        .unwrap();
        if i > 0 {
            writeln!(
                svg,
                r#"<line x1="{y_axis_x}" y1="{sy}" x2="{x_end}" y2="{sy}" stroke="#dddddd" stroke-dasharray="2,4"/>"#
            )
            .unwrap();
        }
    }

    // labels and title
    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{x_label}</text>"#,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 14.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 18 {})">{y_label}</text>"#,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0,
        MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0
    )
    .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" font-weight="bold" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    )
    .unwrap();

    // series polylines
    let mut color_idx = 0;
    let mut legend_entries: Vec<(String, &str)> = Vec::new();
    for s in series {
        if s.xs.is_empty() {
            continue;
        }
        let color = if s.faint {
            legend_entries
                .last()
                .map_or(COLORS[0], |&(_, c)| c)
        } else {
            let c = COLORS[color_idx % COLORS.len()];
            color_idx += 1;
            legend_entries.push((s.label.clone(), c));
            c
        };
        let (width, opacity) = if s.faint { (0.6, 0.35) } else { (1.8, 1.0) };
        let mut points = String::new();
        for (x, y) in s.xs.iter().zip(&s.ys) {
            if !points.is_empty() {
                points.push(' ');
            }
            write!(points, "{},{}", to_svg_x(&domain, *x), to_svg_y(&domain, *y)).unwrap();
        }
        writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}" data-label="{}" points="{points}"/>"#,
            s.label
        )
        .unwrap();
    }

    // legend
    for (i, (label, color)) in legend_entries.iter().enumerate() {
        let ly = MARGIN_TOP + 12.0 + i as f64 * 18.0;
        let lx = WIDTH - MARGIN_RIGHT - 150.0;
        writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 24.0
        )
        .unwrap();
        writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13">{label}</text>"#,
            lx + 30.0,
            ly + 4.0
        )
        .unwrap();
    }

    svg.push_str("</svg>\n");
    svg
}

/// Per-round mean across the runs, extending shorter runs with their final
/// value (a died-out run contributes 0 alive nodes and its final packet
/// count thereafter).
fn mean_over_runs(runs: &[&RunResult], value: impl Fn(&RoundMetrics) -> f64) -> (Vec<f64>, Vec<f64>) {
    let runs: Vec<&&RunResult> = runs.iter().filter(|r| !r.rounds.is_empty()).collect();
    let max_len = runs.iter().map(|r| r.rounds.len()).max().unwrap_or(0);
    let mut xs = Vec::with_capacity(max_len);
    let mut ys = Vec::with_capacity(max_len);
    for i in 0..max_len {
        let sum: f64 = runs
            .iter()
            .map(|r| value(r.rounds.get(i).unwrap_or_else(|| r.rounds.last().unwrap())))
            .sum();
        xs.push((i + 1) as f64);
        ys.push(sum / runs.len() as f64);
    }
    (xs, ys)
}

fn algorithm_groups(results: &[RunResult]) -> Vec<(&'static str, Vec<&RunResult>)> {
    let mut groups: Vec<(&'static str, Vec<&RunResult>)> = Vec::new();
    for r in results {
        match groups.iter_mut().find(|(name, _)| *name == r.algorithm.name()) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.algorithm.name(), vec![r])),
        }
    }
    groups
}

fn build_series(
    results: &[RunResult],
    per_seed: bool,
    value: impl Fn(&RoundMetrics) -> f64 + Copy,
) -> Vec<Series> {
    let mut series = Vec::new();
    for (name, runs) in algorithm_groups(results) {
        let (xs, ys) = mean_over_runs(&runs, value);
        series.push(Series {
            label: name.to_owned(),
            xs,
            ys,
            faint: false,
        });
        if per_seed {
            for r in runs {
                series.push(Series {
                    label: format!("{name} seed {}", r.seed),
                    xs: r.rounds.iter().map(|m| m.round as f64).collect(),
                    ys: r.rounds.iter().map(|m| value(m)).collect(),
                    faint: true,
                });
            }
        }
    }
    series
}

pub fn alive_series(results: &[RunResult], per_seed: bool) -> Vec<Series> {
    build_series(results, per_seed, |m| m.alive_count as f64)
}

pub fn packets_series(results: &[RunResult], per_seed: bool) -> Vec<Series> {
    build_series(results, per_seed, |m| m.packets_delivered_total as f64)
}

/// Writes `alive_vs_round.svg` and `packets_vs_round.svg` into `out_dir`.
pub fn emit_plots(
    results: &[RunResult],
    out_dir: &Path,
    per_seed: bool,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let alive_path = out_dir.join("alive_vs_round.svg");
    let packets_path = out_dir.join("packets_vs_round.svg");
    std::fs::write(
        &alive_path,
        line_plot_svg(
            &alive_series(results, per_seed),
            "Alive nodes over rounds",
            "round",
            "alive nodes",
        ),
    )?;
    std::fs::write(
        &packets_path,
        line_plot_svg(
            &packets_series(results, per_seed),
            "Packets delivered over rounds",
            "round",
            "packets delivered (cumulative)",
        ),
    )?;
    Ok(vec![alive_path, packets_path])
}
