//! Rendering of correlation surfaces: text and CSV tables, and an SVG line
//! chart of implied correlation against waiting period.

use std::fmt::Write as _;

use crate::correlation::{CorrelationSurface, ImpliedCorrelationPoint};
use crate::data::{Frequency, Position};
use crate::var::{waiting_period_label, ProbabilityLevel};

pub const CSV_HEADER: &str = "probability,waiting_period,w1,w2,position,rho,in_range";

/// Marker appended to out-of-range correlations in text tables.
pub const OUT_OF_RANGE_MARKER: char = '*';

fn level_label(frequency: Frequency, level: &ProbabilityLevel) -> String {
    match level.waiting_periods() {
        Some(k) => format!(
            "{} ({})",
            level.percent_label(),
            waiting_period_label(frequency, k)
        ),
        None => level.percent_label(),
    }
}

fn percent(w: f64) -> String {
    let s = format!("{:.2}", w * 100.0);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}%")
}

fn weights_label(w1: f64, w2: f64) -> String {
    format!("({}, {})", percent(w1), percent(w2))
}

fn rho_cell(pt: Option<&ImpliedCorrelationPoint>) -> String {
    match pt {
        Some(pt) if pt.in_range => format!("{:.3}", pt.rho),
        Some(pt) => format!("{:.3}{OUT_OF_RANGE_MARKER}", pt.rho),
        None => "-".to_string(),
    }
}

/// Rows are probability levels, column groups are weight pairs, and each
/// group has one sub-column per position.
pub fn render_table_text(surface: &CorrelationSurface) -> String {
    const CELL: usize = 9;
    let levels = surface.levels();
    let weights = surface.weights();
    let positions = surface.positions();
    let labels: Vec<String> = levels
        .iter()
        .map(|l| level_label(surface.frequency, l))
        .collect();
    let first = labels
        .iter()
        .map(String::len)
        .chain(std::iter::once("Probability (waiting period)".len()))
        .max()
        .unwrap_or(0)
        + 2;
    let group = CELL * positions.len();

    let mut out = String::new();
    let _ = writeln!(
        out,
        "Correlation implied from {} VaR (Pearson correlation {:.3})",
        surface.frequency, surface.pearson
    );
    let _ = writeln!(out);

    let mut line = format!("{:<first$}", "Probability (waiting period)");
    for &(w1, w2) in &weights {
        let _ = write!(line, "{:<group$}", weights_label(w1, w2));
    }
    let _ = writeln!(out, "{}", line.trim_end());

    let mut line = " ".repeat(first);
    for _ in &weights {
        for pos in &positions {
            let _ = write!(line, "{:<CELL$}", pos.label());
        }
    }
    let _ = writeln!(out, "{}", line.trim_end());

    for (level, label) in levels.iter().zip(&labels) {
        let mut line = format!("{label:<first$}");
        for &(w1, _) in &weights {
            for &pos in &positions {
                let _ = write!(line, "{:<CELL$}", rho_cell(surface.get(level.p(), w1, pos)));
            }
        }
        let _ = writeln!(out, "{}", line.trim_end());
    }

    if surface.points.iter().any(|pt| !pt.in_range) {
        let _ = writeln!(out);
        let _ = writeln!(out, "{OUT_OF_RANGE_MARKER} outside [-1, 1]");
    }
    out
}

fn csv_rows<'a>(out: &mut String, points: impl Iterator<Item = &'a ImpliedCorrelationPoint>) {
    let _ = writeln!(out, "{CSV_HEADER}");
    for pt in points {
        let k = pt
            .level
            .waiting_periods()
            .map(|k| k.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            pt.level.p(),
            k,
            pt.spec.w1(),
            pt.spec.w2(),
            pt.spec.position(),
            pt.rho,
            pt.in_range
        );
    }
}

/// Machine-readable table; values are written at full precision.
pub fn render_table_csv(surface: &CorrelationSurface) -> String {
    let mut out = String::new();
    csv_rows(&mut out, surface.points.iter());
    out
}

/// Plot points of one weight pair, in the table CSV schema.
pub fn render_figure_csv(surface: &CorrelationSurface, w1: f64) -> String {
    let mut out = String::new();
    csv_rows(
        &mut out,
        surface.points.iter().filter(|pt| pt.spec.w1() == w1),
    );
    out
}

fn series_colour(position: Position) -> &'static str {
    match position {
        Position::Long => "#c0392b",
        Position::Short => "#2471a3",
    }
}

/// Line chart of implied correlation against waiting period for the weight
/// pair with first weight `w1`, one polyline per position.
pub fn render_figure_svg(surface: &CorrelationSurface, w1: f64) -> String {
    const WIDTH: f64 = 720.0;
    const HEIGHT: f64 = 420.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 130.0;
    const TOP: f64 = 50.0;
    const BOTTOM: f64 = 70.0;

    let levels = surface.levels();
    let positions = surface.positions();
    let w2 = surface
        .points
        .iter()
        .find(|pt| pt.spec.w1() == w1)
        .map(|pt| pt.spec.w2())
        .unwrap_or(1.0 - w1);

    let values: Vec<f64> = surface
        .points
        .iter()
        .filter(|pt| pt.spec.w1() == w1 && pt.rho.is_finite())
        .map(|pt| pt.rho)
        .chain(std::iter::once(surface.pearson))
        .collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut y_min = (lo * 10.0).floor() / 10.0;
    let mut y_max = (hi * 10.0).ceil() / 10.0;
    if y_max - y_min < 0.2 {
        y_min -= 0.1;
        y_max += 0.1;
    }

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_at = |i: usize| {
        if levels.len() <= 1 {
            LEFT + plot_w / 2.0
        } else {
            LEFT + plot_w * i as f64 / (levels.len() - 1) as f64
        }
    };
    let y_at = |v: f64| TOP + plot_h * (y_max - v) / (y_max - y_min);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">Correlation implied from {} VaR, weights {}</text>"#,
        LEFT + plot_w / 2.0,
        surface.frequency,
        weights_label(w1, w2)
    );

    // y grid and labels
    let steps = ((y_max - y_min) / 0.1).round() as usize;
    for s in 0..=steps {
        let v = y_min + 0.1 * s as f64;
        let y = y_at(v);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r##"<line x1="{LEFT}" y1="{:.2}" x2="{LEFT}" y2="{:.2}" stroke="#333333"/>"##,
        TOP,
        TOP + plot_h
    );
    let _ = writeln!(
        out,
        r##"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333"/>"##,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );

    for (i, level) in levels.iter().enumerate() {
        let label = match level.waiting_periods() {
            Some(k) => waiting_period_label(surface.frequency, k),
            None => level.percent_label(),
        };
        let x = x_at(i);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            TOP + plot_h + 18.0
        );
        let _ = writeln!(
            out,
            r##"<text x="{x:.2}" y="{:.2}" text-anchor="middle" fill="#666666">{}</text>"##,
            TOP + plot_h + 34.0,
            level.percent_label()
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Average waiting period (probability level)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    let py = y_at(surface.pearson);
    let _ = writeln!(
        out,
        r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#7f8c8d" stroke-dasharray="6,4"/>"##,
        LEFT + plot_w
    );

    for (j, &pos) in positions.iter().enumerate() {
        let pts: Vec<String> = levels
            .iter()
            .enumerate()
            .filter_map(|(i, level)| {
                surface
                    .get(level.p(), w1, pos)
                    .filter(|pt| pt.rho.is_finite())
                    .map(|pt| format!("{:.2},{:.2}", x_at(i), y_at(pt.rho)))
            })
            .collect();
        let colour = series_colour(pos);
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 20.0 * j as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 25.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 32.0,
            ly + 4.0,
            pos.label()
        );
    }
    let ly = TOP + 20.0 * positions.len() as f64;
    let lx = LEFT + plot_w + 15.0;
    let _ = writeln!(
        out,
        r##"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="#7f8c8d" stroke-dasharray="6,4"/>"##,
        lx + 25.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}">Pearson</text>"#,
        lx + 32.0,
        ly + 4.0
    );
    let _ = writeln!(out, "</svg>");
    out
}
