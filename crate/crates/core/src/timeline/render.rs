use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::StressTimeline;
use crate::error::{Error, Result};

pub const STRESSED_COLOR: &str = "#ff7f0e";
pub const RELAXED_COLOR: &str = "#1f77b4";

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 40.0;

/// Probability over time, one circle per entry, alert spans shaded.
pub fn render_svg(timeline: &StressTimeline) -> Result<String> {
    let entries = timeline.entries();
    let (first, last) = match (entries.first(), entries.last()) {
        (Some(f), Some(l)) => (f.timestamp, l.timestamp),
        _ => return Err(Error::Timeline("cannot render an empty timeline".into())),
    };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let span = if last > first { last - first } else { 1.0 };
    let x = |t: f64| MARGIN_LEFT + (t - first) / span * plot_w;
    let y = |p: f64| MARGIN_TOP + (1.0 - p) * plot_h;
    // half the mean spacing, so a one-entry alert is still visible
    let pad = if entries.len() > 1 {
        plot_w / (entries.len() - 1) as f64 / 2.0
    } else {
        4.0
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(s, r#"<g class="alerts">"#);
    for a in timeline.alerts() {
        let x0 = (x(a.start_ts) - pad).max(MARGIN_LEFT);
        let x1 = (x(a.end_ts) + pad).min(MARGIN_LEFT + plot_w);
        let _ = writeln!(
            s,
            r#"<rect class="alert" x="{x0:.2}" y="{MARGIN_TOP}" width="{:.2}" height="{plot_h}" fill="{STRESSED_COLOR}" fill-opacity="0.15"/>"#,
            x1 - x0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN_LEFT}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
        y(0.5),
        MARGIN_LEFT + plot_w
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for (p, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            MARGIN_LEFT - 6.0,
            y(p) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="start">{first}</text>"#,
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{last}</text>"#,
        MARGIN_LEFT + plot_w,
        HEIGHT - MARGIN_BOTTOM + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">P(stressed)</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );
    let _ = writeln!(s, r#"<g class="entries">"#);
    for e in entries {
        let (class, color) = if e.label == 1 {
            ("stressed", STRESSED_COLOR)
        } else {
            ("relaxed", RELAXED_COLOR)
        };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
            x(e.timestamp),
            y(e.probability)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_timeline(timeline: &StressTimeline, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(timeline)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
