//! Minimal static SVG bar chart.

use std::fmt::Write;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 280.0;
const MARGIN: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Vertical bars over a shared zero line; the value axis spans at least [0, 1].
pub fn bar_chart(title: &str, bars: &[(&str, f64)]) -> String {
    let lo = bars.iter().map(|b| b.1).fold(0.0, f64::min);
    let hi = bars.iter().map(|b| b.1).fold(1.0, f64::max);
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let y_of = |v: f64| MARGIN + (hi - v) / (hi - lo) * plot_h;
    let zero = y_of(0.0);
    let slot = (WIDTH - 2.0 * MARGIN) / bars.len().max(1) as f64;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, (label, value)) in bars.iter().enumerate() {
        let x = MARGIN + i as f64 * slot + slot * 0.15;
        let w = slot * 0.7;
        let y = y_of(*value);
        let (top, h) = if *value >= 0.0 { (y, zero - y) } else { (zero, y - zero) };
        let cx = x + w / 2.0;
        let _ = writeln!(out, r##"<rect x="{x:.2}" y="{top:.2}" width="{w:.2}" height="{h:.2}" fill="#4a78b5"/>"##);
        let _ = writeln!(out, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{value:.3}</text>"#, top - 4.0);
        let _ = writeln!(out, r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, HEIGHT - MARGIN + 16.0, escape(label));
    }
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN}" y1="{zero:.2}" x2="{:.2}" y2="{zero:.2}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_rect_per_bar_plus_background() {
        let svg = bar_chart("m", &[("A", 0.5), ("B", -0.2), ("C", 1.0)]);
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains(">-0.200<"));
    }

    #[test]
    fn labels_are_escaped() {
        assert!(bar_chart("a<b", &[("x&y", 0.1)]).contains("a&lt;b"));
    }
}
