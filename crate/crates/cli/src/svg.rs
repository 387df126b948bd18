//! Minimal SVG line plot of angular profiles on shared axes.

use std::fmt::Write as _;

use aniso_core::AngularProfile;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders `(label, profile)` series against angle in degrees.
pub fn profile_plot(title: &str, series: &[(String, AngularProfile)]) -> String {
    let ymax = series
        .iter()
        .flat_map(|(_, p)| p.values().iter().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let x = |deg: f64| MARGIN + deg / 180.0 * pw;
    let y = |v: f64| HEIGHT - MARGIN - v / ymax * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{:.2},{:.2} V{:.2} H{:.2}" fill="none" stroke="black"/>"#,
        MARGIN,
        MARGIN,
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    );
    for deg in (0..=180).step_by(30) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{deg}</text>"#,
            x(deg as f64),
            HEIGHT - MARGIN + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">angle (deg)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{:.3e}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        ymax
    );
    for (k, (label, profile)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = profile
            .values()
            .iter()
            .enumerate()
            .map(|(m, &v)| format!("{:.2},{:.2}", x(profile.angle(m)), y(v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="11" fill="{color}" text-anchor="end">{}</text>"#,
            WIDTH - MARGIN,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
