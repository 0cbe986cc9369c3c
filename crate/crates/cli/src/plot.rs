//! Self-contained SVG plots of sample paths.

use std::fmt::Write as _;

use revjump::simulate::Path;

const W: f64 = 720.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Paths as polylines with dashed jump segments. With `time_vertical` time runs upwards and the
/// state is on the horizontal axis.
pub fn paths_svg(paths: &[&Path], title: &str, time_vertical: bool) -> String {
    let t_end = paths.iter().map(|p| p.t_end()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let (pw, ph) = (W - 2.0 * MARGIN, H - 2.0 * MARGIN);
    let at = |t: f64, x: f64| -> (f64, f64) {
        if time_vertical {
            (MARGIN + x * pw, H - MARGIN - t / t_end * ph)
        } else {
            (MARGIN + t / t_end * pw, H - MARGIN - x * ph)
        }
    };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (tx, ty) = at(f * t_end, 0.0);
        let (xx, xy) = at(0.0, f);
        let (tl, xl) = (format!("{:.3}", f * t_end), format!("{f:.2}"));
        if time_vertical {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{tl}</text>"#, tx - 6.0, ty + 4.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{xl}</text>"#, xx, xy + 16.0);
        } else {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{tl}</text>"#, tx, ty + 16.0);
            let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{xl}</text>"#, xx - 6.0, xy + 4.0);
        }
    }
    let (t_label, x_label) = if time_vertical { ((14.0, H / 2.0), (W / 2.0, H - 12.0)) } else { ((W / 2.0, H - 12.0), (14.0, H / 2.0)) };
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">t</text>"#, t_label.0, t_label.1);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="13" text-anchor="middle">p</text>"#, x_label.0, x_label.1);

    for (n, path) in paths.iter().enumerate() {
        let color = COLORS[n % COLORS.len()];
        let mut events = path.events.iter().peekable();
        let mut line: Vec<(f64, f64)> = Vec::new();
        let mut jumps = Vec::new();
        let flush = |line: &mut Vec<(f64, f64)>, s: &mut String| {
            if line.len() > 1 {
                let pts: Vec<String> = line.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1" points="{}"/>"#, pts.join(" "));
            }
            line.clear();
        };
        for (k, &x) in path.states.iter().enumerate() {
            let t = path.time(k);
            while let Some(e) = events.next_if(|e| path.event_time(e) <= t) {
                let te = path.event_time(e);
                line.push(at(te, e.from));
                flush(&mut line, &mut s);
                jumps.push((at(te, e.from), at(te, e.to)));
                line.push(at(te, e.to));
            }
            line.push(at(t, x));
        }
        flush(&mut line, &mut s);
        for ((x1, y1), (x2, y2)) in jumps {
            let _ = writeln!(
                s,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="0.8" stroke-dasharray="3,3"/>"#
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use revjump::model::neutral;
    use revjump::simulate::{simulate_forward, SimParams};

    #[test]
    fn svg_is_well_formed() {
        let m = neutral(0.2, 0.2, 2.0).unwrap();
        let p = simulate_forward(&m, 0.5, &SimParams::new(5.0, 1e-3).recording_every(10), 1, 0).unwrap();
        assert!(!p.events.is_empty());
        for vertical in [false, true] {
            let svg = paths_svg(&[&p], "a < b", vertical);
            assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
            assert!(svg.contains("a &lt; b"));
            assert_eq!(svg.matches("stroke-dasharray").count(), p.events.len());
            assert_eq!(svg.matches('<').count(), svg.matches('>').count());
        }
    }
}
