//! Minimal standalone SVG plots.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            v.filter(|x| x.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x), hi.max(x))
                })
        };
        let (mut x0, mut x1) = span(&mut xs.clone());
        let (mut y0, mut y1) = span(&mut ys.clone());
        for (lo, hi) in [(&mut x0, &mut x1), (&mut y0, &mut y1)] {
            if !lo.is_finite() {
                (*lo, *hi) = (0.0, 1.0);
            } else if *hi <= *lo {
                *lo -= 0.5;
                *hi += 0.5;
            }
        }
        Self { x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }

    fn axes(&self, out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{title}</text>"#,
            W / 2.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{xlabel}</text>"#,
            W / 2.0,
            H - 12.0
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{ylabel}</text>"#,
            H / 2.0,
            H / 2.0
        );
        for (v, x, y, anchor) in [
            (self.x0, self.px(self.x0), H - PAD + 16.0, "start"),
            (self.x1, self.px(self.x1), H - PAD + 16.0, "end"),
        ] {
            let _ = writeln!(
                out,
                r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{v:.3e}</text>"#
            );
        }
        for (v, y) in [
            (self.y0, self.py(self.y0)),
            (self.y1, self.py(self.y1) + 10.0),
        ] {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{y}" text-anchor="end">{v:.3e}</text>"#,
                PAD - 4.0
            );
        }
    }
}

/// Polyline plot of `ys` against `xs`.
pub fn line_plot(xs: &[f64], ys: &[f64], title: &str, xlabel: &str, ylabel: &str) -> String {
    let frame = Frame::fit(xs.iter().copied(), ys.iter().copied());
    let mut out = String::new();
    frame.axes(&mut out, title, xlabel, ylabel);
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    );
    out.push_str("</svg>\n");
    out
}

/// Scatter plot with a dashed vertical line at `x = 0`.
pub fn scatter(points: &[(f64, f64)], title: &str, xlabel: &str, ylabel: &str) -> String {
    let frame = Frame::fit(
        points.iter().map(|p| p.0).chain([0.0]),
        points.iter().map(|p| p.1),
    );
    let mut out = String::new();
    frame.axes(&mut out, title, xlabel, ylabel);
    let x = frame.px(0.0);
    let _ = writeln!(
        out,
        r#"<line x1="{x:.2}" y1="{PAD}" x2="{x:.2}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
        H - PAD
    );
    for &(px, py) in points {
        if px.is_finite() && py.is_finite() {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="firebrick"/>"#,
                frame.px(px),
                frame.py(py)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
