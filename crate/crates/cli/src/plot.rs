//! Minimal line-plot SVG writer.
//!
//! Output is a pure function of the input data: fixed canvas, fixed palette,
//! coordinates printed with three decimals.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Horizontal or vertical reference line.
#[derive(Debug, Clone)]
pub enum Marker {
    Horizontal { y: f64, label: String },
    Vertical { x: f64, label: String },
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        let pad = lo.abs().max(1.0) * 0.5;
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// About five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = mag
        * match raw / mag {
            r if r < 1.5 => 1.0,
            r if r < 3.0 => 2.0,
            r if r < 7.0 => 5.0,
            _ => 10.0,
        };
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !(1e-3..1e4).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    fn frame(&self) -> Frame {
        let finite = self.series.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in finite {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for m in &self.markers {
            match *m {
                Marker::Horizontal { y, .. } => {
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
                Marker::Vertical { x, .. } => {
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                }
            }
        }
        let (x0, x1) = if x0.is_finite() && x1 > x0 { (x0, x1) } else { padded(x0, x1) };
        let (y0, y1) = padded(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    pub fn render(&self) -> String {
        let f = self.frame();
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(&self.title)
        );
        let (left, right, top, bottom) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
        let _ = writeln!(
            svg,
            r#"<rect x="{left:.3}" y="{top:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
            right - left,
            bottom - top
        );
        for t in ticks(f.x0, f.x1) {
            let x = f.px(t);
            let _ = writeln!(svg, r##"<line x1="{x:.3}" y1="{bottom:.3}" x2="{x:.3}" y2="{:.3}" stroke="black"/>"##, bottom + 5.0);
            let _ = writeln!(svg, r#"<text x="{x:.3}" y="{:.3}" text-anchor="middle">{}</text>"#, bottom + 18.0, fmt_tick(t));
        }
        for t in ticks(f.y0, f.y1) {
            let y = f.py(t);
            let _ = writeln!(svg, r#"<line x1="{:.3}" y1="{y:.3}" x2="{left:.3}" y2="{y:.3}" stroke="black"/>"#, left - 5.0);
            let _ = writeln!(svg, r#"<text x="{:.3}" y="{:.3}" text-anchor="end">{}</text>"#, left - 8.0, y + 4.0, fmt_tick(t));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" text-anchor="middle">{}</text>"#,
            (left + right) / 2.0,
            HEIGHT - 15.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            r#"<text x="20" y="{:.3}" text-anchor="middle" transform="rotate(-90 20 {:.3})">{}</text>"#,
            (top + bottom) / 2.0,
            (top + bottom) / 2.0,
            escape(&self.y_label)
        );
        for m in &self.markers {
            match m {
                Marker::Horizontal { y, label } => {
                    let py = f.py(*y);
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{left:.3}" y1="{py:.3}" x2="{right:.3}" y2="{py:.3}" stroke="gray" stroke-dasharray="6 4"/>"#
                    );
                    let _ = writeln!(svg, r#"<text x="{:.3}" y="{:.3}" fill="gray">{}</text>"#, right + 6.0, py + 4.0, escape(label));
                }
                Marker::Vertical { x, label } => {
                    let px = f.px(*x);
                    let _ = writeln!(
                        svg,
                        r#"<line x1="{px:.3}" y1="{top:.3}" x2="{px:.3}" y2="{bottom:.3}" stroke="gray" stroke-dasharray="6 4"/>"#
                    );
                    let _ = writeln!(svg, r#"<text x="{:.3}" y="{:.3}" fill="gray">{}</text>"#, px + 4.0, top + 14.0, escape(label));
                }
            }
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.3},{:.3}", f.px(x), f.py(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
            let ly = top + 20.0 + 18.0 * i as f64;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.3}" y1="{ly:.3}" x2="{:.3}" y2="{ly:.3}" stroke="{color}" stroke-width="2"/>"#,
                right + 10.0,
                right + 30.0
            );
            let _ = writeln!(svg, r#"<text x="{:.3}" y="{:.3}">{}</text>"#, right + 36.0, ly + 4.0, escape(&s.label));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Plot {
        Plot {
            title: "t < 1".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![
                Series {
                    label: "a".into(),
                    points: (0..=10).map(|i| (i as f64 / 10.0, (i as f64).sin())).collect(),
                },
                Series {
                    label: "b".into(),
                    points: vec![(0.0, 1.0), (1.0, f64::NAN)],
                },
            ],
            markers: vec![Marker::Horizontal {
                y: 0.0,
                label: "zero".into(),
            }],
        }
    }

    #[test]
    fn rendering_is_deterministic_and_escaped() {
        let a = sample().render();
        assert_eq!(a, sample().render());
        assert!(a.contains("t &lt; 1"));
        assert_eq!(a.matches("<polyline").count(), 2);
        assert!(!a.contains("NaN"));
        assert!(a.ends_with("</svg>\n"));
    }

    #[test]
    fn ticks_are_round_and_inside() {
        let t = ticks(-0.03, 1.07);
        assert_eq!(t, vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(fmt_tick(0.6000000000000001), "0.6");
        assert_eq!(fmt_tick(-45.0), "-45");
        assert_eq!(fmt_tick(2.5e-5), "2.5e-5");
    }
}
