//! Standalone SVG renderings: free boundary chains with cone overlays, and
//! radius series as polylines.

use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::{GrowthFit, WeissSeries};
use crate::domain::Point;
use crate::error::{Error, Result};
use crate::freeboundary::{ConeSpec, FreeBoundary, PointClass};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
}

impl Default for Style {
    fn default() -> Self {
        Style {
            width: 480.0,
            height: 480.0,
            margin: 40.0,
        }
    }
}

pub enum Plot<'a> {
    /// Chains over the window `[0, x1_max] x [-x2_max, x2_max]`, with each cone
    /// drawn as a wedge of radius `rho`.
    Boundary {
        fb: &'a FreeBoundary,
        cones: &'a [ConeSpec],
        rho: f64,
        x1_max: f64,
        x2_max: f64,
    },
    Weiss(&'a WeissSeries),
    /// `log S_r` against `log r`, with the fitted line.
    Growth(&'a GrowthFit),
}

fn class_color(c: PointClass) -> &'static str {
    match c {
        PointClass::PosOnePhase => "#c0392b",
        PointClass::NegOnePhase => "#2471a3",
        PointClass::TwoPhase => "#7d3c98",
        PointClass::Branching => "#f39c12",
    }
}

/// Affine map from data coordinates (`x` right, `y` up) into the plot area.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    x0: f64,
    y0: f64,
    sx: f64,
    sy: f64,
    left: f64,
    bottom: f64,
}

impl Frame {
    pub fn new(style: &Style, x: (f64, f64), y: (f64, f64), equal: bool) -> Frame {
        let w = style.width - 2.0 * style.margin;
        let h = style.height - 2.0 * style.margin;
        let dx = (x.1 - x.0).max(f64::MIN_POSITIVE);
        let dy = (y.1 - y.0).max(f64::MIN_POSITIVE);
        let (mut sx, mut sy) = (w / dx, h / dy);
        if equal {
            sx = sx.min(sy);
            sy = sx;
        }
        Frame {
            x0: x.0,
            y0: y.0,
            sx,
            sy,
            left: style.margin,
            bottom: style.height - style.margin,
        }
    }

    pub fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (self.left + (x - self.x0) * self.sx, self.bottom - (y - self.y0) * self.sy)
    }
}

fn header(s: &mut String, style: &Style) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = style.width,
        h = style.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn axes(s: &mut String, f: &Frame, x: (f64, f64), y: (f64, f64), xlabel: &str, ylabel: &str) {
    let (ax, ay) = f.map(x.0, y.0);
    let (bx, _) = f.map(x.1, y.0);
    let (_, cy) = f.map(x.0, y.1);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{ay:.3}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{ax:.3}" y1="{ay:.3}" x2="{ax:.3}" y2="{cy:.3}" stroke="black"/>"#
    );
    for (v, (px, py)) in [(x.0, (ax, ay + 14.0)), (x.1, (bx, ay + 14.0))] {
        let _ = writeln!(s, r#"<text x="{px:.3}" y="{py:.3}" font-size="10" text-anchor="middle">{v:.4}</text>"#);
    }
    for (v, py) in [(y.0, ay), (y.1, cy)] {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{py:.3}" font-size="10" text-anchor="end">{v:.4}</text>"#,
            ax - 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="middle">{xlabel}</text>"#,
        0.5 * (ax + bx),
        ay + 28.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.3}" y="{:.3}" font-size="11">{ylabel}</text>"#,
        ax + 4.0,
        cy - 6.0
    );
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        let pad = lo.abs().max(1.0) * 1e-3;
        (lo - pad, hi + pad)
    }
}

fn polyline(s: &mut String, f: &Frame, xs: &[f64], ys: &[f64], class: &str, color: &str) {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let (a, b) = f.map(x, y);
            format!("{a:.3},{b:.3}")
        })
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline class="{class}" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        pts.join(" ")
    );
}

/// Corners of the two wedges of `cone` truncated at radius `rho`.
pub fn cone_wedges(cone: &ConeSpec, rho: f64) -> [[Point; 3]; 2] {
    let z = cone.apex;
    let t = 1.0 / (1.0 + cone.delta * cone.delta).sqrt();
    let (a, b) = (rho * cone.delta * t, rho * t);
    [
        [z, Point::new(z.x1 - a, z.x2 + b), Point::new(z.x1 + a, z.x2 + b)],
        [z, Point::new(z.x1 - a, z.x2 - b), Point::new(z.x1 + a, z.x2 - b)],
    ]
}

pub fn render_svg(plot: &Plot, style: &Style) -> Result<String> {
    let mut s = String::new();
    match plot {
        Plot::Boundary {
            fb,
            cones,
            rho,
            x1_max,
            x2_max,
        } => {
            if fb.is_empty() {
                return Err(Error::EmptyData("free boundary"));
            }
            let (xr, yr) = ((0.0, *x1_max), (-*x2_max, *x2_max));
            let f = Frame::new(style, xr, yr, true);
            header(&mut s, style);
            let (px, py0) = f.map(0.0, -*x2_max);
            let (_, py1) = f.map(0.0, *x2_max);
            let _ = writeln!(
                s,
                r#"<line class="fixed-boundary" x1="{px:.3}" y1="{py0:.3}" x2="{px:.3}" y2="{py1:.3}" stroke="black" stroke-width="2"/>"#
            );
            for cone in cones.iter() {
                for w in cone_wedges(cone, *rho) {
                    let pts: Vec<String> = w
                        .iter()
                        .map(|p| {
                            let (a, b) = f.map(p.x1, p.x2);
                            format!("{a:.3},{b:.3}")
                        })
                        .collect();
                    let _ = writeln!(
                        s,
                        r##"<polygon class="cone" points="{}" fill="#95a5a6" fill-opacity="0.35" stroke="none"/>"##,
                        pts.join(" ")
                    );
                }
            }
            for (i, c) in fb.chains.iter().enumerate() {
                if c.vertices.is_empty() {
                    continue;
                }
                let mut counts = [0usize; 4];
                for v in &c.vertices {
                    counts[v.class as usize] += 1;
                }
                let dominant = [
                    PointClass::PosOnePhase,
                    PointClass::NegOnePhase,
                    PointClass::TwoPhase,
                    PointClass::Branching,
                ]
                .into_iter()
                .max_by_key(|&k| (counts[k as usize], std::cmp::Reverse(k as usize)))
                .expect("four classes");
                let mut d = String::new();
                for (k, v) in c.vertices.iter().enumerate() {
                    let (a, b) = f.map(v.x.x1, v.x.x2);
                    let _ = write!(d, "{}{a:.3} {b:.3} ", if k == 0 { "M" } else { "L" });
                }
                if c.closed {
                    d.push('Z');
                }
                let _ = writeln!(
                    s,
                    r#"<path class="chain" data-chain="{i}" d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                    d.trim_end(),
                    class_color(dominant)
                );
            }
            for v in fb.vertices().filter(|v| v.class.is_two_phase()) {
                let (a, b) = f.map(v.x.x1, v.x.x2);
                let _ = writeln!(
                    s,
                    r#"<circle class="{}" cx="{a:.3}" cy="{b:.3}" r="2.5" fill="{}"/>"#,
                    v.class.as_str(),
                    class_color(v.class)
                );
            }
        }
        Plot::Weiss(series) => {
            if series.values.is_empty() {
                return Err(Error::EmptyData("weiss series"));
            }
            let (xr, yr) = (bounds(&series.radii), bounds(&series.values));
            let f = Frame::new(style, xr, yr, false);
            header(&mut s, style);
            axes(&mut s, &f, xr, yr, "r", "W(r)");
            polyline(&mut s, &f, &series.radii, &series.values, "series", "#c0392b");
        }
        Plot::Growth(fit) => {
            let pairs: Vec<(f64, f64)> = fit
                .radii
                .iter()
                .zip(&fit.suprema)
                .filter(|(_, &v)| v > 0.0)
                .map(|(&r, &v)| (r.ln(), v.ln()))
                .collect();
            if pairs.is_empty() {
                return Err(Error::EmptyData("growth fit"));
            }
            let (lx, ly): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let xr = bounds(&lx);
            let fitted: Vec<f64> = [xr.0, xr.1]
                .iter()
                .map(|x| fit.constant.ln() + fit.exponent * x)
                .collect();
            let yr = bounds(&[ly.clone(), fitted.clone()].concat());
            let f = Frame::new(style, xr, yr, false);
            header(&mut s, style);
            axes(&mut s, &f, xr, yr, "log r", "log sup|u|");
            polyline(&mut s, &f, &lx, &ly, "series", "#2471a3");
            polyline(&mut s, &f, &[xr.0, xr.1], &fitted, "fit", "#7f8c8d");
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_svg(plot: &Plot, style: &Style, path: &Path) -> Result<()> {
    let s = render_svg(plot, style)?;
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
