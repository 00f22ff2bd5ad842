//! Quadrature over `B_r(x0) ∩ {x1 > 0}` and over the circle `∂B_r(x0)` for a
//! bilinear field.

use crate::domain::Point;
use crate::error::{Error, Result};
use crate::field::ScalarField;

/// A quadrature point inside a valued cell, with the bilinear value and
/// gradient of the field there.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub value: f64,
    pub grad: [f64; 2],
    pub weight: f64,
}

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
const SUB: usize = 8;

fn bilinear(u: &ScalarField, corners: [usize; 4], t: f64, s: f64) -> (f64, [f64; 2]) {
    let h = u.spacing();
    let [a, b, c, d] = corners.map(|k| u.value(k));
    let v = (1.0 - t) * (1.0 - s) * a + t * (1.0 - s) * b + t * s * c + (1.0 - t) * s * d;
    let g = [
        ((1.0 - s) * (b - a) + s * (c - d)) / h,
        ((1.0 - t) * (d - a) + t * (c - b)) / h,
    ];
    (v, g)
}

/// Samples covering `B_r(x0) ∩ {x1 ≥ 0}`. Cells fully inside the ball use the
/// 2x2 Gauss rule (exact for squared bilinear gradients); cut cells use an
/// 8x8 midpoint subgrid with an indicator.
pub(crate) fn ball_samples(u: &ScalarField, x0: Point, r: f64) -> Result<Vec<Sample>> {
    let grid = u.grid();
    let h = grid.spacing();
    let (ni, nj) = grid.cell_dims();
    let inside = |p: Point| p.dist(x0) <= r;
    let ci_lo = ((x0.x1 - r) / h).floor().max(0.0) as usize;
    let ci_hi = (((x0.x1 + r) / h).ceil().max(0.0) as usize).min(ni);
    let off = grid.ny() as f64;
    let cj_lo = ((x0.x2 - r) / h + off).floor().max(0.0) as usize;
    let cj_hi = (((x0.x2 + r) / h + off).ceil().max(0.0) as usize).min(nj);
    let mut out = Vec::new();
    for ci in ci_lo..ci_hi {
        for cj in cj_lo..cj_hi {
            let o = grid.cell_origin(ci, cj);
            let corners = grid.cell_corners(ci, cj);
            let pts = [
                o,
                Point::new(o.x1 + h, o.x2),
                Point::new(o.x1 + h, o.x2 + h),
                Point::new(o.x1, o.x2 + h),
            ];
            let n_in = pts.iter().filter(|&&p| inside(p)).count();
            // nearest point of the cell to x0
            let q = Point::new(
                x0.x1.clamp(o.x1, o.x1 + h),
                x0.x2.clamp(o.x2, o.x2 + h),
            );
            if !inside(q) {
                continue;
            }
            let valued = corners
                .iter()
                .all(|&k| grid.label(k) != crate::domain::NodeLabel::Exterior);
            if !valued {
                return Err(Error::BallExitsDomain {
                    x1: x0.x1,
                    x2: x0.x2,
                    radius: r,
                });
            }
            if n_in == 4 {
                for &t in &GAUSS {
                    for &s in &GAUSS {
                        let (value, grad) = bilinear(u, corners, t, s);
                        out.push(Sample {
                            value,
                            grad,
                            weight: 0.25 * h * h,
                        });
                    }
                }
            } else {
                let w = h * h / (SUB * SUB) as f64;
                for a in 0..SUB {
                    for b in 0..SUB {
                        let t = (a as f64 + 0.5) / SUB as f64;
                        let s = (b as f64 + 0.5) / SUB as f64;
                        if !inside(Point::new(o.x1 + t * h, o.x2 + s * h)) {
                            continue;
                        }
                        let (value, grad) = bilinear(u, corners, t, s);
                        out.push(Sample {
                            value,
                            grad,
                            weight: w,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Midpoint samples of `u` on `∂B_r(x0) ∩ {x1 > 0}` at 1° resolution, as
/// `(point, value, arc length)`. Points with `x1 ≤ 0` are skipped (u vanishes
/// there).
pub(crate) fn circle_samples(u: &ScalarField, x0: Point, r: f64) -> Result<Vec<(Point, f64, f64)>> {
    let n = 360;
    let dth = 2.0 * std::f64::consts::PI / n as f64;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let th = (k as f64 + 0.5) * dth - std::f64::consts::PI;
        let p = Point::new(x0.x1 + r * th.cos(), x0.x2 + r * th.sin());
        if p.x1 <= 0.0 {
            continue;
        }
        let v = u.interpolate(p).ok_or(Error::BallExitsDomain {
            x1: x0.x1,
            x2: x0.x2,
            radius: r,
        })?;
        out.push((p, v, r * dth));
    }
    Ok(out)
}
