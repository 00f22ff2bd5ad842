//! Campanato-type decay `∫_{B_r(x0)} |∇u - A0|² ≈ C r^(2 + 2α)`.

use serde::{Deserialize, Serialize};

use super::growth::log_log_fit;
use super::quad::ball_samples;
use crate::domain::{ball_mask, Point};
use crate::error::{Error, Result};
use crate::field::{pairwise_sum, ScalarField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampanatoFit {
    pub center: Point,
    pub radii: Vec<f64>,
    pub a0: [f64; 2],
    pub a0_rule: A0Rule,
    pub integrals: Vec<f64>,
    /// Capped at 1; `saturated` marks fields whose gradient is constant to
    /// rounding, where the decay is faster than any power the fit can see.
    pub alpha: f64,
    pub saturated: bool,
}

impl CampanatoFit {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,r,integral\n");
        for (r, v) in self.radii.iter().zip(&self.integrals) {
            s.push_str(&format!("{},{},{r},{v}\n", self.center.x1, self.center.x2));
        }
        s
    }
}

fn mean_gradient(u: &ScalarField, x0: Point, r: f64) -> Result<[f64; 2]> {
    let s = ball_samples(u, x0, r)?;
    let area = pairwise_sum(&s.iter().map(|q| q.weight).collect::<Vec<_>>());
    if !(area > 0.0) {
        return Err(Error::EmptyData("campanato ball"));
    }
    let gx = pairwise_sum(&s.iter().map(|q| q.weight * q.grad[0]).collect::<Vec<_>>());
    let gy = pairwise_sum(&s.iter().map(|q| q.weight * q.grad[1]).collect::<Vec<_>>());
    Ok([gx / area, gy / area])
}

/// Aitken's delta-squared limit of three successive values, falling back to
/// the first one when the differences change sign or do not vary.
fn aitken(a0: f64, a1: f64, a2: f64) -> f64 {
    let d1 = a1 - a0;
    let d2 = a2 - a1;
    let den = d2 - d1;
    let scale = a0.abs().max(a1.abs()).max(a2.abs());
    let tiny = 1e-10 * scale;
    if den.abs() <= tiny || d1.abs() <= tiny || d1 * d2 <= 0.0 {
        return a0;
    }
    a0 - d1 * d1 / den
}

/// How the reference gradient was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum A0Rule {
    /// `|u - u(x0)|` grows faster than linearly, so `∇u(x0) = 0`.
    Vanishing,
    /// Aitken limit of the ball-averaged gradients of the three smallest radii.
    Extrapolated,
}

/// Growth exponent above which `x0` counts as a critical point.
const SUPERLINEAR: f64 = 1.05;

/// Decay of `∫_{B_r(x0)} |∇u - A0|²` over `radii` (ascending, smallest ≥ 4h).
///
/// `A0` estimates `∇u(x0)`. When the sup of `|u - u(x0)|` over the balls grows
/// with exponent above 1.05 the gradient at `x0` vanishes and `A0 = 0`.
/// Otherwise the ball averages are extrapolated to `r → 0` with Aitken; the
/// raw smallest-ball average carries an `O(r^α)` bias that flattens the slope.
pub fn campanato_rate(u: &ScalarField, x0: Point, radii: &[f64]) -> Result<CampanatoFit> {
    if radii.len() < 2 {
        return Err(Error::TooFewRadii(radii.len()));
    }
    let min = 4.0 * u.spacing();
    if radii[0] < min * (1.0 - 1e-12) {
        return Err(Error::RadiusTooSmall { radius: radii[0], min });
    }
    let u0 = u.interpolate(x0).ok_or(Error::BallExitsDomain {
        x1: x0.x1,
        x2: x0.x2,
        radius: radii[0],
    })?;
    let grid = u.grid();
    let osc: Vec<f64> = radii
        .iter()
        .map(|&r| {
            ball_mask(grid, x0, r)
                .nodes()
                .iter()
                .fold(0.0f64, |m, &k| m.max((u.value(k) - u0).abs()))
        })
        .collect();
    let critical = osc.iter().all(|&o| o > 0.0)
        && log_log_fit(radii, &osc).map_or(false, |(_, b, _)| b > SUPERLINEAR);
    let (a0, rule) = if critical {
        ([0.0, 0.0], A0Rule::Vanishing)
    } else {
        let means = radii
            .iter()
            .take(3)
            .map(|&r| mean_gradient(u, x0, r))
            .collect::<Result<Vec<_>>>()?;
        let a0 = if means.len() == 3 {
            [0, 1].map(|i| aitken(means[0][i], means[1][i], means[2][i]))
        } else {
            means[0]
        };
        (a0, A0Rule::Extrapolated)
    };
    let mut fit = campanato_rate_about(u, x0, radii, a0)?;
    fit.a0_rule = rule;
    Ok(fit)
}

/// The decay fit about a given reference gradient `a0`.
pub fn campanato_rate_about(u: &ScalarField, x0: Point, radii: &[f64], a0: [f64; 2]) -> Result<CampanatoFit> {
    if radii.len() < 2 {
        return Err(Error::TooFewRadii(radii.len()));
    }
    let mut integrals = Vec::with_capacity(radii.len());
    let mut energy_scale = Vec::with_capacity(radii.len());
    for &r in radii {
        let s = ball_samples(u, x0, r)?;
        let dev: Vec<f64> = s
            .iter()
            .map(|q| q.weight * ((q.grad[0] - a0[0]).powi(2) + (q.grad[1] - a0[1]).powi(2)))
            .collect();
        let full: Vec<f64> = s
            .iter()
            .map(|q| q.weight * (q.grad[0].powi(2) + q.grad[1].powi(2)))
            .collect();
        integrals.push(pairwise_sum(&dev));
        energy_scale.push(pairwise_sum(&full));
    }
    let flat = integrals
        .iter()
        .zip(&energy_scale)
        .all(|(&i, &e)| i <= 1e-20 * e.max(f64::MIN_POSITIVE) || i == 0.0);
    if flat {
        let all_zero = energy_scale.iter().all(|&e| e == 0.0);
        if all_zero {
            return Err(Error::Degenerate(format!(
                "gradient vanishes around ({}, {})",
                x0.x1, x0.x2
            )));
        }
        return Ok(CampanatoFit {
            center: x0,
            radii: radii.to_vec(),
            a0,
            a0_rule: A0Rule::Extrapolated,
            integrals,
            alpha: 1.0,
            saturated: true,
        });
    }
    let (_, slope, _) = log_log_fit(radii, &integrals)?;
    let alpha = (slope - 2.0) / 2.0;
    Ok(CampanatoFit {
        center: x0,
        radii: radii.to_vec(),
        a0,
        a0_rule: A0Rule::Extrapolated,
        integrals,
        alpha: alpha.min(1.0),
        saturated: alpha >= 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};
    use std::sync::Arc;

    const RADII: [f64; 4] = [0.0625, 0.125, 0.25, 0.5];

    #[test]
    fn rates_for_reference_fields() {
        let g = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 128.0)).unwrap());
        let u = ScalarField::from_fn(g.clone(), |x| 1.0817 * x.x1.max(0.0).powf(4.0 / 3.0));
        let f = campanato_rate(&u, Point::ORIGIN, &RADII).unwrap();
        assert!((f.alpha - 1.0 / 3.0).abs() < 0.05, "{f:?}");
        assert_eq!(f.a0_rule, A0Rule::Vanishing);
        let q = ScalarField::from_fn(g.clone(), |x| x.x1 * x.x1);
        let f = campanato_rate(&q, Point::ORIGIN, &RADII).unwrap();
        assert!((f.alpha - 1.0).abs() < 0.02, "{f:?}");
        let l = ScalarField::from_fn(g.clone(), |x| 2.0 * x.x1 - x.x2);
        let f = campanato_rate(&l, Point::ORIGIN, &RADII).unwrap();
        assert!(f.saturated && f.alpha >= 1.0);
        assert_eq!(f.a0_rule, A0Rule::Extrapolated);
        assert!((f.a0[0] - 2.0).abs() < 1e-12 && (f.a0[1] + 1.0).abs() < 1e-12);
        let e1 = ScalarField::from_fn(g.clone(), |x| x.x1);
        let f = campanato_rate(&e1, Point::ORIGIN, &RADII).unwrap();
        assert!(f.saturated && (f.a0[0] - 1.0).abs() < 1e-12);
        assert!(campanato_rate(&ScalarField::zeros(g), Point::ORIGIN, &RADII).is_err());
    }

    #[test]
    fn aitken_recovers_geometric_limits() {
        let r: f64 = 2f64.powf(1.0 / 3.0);
        assert!((aitken(5.0 + 1.0, 5.0 + r, 5.0 + r * r) - 5.0).abs() < 1e-12);
        assert_eq!(aitken(2.0, 2.0, 2.0), 2.0);
    }
}
