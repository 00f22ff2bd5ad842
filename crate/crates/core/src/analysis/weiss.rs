//! The Weiss boundary-adjusted energy
//! `W(r) = r^(-2β) ∫_{B_r⁺} (|∇u|² + k G(u)) - β r^(-1-2β) ∫_{∂B_r ∩ {x1>0}} u²`
//! with `k = weiss_factor ∈ {1, 2}`.

use serde::{Deserialize, Serialize};

use super::quad::{ball_samples, circle_samples};
use crate::domain::Point;
use crate::energy::{potential, EnergyParams};
use crate::error::{Error, Result};
use crate::field::{pairwise_sum, ScalarField};

/// Multiplier of the potential inside the Weiss bulk integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum WeissFactor {
    #[default]
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl WeissFactor {
    pub fn value(self) -> f64 {
        match self {
            WeissFactor::One => 1.0,
            WeissFactor::Two => 2.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "1" => Some(WeissFactor::One),
            "2" => Some(WeissFactor::Two),
            _ => None,
        }
    }
}

fn check_radius(u: &ScalarField, r: f64) -> Result<()> {
    let min = 4.0 * u.spacing();
    if !(r >= min) {
        return Err(Error::RadiusTooSmall { radius: r, min });
    }
    Ok(())
}

/// `W(r)` with the energy density `|∇u|² + G(u)`.
pub fn weiss(u: &ScalarField, x0: Point, r: f64, params: &EnergyParams) -> Result<f64> {
    weiss_with(u, x0, r, params, WeissFactor::One)
}

pub fn weiss_with(
    u: &ScalarField,
    x0: Point,
    r: f64,
    params: &EnergyParams,
    factor: WeissFactor,
) -> Result<f64> {
    check_radius(u, r)?;
    let k = factor.value();
    let beta = params.beta();
    let bulk: Vec<f64> = ball_samples(u, x0, r)?
        .iter()
        .map(|s| s.weight * (s.grad[0] * s.grad[0] + s.grad[1] * s.grad[1] + k * potential(s.value, params)))
        .collect();
    let arc: Vec<f64> = circle_samples(u, x0, r)?
        .iter()
        .map(|(_, v, ds)| v * v * ds)
        .collect();
    Ok(r.powf(-2.0 * beta) * pairwise_sum(&bulk) - beta * r.powf(-1.0 - 2.0 * beta) * pairwise_sum(&arc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeissSeries {
    pub center: Point,
    pub factor: WeissFactor,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub monotone_verdict: bool,
    /// Magnitude of the most negative increment (0 if none).
    pub slack: f64,
    pub slack_tol: f64,
}

impl WeissSeries {
    pub fn range(&self) -> f64 {
        let max = self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if self.values.is_empty() {
            0.0
        } else {
            max - min
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x1,x2,r,W\n");
        for (r, w) in self.radii.iter().zip(&self.values) {
            s.push_str(&format!("{},{},{r},{w}\n", self.center.x1, self.center.x2));
        }
        s
    }
}

/// `W` at each radius and the monotonicity verdict: every increment must be
/// at least `-slack_tol`.
pub fn weiss_series(
    u: &ScalarField,
    x0: Point,
    radii: &[f64],
    params: &EnergyParams,
    slack_tol: f64,
    factor: WeissFactor,
) -> Result<WeissSeries> {
    if radii.is_empty() {
        return Err(Error::EmptyData("weiss radii"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("weiss radii must be strictly increasing".into()));
    }
    let values = radii
        .iter()
        .map(|&r| weiss_with(u, x0, r, params, factor))
        .collect::<Result<Vec<_>>>()?;
    let slack = values
        .windows(2)
        .map(|w| (w[0] - w[1]).max(0.0))
        .fold(0.0, f64::max);
    Ok(WeissSeries {
        center: x0,
        factor,
        radii: radii.to_vec(),
        values,
        monotone_verdict: slack <= slack_tol,
        slack,
        slack_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::halfplane_constant;
    use crate::domain::{build_grid, DomainSpec};
    use std::sync::Arc;

    #[test]
    fn zero_field_is_flat_and_small_radii_fail() {
        let g = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 32.0)).unwrap());
        let pr = EnergyParams::new(1.0, 1.0, 0.5).unwrap();
        let u = ScalarField::zeros(g);
        let s = weiss_series(&u, Point::ORIGIN, &[0.2, 0.4, 0.8], &pr, 0.0, WeissFactor::One).unwrap();
        assert!(s.monotone_verdict);
        assert_eq!(s.slack, 0.0);
        assert!(s.values.iter().all(|&v| v == 0.0));
        assert!(matches!(
            weiss(&u, Point::ORIGIN, 0.05, &pr),
            Err(Error::RadiusTooSmall { .. })
        ));
        assert!(matches!(
            weiss(&u, Point::new(0.5, 0.0), 0.8, &pr),
            Err(Error::BallExitsDomain { .. })
        ));
    }

    #[test]
    fn linear_field_is_strictly_monotone() {
        let g = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 64.0)).unwrap());
        let pr = EnergyParams::new(1.0, 1.0, 0.5).unwrap();
        let u = ScalarField::from_fn(g, |x| x.x1);
        let s = weiss_series(&u, Point::ORIGIN, &[0.1, 0.2, 0.4, 0.8], &pr, 0.0, WeissFactor::One).unwrap();
        assert!(s.values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn homogeneous_profile_is_nearly_constant() {
        let g = Arc::new(build_grid(DomainSpec::half_disk(1.0, 1.0 / 64.0)).unwrap());
        let pr = EnergyParams::new(1.0, 1.0, 0.5).unwrap();
        let c = halfplane_constant(1.0, 0.5).unwrap();
        let u = ScalarField::from_fn(g, |x| c * x.x1.max(0.0).powf(4.0 / 3.0));
        for f in [WeissFactor::One, WeissFactor::Two] {
            let s = weiss_series(&u, Point::ORIGIN, &[0.2, 0.4, 0.8], &pr, 1.0, f).unwrap();
            let mean = s.values.iter().sum::<f64>() / 3.0;
            assert!(s.range() < 0.01 * mean.abs(), "{:?}", s.values);
        }
    }
}
